#pragma once

#include <string>

#include <json.hpp>

#include "regretforge/predictor.hpp"

namespace regretforge {

// Versioned predictor container:
//
//   bytes 0..7   magic "RGFCKPT\0"
//   u32 LE       format version
//   u32 LE       header length in bytes
//   header       UTF-8 JSON: format version, architecture (hidden size,
//                layer count, embedding width, head activation, prediction
//                form, alpha, max action count, embedding count), the array
//                manifest (name/rows/cols/offset in doubles), and an echo of
//                the training configuration
//   payload      every weight array as raw little-endian float64, manifest
//                order, row-major
//   u64 LE       FNV-1a checksum of everything above
//
// Loading rejects bad magic, unknown versions, truncation, checksum
// mismatches and manifests that disagree with the declared architecture.
// Saving the result of a load reproduces the original file byte for byte.

inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  PredictorParams params;
  nlohmann::json training;  // opaque echo of the producing run's config
};

void save_checkpoint(const std::string& path, PredictorParams& params,
                     const nlohmann::json& training_echo);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace regretforge
