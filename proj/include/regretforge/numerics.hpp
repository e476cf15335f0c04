#pragma once

#include <atomic>
#include <cstdint>

namespace regretforge {

// log with a 1e-12 floor on nonnegative inputs. Negative inputs are a domain
// error (thrown by the caller with context); floored evaluations bump the
// shared diagnostics counter so tests and tools can detect silent clamping.
inline constexpr double kLogFloor = 1e-12;

std::atomic<uint64_t>& log_floor_count();

double safe_log(double x);

// True if safe_log(x) used the floor (for zero-gradient decisions).
inline bool log_would_floor(double x) { return x < kLogFloor; }

}  // namespace regretforge
