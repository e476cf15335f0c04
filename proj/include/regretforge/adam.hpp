#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace regretforge {

// Flat Adam optimizer state. Works over one contiguous parameter vector; for
// a multi-array model concatenate in a fixed order (PredictorParams::arrays()
// already fixes one). weight_decay is decoupled: applied to the parameter
// directly, not folded into the gradient moments.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  int64_t step_count = 0;
  std::vector<double> m;
  std::vector<double> v;

  void init(size_t num_params);
};

// Standard bias-corrected update. Initializes the moments on first use;
// afterwards the sizes must keep matching.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

}  // namespace regretforge
