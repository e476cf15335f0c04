#include "regretforge/adam.hpp"

#include <cmath>

#include "regretforge/errors.hpp"

namespace regretforge {

void AdamState::init(size_t num_params) {
  m.assign(num_params, 0.0);
  v.assign(num_params, 0.0);
  step_count = 0;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size())
    throw ContractViolation("adam_step: parameter and gradient sizes disagree");
  if (state.m.empty() && state.v.empty()) state.init(params.size());
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw ContractViolation("adam_step: moment buffers do not match the parameter count");

  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= state.lr * (mhat / (std::sqrt(vhat) + state.epsilon) +
                             state.weight_decay * params[i]);
  }
}

}  // namespace regretforge
