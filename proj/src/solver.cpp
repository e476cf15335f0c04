#include "regretforge/solver.hpp"

#include <algorithm>
#include <cmath>

#include "regretforge/errors.hpp"
#include "regretforge/marginal.hpp"

namespace regretforge {

UpdateMode resolved_update_mode(const SolveConfig& config) {
  if (config.update_mode) return *config.update_mode;
  return uses_alternating_updates(config.algorithm) ? UpdateMode::kAlternating
                                                    : UpdateMode::kSimultaneous;
}

Averaging resolved_averaging(const SolveConfig& config) {
  if (config.averaging) return *config.averaging;
  return uses_linear_averaging(config.algorithm) ? Averaging::kLinear : Averaging::kUniform;
}

CfrSolver::CfrSolver(const GameTree& game, SolveConfig config)
    : game_(game), config_(std::move(config)) {
  if (config_.steps < 1) throw ConfigError("steps", "step budget must be at least 1");
  for (size_t i = 1; i < config_.checkpoints.size(); ++i)
    if (config_.checkpoints[i] <= config_.checkpoints[i - 1])
      throw ConfigError("checkpoints", "checkpoints must be strictly ascending");
  if (!config_.checkpoints.empty() && config_.checkpoints.front() < 1)
    throw ConfigError("checkpoints", "checkpoints start at step 1");
  mode_ = resolved_update_mode(config_);
  averaging_ = resolved_averaging(config_);

  if (is_neural(config_.algorithm)) {
    if (!config_.predictor)
      throw ConfigError("checkpoint", "neural algorithm needs predictor weights");
    if (config_.predictor->max_actions < game_.max_actions())
      throw ConfigError("checkpoint", "predictor supports fewer actions than the game needs");
    if (config_.predictor->num_embeddings < game_.num_infostates())
      throw ConfigError("checkpoint", "predictor has fewer embeddings than the game has "
                                      "infostates");
    const PredictionForm want = config_.algorithm == Algorithm::kNpcfr
                                    ? PredictionForm::kResidual
                                    : PredictionForm::kDirect;
    if (config_.predictor->form != want)
      throw ConfigError("predictor.form",
                        "prediction form '" + form_name(config_.predictor->form) +
                            "' does not match this algorithm (wants '" + form_name(want) + "')");
  }

  minimizers_.reserve(game_.num_infostates());
  for (int s = 0; s < game_.num_infostates(); ++s) {
    const int actions = game_.infostate(s).num_actions;
    if (is_neural(config_.algorithm)) {
      minimizers_.emplace_back(config_.algorithm, actions, config_.predictor, s);
    } else {
      minimizers_.emplace_back(config_.algorithm, actions);
    }
    minimizers_.back().set_discount(config_.discount);
  }
  trace_.init(game_);
  sigma_padded_.assign(static_cast<size_t>(game_.num_infostates()) * game_.max_actions(), 0.0);
}

void CfrSolver::step() {
  const int ma = game_.max_actions();
  const int64_t t = steps_done_ + 1;

  for (int s = 0; s < game_.num_infostates(); ++s) {
    const std::vector<double>& sigma = minimizers_[s].next_strategy();
    std::copy(sigma.begin(), sigma.end(), sigma_padded_.begin() + static_cast<size_t>(s) * ma);
  }

  cfr_forward_walk(game_, sigma_padded_, walk_);

  double weight = 1.0;
  if (config_.algorithm == Algorithm::kDcfr) {
    weight = std::pow(static_cast<double>(t), config_.discount.g);
  } else if (averaging_ == Averaging::kLinear) {
    weight = static_cast<double>(t);
  }
  trace_.add_step(game_, walk_, sigma_padded_, weight);

  const int acting =
      mode_ == UpdateMode::kAlternating ? static_cast<int>((t - 1) % game_.num_players()) : -1;
  for (int s = 0; s < game_.num_infostates(); ++s) {
    const auto& info = game_.infostate(s);
    if (acting >= 0 && info.owner != acting) continue;
    reward_row_.assign(walk_.cf_reward.begin() + static_cast<size_t>(s) * ma,
                       walk_.cf_reward.begin() + static_cast<size_t>(s) * ma + info.num_actions);
    minimizers_[s].observe(reward_row_);
    trace_.final_regret()[s] = minimizers_[s].cumulative_regret();
  }

  ++steps_done_;
  if (config_.record_prefix_efm) trace_.prefix_efm().push_back(efm(trace_));
}

void CfrSolver::run() {
  while (steps_done_ < config_.steps) step();
}

StrategyProfile CfrSolver::current_profile() const {
  StrategyProfile p;
  p.probs.resize(game_.num_infostates());
  for (int s = 0; s < game_.num_infostates(); ++s) p.probs[s] = minimizers_[s].last_strategy();
  return p;
}

RunTrace cfr_solve(const GameTree& game, const SolveConfig& config) {
  CfrSolver solver(game, config);
  solver.run();
  return solver.trace();
}

double sum_positive_cf_regret(const RunTrace& trace) {
  double total = 0.0;
  for (const auto& row : trace.final_regret()) {
    double best = 0.0;
    for (double v : row) best = std::max(best, v);
    total += best;
  }
  return total;
}

}  // namespace regretforge
