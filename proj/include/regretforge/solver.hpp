#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "regretforge/game.hpp"
#include "regretforge/minimizer.hpp"
#include "regretforge/trace.hpp"
#include "regretforge/walk.hpp"

namespace regretforge {

enum class UpdateMode : uint8_t { kSimultaneous, kAlternating };
enum class Averaging : uint8_t { kUniform, kLinear };

struct SolveConfig {
  Algorithm algorithm = Algorithm::kCfr;
  int64_t steps = 1000;
  // Unset fields fall back to the algorithm's own convention.
  std::optional<UpdateMode> update_mode;
  std::optional<Averaging> averaging;
  std::vector<int64_t> checkpoints;  // ascending step indices, for callers
  bool record_prefix_efm = false;
  DiscountParams discount;
  std::shared_ptr<const PredictorParams> predictor;  // required for neural tags
};

UpdateMode resolved_update_mode(const SolveConfig& config);
Averaging resolved_averaging(const SolveConfig& config);

// Runs one regret minimizer per infostate over the tree. Each step emits
// every infostate's strategy, walks the tree once, accumulates the trace
// (all players, every step), then feeds counterfactual rewards to the
// minimizers: all of them in simultaneous mode, only the acting player's in
// alternating mode (players cycle in seat order).
class CfrSolver {
 public:
  CfrSolver(const GameTree& game, SolveConfig config);

  void step();
  void run();  // config.steps steps

  int64_t steps_done() const { return steps_done_; }
  const GameTree& game() const { return game_; }
  const SolveConfig& config() const { return config_; }
  const RunTrace& trace() const { return trace_; }

  StrategyProfile average_profile() const { return trace_.average_strategy(); }
  StrategyProfile current_profile() const;

 private:
  const GameTree& game_;
  SolveConfig config_;
  UpdateMode mode_;
  Averaging averaging_;
  std::vector<RegretMinimizer> minimizers_;
  RunTrace trace_;
  WalkResult walk_;
  std::vector<double> sigma_padded_;
  std::vector<double> reward_row_;
  int64_t steps_done_ = 0;
};

RunTrace cfr_solve(const GameTree& game, const SolveConfig& config);

// Sum over infostates of the clamped best cumulative regret,
// sum_s max(max_a R(s,a), 0). Divided by T this upper-bounds the gap of the
// empirical distribution under simultaneous updates.
double sum_positive_cf_regret(const RunTrace& trace);

}  // namespace regretforge
