#pragma once

#include <span>
#include <vector>

#include "regretforge/game.hpp"
#include "regretforge/walk.hpp"

namespace regretforge {

// Running aggregates over a sequence of behavior profiles, enough to compute
// every reported metric without revisiting the sequence:
//  - the empirical terminal distribution (average over steps of each step's
//    reach) and its per-player factor averages,
//  - per player, the summed product of the *other* players' contributions
//    (what a correlated-equilibrium deviation test needs),
//  - two average strategies: uniformly weighted (what the convergence bound
//    is stated for) and algorithm weighted (what a solver reports),
//  - the final cumulative regret table, filled in by the solver.
class RunTrace {
 public:
  void init(const GameTree& g);
  bool initialized() const { return terminals_ > 0 || players_ > 0; }

  // Folds one step into the aggregates. `weight` scales only the reported
  // average strategy; distribution aggregates are always uniform over steps.
  void add_step(const GameTree& g, const WalkResult& w, const std::vector<double>& sigma_padded,
                double weight);

  int64_t steps() const { return steps_; }
  int num_players() const { return players_; }
  int num_terminals() const { return terminals_; }

  const std::vector<double>& chance() const { return chance_; }

  // Empirical terminal distribution d_bar(z) = (1/T) sum_t d(sigma_t)(z).
  TerminalDistribution average_reach() const;

  // Per-player factor average d_bar_i(z) = (1/T) sum_t d_i(sigma_t)(z).
  std::vector<double> average_contribution(int player) const;

  // (1/T) sum_t prod_{j != i} d_j(sigma_t)(z), one value per terminal.
  std::vector<double> average_opponent_reach(int player) const;

  // Reach-weighted average strategies. Rows with zero accumulated mass fall
  // back to uniform.
  StrategyProfile average_strategy() const;          // algorithm weighting
  StrategyProfile average_strategy_uniform() const;  // plain average

  std::vector<std::vector<double>>& final_regret() { return final_regret_; }
  const std::vector<std::vector<double>>& final_regret() const { return final_regret_; }

  // Prefix marginalizability values, one per step, when the solver records
  // them (see SolveConfig::record_prefix_efm).
  std::vector<double>& prefix_efm() { return prefix_efm_; }
  const std::vector<double>& prefix_efm() const { return prefix_efm_; }

  // Raw running sums, exposed for incremental metric computation.
  const std::vector<double>& sum_reach() const { return sum_reach_; }
  const std::vector<double>& sum_contrib() const { return sum_contrib_; }  // [players*Z]
  const std::vector<double>& sum_opponent() const { return sum_opponent_; }  // [players*Z]

 private:
  int players_ = 0;
  int terminals_ = 0;
  int64_t steps_ = 0;
  std::vector<double> chance_;
  std::vector<double> sum_reach_;
  std::vector<double> sum_contrib_;
  std::vector<double> sum_opponent_;
  std::vector<std::vector<double>> strat_acc_;
  std::vector<std::vector<double>> strat_acc_uniform_;
  std::vector<std::vector<double>> final_regret_;
  std::vector<double> prefix_efm_;
};

// Builds a trace by walking each profile once with unit weight.
RunTrace accumulate_trace(const GameTree& g, std::span<const StrategyProfile> steps);

}  // namespace regretforge
