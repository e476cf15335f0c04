#pragma once

#include <vector>

#include "regretforge/game.hpp"
#include "regretforge/trace.hpp"

namespace regretforge {

// Per-terminal contributions of chance and each player under a profile.
// reach[z] = chance[z] * prod_i player[i][z]; reach sums to one.
struct ReachDecomposition {
  std::vector<double> chance;
  std::vector<std::vector<double>> player;
  std::vector<double> reach;
};

ReachDecomposition reach_decompose(const GameTree& game, const StrategyProfile& profile);

// Expected utility per player under a terminal distribution.
std::vector<double> expected_utility(const GameTree& game, const TerminalDistribution& dist);
double expected_utility(const GameTree& game, const TerminalDistribution& dist, int player);

struct BestResponse {
  double value = 0.0;
  StrategyProfile strategy;  // responder rows pure; other rows as passed in
};

// Maximizes sum_z w(z) * reach_responder(z) * u_responder(z) over the
// responder's behavior strategies, where w(z) is a fixed nonnegative weight
// (typically chance times the other players' reach, or a time average of
// it). Ties break toward the lowest action index.
BestResponse best_response_to_weights(const GameTree& game, const std::vector<double>& weights,
                                      int responder);

BestResponse best_response(const GameTree& game, const StrategyProfile& profile, int responder);

// max_i [ best-response value - expected utility ] under the profile.
double nash_gap(const GameTree& game, const StrategyProfile& profile);

// Gap of the empirical distribution of play against per-player deviations:
// max over players of the best deviation payoff minus the on-trace payoff.
// Nonpositive means the trace's distribution is a coarse correlated
// equilibrium; negative values are meaningful and are not clamped.
double cce_gap(const GameTree& game, const RunTrace& trace);

}  // namespace regretforge
