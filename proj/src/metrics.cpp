#include "regretforge/metrics.hpp"

#include <algorithm>
#include <limits>

#include "regretforge/errors.hpp"
#include "regretforge/walk.hpp"

namespace regretforge {

ReachDecomposition reach_decompose(const GameTree& game, const StrategyProfile& profile) {
  validate_profile(game, profile);
  WalkResult w;
  cfr_forward_walk(game, pad_profile(game, profile), w);
  ReachDecomposition rd;
  rd.chance = std::move(w.chance_contrib);
  rd.reach = std::move(w.reach);
  rd.player.resize(game.num_players());
  for (int p = 0; p < game.num_players(); ++p) {
    rd.player[p].assign(w.player_contrib.begin() + static_cast<size_t>(p) * game.num_terminals(),
                        w.player_contrib.begin() +
                            static_cast<size_t>(p + 1) * game.num_terminals());
  }
  return rd;
}

std::vector<double> expected_utility(const GameTree& game, const TerminalDistribution& dist) {
  if (static_cast<int>(dist.size()) != game.num_terminals())
    throw ContractViolation("terminal distribution has " + std::to_string(dist.size()) +
                            " entries, game has " + std::to_string(game.num_terminals()) +
                            " terminals");
  std::vector<double> u(game.num_players(), 0.0);
  for (int z = 0; z < game.num_terminals(); ++z)
    for (int p = 0; p < game.num_players(); ++p) u[p] += dist[z] * game.utility(z, p);
  return u;
}

double expected_utility(const GameTree& game, const TerminalDistribution& dist, int player) {
  return expected_utility(game, dist)[player];
}

BestResponse best_response_to_weights(const GameTree& game, const std::vector<double>& weights,
                                      int responder) {
  if (responder < 0 || responder >= game.num_players())
    throw ContractViolation("responder out of range");
  if (static_cast<int>(weights.size()) != game.num_terminals())
    throw ContractViolation("weight vector has wrong size");
  for (double w : weights)
    if (w < 0.0) throw ContractViolation("terminal weights must be nonnegative");

  const int nn = game.num_nodes();
  // Subtree value of weighted responder utility, valid once every responder
  // infostate inside the subtree has its action chosen. Deeper infostates
  // (by the responder's own decision count) are resolved first, so each
  // node's value is computed exactly once.
  std::vector<double> value(nn, 0.0);
  std::vector<char> done(nn, 0);
  std::vector<int> chosen(game.num_infostates(), -1);

  auto compute = [&](auto&& self, int id) -> double {
    if (done[id]) return value[id];
    const auto& node = game.node(id);
    double v = 0.0;
    if (node.kind == NodeKind::kTerminal) {
      v = weights[node.terminal] * game.utility(node.terminal, responder);
    } else if (node.kind == NodeKind::kDecision && node.owner == responder) {
      int a = chosen[node.infostate];
      if (a < 0) throw ContractViolation("best response visited an undecided infostate");
      v = self(self, game.child(id, a));
    } else {
      // Chance probabilities are already inside the terminal weights; other
      // players' probabilities likewise. Sum, do not reweight.
      for (int a = 0; a < node.child_count; ++a) v += self(self, game.child(id, a));
    }
    done[id] = 1;
    value[id] = v;
    return v;
  };

  // Responder infostates grouped by own depth, deepest first.
  std::vector<int> order;
  for (int s = 0; s < game.num_infostates(); ++s)
    if (game.infostate(s).owner == responder) order.push_back(s);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return game.infostate(a).own_depth > game.infostate(b).own_depth;
  });

  for (int s : order) {
    const auto& info = game.infostate(s);
    double best = 0.0;
    int best_a = 0;
    for (int a = 0; a < info.num_actions; ++a) {
      double v = 0.0;
      for (int32_t id : info.nodes) v += compute(compute, game.child(id, a));
      if (a == 0 || v > best) {
        best = v;
        best_a = a;
      }
    }
    chosen[s] = best_a;
  }

  BestResponse br;
  br.value = compute(compute, game.root());
  br.strategy.probs.resize(game.num_infostates());
  for (int s = 0; s < game.num_infostates(); ++s) {
    const auto& info = game.infostate(s);
    if (info.owner == responder) {
      br.strategy.probs[s].assign(info.num_actions, 0.0);
      br.strategy.probs[s][chosen[s]] = 1.0;
    } else {
      br.strategy.probs[s].assign(info.num_actions, 1.0 / info.num_actions);
    }
  }
  return br;
}

BestResponse best_response(const GameTree& game, const StrategyProfile& profile, int responder) {
  ReachDecomposition rd = reach_decompose(game, profile);
  std::vector<double> w(game.num_terminals());
  for (int z = 0; z < game.num_terminals(); ++z) {
    double prod = rd.chance[z];
    for (int j = 0; j < game.num_players(); ++j)
      if (j != responder) prod *= rd.player[j][z];
    w[z] = prod;
  }
  BestResponse br = best_response_to_weights(game, w, responder);
  for (int s = 0; s < game.num_infostates(); ++s)
    if (game.infostate(s).owner != responder) br.strategy.probs[s] = profile.probs[s];
  return br;
}

double nash_gap(const GameTree& game, const StrategyProfile& profile) {
  ReachDecomposition rd = reach_decompose(game, profile);
  std::vector<double> u = expected_utility(game, rd.reach);
  double gap = 0.0;
  for (int i = 0; i < game.num_players(); ++i) {
    std::vector<double> w(game.num_terminals());
    for (int z = 0; z < game.num_terminals(); ++z) {
      double prod = rd.chance[z];
      for (int j = 0; j < game.num_players(); ++j)
        if (j != i) prod *= rd.player[j][z];
      w[z] = prod;
    }
    double br = best_response_to_weights(game, w, i).value;
    gap = std::max(gap, br - u[i]);
  }
  return gap;
}

double cce_gap(const GameTree& game, const RunTrace& trace) {
  if (trace.steps() == 0) throw ContractViolation("trace has no steps");
  TerminalDistribution dist = trace.average_reach();
  std::vector<double> u = expected_utility(game, dist);
  double gap = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < game.num_players(); ++i) {
    std::vector<double> opp = trace.average_opponent_reach(i);
    std::vector<double> w(game.num_terminals());
    for (int z = 0; z < game.num_terminals(); ++z) w[z] = trace.chance()[z] * opp[z];
    double br = best_response_to_weights(game, w, i).value;
    gap = std::max(gap, br - u[i]);
  }
  return gap;
}

}  // namespace regretforge
