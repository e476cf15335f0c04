#pragma once

#include <vector>

#include "regretforge/game.hpp"

namespace regretforge {

// One full traversal under a behavior profile. Produces everything a CFR step
// or a trace accumulation needs:
//   player_contrib[i*Z+z]  d_i(sigma)(z), player i's own product of action
//                          probabilities along the path to terminal z
//   chance_contrib[z]      d_c(z)
//   reach[z]               d(sigma)(z) = d_c * prod_i d_i
//   cf_reward[s*A+a]       counterfactual reward x(s,a): expected utility of
//                          the owner after taking a at s, weighted by the
//                          opponents' and chance's reach (padded to A = max
//                          action count, unused slots zero)
//   own_reach[s]           the owner's own contribution to reaching s
// Node-level intermediates (reaches and values) are kept so the adjoint pass
// can run over the same buffers.
struct WalkResult {
  int players = 0;
  int terminals = 0;
  int infostates = 0;
  int max_actions = 0;

  std::vector<double> player_contrib;
  std::vector<double> chance_contrib;
  std::vector<double> reach;
  std::vector<double> cf_reward;
  std::vector<double> own_reach;

  std::vector<double> node_reach;   // [nodes * players]
  std::vector<double> node_chance;  // [nodes]
  std::vector<double> node_value;   // [nodes * players]

  void resize(const GameTree& g);
};

// sigma_padded is row-major [num_infostates x max_actions]; entries past an
// infostate's action count are ignored.
void cfr_forward_walk(const GameTree& g, const std::vector<double>& sigma_padded, WalkResult& out);

// Adjoint of the walk with respect to sigma. `rec` must hold the forward
// intermediates for the same sigma. player_contrib_bar ([players*Z]) and
// cf_reward_bar ([S*max_actions]) may be empty, meaning all-zero. Gradients
// are accumulated into sigma_bar ([S*max_actions], caller-zeroed).
void cfr_walk_backward(const GameTree& g, const std::vector<double>& sigma_padded,
                       const WalkResult& rec, const std::vector<double>& player_contrib_bar,
                       const std::vector<double>& cf_reward_bar, std::vector<double>& sigma_bar);

// Pads a per-infostate profile into the row-major matrix the walk consumes.
std::vector<double> pad_profile(const GameTree& g, const StrategyProfile& profile);

}  // namespace regretforge
