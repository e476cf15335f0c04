#pragma once

#include <cstdint>
#include <vector>

#include "regretforge/game.hpp"

namespace regretforge {

// Exhaustive normal form of a small tree game. A pure strategy for player i
// fixes one action at each of the player's infostates; chance is marginalized
// by expectation inside the utility table. Pure strategy p for player i takes
// action pure_action(i, p, k) at the k-th entry of infostates(i) (ascending
// infostate ids; the last infostate varies fastest as p increments).
class NormalFormView {
 public:
  int num_players() const { return static_cast<int>(counts_.size()); }
  int pure_count(int player) const { return counts_[player]; }
  const std::vector<int>& pure_counts() const { return counts_; }
  int64_t num_profiles() const { return profiles_; }

  const std::vector<int>& infostates(int player) const { return infostates_[player]; }
  int pure_action(int player, int pure, int slot) const {
    return actions_[player][static_cast<size_t>(pure) * infostates_[player].size() + slot];
  }

  // Profile index: player 0 slowest, last player fastest.
  int64_t profile_index(const std::vector<int>& pures) const;
  double utility(int64_t profile, int player) const {
    return utilities_[profile * num_players() + player];
  }

  // Expected utilities of a mixed profile (one distribution over pure
  // strategies per player).
  std::vector<double> evaluate(const std::vector<std::vector<double>>& mixed) const;

  // For each terminal, the pure strategy per player whose on-path actions
  // produce it (off-path infostates pinned to action 0) and an index
  // identifying the chance outcomes along its path. Distinct terminals get
  // distinct (profile, chance) pairs.
  int terminal_pure(int terminal, int player) const {
    return terminal_pure_[static_cast<size_t>(terminal) * num_players() + player];
  }
  int terminal_chance(int terminal) const { return terminal_chance_[terminal]; }
  int num_chance_paths() const { return num_chance_paths_; }

 private:
  friend NormalFormView to_normal_form(const GameTree& game, int64_t cap);

  std::vector<int> counts_;
  int64_t profiles_ = 0;
  std::vector<std::vector<int>> infostates_;
  std::vector<std::vector<int>> actions_;  // [player][pure * n_infostates + slot]
  std::vector<double> utilities_;          // [profiles * players]
  std::vector<int> terminal_pure_;
  std::vector<int> terminal_chance_;
  int num_chance_paths_ = 0;
};

// Throws ContractViolation carrying the counts when the pure-profile product
// exceeds the cap.
NormalFormView to_normal_form(const GameTree& game, int64_t cap = 10000);

}  // namespace regretforge
