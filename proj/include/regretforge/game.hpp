#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace regretforge {

enum class NodeKind : uint8_t { kDecision, kChance, kTerminal };

// Immutable extensive-form game tree with infostate annotations.
//
// Terminals and infostates are indexed in depth-first discovery order
// (children visited in action order); build() renumbers them if the builder
// was driven in a different order. Utilities are stored per terminal as one
// row of num_players() doubles.
class GameTree {
 public:
  struct Node {
    NodeKind kind = NodeKind::kTerminal;
    int32_t parent = -1;
    int32_t parent_action = -1;
    int32_t child_begin = 0;  // into children() / chance_probs()
    int32_t child_count = 0;
    int32_t owner = -1;      // decision nodes
    int32_t infostate = -1;  // decision nodes
    int32_t terminal = -1;   // terminal nodes
  };

  struct Infostate {
    int32_t owner = -1;
    int32_t num_actions = 0;
    // Number of the owner's decisions strictly above this infostate's nodes.
    // Identical for every member node under perfect recall.
    int32_t own_depth = 0;
    std::string key;
    std::vector<int32_t> nodes;
  };

  int num_players() const { return players_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_terminals() const { return num_terminals_; }
  int num_infostates() const { return static_cast<int>(infostates_.size()); }
  int root() const { return 0; }

  const Node& node(int id) const { return nodes_[id]; }
  const Infostate& infostate(int id) const { return infostates_[id]; }
  const std::vector<Infostate>& infostates() const { return infostates_; }

  int child(int node_id, int action) const { return children_[nodes_[node_id].child_begin + action]; }
  double chance_prob(int node_id, int outcome) const {
    return chance_probs_[nodes_[node_id].child_begin + outcome];
  }

  // Utility of `player` at terminal index `terminal`.
  double utility(int terminal, int player) const { return utils_[terminal * players_ + player]; }
  const std::vector<double>& utilities_flat() const { return utils_; }

  // max_i max_z |u_i(z)|.
  double max_abs_utility() const;

  // Largest action count over all infostates (0 for chance-only games).
  int max_actions() const;

  int num_decision_nodes() const { return num_decision_nodes_; }
  int num_chance_nodes() const { return num_chance_nodes_; }

  // Node ids in depth-first pre-order (parents before children, children in
  // action order). preorder()[0] is the root.
  const std::vector<int32_t>& preorder() const { return preorder_; }

 private:
  friend class GameTreeBuilder;

  int players_ = 0;
  int num_terminals_ = 0;
  int num_decision_nodes_ = 0;
  int num_chance_nodes_ = 0;
  std::vector<Node> nodes_;
  std::vector<int32_t> children_;
  std::vector<double> chance_probs_;  // parallel to children_, chance nodes only
  std::vector<Infostate> infostates_;
  std::vector<double> utils_;
  std::vector<int32_t> preorder_;
};

// Incremental construction helper. Create nodes, wire children with link(),
// then build(). Terminal indices follow terminal() call order, so recursive
// generators that create children in action order produce depth-first
// discovery numbering.
class GameTreeBuilder {
 public:
  explicit GameTreeBuilder(int players);

  int decision(int player, const std::string& infostate_key, int num_actions);
  int chance(const std::vector<double>& probs);
  int terminal(const std::vector<double>& utils);
  void link(int parent, int slot, int child);

  // Id the next terminal() call will receive; used by generators that index
  // side tables by terminal.
  int next_terminal_index() const { return num_terminals_; }

  // Validates structure (single root, filled slots, probability sums,
  // utility arity, infostate consistency, perfect recall) and freezes.
  GameTree build();

 private:
  int players_;
  int num_terminals_ = 0;
  GameTree tree_;
  std::vector<std::vector<int32_t>> pending_children_;
  std::vector<std::vector<double>> pending_probs_;
  std::vector<std::string> infostate_keys_;
};

// Behavior strategy for every infostate (all players); probs[s] has
// infostate(s).num_actions entries.
struct StrategyProfile {
  std::vector<std::vector<double>> probs;
};

// Probability vector over terminals, DFS order.
using TerminalDistribution = std::vector<double>;

StrategyProfile uniform_profile(const GameTree& game);
StrategyProfile random_profile(const GameTree& game, std::mt19937_64& rng);

// Throws ContractViolation naming the first offending infostate.
void validate_profile(const GameTree& game, const StrategyProfile& profile);

}  // namespace regretforge
