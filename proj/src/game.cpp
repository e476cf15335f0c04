#include "regretforge/game.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <unordered_map>

#include "regretforge/errors.hpp"
#include "regretforge/rng.hpp"

namespace regretforge {

double GameTree::max_abs_utility() const {
  double m = 0.0;
  for (double u : utils_) m = std::max(m, std::abs(u));
  return m;
}

int GameTree::max_actions() const {
  int m = 0;
  for (const auto& s : infostates_) m = std::max(m, static_cast<int>(s.num_actions));
  return m;
}

GameTreeBuilder::GameTreeBuilder(int players) : players_(players) {
  if (players < 1) throw ContractViolation("game must have at least one player");
  tree_.players_ = players;
}

int GameTreeBuilder::decision(int player, const std::string& infostate_key, int num_actions) {
  if (player < 0 || player >= players_)
    throw ContractViolation("decision node player out of range: " + std::to_string(player));
  if (num_actions < 1) throw ContractViolation("decision node needs at least one action");
  GameTree::Node n;
  n.kind = NodeKind::kDecision;
  n.owner = player;
  n.child_count = num_actions;
  int id = static_cast<int>(tree_.nodes_.size());
  tree_.nodes_.push_back(n);
  pending_children_.push_back(std::vector<int32_t>(num_actions, -1));
  pending_probs_.emplace_back();
  infostate_keys_.push_back(infostate_key);
  return id;
}

int GameTreeBuilder::chance(const std::vector<double>& probs) {
  if (probs.empty()) throw ContractViolation("chance node needs at least one outcome");
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw ContractViolation("negative chance probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw ContractViolation("chance probabilities sum to " + std::to_string(sum));
  GameTree::Node n;
  n.kind = NodeKind::kChance;
  n.child_count = static_cast<int>(probs.size());
  int id = static_cast<int>(tree_.nodes_.size());
  tree_.nodes_.push_back(n);
  pending_children_.push_back(std::vector<int32_t>(probs.size(), -1));
  pending_probs_.push_back(probs);
  infostate_keys_.emplace_back();
  return id;
}

int GameTreeBuilder::terminal(const std::vector<double>& utils) {
  if (static_cast<int>(utils.size()) != players_)
    throw ContractViolation("terminal utility count " + std::to_string(utils.size()) +
                            " does not match player count " + std::to_string(players_));
  GameTree::Node n;
  n.kind = NodeKind::kTerminal;
  n.terminal = num_terminals_++;
  int id = static_cast<int>(tree_.nodes_.size());
  tree_.nodes_.push_back(n);
  pending_children_.emplace_back();
  pending_probs_.emplace_back();
  infostate_keys_.emplace_back();
  tree_.utils_.insert(tree_.utils_.end(), utils.begin(), utils.end());
  return id;
}

void GameTreeBuilder::link(int parent, int slot, int child) {
  if (parent < 0 || parent >= static_cast<int>(tree_.nodes_.size()) || child < 0 ||
      child >= static_cast<int>(tree_.nodes_.size()))
    throw ContractViolation("link references unknown node");
  auto& slots = pending_children_[parent];
  if (slot < 0 || slot >= static_cast<int>(slots.size()))
    throw ContractViolation("link slot out of range");
  if (slots[slot] != -1) throw ContractViolation("link slot already filled");
  if (tree_.nodes_[child].parent != -1) throw ContractViolation("node linked twice");
  slots[slot] = child;
  tree_.nodes_[child].parent = parent;
  tree_.nodes_[child].parent_action = slot;
}

GameTree GameTreeBuilder::build() {
  auto& t = tree_;
  const int n = static_cast<int>(t.nodes_.size());
  if (n == 0) throw ContractViolation("empty game tree");
  if (t.nodes_[0].parent != -1) throw ContractViolation("node 0 must be the unlinked root");
  for (int i = 1; i < n; ++i)
    if (t.nodes_[i].parent == -1)
      throw ContractViolation("node " + std::to_string(i) + " has no parent link");

  // Flatten child links and chance probabilities.
  t.children_.clear();
  t.chance_probs_.clear();
  for (int i = 0; i < n; ++i) {
    auto& node = t.nodes_[i];
    node.child_begin = static_cast<int>(t.children_.size());
    for (int a = 0; a < node.child_count; ++a) {
      int c = pending_children_[i].empty() ? -1 : pending_children_[i][a];
      if (c == -1)
        throw ContractViolation("node " + std::to_string(i) + " has unfilled child slot " +
                                std::to_string(a));
      t.children_.push_back(c);
    }
    if (node.kind == NodeKind::kChance) {
      double sum = 0.0;
      for (double p : pending_probs_[i]) {
        if (p < 0.0) throw ContractViolation("negative chance probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw ContractViolation("chance probabilities at node " + std::to_string(i) +
                                " sum to " + std::to_string(sum));
      // chance_probs_ is indexed by the same child_begin as children_; pad the
      // vector so offsets line up for decision nodes in between.
      if (static_cast<int>(t.chance_probs_.size()) < node.child_begin)
        t.chance_probs_.resize(node.child_begin, 0.0);
      t.chance_probs_.insert(t.chance_probs_.end(), pending_probs_[i].begin(),
                             pending_probs_[i].end());
      ++t.num_chance_nodes_;
    } else if (node.kind == NodeKind::kDecision) {
      ++t.num_decision_nodes_;
    }
  }
  if (t.chance_probs_.size() < t.children_.size()) t.chance_probs_.resize(t.children_.size(), 0.0);

  // Depth-first pre-order; children pushed in reverse so slot 0 pops first.
  // Doubles as the reachability check: parent links that form a cycle leave
  // nodes unvisited.
  t.preorder_.clear();
  t.preorder_.reserve(n);
  {
    std::vector<int32_t> stack = {0};
    while (!stack.empty()) {
      int cur = stack.back();
      stack.pop_back();
      t.preorder_.push_back(cur);
      const auto& node = t.nodes_[cur];
      for (int a = node.child_count - 1; a >= 0; --a)
        stack.push_back(t.children_[node.child_begin + a]);
    }
  }
  if (static_cast<int>(t.preorder_.size()) != n)
    throw ContractViolation("tree has nodes unreachable from the root");

  // Renumber terminals in depth-first discovery order and permute utilities
  // to match. Generators that already build depth first are unaffected.
  {
    std::vector<int32_t> new_index(num_terminals_, -1);
    int next = 0;
    for (int32_t id : t.preorder_)
      if (t.nodes_[id].kind == NodeKind::kTerminal) new_index[t.nodes_[id].terminal] = next++;
    std::vector<double> utils(t.utils_.size());
    for (int old = 0; old < num_terminals_; ++old)
      for (int p = 0; p < players_; ++p)
        utils[new_index[old] * players_ + p] = t.utils_[old * players_ + p];
    t.utils_ = std::move(utils);
    for (auto& node : t.nodes_)
      if (node.kind == NodeKind::kTerminal) node.terminal = new_index[node.terminal];
    t.num_terminals_ = num_terminals_;
  }

  // Group decision nodes into infostates by key, in depth-first discovery
  // order so infostate ids are canonical across construction orders.
  std::unordered_map<std::string, int> index;
  t.infostates_.clear();
  for (int32_t i : t.preorder_) {
    auto& node = t.nodes_[i];
    if (node.kind != NodeKind::kDecision) continue;
    const std::string& key = infostate_keys_[i];
    auto it = index.find(key);
    if (it == index.end()) {
      GameTree::Infostate s;
      s.owner = node.owner;
      s.num_actions = node.child_count;
      s.key = key;
      it = index.emplace(key, static_cast<int>(t.infostates_.size())).first;
      t.infostates_.push_back(std::move(s));
    }
    auto& s = t.infostates_[it->second];
    if (s.owner != node.owner)
      throw ContractViolation("infostate '" + key + "' spans nodes of different players");
    if (s.num_actions != node.child_count)
      throw ContractViolation("infostate '" + key + "' spans nodes with different action counts");
    node.infostate = it->second;
    s.nodes.push_back(i);
  }

  // Perfect recall: within an infostate every node must expose the same
  // owner-side (infostate, action) history. Walk up from each member node;
  // memory stays O(depth) even for very large trees.
  auto owner_history = [&t](int node_id, int owner) {
    std::vector<int32_t> seq;  // interleaved (infostate, action), root-to-node
    int cur = node_id;
    while (t.nodes_[cur].parent != -1) {
      int par = t.nodes_[cur].parent;
      const auto& p = t.nodes_[par];
      if (p.kind == NodeKind::kDecision && p.owner == owner) {
        seq.push_back(p.infostate);
        seq.push_back(t.nodes_[cur].parent_action);
      }
      cur = par;
    }
    std::reverse(seq.begin(), seq.end());
    return seq;
  };
  for (auto& s : t.infostates_) {
    std::vector<int32_t> ref;
    bool first = true;
    for (int32_t id : s.nodes) {
      std::vector<int32_t> mine = owner_history(id, s.owner);
      if (first) {
        ref = std::move(mine);
        first = false;
        s.own_depth = static_cast<int>(ref.size() / 2);
      } else if (mine != ref) {
        throw ContractViolation("infostate '" + s.key +
                                "' violates perfect recall: owner histories differ");
      }
    }
  }

  return std::move(tree_);
}

StrategyProfile uniform_profile(const GameTree& game) {
  StrategyProfile p;
  p.probs.resize(game.num_infostates());
  for (int s = 0; s < game.num_infostates(); ++s) {
    int a = game.infostate(s).num_actions;
    p.probs[s].assign(a, 1.0 / a);
  }
  return p;
}

StrategyProfile random_profile(const GameTree& game, std::mt19937_64& rng) {
  StrategyProfile p;
  p.probs.resize(game.num_infostates());
  for (int s = 0; s < game.num_infostates(); ++s) {
    int a = game.infostate(s).num_actions;
    std::vector<double> row(a);
    double sum = 0.0;
    for (int i = 0; i < a; ++i) {
      // Exponential draws normalize to a uniform simplex sample.
      double u = uniform_unit(rng);
      row[i] = -std::log(1.0 - u + 1e-300);
      sum += row[i];
    }
    for (int i = 0; i < a; ++i) row[i] /= sum;
    p.probs[s] = std::move(row);
  }
  return p;
}

void validate_profile(const GameTree& game, const StrategyProfile& profile) {
  if (static_cast<int>(profile.probs.size()) != game.num_infostates())
    throw ContractViolation("profile covers " + std::to_string(profile.probs.size()) +
                            " infostates, game has " + std::to_string(game.num_infostates()));
  for (int s = 0; s < game.num_infostates(); ++s) {
    const auto& info = game.infostate(s);
    const auto& row = profile.probs[s];
    if (static_cast<int>(row.size()) != info.num_actions)
      throw ContractViolation("profile row for infostate '" + info.key + "' has " +
                              std::to_string(row.size()) + " entries, expected " +
                              std::to_string(info.num_actions));
    double sum = 0.0;
    for (double v : row) {
      if (v < -1e-12)
        throw ContractViolation("negative probability at infostate '" + info.key + "'");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ContractViolation("probabilities at infostate '" + info.key + "' sum to " +
                              std::to_string(sum));
  }
}

}  // namespace regretforge
