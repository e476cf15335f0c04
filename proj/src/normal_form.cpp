#include "regretforge/normal_form.hpp"

#include <map>
#include <string>

#include "regretforge/errors.hpp"

namespace regretforge {

int64_t NormalFormView::profile_index(const std::vector<int>& pures) const {
  if (static_cast<int>(pures.size()) != num_players())
    throw ContractViolation("profile needs one pure strategy per player");
  int64_t idx = 0;
  for (int i = 0; i < num_players(); ++i) {
    if (pures[i] < 0 || pures[i] >= counts_[i])
      throw ContractViolation("pure strategy index out of range");
    idx = idx * counts_[i] + pures[i];
  }
  return idx;
}

std::vector<double> NormalFormView::evaluate(
    const std::vector<std::vector<double>>& mixed) const {
  if (static_cast<int>(mixed.size()) != num_players())
    throw ContractViolation("mixed profile needs one distribution per player");
  for (int i = 0; i < num_players(); ++i)
    if (static_cast<int>(mixed[i].size()) != counts_[i])
      throw ContractViolation("mixed strategy length does not match the pure count");
  std::vector<double> u(num_players(), 0.0);
  std::vector<int> pures(num_players(), 0);
  for (int64_t idx = 0; idx < profiles_; ++idx) {
    double w = 1.0;
    for (int i = 0; i < num_players(); ++i) w *= mixed[i][pures[i]];
    if (w != 0.0)
      for (int i = 0; i < num_players(); ++i) u[i] += w * utilities_[idx * num_players() + i];
    for (int i = num_players() - 1; i >= 0; --i) {
      if (++pures[i] < counts_[i]) break;
      pures[i] = 0;
    }
  }
  return u;
}

NormalFormView to_normal_form(const GameTree& game, int64_t cap) {
  NormalFormView view;
  const int np = game.num_players();
  view.infostates_.resize(np);
  for (int s = 0; s < game.num_infostates(); ++s)
    view.infostates_[game.infostate(s).owner].push_back(s);

  view.counts_.assign(np, 1);
  int64_t product = 1;
  for (int i = 0; i < np; ++i) {
    int64_t count = 1;
    for (int s : view.infostates_[i]) {
      count *= game.infostate(s).num_actions;
      if (count > cap)
        throw ContractViolation("pure strategy count for player " + std::to_string(i) +
                                " exceeds the cap of " + std::to_string(cap));
    }
    view.counts_[i] = static_cast<int>(count);
    product *= count;
    if (product > cap)
      throw ContractViolation("pure profile count " + std::to_string(product) +
                              " (so far, player " + std::to_string(i) + ") exceeds the cap of " +
                              std::to_string(cap));
  }
  view.profiles_ = product;

  // Pure strategy tables: last infostate varies fastest.
  view.actions_.resize(np);
  for (int i = 0; i < np; ++i) {
    const auto& infos = view.infostates_[i];
    view.actions_[i].resize(static_cast<size_t>(view.counts_[i]) * infos.size());
    for (int p = 0; p < view.counts_[i]; ++p) {
      int rem = p;
      for (int k = static_cast<int>(infos.size()) - 1; k >= 0; --k) {
        const int acts = game.infostate(infos[k]).num_actions;
        view.actions_[i][static_cast<size_t>(p) * infos.size() + k] = rem % acts;
        rem /= acts;
      }
    }
  }

  // Utility table: evaluate the tree once per joint pure profile, taking
  // expectations over chance.
  view.utilities_.assign(static_cast<size_t>(product) * np, 0.0);
  std::vector<int> action_at(game.num_infostates(), 0);
  std::vector<int> pures(np, 0);
  for (int64_t idx = 0; idx < product; ++idx) {
    for (int i = 0; i < np; ++i)
      for (size_t k = 0; k < view.infostates_[i].size(); ++k)
        action_at[view.infostates_[i][k]] =
            view.actions_[i][static_cast<size_t>(pures[i]) * view.infostates_[i].size() + k];
    // Iterative expectation over the tree for this profile.
    auto walk = [&](auto&& self, int id, double weight) -> void {
      const auto& node = game.node(id);
      if (node.kind == NodeKind::kTerminal) {
        for (int p = 0; p < np; ++p)
          view.utilities_[idx * np + p] += weight * game.utility(node.terminal, p);
        return;
      }
      if (node.kind == NodeKind::kChance) {
        for (int a = 0; a < node.child_count; ++a)
          self(self, game.child(id, a), weight * game.chance_prob(id, a));
        return;
      }
      self(self, game.child(id, action_at[node.infostate]), weight);
    };
    walk(walk, game.root(), 1.0);
    for (int i = np - 1; i >= 0; --i) {
      if (++pures[i] < view.counts_[i]) break;
      pures[i] = 0;
    }
  }

  // Terminal mapping: on-path actions pin part of a pure strategy, off-path
  // infostates take action 0; chance outcome sequences get dense indices.
  view.terminal_pure_.assign(static_cast<size_t>(game.num_terminals()) * np, 0);
  view.terminal_chance_.assign(game.num_terminals(), 0);
  std::map<std::vector<int>, int> chance_paths;
  for (int id = 0; id < game.num_nodes(); ++id) {
    const auto& node = game.node(id);
    if (node.kind != NodeKind::kTerminal) continue;
    std::vector<int> taken(game.num_infostates(), -1);
    std::vector<int> chance_seq;
    int cur = id;
    while (game.node(cur).parent != -1) {
      const int par = game.node(cur).parent;
      const auto& pn = game.node(par);
      if (pn.kind == NodeKind::kDecision) {
        taken[pn.infostate] = game.node(cur).parent_action;
      } else {
        chance_seq.push_back(par);
        chance_seq.push_back(game.node(cur).parent_action);
      }
      cur = par;
    }
    auto [it, inserted] =
        chance_paths.emplace(chance_seq, static_cast<int>(chance_paths.size()));
    view.terminal_chance_[node.terminal] = it->second;
    (void)inserted;
    for (int i = 0; i < np; ++i) {
      int pure = 0;
      const auto& infos = view.infostates_[i];
      for (size_t k = 0; k < infos.size(); ++k) {
        const int acts = game.infostate(infos[k]).num_actions;
        const int a = taken[infos[k]] >= 0 ? taken[infos[k]] : 0;
        pure = pure * acts + a;
      }
      view.terminal_pure_[static_cast<size_t>(node.terminal) * np + i] = pure;
    }
  }
  view.num_chance_paths_ = static_cast<int>(chance_paths.size());
  return view;
}

}  // namespace regretforge
