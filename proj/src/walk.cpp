#include "regretforge/walk.hpp"

#include <cstring>

#include "regretforge/errors.hpp"

namespace regretforge {

namespace {
constexpr int kMaxPlayers = 8;
}

void WalkResult::resize(const GameTree& g) {
  players = g.num_players();
  terminals = g.num_terminals();
  infostates = g.num_infostates();
  max_actions = g.max_actions();
  if (players > kMaxPlayers) throw ContractViolation("walk supports at most 8 players");
  player_contrib.assign(static_cast<size_t>(players) * terminals, 0.0);
  chance_contrib.assign(terminals, 0.0);
  reach.assign(terminals, 0.0);
  cf_reward.assign(static_cast<size_t>(infostates) * max_actions, 0.0);
  own_reach.assign(infostates, 0.0);
  node_reach.assign(static_cast<size_t>(g.num_nodes()) * players, 0.0);
  node_chance.assign(g.num_nodes(), 0.0);
  node_value.assign(static_cast<size_t>(g.num_nodes()) * players, 0.0);
}

void cfr_forward_walk(const GameTree& g, const std::vector<double>& sigma_padded, WalkResult& out) {
  const int np = g.num_players();
  const int ma = g.max_actions();
  if (static_cast<int>(sigma_padded.size()) != g.num_infostates() * ma)
    throw ContractViolation("padded strategy has wrong size");
  out.resize(g);
  const auto& order = g.preorder();

  // Top-down: per-player and chance reach products.
  for (int p = 0; p < np; ++p) out.node_reach[static_cast<size_t>(g.root()) * np + p] = 1.0;
  out.node_chance[g.root()] = 1.0;
  for (int32_t id : order) {
    const auto& node = g.node(id);
    const double* r = &out.node_reach[static_cast<size_t>(id) * np];
    const double rc = out.node_chance[id];
    if (node.kind == NodeKind::kTerminal) {
      for (int p = 0; p < np; ++p) out.player_contrib[static_cast<size_t>(p) * out.terminals + node.terminal] = r[p];
      out.chance_contrib[node.terminal] = rc;
      double prod = rc;
      for (int p = 0; p < np; ++p) prod *= r[p];
      out.reach[node.terminal] = prod;
      continue;
    }
    if (node.kind == NodeKind::kChance) {
      for (int a = 0; a < node.child_count; ++a) {
        int c = g.child(id, a);
        double* cr = &out.node_reach[static_cast<size_t>(c) * np];
        for (int p = 0; p < np; ++p) cr[p] = r[p];
        out.node_chance[c] = rc * g.chance_prob(id, a);
      }
      continue;
    }
    const int s = node.infostate;
    const double* row = &sigma_padded[static_cast<size_t>(s) * ma];
    for (int a = 0; a < node.child_count; ++a) {
      int c = g.child(id, a);
      double* cr = &out.node_reach[static_cast<size_t>(c) * np];
      for (int p = 0; p < np; ++p) cr[p] = r[p];
      cr[node.owner] *= row[a];
      out.node_chance[c] = rc;
    }
  }

  // Bottom-up: expected values per player.
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int id = *it;
    const auto& node = g.node(id);
    double* v = &out.node_value[static_cast<size_t>(id) * np];
    if (node.kind == NodeKind::kTerminal) {
      for (int p = 0; p < np; ++p) v[p] = g.utility(node.terminal, p);
      continue;
    }
    for (int p = 0; p < np; ++p) v[p] = 0.0;
    if (node.kind == NodeKind::kChance) {
      for (int a = 0; a < node.child_count; ++a) {
        const double w = g.chance_prob(id, a);
        const double* cv = &out.node_value[static_cast<size_t>(g.child(id, a)) * np];
        for (int p = 0; p < np; ++p) v[p] += w * cv[p];
      }
    } else {
      const double* row = &sigma_padded[static_cast<size_t>(node.infostate) * ma];
      for (int a = 0; a < node.child_count; ++a) {
        const double* cv = &out.node_value[static_cast<size_t>(g.child(id, a)) * np];
        for (int p = 0; p < np; ++p) v[p] += row[a] * cv[p];
      }
    }
  }

  // Counterfactual rewards and own reach per infostate.
  for (int s = 0; s < g.num_infostates(); ++s) {
    const auto& info = g.infostate(s);
    const int owner = info.owner;
    bool first = true;
    for (int32_t id : info.nodes) {
      const double* r = &out.node_reach[static_cast<size_t>(id) * np];
      if (first) {
        out.own_reach[s] = r[owner];
        first = false;
      }
      double q = out.node_chance[id];
      for (int p = 0; p < np; ++p)
        if (p != owner) q *= r[p];
      for (int a = 0; a < info.num_actions; ++a) {
        const double* cv = &out.node_value[static_cast<size_t>(g.child(id, a)) * np];
        out.cf_reward[static_cast<size_t>(s) * ma + a] += q * cv[owner];
      }
    }
  }
}

void cfr_walk_backward(const GameTree& g, const std::vector<double>& sigma_padded,
                       const WalkResult& rec, const std::vector<double>& player_contrib_bar,
                       const std::vector<double>& cf_reward_bar, std::vector<double>& sigma_bar) {
  const int np = g.num_players();
  const int ma = g.max_actions();
  const int nn = g.num_nodes();
  if (static_cast<int>(sigma_bar.size()) != g.num_infostates() * ma)
    throw ContractViolation("gradient buffer has wrong size");
  const bool have_pc = !player_contrib_bar.empty();
  const bool have_cf = !cf_reward_bar.empty();
  if (have_pc && static_cast<int>(player_contrib_bar.size()) != np * rec.terminals)
    throw ContractViolation("terminal contribution adjoint has wrong size");
  if (have_cf && static_cast<int>(cf_reward_bar.size()) != g.num_infostates() * ma)
    throw ContractViolation("counterfactual reward adjoint has wrong size");

  std::vector<double> v_bar(static_cast<size_t>(nn) * np, 0.0);
  std::vector<double> r_bar(static_cast<size_t>(nn) * np, 0.0);

  // Seeds. Terminal contributions feed reach adjoints directly; the
  // counterfactual rewards x(s,a) = sum_{h in s} q(h) v_owner(child_a(h))
  // seed both child values and, through q(h), the other players' reaches.
  if (have_pc) {
    for (int id = 0; id < nn; ++id) {
      const auto& node = g.node(id);
      if (node.kind != NodeKind::kTerminal) continue;
      for (int p = 0; p < np; ++p)
        r_bar[static_cast<size_t>(id) * np + p] +=
            player_contrib_bar[static_cast<size_t>(p) * rec.terminals + node.terminal];
    }
  }
  if (have_cf) {
    for (int s = 0; s < g.num_infostates(); ++s) {
      const auto& info = g.infostate(s);
      const int owner = info.owner;
      for (int32_t id : info.nodes) {
        const double* r = &rec.node_reach[static_cast<size_t>(id) * np];
        double q = rec.node_chance[id];
        for (int p = 0; p < np; ++p)
          if (p != owner) q *= r[p];
        for (int a = 0; a < info.num_actions; ++a) {
          const double xb = cf_reward_bar[static_cast<size_t>(s) * ma + a];
          if (xb == 0.0) continue;
          const int c = g.child(id, a);
          v_bar[static_cast<size_t>(c) * np + owner] += xb * q;
          const double q_bar = xb * rec.node_value[static_cast<size_t>(c) * np + owner];
          if (q_bar != 0.0) {
            // dq/dr_k for k != owner: chance times the remaining factors.
            for (int k = 0; k < np; ++k) {
              if (k == owner) continue;
              double partial = rec.node_chance[id];
              for (int l = 0; l < np; ++l)
                if (l != owner && l != k) partial *= r[l];
              r_bar[static_cast<size_t>(id) * np + k] += q_bar * partial;
            }
          }
        }
      }
    }
  }

  const auto& order = g.preorder();

  // Value adjoints flow parent to child; sigma picks up v_bar(h) * v(child).
  for (int32_t id : order) {
    const auto& node = g.node(id);
    if (node.kind == NodeKind::kTerminal) continue;
    const double* vb = &v_bar[static_cast<size_t>(id) * np];
    bool any = false;
    for (int p = 0; p < np; ++p) any = any || vb[p] != 0.0;
    if (!any) continue;
    if (node.kind == NodeKind::kChance) {
      for (int a = 0; a < node.child_count; ++a) {
        const double w = g.chance_prob(id, a);
        double* cvb = &v_bar[static_cast<size_t>(g.child(id, a)) * np];
        for (int p = 0; p < np; ++p) cvb[p] += w * vb[p];
      }
    } else {
      const int s = node.infostate;
      const double* row = &sigma_padded[static_cast<size_t>(s) * ma];
      for (int a = 0; a < node.child_count; ++a) {
        const int c = g.child(id, a);
        double* cvb = &v_bar[static_cast<size_t>(c) * np];
        const double* cv = &rec.node_value[static_cast<size_t>(c) * np];
        double acc = 0.0;
        for (int p = 0; p < np; ++p) {
          cvb[p] += row[a] * vb[p];
          acc += vb[p] * cv[p];
        }
        sigma_bar[static_cast<size_t>(s) * ma + a] += acc;
      }
    }
  }

  // Reach adjoints flow child to parent; sigma picks up r_bar(child, owner)
  // times the parent's own reach.
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int id = *it;
    const auto& node = g.node(id);
    if (node.parent == -1) continue;
    const double* rb = &r_bar[static_cast<size_t>(id) * np];
    bool any = false;
    for (int p = 0; p < np; ++p) any = any || rb[p] != 0.0;
    if (!any) continue;
    const auto& par = g.node(node.parent);
    double* prb = &r_bar[static_cast<size_t>(node.parent) * np];
    if (par.kind == NodeKind::kChance) {
      for (int p = 0; p < np; ++p) prb[p] += rb[p];
    } else {
      const int s = par.infostate;
      const int a = node.parent_action;
      const double* row = &sigma_padded[static_cast<size_t>(s) * ma];
      const double* pr = &rec.node_reach[static_cast<size_t>(node.parent) * np];
      for (int p = 0; p < np; ++p) {
        if (p == par.owner) {
          prb[p] += rb[p] * row[a];
          sigma_bar[static_cast<size_t>(s) * ma + a] += rb[p] * pr[p];
        } else {
          prb[p] += rb[p];
        }
      }
    }
  }
}

std::vector<double> pad_profile(const GameTree& g, const StrategyProfile& profile) {
  const int ma = g.max_actions();
  std::vector<double> out(static_cast<size_t>(g.num_infostates()) * ma, 0.0);
  for (int s = 0; s < g.num_infostates(); ++s) {
    const auto& row = profile.probs[s];
    std::memcpy(&out[static_cast<size_t>(s) * ma], row.data(), row.size() * sizeof(double));
  }
  return out;
}

}  // namespace regretforge
