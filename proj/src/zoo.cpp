#include "regretforge/zoo.hpp"

#include <algorithm>
#include <deque>
#include <string>

#include "regretforge/errors.hpp"

namespace regretforge {

namespace {

void check_matrix(const std::vector<std::vector<double>>& u, size_t rows, size_t cols,
                  const char* name) {
  if (u.size() != rows) throw ContractViolation(std::string(name) + " has wrong row count");
  for (const auto& row : u)
    if (row.size() != cols) throw ContractViolation(std::string(name) + " is not rectangular");
}

}  // namespace

GameTree make_matrix_game(const std::vector<std::vector<double>>& u1,
                          const std::vector<std::vector<double>>& u2) {
  if (u1.empty() || u1[0].empty()) throw ContractViolation("payoff matrix is empty");
  const size_t rows = u1.size();
  const size_t cols = u1[0].size();
  check_matrix(u1, rows, cols, "u1");
  check_matrix(u2, rows, cols, "u2");

  GameTreeBuilder b(2);
  int root = b.decision(0, "row", static_cast<int>(rows));
  for (size_t r = 0; r < rows; ++r) {
    int col_node = b.decision(1, "col", static_cast<int>(cols));
    b.link(root, static_cast<int>(r), col_node);
    for (size_t c = 0; c < cols; ++c) {
      int t = b.terminal({u1[r][c], u2[r][c]});
      b.link(col_node, static_cast<int>(c), t);
    }
  }
  return b.build();
}

GameTree make_chance_matrix_game(const std::vector<double>& probs,
                                 const std::vector<std::vector<std::vector<double>>>& u1,
                                 const std::vector<std::vector<std::vector<double>>>& u2) {
  if (probs.empty()) throw ContractViolation("lottery needs at least one outcome");
  if (u1.size() != probs.size() || u2.size() != probs.size())
    throw ContractViolation("payoff tables must match the outcome count");
  const size_t rows = u1[0].size();
  const size_t cols = u1[0][0].size();
  for (size_t o = 0; o < probs.size(); ++o) {
    check_matrix(u1[o], rows, cols, "u1");
    check_matrix(u2[o], rows, cols, "u2");
  }

  GameTreeBuilder b(2);
  int root = b.chance(probs);
  for (size_t o = 0; o < probs.size(); ++o) {
    // Same key for every outcome: the lottery is unobserved.
    int row_node = b.decision(0, "row", static_cast<int>(rows));
    b.link(root, static_cast<int>(o), row_node);
    for (size_t r = 0; r < rows; ++r) {
      int col_node = b.decision(1, "col", static_cast<int>(cols));
      b.link(row_node, static_cast<int>(r), col_node);
      for (size_t c = 0; c < cols; ++c) {
        int t = b.terminal({u1[o][r][c], u2[o][r][c]});
        b.link(col_node, static_cast<int>(c), t);
      }
    }
  }
  return b.build();
}

GameTree make_biased_shapley(double eta) {
  std::vector<std::vector<double>> u1 = {{1, 0, eta}, {0, 1, 0}, {0, 0, 1}};
  std::vector<std::vector<double>> u2 = {{0, 1, eta}, {0, 0, 1}, {1, 0, 0}};
  return make_matrix_game(u1, u2);
}

StrategyProfile analytic_nash_biased_shapley(double eta) {
  if (eta > 1.0)
    throw NumericDomainError("closed-form equilibrium needs eta <= 1, got " +
                             std::to_string(eta));
  const double d = 3.0 - eta;
  StrategyProfile p;
  p.probs = {{1.0 / d, (1.0 - eta) / d, 1.0 / d}, {(1.0 - eta) / d, 1.0 / d, 1.0 / d}};
  return p;
}

TerminalDistribution delta_star() {
  const double w = 1.0 / 6.0;
  // Cells (row, col): (0,0) (0,1) (1,1) (1,2) (2,0) (2,2), row-major terminals.
  return {w, w, 0.0, 0.0, w, w, w, 0.0, w};
}

GameTree make_private_deal_toy() {
  // utilities[deal][a0][a1] for each player; deal 0 = cards (0,1), deal 1 = (1,0).
  const double u1[2][2][2] = {{{1, -1}, {0, 2}}, {{2, 0}, {-1, 1}}};
  const double u2[2][2][2] = {{{-1, 1}, {0, -2}}, {{-2, 0}, {1, -1}}};
  GameTreeBuilder b(2);
  int root = b.chance({0.5, 0.5});
  for (int deal = 0; deal < 2; ++deal) {
    const int c0 = deal == 0 ? 0 : 1;
    const int c1 = 1 - c0;
    int n0 = b.decision(0, "P0|c" + std::to_string(c0), 2);
    b.link(root, deal, n0);
    for (int a0 = 0; a0 < 2; ++a0) {
      // Player 1 sees only their card, not player 0's action, so both
      // children share one infostate.
      int n1 = b.decision(1, "P1|c" + std::to_string(c1), 2);
      b.link(n0, a0, n1);
      for (int a1 = 0; a1 < 2; ++a1) {
        int t = b.terminal({u1[deal][a0][a1], u2[deal][a0][a1]});
        b.link(n1, a1, t);
      }
    }
  }
  return b.build();
}

namespace {

struct LeducBuilder {
  LeducSpec spec;
  GameTreeBuilder b;
  int deck;

  explicit LeducBuilder(const LeducSpec& s)
      : spec(s), b(s.players), deck(s.num_ranks * s.suits) {}

  int rank(int card) const { return card / spec.suits; }
  double bet_size(int round) const { return round == 0 ? spec.bet_round1 : spec.bet_round2; }

  int fold_terminal(const std::vector<char>& active, const std::vector<double>& contrib) {
    double pot = 0.0;
    for (double c : contrib) pot += c;
    std::vector<double> u(spec.players);
    for (int p = 0; p < spec.players; ++p) u[p] = active[p] ? pot - contrib[p] : -contrib[p];
    return b.terminal(u);
  }

  int showdown_terminal(const std::vector<int>& cards, int pub, const std::vector<char>& active,
                        const std::vector<double>& contrib) {
    double pot = 0.0;
    for (double c : contrib) pot += c;
    // Pairing the public card dominates any rank; otherwise higher rank wins.
    auto strength = [&](int p) {
      int r = rank(cards[p]);
      return r == rank(pub) ? spec.num_ranks + r : r;
    };
    int best = -1;
    for (int p = 0; p < spec.players; ++p)
      if (active[p]) best = std::max(best, strength(p));
    int winners = 0;
    for (int p = 0; p < spec.players; ++p)
      if (active[p] && strength(p) == best) ++winners;
    std::vector<double> u(spec.players);
    for (int p = 0; p < spec.players; ++p) {
      if (active[p] && strength(p) == best) {
        double receipt = winners == 1 ? pot : spec.beta * pot / winners;
        u[p] = receipt - contrib[p];
      } else {
        u[p] = -contrib[p];
      }
    }
    return b.terminal(u);
  }

  std::string info_key(int p, int card, int pub, const std::string& hist) const {
    return "P" + std::to_string(p) + "|c" + std::to_string(card) + "|p" +
           (pub < 0 ? std::string("-") : std::to_string(pub)) + "|" + hist;
  }

  int betting(const std::vector<int>& cards, int pub, std::vector<double> contrib,
              std::vector<char> active, int round, int bets, double level,
              std::vector<double> round_contrib, std::deque<int> pending, std::string hist) {
    int num_active = 0;
    for (char a : active) num_active += a;
    if (num_active == 1) return fold_terminal(active, contrib);
    while (!pending.empty() && !active[pending.front()]) pending.pop_front();
    if (pending.empty()) return after_round(cards, pub, contrib, active, round, hist);

    const int p = pending.front();
    pending.pop_front();
    const double owe = level - round_contrib[p];
    const bool can_bet = bets < spec.max_bets_per_round;
    // Facing no wager: check, bet. Facing one: fold, call, raise.
    const int num_actions = owe == 0.0 ? (can_bet ? 2 : 1) : (can_bet ? 3 : 2);
    int node = b.decision(p, info_key(p, cards[p], pub, hist), num_actions);

    auto aggressive = [&](int slot, char tag) {
      std::vector<double> c2 = contrib;
      std::vector<double> rc2 = round_contrib;
      double level2 = level + bet_size(round);
      c2[p] += level2 - rc2[p];
      rc2[p] = level2;
      std::deque<int> pend2;
      for (int k = 1; k < spec.players; ++k) {
        int q = (p + k) % spec.players;
        if (active[q]) pend2.push_back(q);
      }
      int child = betting(cards, pub, std::move(c2), active, round, bets + 1, level2,
                          std::move(rc2), std::move(pend2), hist + tag);
      b.link(node, slot, child);
    };

    if (owe == 0.0) {
      int child = betting(cards, pub, contrib, active, round, bets, level, round_contrib,
                          pending, hist + "k");
      b.link(node, 0, child);
      if (can_bet) aggressive(1, 'b');
    } else {
      std::vector<char> folded = active;
      folded[p] = 0;
      int child = betting(cards, pub, contrib, std::move(folded), round, bets, level,
                          round_contrib, pending, hist + "f");
      b.link(node, 0, child);

      std::vector<double> c2 = contrib;
      std::vector<double> rc2 = round_contrib;
      c2[p] += owe;
      rc2[p] = level;
      child = betting(cards, pub, std::move(c2), active, round, bets, level, std::move(rc2),
                      pending, hist + "c");
      b.link(node, 1, child);
      if (can_bet) aggressive(2, 'r');
    }
    return node;
  }

  int after_round(const std::vector<int>& cards, int pub, const std::vector<double>& contrib,
                  const std::vector<char>& active, int round, const std::string& hist) {
    if (round == 1) return showdown_terminal(cards, pub, active, contrib);
    // Reveal the public card from the undealt remainder, then bet again. The
    // first-round history stays in the key so contexts never merge.
    std::vector<int> remaining;
    for (int c = 0; c < deck; ++c)
      if (std::find(cards.begin(), cards.end(), c) == cards.end()) remaining.push_back(c);
    std::vector<double> probs(remaining.size(), 1.0 / remaining.size());
    int node = b.chance(probs);
    for (size_t i = 0; i < remaining.size(); ++i) {
      std::deque<int> pending;
      for (int p = 0; p < spec.players; ++p)
        if (active[p]) pending.push_back(p);
      int child = betting(cards, remaining[i], contrib, active, 1, 0, 0.0,
                          std::vector<double>(spec.players, 0.0), std::move(pending),
                          hist + "/");
      b.link(node, static_cast<int>(i), child);
    }
    return node;
  }

  int deal(std::vector<int> cards) {
    if (static_cast<int>(cards.size()) == spec.players) {
      std::deque<int> pending;
      for (int p = 0; p < spec.players; ++p) pending.push_back(p);
      return betting(cards, -1, std::vector<double>(spec.players, spec.ante),
                     std::vector<char>(spec.players, 1), 0, 0, 0.0,
                     std::vector<double>(spec.players, 0.0), std::move(pending), "");
    }
    std::vector<int> remaining;
    for (int c = 0; c < deck; ++c)
      if (std::find(cards.begin(), cards.end(), c) == cards.end()) remaining.push_back(c);
    std::vector<double> probs(remaining.size(), 1.0 / remaining.size());
    int node = b.chance(probs);
    for (size_t i = 0; i < remaining.size(); ++i) {
      cards.push_back(remaining[i]);
      int child = deal(cards);
      cards.pop_back();
      b.link(node, static_cast<int>(i), child);
    }
    return node;
  }
};

}  // namespace

GameTree make_leduc(const LeducSpec& spec) {
  if (spec.players < 2 || spec.players > 4)
    throw ContractViolation("player count must be between 2 and 4");
  if (spec.num_ranks < 2) throw ContractViolation("deck needs at least two ranks");
  if (spec.suits < 1) throw ContractViolation("deck needs at least one suit");
  if (spec.num_ranks * spec.suits < spec.players + 1)
    throw ContractViolation("deck too small for the table plus a public card");
  if (spec.beta < 0.0) throw ContractViolation("tie multiplier must be nonnegative");
  if (spec.ante < 0.0 || spec.bet_round1 <= 0.0 || spec.bet_round2 <= 0.0)
    throw ContractViolation("stakes must be positive");
  if (spec.max_bets_per_round < 0) throw ContractViolation("bet cap must be nonnegative");
  LeducBuilder lb(spec);
  lb.deal({});
  return lb.b.build();
}

GameTree make_leduc(int players, double beta) {
  LeducSpec spec;
  spec.players = players;
  spec.beta = beta;
  spec.num_ranks = players + 1;
  return make_leduc(spec);
}

}  // namespace regretforge
