#pragma once

#include <vector>

#include "regretforge/game.hpp"

namespace regretforge {

// One-shot two-player game in tree form: player 0 picks a row, player 1 picks
// a column without observing it (one infostate each). u1/u2 are [rows][cols].
GameTree make_matrix_game(const std::vector<std::vector<double>>& u1,
                          const std::vector<std::vector<double>>& u2);

// Matrix game preceded by a hidden chance lottery: chance picks outcome o with
// probability probs[o], neither player observes it, then both act once with
// payoffs u1[o], u2[o]. Still one infostate per player.
GameTree make_chance_matrix_game(const std::vector<double>& probs,
                                 const std::vector<std::vector<std::vector<double>>>& u1,
                                 const std::vector<std::vector<std::vector<double>>>& u2);

// 3x3 Shapley-style cycling game with an asymmetry knob eta on the (row 0,
// col 2) cell of both payoff matrices. eta = 0 recovers the classic game.
GameTree make_biased_shapley(double eta);

// Closed-form Nash profile of the biased Shapley game; valid for eta <= 1
// (entries leave the simplex beyond that), throws NumericDomainError outside.
StrategyProfile analytic_nash_biased_shapley(double eta);

// Hand-picked correlated distribution over the 9 terminals (row-major cells)
// used as a reference point: a coarse correlated equilibrium for small eta
// that no product distribution can represent.
TerminalDistribution delta_star();

// Two-card toy with privately observed deals: chance deals (0,1) or (1,0)
// with equal probability, each player sees only their own card and acts once
// (player 1 does not observe player 0's action). Two infostates per player.
GameTree make_private_deal_toy();

// Two-round limit poker with a players+1 rank deck (two suits), one private
// card each, one public card between rounds, and at most two bets per round.
struct LeducSpec {
  int players = 2;
  double beta = 1.0;  // tie pots pay beta times the equal split
  int num_ranks = 3;  // defaults to players + 1 via make_leduc(players, beta)
  int suits = 2;
  double ante = 1.0;
  double bet_round1 = 2.0;
  double bet_round2 = 4.0;
  int max_bets_per_round = 2;
};

GameTree make_leduc(const LeducSpec& spec);
GameTree make_leduc(int players, double beta = 1.0);

}  // namespace regretforge
