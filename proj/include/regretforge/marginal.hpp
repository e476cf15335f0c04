#pragma once

#include <span>
#include <utility>
#include <vector>

#include "regretforge/game.hpp"
#include "regretforge/normal_form.hpp"
#include "regretforge/trace.hpp"

namespace regretforge {

// mu(z) = d_c(z) * prod_i d_bar_i(z): the product of the players' average
// contributions, i.e. the closest factorized distribution the trace's
// average play could have produced.
TerminalDistribution marginal_across_terminals(const RunTrace& trace);

// KL(d_bar || mu) in nats with 0 log 0 = 0. Zero iff the average reach
// factorizes. Throws NumericDomainError if some terminal keeps positive
// average reach while its marginal product collapses below 1e-300 (support
// containment holds in exact arithmetic, so this flags degeneracy).
double efm(const RunTrace& trace);

// Mean of the per-prefix marginalizability values of one solve.
double meta_loss(std::span<const double> prefix_efms);

// KL(joint || product of per-player marginals) over pure profiles, in nats.
double total_correlation(const NormalFormView& view, std::span<const double> joint);

// Same computation from bare axis sizes (player 0 slowest index).
double total_correlation_shape(std::span<const int> sizes, std::span<const double> joint);

struct BoundCertificate {
  double nash_gap = 0.0;
  double cce_gap = 0.0;
  double efm = 0.0;
  double max_abs_utility = 0.0;
  double rhs = 0.0;    // cce_gap + 2 M sqrt(2 efm)
  double slack = 0.0;  // rhs - nash_gap
};

// Checks NashGap(uniform average strategy) <= cce_gap + 2 M sqrt(2 efm) with
// 1e-6 tolerance; throws CertificationFailure carrying the components when
// the inequality fails.
BoundCertificate certify_bound(const GameTree& game, const RunTrace& trace);

// Plays the step strategies through both metrics: the tree-side
// marginalizability of their trace, and the normal-form total correlation of
// the empirical average of the equivalent mixed profiles (product over each
// player's full pure-strategy set; chance integrates out). Returns (efm,
// total correlation). The two agree on games where each player acts from a
// single infostate, chance unobserved.
std::pair<double, double> nfm_efm_equivalence_check(const GameTree& game,
                                                    std::span<const StrategyProfile> steps,
                                                    int64_t cap = 10000);

}  // namespace regretforge
