#include "regretforge/marginal.hpp"

#include <cmath>
#include <string>

#include "regretforge/errors.hpp"
#include "regretforge/metrics.hpp"

namespace regretforge {

TerminalDistribution marginal_across_terminals(const RunTrace& trace) {
  if (trace.steps() == 0) throw ContractViolation("trace has no steps");
  const int np = trace.num_players();
  const int nz = trace.num_terminals();
  const double t = static_cast<double>(trace.steps());
  TerminalDistribution mu(nz);
  const auto& contrib = trace.sum_contrib();
  for (int z = 0; z < nz; ++z) {
    double prod = trace.chance()[z];
    for (int i = 0; i < np; ++i) prod *= contrib[static_cast<size_t>(i) * nz + z] / t;
    mu[z] = prod;
  }
  return mu;
}

double efm(const RunTrace& trace) {
  TerminalDistribution d = trace.average_reach();
  TerminalDistribution mu = marginal_across_terminals(trace);
  double kl = 0.0;
  for (size_t z = 0; z < d.size(); ++z) {
    if (d[z] <= 0.0) continue;
    if (mu[z] < 1e-300)
      throw NumericDomainError("marginal support collapsed at terminal " + std::to_string(z) +
                               " while average reach is " + std::to_string(d[z]));
    kl += d[z] * (std::log(d[z]) - std::log(mu[z]));
  }
  return kl < 0.0 && kl > -1e-15 ? 0.0 : kl;
}

double meta_loss(std::span<const double> prefix_efms) {
  if (prefix_efms.empty()) throw ContractViolation("meta loss needs at least one prefix");
  double sum = 0.0;
  for (double v : prefix_efms) sum += v;
  return sum / static_cast<double>(prefix_efms.size());
}

double total_correlation_shape(std::span<const int> sizes, std::span<const double> joint) {
  int64_t product = 1;
  for (int s : sizes) {
    if (s < 1) throw ContractViolation("axis sizes must be positive");
    product *= s;
  }
  if (static_cast<int64_t>(joint.size()) != product)
    throw ContractViolation("joint has " + std::to_string(joint.size()) + " entries, expected " +
                            std::to_string(product));
  double sum = 0.0;
  for (double v : joint) {
    if (v < -1e-12) throw ContractViolation("joint has negative mass");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ContractViolation("joint sums to " + std::to_string(sum));

  // Entropy identity: KL(joint || prod marginals) = sum_i H(mu_i) - H(joint),
  // exact whenever the marginals come from the joint itself.
  const int n = static_cast<int>(sizes.size());
  std::vector<std::vector<double>> marginals(n);
  for (int i = 0; i < n; ++i) marginals[i].assign(sizes[i], 0.0);
  std::vector<int> idx(n, 0);
  for (int64_t flat = 0; flat < product; ++flat) {
    const double v = joint[flat];
    if (v > 0.0)
      for (int i = 0; i < n; ++i) marginals[i][idx[i]] += v;
    for (int i = n - 1; i >= 0; --i) {
      if (++idx[i] < sizes[i]) break;
      idx[i] = 0;
    }
  }
  auto entropy = [](std::span<const double> p) {
    double h = 0.0;
    for (double v : p)
      if (v > 0.0) h -= v * std::log(v);
    return h;
  };
  double tc = -entropy(joint);
  for (int i = 0; i < n; ++i) tc += entropy(marginals[i]);
  return tc < 0.0 && tc > -1e-12 ? 0.0 : tc;
}

double total_correlation(const NormalFormView& view, std::span<const double> joint) {
  return total_correlation_shape(view.pure_counts(), joint);
}

BoundCertificate certify_bound(const GameTree& game, const RunTrace& trace) {
  BoundCertificate cert;
  cert.nash_gap = nash_gap(game, trace.average_strategy_uniform());
  cert.cce_gap = cce_gap(game, trace);
  cert.efm = efm(trace);
  cert.max_abs_utility = game.max_abs_utility();
  cert.rhs = cert.cce_gap + 2.0 * cert.max_abs_utility * std::sqrt(2.0 * cert.efm);
  cert.slack = cert.rhs - cert.nash_gap;
  if (cert.slack < -1e-6)
    throw CertificationFailure("marginalizability bound violated: nash_gap " +
                                   std::to_string(cert.nash_gap) + " > rhs " +
                                   std::to_string(cert.rhs),
                               cert.nash_gap, cert.cce_gap, cert.efm, cert.slack);
  return cert;
}

std::pair<double, double> nfm_efm_equivalence_check(const GameTree& game,
                                                    std::span<const StrategyProfile> steps,
                                                    int64_t cap) {
  NormalFormView view = to_normal_form(game, cap);
  RunTrace trace = accumulate_trace(game, steps);
  const double e = efm(trace);

  // Empirical average over steps of the product mixed profile equivalent to
  // each behavior profile: zeta_i(pure) = prod over the player's infostates
  // of the behavior probability of the action that pure strategy takes.
  const int np = game.num_players();
  std::vector<double> joint(view.num_profiles(), 0.0);
  std::vector<std::vector<double>> zeta(np);
  for (const auto& profile : steps) {
    for (int i = 0; i < np; ++i) {
      zeta[i].assign(view.pure_count(i), 1.0);
      const auto& infos = view.infostates(i);
      for (int p = 0; p < view.pure_count(i); ++p)
        for (size_t k = 0; k < infos.size(); ++k)
          zeta[i][p] *= profile.probs[infos[k]][view.pure_action(i, p, static_cast<int>(k))];
    }
    std::vector<int> pures(np, 0);
    for (int64_t flat = 0; flat < view.num_profiles(); ++flat) {
      double w = 1.0;
      for (int i = 0; i < np; ++i) w *= zeta[i][pures[i]];
      joint[flat] += w / static_cast<double>(steps.size());
      for (int i = np - 1; i >= 0; --i) {
        if (++pures[i] < view.pure_count(i)) break;
        pures[i] = 0;
      }
    }
  }
  const double tc = total_correlation(view, joint);
  return {e, tc};
}

}  // namespace regretforge
