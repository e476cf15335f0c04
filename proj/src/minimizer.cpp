#include "regretforge/minimizer.hpp"

#include <cmath>

#include "regretforge/errors.hpp"

namespace regretforge {

namespace {
struct TagEntry {
  Algorithm a;
  const char* tag;
};
constexpr TagEntry kTags[] = {
    {Algorithm::kCfr, "cfr"},       {Algorithm::kCfrPlus, "cfr+"},
    {Algorithm::kPcfr, "pcfr"},     {Algorithm::kPcfrPlus, "pcfr+"},
    {Algorithm::kSpcfr, "spcfr"},   {Algorithm::kSpcfrPlus, "spcfr+"},
    {Algorithm::kDcfr, "dcfr"},     {Algorithm::kLcfr, "lcfr"},
    {Algorithm::kHedge, "hedge"},   {Algorithm::kHedgePlus, "hedge+"},
    {Algorithm::kNpcfr, "npcfr"},   {Algorithm::kNpcfrPlus, "npcfr+"},
};
}  // namespace

Algorithm parse_algorithm(const std::string& tag) {
  for (const auto& e : kTags)
    if (tag == e.tag) return e.a;
  throw ConfigError("algorithm", "unknown algorithm tag '" + tag + "'");
}

std::string algorithm_tag(Algorithm a) {
  for (const auto& e : kTags)
    if (e.a == a) return e.tag;
  throw ContractViolation("unmapped algorithm enum value");
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> all = [] {
    std::vector<Algorithm> v;
    for (const auto& e : kTags) v.push_back(e.a);
    return v;
  }();
  return all;
}

bool is_plus_variant(Algorithm a) {
  switch (a) {
    case Algorithm::kCfrPlus:
    case Algorithm::kPcfrPlus:
    case Algorithm::kSpcfrPlus:
    case Algorithm::kHedgePlus:
    case Algorithm::kNpcfrPlus:
      return true;
    default:
      return false;
  }
}

bool is_predictive(Algorithm a) {
  switch (a) {
    case Algorithm::kPcfr:
    case Algorithm::kPcfrPlus:
    case Algorithm::kSpcfr:
    case Algorithm::kSpcfrPlus:
    case Algorithm::kNpcfr:
    case Algorithm::kNpcfrPlus:
      return true;
    default:
      return false;
  }
}

bool is_neural(Algorithm a) { return a == Algorithm::kNpcfr || a == Algorithm::kNpcfrPlus; }

bool uses_linear_averaging(Algorithm a) {
  return is_plus_variant(a) || a == Algorithm::kLcfr;
}

bool uses_alternating_updates(Algorithm a) {
  // Plus-style bases alternate, following their original formulations; the
  // plain bases and hedge update every player each step.
  return is_plus_variant(a) || a == Algorithm::kDcfr || a == Algorithm::kLcfr;
}

RegretMinimizer::RegretMinimizer(Algorithm algorithm, int num_actions)
    : RegretMinimizer(algorithm, num_actions, nullptr, -1) {}

RegretMinimizer::RegretMinimizer(Algorithm algorithm, int num_actions,
                                 std::shared_ptr<const PredictorParams> predictor,
                                 int embed_index)
    : algorithm_(algorithm), num_actions_(num_actions), predictor_(std::move(predictor)),
      embed_index_(embed_index) {
  if (num_actions < 1) throw ContractViolation("minimizer needs at least one action");
  cum_regret_.assign(num_actions, 0.0);
  prediction_.assign(num_actions, 0.0);
  strategy_.assign(num_actions, 1.0 / num_actions);
  if (is_neural(algorithm_)) {
    if (!predictor_)
      throw ConfigError("checkpoint", "neural minimizer needs predictor weights");
    if (num_actions > predictor_->max_actions)
      throw ContractViolation("infostate has more actions than the predictor supports");
    h1_.assign(predictor_->hidden, 0.0);
    c1_.assign(predictor_->hidden, 0.0);
    h2_.assign(predictor_->hidden, 0.0);
    c2_.assign(predictor_->hidden, 0.0);
    head_out_.assign(num_actions, 0.0);
  }
}

const std::vector<double>& RegretMinimizer::next_strategy() {
  const int n = num_actions_;
  if (algorithm_ == Algorithm::kHedge || algorithm_ == Algorithm::kHedgePlus) {
    // Softmax of the cumulative regrets with a horizon-free step size.
    const double steps = static_cast<double>(t_ + 1);
    const double eta = std::sqrt(std::log(static_cast<double>(n < 2 ? 2 : n)) / steps);
    double m = cum_regret_[0];
    for (int a = 1; a < n; ++a) m = std::max(m, cum_regret_[a]);
    double sum = 0.0;
    for (int a = 0; a < n; ++a) {
      strategy_[a] = std::exp(eta * (cum_regret_[a] - m));
      sum += strategy_[a];
    }
    for (int a = 0; a < n; ++a) strategy_[a] /= sum;
    strategy_valid_ = true;
    return strategy_;
  }

  double mass = 0.0;
  double rmax = 0.0;
  std::vector<double> xi(n);
  for (int a = 0; a < n; ++a) {
    const double v = cum_regret_[a] + prediction_[a];
    xi[a] = v > 0.0 ? v : 0.0;
    mass += xi[a];
    rmax = std::max(rmax, std::abs(cum_regret_[a]));
  }
  const bool stabilized = algorithm_ == Algorithm::kSpcfr || algorithm_ == Algorithm::kSpcfrPlus;
  if (stabilized && mass < 1e-3 * std::max(1.0, rmax)) {
    // Hold the previous strategy while the positive mass is negligible
    // relative to the regret scale; avoids whiplash right after sign flips.
    strategy_valid_ = true;
    return strategy_;
  }
  if (mass > 0.0) {
    for (int a = 0; a < n; ++a) strategy_[a] = xi[a] / mass;
  } else {
    for (int a = 0; a < n; ++a) strategy_[a] = 1.0 / n;
  }
  strategy_valid_ = true;
  return strategy_;
}

void RegretMinimizer::load_state(std::vector<double> cum_regret,
                                 std::vector<double> prediction) {
  if (static_cast<int>(cum_regret.size()) != num_actions_ ||
      static_cast<int>(prediction.size()) != num_actions_)
    throw ContractViolation("warm start vectors must match the action count");
  cum_regret_ = std::move(cum_regret);
  prediction_ = std::move(prediction);
}

void RegretMinimizer::observe(const std::vector<double>& reward) {
  const int n = num_actions_;
  if (static_cast<int>(reward.size()) != n)
    throw ContractViolation("reward vector size does not match the action count");
  if (!strategy_valid_) throw ContractViolation("observe called before next_strategy");

  double expected = 0.0;
  for (int a = 0; a < n; ++a) expected += strategy_[a] * reward[a];
  std::vector<double> r(n);
  for (int a = 0; a < n; ++a) r[a] = reward[a] - expected;

  ++t_;
  const double t = static_cast<double>(t_);

  switch (algorithm_) {
    case Algorithm::kDcfr: {
      const double pos = std::pow(t, discount_.a) / (std::pow(t, discount_.a) + 1.0);
      const double neg = std::pow(t, discount_.b) / (std::pow(t, discount_.b) + 1.0);
      for (int a = 0; a < n; ++a) {
        cum_regret_[a] += r[a];
        cum_regret_[a] *= cum_regret_[a] > 0.0 ? pos : neg;
      }
      break;
    }
    case Algorithm::kLcfr: {
      const double w = t / (t + 1.0);
      for (int a = 0; a < n; ++a) cum_regret_[a] = (cum_regret_[a] + r[a]) * w;
      break;
    }
    default: {
      if (is_plus_variant(algorithm_)) {
        for (int a = 0; a < n; ++a) {
          const double v = cum_regret_[a] + r[a];
          cum_regret_[a] = v > 0.0 ? v : 0.0;
        }
      } else {
        for (int a = 0; a < n; ++a) cum_regret_[a] += r[a];
      }
      break;
    }
  }

  switch (algorithm_) {
    case Algorithm::kPcfr:
    case Algorithm::kPcfrPlus:
    case Algorithm::kSpcfr:
    case Algorithm::kSpcfrPlus:
      prediction_ = r;
      break;
    case Algorithm::kNpcfr:
    case Algorithm::kNpcfrPlus: {
      predictor_step(*predictor_, r.data(), cum_regret_.data(), n, embed_index_, h1_.data(),
                     c1_.data(), h2_.data(), c2_.data(), head_out_.data());
      const double alpha = predictor_->alpha;
      if (algorithm_ == Algorithm::kNpcfr) {
        for (int a = 0; a < n; ++a) prediction_[a] = alpha * (r[a] + head_out_[a]);
      } else {
        for (int a = 0; a < n; ++a) prediction_[a] = alpha * head_out_[a];
      }
      break;
    }
    default:
      break;  // prediction stays zero
  }
  strategy_valid_ = false;
}

}  // namespace regretforge
