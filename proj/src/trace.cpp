#include "regretforge/trace.hpp"

#include "regretforge/errors.hpp"

namespace regretforge {

void RunTrace::init(const GameTree& g) {
  players_ = g.num_players();
  terminals_ = g.num_terminals();
  steps_ = 0;
  chance_.assign(terminals_, 0.0);
  sum_reach_.assign(terminals_, 0.0);
  sum_contrib_.assign(static_cast<size_t>(players_) * terminals_, 0.0);
  sum_opponent_.assign(static_cast<size_t>(players_) * terminals_, 0.0);
  strat_acc_.resize(g.num_infostates());
  strat_acc_uniform_.resize(g.num_infostates());
  final_regret_.resize(g.num_infostates());
  for (int s = 0; s < g.num_infostates(); ++s) {
    int a = g.infostate(s).num_actions;
    strat_acc_[s].assign(a, 0.0);
    strat_acc_uniform_[s].assign(a, 0.0);
    final_regret_[s].assign(a, 0.0);
  }
  prefix_efm_.clear();
}

void RunTrace::add_step(const GameTree& g, const WalkResult& w,
                        const std::vector<double>& sigma_padded, double weight) {
  if (!initialized()) throw ContractViolation("trace used before init");
  if (steps_ == 0) chance_ = w.chance_contrib;
  const int np = players_;
  const int nz = terminals_;
  for (int z = 0; z < nz; ++z) sum_reach_[z] += w.reach[z];
  for (size_t i = 0; i < sum_contrib_.size(); ++i) sum_contrib_[i] += w.player_contrib[i];
  for (int z = 0; z < nz; ++z) {
    for (int i = 0; i < np; ++i) {
      double prod = 1.0;
      for (int j = 0; j < np; ++j)
        if (j != i) prod *= w.player_contrib[static_cast<size_t>(j) * nz + z];
      sum_opponent_[static_cast<size_t>(i) * nz + z] += prod;
    }
  }
  const int ma = w.max_actions;
  for (int s = 0; s < g.num_infostates(); ++s) {
    const double r = w.own_reach[s];
    if (r == 0.0) continue;
    const double* row = &sigma_padded[static_cast<size_t>(s) * ma];
    auto& acc = strat_acc_[s];
    auto& accu = strat_acc_uniform_[s];
    for (size_t a = 0; a < acc.size(); ++a) {
      acc[a] += weight * r * row[a];
      accu[a] += r * row[a];
    }
  }
  ++steps_;
}

TerminalDistribution RunTrace::average_reach() const {
  if (steps_ == 0) throw ContractViolation("trace has no steps");
  TerminalDistribution d(sum_reach_);
  for (double& v : d) v /= static_cast<double>(steps_);
  return d;
}

std::vector<double> RunTrace::average_contribution(int player) const {
  if (steps_ == 0) throw ContractViolation("trace has no steps");
  std::vector<double> d(terminals_);
  for (int z = 0; z < terminals_; ++z)
    d[z] = sum_contrib_[static_cast<size_t>(player) * terminals_ + z] / static_cast<double>(steps_);
  return d;
}

std::vector<double> RunTrace::average_opponent_reach(int player) const {
  if (steps_ == 0) throw ContractViolation("trace has no steps");
  std::vector<double> d(terminals_);
  for (int z = 0; z < terminals_; ++z)
    d[z] = sum_opponent_[static_cast<size_t>(player) * terminals_ + z] / static_cast<double>(steps_);
  return d;
}

namespace {
StrategyProfile normalize_rows(const std::vector<std::vector<double>>& acc) {
  StrategyProfile p;
  p.probs.resize(acc.size());
  for (size_t s = 0; s < acc.size(); ++s) {
    double sum = 0.0;
    for (double v : acc[s]) sum += v;
    if (sum > 0.0) {
      p.probs[s].resize(acc[s].size());
      for (size_t a = 0; a < acc[s].size(); ++a) p.probs[s][a] = acc[s][a] / sum;
    } else {
      p.probs[s].assign(acc[s].size(), 1.0 / static_cast<double>(acc[s].size()));
    }
  }
  return p;
}
}  // namespace

StrategyProfile RunTrace::average_strategy() const { return normalize_rows(strat_acc_); }

StrategyProfile RunTrace::average_strategy_uniform() const {
  return normalize_rows(strat_acc_uniform_);
}

RunTrace accumulate_trace(const GameTree& g, std::span<const StrategyProfile> steps) {
  if (steps.empty()) throw ContractViolation("trace needs at least one step");
  RunTrace trace;
  trace.init(g);
  WalkResult w;
  for (const auto& profile : steps) {
    validate_profile(g, profile);
    std::vector<double> padded = pad_profile(g, profile);
    cfr_forward_walk(g, padded, w);
    trace.add_step(g, w, padded, 1.0);
  }
  return trace;
}

}  // namespace regretforge
