#pragma once

#include <memory>
#include <string>
#include <vector>

#include "regretforge/predictor.hpp"

namespace regretforge {

// The regret minimizer family. Tags with a trailing '+' clamp the cumulative
// regret at zero after every observation and default to linear strategy
// averaging and alternating updates.
enum class Algorithm {
  kCfr,
  kCfrPlus,
  kPcfr,
  kPcfrPlus,
  kSpcfr,
  kSpcfrPlus,
  kDcfr,
  kLcfr,
  kHedge,
  kHedgePlus,
  kNpcfr,
  kNpcfrPlus,
};

Algorithm parse_algorithm(const std::string& tag);
std::string algorithm_tag(Algorithm a);
const std::vector<Algorithm>& all_algorithms();

bool is_plus_variant(Algorithm a);     // clamps cumulative regret
bool is_predictive(Algorithm a);       // feeds a prediction into the strategy
bool is_neural(Algorithm a);           // needs trained predictor weights
bool uses_linear_averaging(Algorithm a);
bool uses_alternating_updates(Algorithm a);

// Discount parameters for the discounted variant: positive regrets scale by
// t^a/(t^a+1), negative by t^b/(t^b+1), strategy weights by t^g.
struct DiscountParams {
  double a = 1.5;
  double b = 0.0;
  double g = 2.0;
};

// Per-infostate minimizer state. One traversal step is: next_strategy(),
// play it, then observe() the counterfactual rewards it produced.
class RegretMinimizer {
 public:
  RegretMinimizer(Algorithm algorithm, int num_actions);

  // Neural variants also need weights, an embedding row, and recurrent state.
  RegretMinimizer(Algorithm algorithm, int num_actions,
                  std::shared_ptr<const PredictorParams> predictor, int embed_index);

  // Normalized positive part of R + p, uniform when the mass vanishes. The
  // stabilized variants instead repeat the previous strategy while the mass
  // is below 1e-3 * max(1, ||R||_inf).
  const std::vector<double>& next_strategy();

  // Counterfactual rewards for the strategy returned by the last
  // next_strategy() call. Updates r, R, the prediction and, for the neural
  // variants, the recurrent state.
  void observe(const std::vector<double>& reward);

  // Warm start from explicit accumulator values (resume or analysis).
  void load_state(std::vector<double> cum_regret, std::vector<double> prediction);

  void set_discount(const DiscountParams& d) { discount_ = d; }

  Algorithm algorithm() const { return algorithm_; }
  int num_actions() const { return num_actions_; }
  int64_t observations() const { return t_; }
  const std::vector<double>& cumulative_regret() const { return cum_regret_; }
  const std::vector<double>& prediction() const { return prediction_; }
  const std::vector<double>& last_strategy() const { return strategy_; }

 private:
  Algorithm algorithm_;
  int num_actions_;
  int64_t t_ = 0;
  DiscountParams discount_;
  std::vector<double> cum_regret_;
  std::vector<double> prediction_;
  std::vector<double> strategy_;
  bool strategy_valid_ = false;

  std::shared_ptr<const PredictorParams> predictor_;
  int embed_index_ = -1;
  std::vector<double> h1_, c1_, h2_, c2_;
  std::vector<double> head_out_;
};

}  // namespace regretforge
