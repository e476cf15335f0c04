#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "doctest.h"
#include "regretforge/errors.hpp"
#include "regretforge/minimizer.hpp"
#include "regretforge/predictor.hpp"

using namespace regretforge;

namespace {

std::shared_ptr<PredictorParams> zero_predictor(int max_actions, double alpha) {
  auto p = std::make_shared<PredictorParams>(
      make_predictor(max_actions, 2, 3, 4, HeadKind::kTanh, alpha));
  return p;
}

// External regret of a played sequence against the best fixed action.
double max_regret(const std::vector<std::vector<double>>& rewards,
                  const std::vector<std::vector<double>>& strategies) {
  const size_t n = rewards[0].size();
  double played = 0.0;
  std::vector<double> per_action(n, 0.0);
  for (size_t t = 0; t < rewards.size(); ++t) {
    for (size_t a = 0; a < n; ++a) {
      played += strategies[t][a] * rewards[t][a];
      per_action[a] += rewards[t][a];
    }
  }
  double best = per_action[0];
  for (double v : per_action) best = std::max(best, v);
  return best - played;
}

}  // namespace

TEST_CASE("algorithm tags round trip and classify") {
  const std::vector<std::string> tags = {"cfr",  "cfr+",  "pcfr",  "pcfr+", "spcfr", "spcfr+",
                                         "dcfr", "lcfr",  "hedge", "hedge+", "npcfr", "npcfr+"};
  CHECK(all_algorithms().size() == 12);
  for (const auto& tag : tags) {
    const Algorithm a = parse_algorithm(tag);
    CHECK(algorithm_tag(a) == tag);
  }
  CHECK_THROWS_AS(parse_algorithm("cfr++"), ConfigError);
  CHECK_THROWS_AS(parse_algorithm(""), ConfigError);

  CHECK(is_plus_variant(Algorithm::kCfrPlus));
  CHECK(is_plus_variant(Algorithm::kNpcfrPlus));
  CHECK_FALSE(is_plus_variant(Algorithm::kDcfr));
  CHECK_FALSE(is_plus_variant(Algorithm::kLcfr));
  CHECK(is_predictive(Algorithm::kPcfr));
  CHECK(is_predictive(Algorithm::kSpcfrPlus));
  CHECK(is_predictive(Algorithm::kNpcfr));
  CHECK_FALSE(is_predictive(Algorithm::kCfr));
  CHECK_FALSE(is_predictive(Algorithm::kHedge));
  CHECK(is_neural(Algorithm::kNpcfr));
  CHECK(is_neural(Algorithm::kNpcfrPlus));
  CHECK_FALSE(is_neural(Algorithm::kPcfrPlus));
  CHECK(uses_linear_averaging(Algorithm::kCfrPlus));
  CHECK(uses_linear_averaging(Algorithm::kLcfr));
  CHECK_FALSE(uses_linear_averaging(Algorithm::kCfr));
  CHECK(uses_alternating_updates(Algorithm::kDcfr));
  CHECK(uses_alternating_updates(Algorithm::kPcfrPlus));
  CHECK_FALSE(uses_alternating_updates(Algorithm::kCfr));
  CHECK_FALSE(uses_alternating_updates(Algorithm::kHedge));
  CHECK_FALSE(uses_alternating_updates(Algorithm::kNpcfr));
}

TEST_CASE("strategy is the normalized positive part of regret plus prediction") {
  SUBCASE("positive part and normalization") {
    RegretMinimizer m(Algorithm::kCfr, 3);
    m.load_state({1.0, -2.0, 3.0}, {0.0, 0.0, 0.0});
    const auto& s = m.next_strategy();
    CHECK(s[0] == 0.25);
    CHECK(s[1] == 0.0);
    CHECK(s[2] == 0.75);
  }
  SUBCASE("uniform fallback when no positive mass") {
    RegretMinimizer m(Algorithm::kCfr, 2);
    m.load_state({-1.0, -1.0}, {0.0, 0.0});
    const auto& s = m.next_strategy();
    CHECK(s[0] == 0.5);
    CHECK(s[1] == 0.5);
  }
  SUBCASE("prediction shifts the argument") {
    RegretMinimizer m(Algorithm::kPcfr, 3);
    m.load_state({1.0, -2.0, 3.0}, {1.0, 0.0, 0.0});
    const auto& s = m.next_strategy();
    CHECK(s[0] == 0.4);
    CHECK(s[1] == 0.0);
    CHECK(s[2] == 0.6);
  }
  SUBCASE("plain positive table") {
    RegretMinimizer m(Algorithm::kCfr, 3);
    m.load_state({2.0, 0.0, 3.0}, {0.0, 0.0, 0.0});
    const auto& s = m.next_strategy();
    CHECK(s[0] == 0.4);
    CHECK(s[1] == 0.0);
    CHECK(s[2] == 0.6);
  }
  SUBCASE("fresh minimizer starts uniform") {
    for (Algorithm a : all_algorithms()) {
      if (is_neural(a)) continue;
      RegretMinimizer m(a, 4);
      for (double v : m.next_strategy()) CHECK(v == 0.25);
    }
  }
}

TEST_CASE("observation accumulates instantaneous regret") {
  SUBCASE("uniform strategy, reward (1,0)") {
    RegretMinimizer m(Algorithm::kCfr, 2);
    m.next_strategy();
    m.observe({1.0, 0.0});
    CHECK(m.cumulative_regret()[0] == 0.5);
    CHECK(m.cumulative_regret()[1] == -0.5);
    CHECK(m.observations() == 1);
  }
  SUBCASE("clamped update") {
    RegretMinimizer m(Algorithm::kCfrPlus, 2);
    m.load_state({0.2, 0.0}, {0.3, 0.5});
    const auto& s = m.next_strategy();
    CHECK(s[0] == 0.5);
    CHECK(s[1] == 0.5);
    m.observe({0.0, 2.0});  // instantaneous regret (-1, 1)
    CHECK(m.cumulative_regret()[0] == 0.0);
    CHECK(m.cumulative_regret()[1] == 1.0);
  }
  SUBCASE("plus variants never hold negative regret") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Algorithm a : {Algorithm::kCfrPlus, Algorithm::kPcfrPlus, Algorithm::kSpcfrPlus,
                        Algorithm::kHedgePlus}) {
      RegretMinimizer m(a, 4);
      for (int t = 0; t < 200; ++t) {
        m.next_strategy();
        m.observe({u(rng), u(rng), u(rng), u(rng)});
        for (double v : m.cumulative_regret()) CHECK(v >= 0.0);
      }
    }
  }
}

TEST_CASE("discounted and linear variants rescale the accumulator") {
  SUBCASE("discounted first step halves both signs at default parameters") {
    RegretMinimizer m(Algorithm::kDcfr, 2);
    m.next_strategy();
    m.observe({1.0, 0.0});
    // raw (0.5,-0.5); t=1 gives 1/2 for the positive and 1/2 for the negative
    CHECK(m.cumulative_regret()[0] == 0.25);
    CHECK(m.cumulative_regret()[1] == -0.25);
  }
  SUBCASE("discounted negative side keeps the t^b factor") {
    RegretMinimizer m(Algorithm::kDcfr, 2);
    m.next_strategy();
    m.observe({1.0, 0.0});  // R = (0.25, -0.25) as above
    m.next_strategy();      // pure on action 0 now
    m.observe({1.0, 0.5});  // r = (0, -0.5), raw R = (0.25, -0.75)
    const double pos = std::pow(2.0, 1.5) / (std::pow(2.0, 1.5) + 1.0);
    CHECK(m.cumulative_regret()[0] == doctest::Approx(0.25 * pos).epsilon(1e-15));
    CHECK(m.cumulative_regret()[1] == doctest::Approx(-0.375).epsilon(1e-15));
  }
  SUBCASE("linear variant multiplies by t/(t+1) after adding") {
    RegretMinimizer m(Algorithm::kLcfr, 2);
    m.next_strategy();
    m.observe({1.0, 0.0});
    CHECK(m.cumulative_regret()[0] == 0.25);
    CHECK(m.cumulative_regret()[1] == -0.25);
    m.next_strategy();  // (1, 0)
    m.observe({0.0, 1.0});  // r = (0, 1)
    CHECK(m.cumulative_regret()[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(m.cumulative_regret()[1] == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("custom discount parameters are honored") {
    RegretMinimizer m(Algorithm::kDcfr, 2);
    m.set_discount({2.0, 1.0, 2.0});
    m.next_strategy();
    m.observe({1.0, 0.0});
    CHECK(m.cumulative_regret()[0] == 0.5 * (1.0 / 2.0));   // t^2/(t^2+1) at t=1
    CHECK(m.cumulative_regret()[1] == -0.5 * (1.0 / 2.0));  // t^1/(t^1+1) at t=1
  }
}

TEST_CASE("hedge plays a softmax of the cumulative regrets") {
  RegretMinimizer m(Algorithm::kHedge, 3);
  SUBCASE("zero state is uniform") {
    for (double v : m.next_strategy()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("loaded state matches the closed form") {
    m.load_state({1.0, 2.0, 3.0}, {0.0, 0.0, 0.0});
    const double eta = std::sqrt(std::log(3.0) / 1.0);  // first step
    double w[3], sum = 0.0;
    for (int a = 0; a < 3; ++a) {
      w[a] = std::exp(eta * (a + 1.0));
      sum += w[a];
    }
    const auto& s = m.next_strategy();
    for (int a = 0; a < 3; ++a) CHECK(s[a] == doctest::Approx(w[a] / sum).epsilon(1e-12));
  }
  SUBCASE("step size shrinks with observations") {
    // After many observations of the same state the softmax flattens.
    RegretMinimizer early(Algorithm::kHedge, 2);
    early.load_state({1.0, 0.0}, {0.0, 0.0});
    const double first = early.next_strategy()[0];
    RegretMinimizer late(Algorithm::kHedge, 2);
    for (int t = 0; t < 99; ++t) {
      late.next_strategy();
      late.observe({0.0, 0.0});  // no regret change, advances the clock
    }
    late.load_state({1.0, 0.0}, {0.0, 0.0});
    const double hundredth = late.next_strategy()[0];
    CHECK(first > hundredth);
    CHECK(hundredth > 0.5);
  }
}

TEST_CASE("stabilized variants hold their strategy through tiny positive mass") {
  for (Algorithm a : {Algorithm::kSpcfr, Algorithm::kSpcfrPlus}) {
    CAPTURE(algorithm_tag(a));
    RegretMinimizer m(a, 2);
    m.load_state({2.0, 0.0}, {0.0, 0.0});
    const auto s1 = m.next_strategy();
    CHECK(s1[0] == 1.0);
    m.load_state({-5.0, -4.0}, {0.0, 0.0});
    const auto& s2 = m.next_strategy();
    CHECK(s2[0] == 1.0);  // held, not reset to uniform
    CHECK(s2[1] == 0.0);
  }
  // The unstabilized predictive variant falls back to uniform instead.
  RegretMinimizer p(Algorithm::kPcfr, 2);
  p.load_state({2.0, 0.0}, {0.0, 0.0});
  p.next_strategy();
  p.load_state({-5.0, -4.0}, {0.0, 0.0});
  const auto& s = p.next_strategy();
  CHECK(s[0] == 0.5);
  CHECK(s[1] == 0.5);
}

TEST_CASE("neural variants reduce to their classical counterparts") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);

  SUBCASE("zero weights and unit scale reproduce the predictive update") {
    RegretMinimizer neural(Algorithm::kNpcfr, 3, zero_predictor(3, 1.0), 1);
    RegretMinimizer classic(Algorithm::kPcfr, 3);
    for (int t = 0; t < 60; ++t) {
      const auto& sn = neural.next_strategy();
      const auto& sc = classic.next_strategy();
      for (int a = 0; a < 3; ++a) CHECK(sn[a] == sc[a]);
      const std::vector<double> x = {u(rng), u(rng), u(rng)};
      neural.observe(x);
      classic.observe(x);
      for (int a = 0; a < 3; ++a) {
        CHECK(neural.cumulative_regret()[a] == classic.cumulative_regret()[a]);
        CHECK(neural.prediction()[a] == classic.prediction()[a]);
      }
    }
  }
  SUBCASE("zero scale reproduces the unpredictive update") {
    RegretMinimizer neural(Algorithm::kNpcfr, 3, zero_predictor(3, 0.0), 0);
    RegretMinimizer classic(Algorithm::kCfr, 3);
    RegretMinimizer neural_plus(Algorithm::kNpcfrPlus, 3, zero_predictor(3, 0.0), 0);
    RegretMinimizer classic_plus(Algorithm::kCfrPlus, 3);
    for (int t = 0; t < 60; ++t) {
      const auto& sn = neural.next_strategy();
      const auto& sc = classic.next_strategy();
      const auto& snp = neural_plus.next_strategy();
      const auto& scp = classic_plus.next_strategy();
      for (int a = 0; a < 3; ++a) {
        CHECK(sn[a] == sc[a]);
        CHECK(snp[a] == scp[a]);
      }
      const std::vector<double> x = {u(rng), u(rng), u(rng)};
      neural.observe(x);
      classic.observe(x);
      neural_plus.observe(x);
      classic_plus.observe(x);
      for (int a = 0; a < 3; ++a) {
        CHECK(neural.cumulative_regret()[a] == classic.cumulative_regret()[a]);
        CHECK(neural_plus.cumulative_regret()[a] == classic_plus.cumulative_regret()[a]);
      }
    }
  }
}

TEST_CASE("neural prediction wiring matches a direct recurrent evaluation") {
  auto params = std::make_shared<PredictorParams>(
      make_predictor(3, 2, 4, 5, HeadKind::kTanh, 0.7));
  std::mt19937_64 rng(21);
  init_predictor(*params, rng);

  RegretMinimizer base(Algorithm::kNpcfr, 3, params, 2);
  RegretMinimizer plus(Algorithm::kNpcfrPlus, 3, params, 2);

  std::vector<double> h1(4, 0.0), c1(4, 0.0), h2(4, 0.0), c2(4, 0.0);
  std::vector<double> hp1(4, 0.0), cp1(4, 0.0), hp2(4, 0.0), cp2(4, 0.0);
  std::vector<double> Rb(3, 0.0), Rp(3, 0.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  for (int t = 0; t < 10; ++t) {
    const auto sb = base.next_strategy();
    const auto sp = plus.next_strategy();
    const std::vector<double> x = {u(rng), u(rng), u(rng)};

    // Shadow updates using the public predictor entry point.
    auto shadow = [&](const std::vector<double>& s, std::vector<double>& R, bool clamp,
                      std::vector<double>& sh1, std::vector<double>& sc1,
                      std::vector<double>& sh2, std::vector<double>& sc2) {
      double e = 0.0;
      for (int a = 0; a < 3; ++a) e += s[a] * x[a];
      std::vector<double> r(3), out(3);
      for (int a = 0; a < 3; ++a) {
        r[a] = x[a] - e;
        const double v = R[a] + r[a];
        R[a] = clamp ? (v > 0.0 ? v : 0.0) : v;
      }
      predictor_step(*params, r.data(), R.data(), 3, 2, sh1.data(), sc1.data(), sh2.data(),
                     sc2.data(), out.data());
      std::vector<double> pred(3);
      for (int a = 0; a < 3; ++a)
        pred[a] = clamp ? params->alpha * out[a] : params->alpha * (r[a] + out[a]);
      return pred;
    };
    const auto pb = shadow(sb, Rb, false, h1, c1, h2, c2);
    const auto pp = shadow(sp, Rp, true, hp1, cp1, hp2, cp2);

    base.observe(x);
    plus.observe(x);
    for (int a = 0; a < 3; ++a) {
      CHECK(base.prediction()[a] == pb[a]);
      CHECK(plus.prediction()[a] == pp[a]);
      CHECK(base.cumulative_regret()[a] == Rb[a]);
      CHECK(plus.cumulative_regret()[a] == Rp[a]);
    }
  }
}

TEST_CASE("recurrent predictor matches a hand-computed reference") {
  PredictorParams p = make_predictor(1, 1, 1, 1, HeadKind::kTanh, 1.0);
  p.l1_wx = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, -0.7, 0.8, 0.9, 0.3, -0.2, 0.1};
  p.l1_wh = {0.5, -0.5, 0.25, 0.75};
  p.l1_b = {0.01, 0.02, 0.03, 0.04};
  p.l2_wx = {-0.3, 0.6, 0.2, -0.1};
  p.l2_wh = {0.45, -0.15, 0.05, 0.35};
  p.l2_b = {0.005, -0.01, 0.015, -0.02};
  p.head_w = {0.9};
  p.head_b = {-0.1};
  p.embed = {0.37};

  double h1 = 0.0, c1 = 0.0, h2 = 0.0, c2 = 0.0, out = 0.0;
  double r = 0.25, R = -0.5;
  predictor_step(p, &r, &R, 1, 0, &h1, &c1, &h2, &c2, &out);
  CHECK(h1 == doctest::Approx(-0.059888782711103504).epsilon(1e-12));
  CHECK(c1 == doctest::Approx(-0.10684171433571966).epsilon(1e-12));
  CHECK(h2 == doctest::Approx(0.00075888010679121896).epsilon(1e-12));
  CHECK(c2 == doctest::Approx(0.0015284690029830604).epsilon(1e-12));
  CHECK(out == doctest::Approx(-0.098991741244606329).epsilon(1e-12));

  r = -0.125;
  R = 0.75;
  predictor_step(p, &r, &R, 1, 0, &h1, &c1, &h2, &c2, &out);
  CHECK(h1 == doctest::Approx(0.16056170090109581).epsilon(1e-12));
  CHECK(c1 == doctest::Approx(0.36330400732405843).epsilon(1e-12));
  CHECK(h2 == doctest::Approx(0.011709633639223989).epsilon(1e-12));
  CHECK(c2 == doctest::Approx(0.023850473119066289).epsilon(1e-12));
  CHECK(out == doctest::Approx(-0.089223428462980481).epsilon(1e-12));
}

TEST_CASE("sigmoid head stays in the unit interval") {
  auto params = std::make_shared<PredictorParams>(
      make_predictor(2, 2, 3, 2, HeadKind::kSigmoid, 1.0));
  std::mt19937_64 rng(3);
  init_predictor(*params, rng);
  CHECK(parse_head("sigmoid") == HeadKind::kSigmoid);
  CHECK(parse_head("tanh") == HeadKind::kTanh);
  CHECK_THROWS_AS(parse_head("relu"), ConfigError);
  CHECK(head_name(params->head) == "sigmoid");

  // The plus variant's prediction is alpha times the head output alone, so a
  // sigmoid head keeps it inside [0, alpha].
  RegretMinimizer m(Algorithm::kNpcfrPlus, 2, params, 1);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int t = 0; t < 50; ++t) {
    m.next_strategy();
    m.observe({u(rng), u(rng)});
    for (double v : m.prediction()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("every baseline drives average external regret toward zero") {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int actions = 10;
  const int horizon = 10000;

  for (Algorithm a : all_algorithms()) {
    if (is_neural(a)) continue;
    CAPTURE(algorithm_tag(a));
    for (int trial = 0; trial < 2; ++trial) {
      std::mt19937_64 rng(1000 + 17 * trial);
      RegretMinimizer m(a, actions);
      std::vector<std::vector<double>> rewards, strategies;
      rewards.reserve(horizon);
      double avg_at_100 = 0.0;
      for (int t = 1; t <= horizon; ++t) {
        strategies.push_back(m.next_strategy());
        std::vector<double> x(actions);
        for (double& v : x) v = u(rng);
        rewards.push_back(x);
        m.observe(x);
        if (t == 100) avg_at_100 = max_regret(rewards, strategies) / t;
      }
      const double avg_at_end = max_regret(rewards, strategies) / horizon;
      CHECK(avg_at_end < 0.02);
      CHECK(avg_at_end < 0.5 * std::max(avg_at_100, 0.04));
    }
  }
}

TEST_CASE("minimizer contract violations") {
  RegretMinimizer m(Algorithm::kCfr, 2);
  CHECK_THROWS_AS(m.observe({1.0, 0.0}), ContractViolation);  // before next_strategy
  m.next_strategy();
  CHECK_THROWS_AS(m.observe({1.0}), ContractViolation);  // wrong arity
  m.observe({1.0, 0.0});
  CHECK_THROWS_AS(m.observe({1.0, 0.0}), ContractViolation);  // double observe

  CHECK_THROWS_AS(RegretMinimizer(Algorithm::kCfr, 0), ContractViolation);
  CHECK_THROWS_AS(RegretMinimizer(Algorithm::kNpcfr, 2), ConfigError);  // no weights
  CHECK_THROWS_AS(RegretMinimizer(Algorithm::kNpcfr, 5, zero_predictor(3, 1.0), 0),
                  ContractViolation);  // too many actions
  CHECK_THROWS_AS(m.load_state({1.0}, {0.0, 0.0}), ContractViolation);
}
