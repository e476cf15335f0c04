#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "regretforge/adam.hpp"
#include "regretforge/errors.hpp"
#include "regretforge/numerics.hpp"
#include "regretforge/predictor.hpp"
#include "regretforge/rng.hpp"
#include "regretforge/tape.hpp"
#include "regretforge/tape_lstm.hpp"
#include "regretforge/zoo.hpp"

using namespace regretforge;

namespace {

using Builder = std::function<Array(Tape&, Array)>;

double rebuild_value(const Builder& body, int rows, int cols, const std::vector<double>& x) {
  Tape t;
  Array in = t.input(rows, cols, x);
  return t.value(body(t, in))[0];
}

// Backward of `body` against central differences on the single tracked input.
void check_fd(const Builder& body, int rows, int cols, const std::vector<double>& x,
              double tol = 1e-4) {
  Tape t;
  Array in = t.input(rows, cols, x);
  Array loss = body(t, in);
  t.backward(loss);
  std::vector<double> analytic(t.grad(in).begin(), t.grad(in).end());
  auto numeric = fd_gradient(
      [&](const std::vector<double>& p) { return rebuild_value(body, rows, cols, p); }, x);
  CHECK(max_rel_error(analytic, numeric) < tol);
}

std::vector<double> random_vec(std::mt19937_64& rng, size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = uniform_in(rng, lo, hi);
  return v;
}

// Random values bounded away from zero, for kinks and denominators.
std::vector<double> random_signed_vec(std::mt19937_64& rng, size_t n, double min_abs,
                                      double max_abs) {
  std::vector<double> v(n);
  for (double& x : v) {
    const double mag = uniform_in(rng, min_abs, max_abs);
    x = (rng() & 1) ? mag : -mag;
  }
  return v;
}

// Ends a graph with a weighted sum so adjoints vary per entry.
Array weighted_sum(Tape& t, Array a, const std::vector<double>& w) {
  return t.sum(t.mul(a, t.constant(t.rows(a), t.cols(a), w)));
}

}  // namespace

TEST_CASE("tape forward values match the scalar math") {
  Tape t;
  Array a = t.input(2, 2, std::vector<double>{1.0, 2.0, 3.0, 4.0});
  Array b = t.constant(2, 2, std::vector<double>{2.0, 0.5, -1.0, 4.0});

  CHECK(t.value(t.add(a, b))[0] == 3.0);
  CHECK(t.value(t.sub(a, b))[3] == 0.0);
  CHECK(t.value(t.mul(a, b))[1] == 1.0);
  CHECK(t.value(t.div(a, b))[2] == -3.0);
  CHECK(t.value(t.sum(a))[0] == 10.0);
  CHECK(t.value(t.mean(a))[0] == 2.5);
  CHECK(t.value(t.row_sum(a))[0] == 3.0);
  CHECK(t.value(t.row_sum(a))[1] == 7.0);
  CHECK(t.value(t.scale(a, -2.0))[0] == -2.0);
  CHECK(t.value(t.transpose(a))[1] == 3.0);
  CHECK(t.value(t.positive_part(b))[2] == 0.0);

  // [1 2; 3 4] * [2 0.5; -1 4] = [0 8.5; 2 17.5]
  Array mm = t.matmul(a, b);
  CHECK(t.value(mm)[0] == 0.0);
  CHECK(t.value(mm)[1] == 8.5);
  CHECK(t.value(mm)[2] == 2.0);
  CHECK(t.value(mm)[3] == 17.5);

  Array cat = t.concat(a, b);
  CHECK(t.cols(cat) == 4);
  CHECK(t.value(cat)[2] == 2.0);
  CHECK(t.value(cat)[5] == 4.0);

  Array g = t.gather(a, {1, 0, 1});
  CHECK(t.rows(g) == 3);
  CHECK(t.value(g)[0] == 3.0);
  CHECK(t.value(g)[4] == 3.0);

  Array sm = t.softmax(t.constant(1, 3, std::vector<double>{0.0, 0.0, 0.0}));
  CHECK(t.value(sm)[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  Array ns = t.normalize_simplex(t.constant(1, 3, std::vector<double>{1.0, 0.0, 3.0}));
  CHECK(t.value(ns)[0] == 0.25);
  CHECK(t.value(ns)[2] == 0.75);
}

TEST_CASE("elementary gradient identities") {
  SUBCASE("derivative of tanh at zero is one") {
    Tape t;
    Array x = t.input(1, 1, std::vector<double>{0.0});
    Array loss = t.tanh(x);
    t.backward(loss);
    CHECK(t.grad(x)[0] == 1.0);
  }
  SUBCASE("positive part subgradient is zero at minus one and at the kink, one at plus one") {
    Tape t;
    Array x = t.input(1, 3, std::vector<double>{-1.0, 1.0, 0.0});
    t.backward(t.sum(t.positive_part(x)));
    CHECK(t.grad(x)[0] == 0.0);
    CHECK(t.grad(x)[1] == 1.0);
    CHECK(t.grad(x)[2] == 0.0);
  }
  SUBCASE("product rule at (2, 3)") {
    Tape t;
    Array x = t.input(1, 1, std::vector<double>{2.0});
    Array y = t.input(1, 1, std::vector<double>{3.0});
    t.backward(t.mul(x, y));
    CHECK(t.grad(x)[0] == 3.0);
    CHECK(t.grad(y)[0] == 2.0);
  }
  SUBCASE("diamond graph accumulates: d/dx (x+x)*x at 1 is 4") {
    Tape t;
    Array x = t.input(1, 1, std::vector<double>{1.0});
    t.backward(t.mul(t.add(x, x), x));
    CHECK(t.grad(x)[0] == 4.0);
  }
}

TEST_CASE("kl divergence gradient at d equal to mu") {
  // KL(d || mu) = sum d log(d/mu). At d = mu the raw per-entry gradient is
  // log(d/mu) + 1 = 1; routing d through the simplex projection first kills
  // the constant direction, leaving zero.
  const std::vector<double> point = {0.2, 0.5, 0.3};
  SUBCASE("raw gradient is one per entry") {
    Tape t;
    Array d = t.input(1, 3, point);
    Array mu = t.constant(1, 3, point);
    Array kl = t.sum(t.mul(d, t.sub(t.safe_log(d), t.safe_log(mu))));
    t.backward(kl);
    for (int i = 0; i < 3; ++i) CHECK(t.grad(d)[i] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("gradient through the simplex projection vanishes") {
    Tape t;
    Array d = t.input(1, 3, point);
    Array mu = t.constant(1, 3, point);
    Array y = t.normalize_simplex(d);
    Array kl = t.sum(t.mul(y, t.sub(t.safe_log(y), t.safe_log(mu))));
    t.backward(kl);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(t.grad(d)[i]) <= 1e-12);
  }
  SUBCASE("both agree with central differences") {
    Builder raw = [&](Tape& t, Array d) {
      Array mu = t.constant(1, 3, point);
      return t.sum(t.mul(d, t.sub(t.safe_log(d), t.safe_log(mu))));
    };
    Builder projected = [&](Tape& t, Array d) {
      Array mu = t.constant(1, 3, point);
      Array y = t.normalize_simplex(d);
      return t.sum(t.mul(y, t.sub(t.safe_log(y), t.safe_log(mu))));
    };
    check_fd(raw, 1, 3, point);
    check_fd(projected, 1, 3, point);
  }
}

TEST_CASE("every primitive passes randomized central differences") {
  std::mt19937_64 rng = make_stream(20260825, "tape_fd");

  SUBCASE("elementwise arithmetic, both operand slots") {
    const auto other = random_signed_vec(rng, 6, 0.4, 2.0);
    const auto w = random_signed_vec(rng, 6, 0.2, 1.0);
    for (int slot = 0; slot < 2; ++slot) {
      Builder add = [&, slot](Tape& t, Array x) {
        Array c = t.constant(2, 3, other);
        return weighted_sum(t, slot == 0 ? t.add(x, c) : t.add(c, x), w);
      };
      Builder sub = [&, slot](Tape& t, Array x) {
        Array c = t.constant(2, 3, other);
        return weighted_sum(t, slot == 0 ? t.sub(x, c) : t.sub(c, x), w);
      };
      Builder mul = [&, slot](Tape& t, Array x) {
        Array c = t.constant(2, 3, other);
        return weighted_sum(t, slot == 0 ? t.mul(x, c) : t.mul(c, x), w);
      };
      Builder div = [&, slot](Tape& t, Array x) {
        Array c = t.constant(2, 3, other);
        return weighted_sum(t, slot == 0 ? t.div(x, c) : t.div(c, x), w);
      };
      const auto x = random_signed_vec(rng, 6, 0.4, 2.0);
      check_fd(add, 2, 3, x);
      check_fd(sub, 2, 3, x);
      check_fd(mul, 2, 3, x);
      check_fd(div, 2, 3, x);
    }
  }

  SUBCASE("matmul, both operand slots") {
    const auto left = random_signed_vec(rng, 6, 0.2, 1.5);   // 2x3
    const auto right = random_signed_vec(rng, 12, 0.2, 1.5); // 3x4
    const auto w = random_signed_vec(rng, 8, 0.2, 1.0);
    Builder as_left = [&](Tape& t, Array x) {
      return weighted_sum(t, t.matmul(x, t.constant(3, 4, right)), w);
    };
    Builder as_right = [&](Tape& t, Array x) {
      return weighted_sum(t, t.matmul(t.constant(2, 3, left), x), w);
    };
    check_fd(as_left, 2, 3, left);
    check_fd(as_right, 3, 4, right);
  }

  SUBCASE("reductions") {
    const auto x = random_signed_vec(rng, 12, 0.1, 2.0);
    check_fd([](Tape& t, Array a) { return t.sum(a); }, 3, 4, x);
    check_fd([](Tape& t, Array a) { return t.mean(a); }, 3, 4, x);
    const auto w = random_signed_vec(rng, 3, 0.2, 1.0);
    check_fd([&](Tape& t, Array a) { return weighted_sum(t, t.row_sum(a), w); }, 3, 4, x);
  }

  SUBCASE("shape plumbing") {
    const auto x = random_signed_vec(rng, 6, 0.1, 2.0);
    const auto other = random_signed_vec(rng, 4, 0.1, 2.0);
    const auto w6 = random_signed_vec(rng, 6, 0.2, 1.0);
    const auto w10 = random_signed_vec(rng, 10, 0.2, 1.0);
    const auto w9 = random_signed_vec(rng, 9, 0.2, 1.0);
    const auto w4 = random_signed_vec(rng, 4, 0.2, 1.0);
    check_fd([&](Tape& t, Array a) {
      return weighted_sum(t, t.concat(a, t.constant(2, 2, other)), w10);
    }, 2, 3, x);
    check_fd([&](Tape& t, Array a) {
      return weighted_sum(t, t.gather(a, {1, 0, 1}), w9);
    }, 2, 3, x);
    check_fd([&](Tape& t, Array a) { return weighted_sum(t, t.transpose(a), w6); }, 2, 3, x);
    check_fd([&](Tape& t, Array a) { return weighted_sum(t, t.reshape(a, 3, 2), w6); }, 2, 3, x);
    check_fd([&](Tape& t, Array a) {
      return weighted_sum(t, t.slice_cols(a, 1, 2), w4);
    }, 2, 3, x);
    check_fd([&](Tape& t, Array a) { return weighted_sum(t, t.scale(a, -1.7), w6); }, 2, 3, x);
  }

  SUBCASE("broadcast from scalar, row and column") {
    const auto w = random_signed_vec(rng, 12, 0.2, 1.0);
    check_fd([&](Tape& t, Array a) { return weighted_sum(t, t.broadcast(a, 3, 4), w); }, 1, 1,
             random_signed_vec(rng, 1, 0.2, 1.0));
    check_fd([&](Tape& t, Array a) { return weighted_sum(t, t.broadcast(a, 3, 4), w); }, 1, 4,
             random_signed_vec(rng, 4, 0.2, 1.0));
    check_fd([&](Tape& t, Array a) { return weighted_sum(t, t.broadcast(a, 3, 4), w); }, 3, 1,
             random_signed_vec(rng, 3, 0.2, 1.0));
  }

  SUBCASE("nonlinearities away from their kinks") {
    const auto w = random_signed_vec(rng, 6, 0.2, 1.0);
    check_fd([&](Tape& t, Array a) { return weighted_sum(t, t.positive_part(a), w); }, 2, 3,
             random_signed_vec(rng, 6, 0.1, 1.5));
    check_fd([&](Tape& t, Array a) { return weighted_sum(t, t.tanh(a), w); }, 2, 3,
             random_signed_vec(rng, 6, 0.05, 2.0));
    check_fd([&](Tape& t, Array a) { return weighted_sum(t, t.sigmoid(a), w); }, 2, 3,
             random_signed_vec(rng, 6, 0.05, 2.0));
    check_fd([&](Tape& t, Array a) { return weighted_sum(t, t.exp(a), w); }, 2, 3,
             random_signed_vec(rng, 6, 0.05, 1.0));
    check_fd([&](Tape& t, Array a) { return weighted_sum(t, t.safe_log(a), w); }, 2, 3,
             random_vec(rng, 6, 0.1, 2.0));
  }

  SUBCASE("simplex projection and softmax") {
    const auto w = random_signed_vec(rng, 6, 0.2, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      check_fd([&](Tape& t, Array a) { return weighted_sum(t, t.normalize_simplex(a), w); }, 2, 3,
               random_vec(rng, 6, 0.05, 1.0));
      check_fd([&](Tape& t, Array a) {
        return weighted_sum(t, t.normalize_simplex(a, {2, 3}), w);
      }, 2, 3, random_vec(rng, 6, 0.05, 1.0));
      check_fd([&](Tape& t, Array a) { return weighted_sum(t, t.softmax(a), w); }, 2, 3,
               random_signed_vec(rng, 6, 0.05, 1.5));
    }
  }

  SUBCASE("fused game walk") {
    const GameTree shapley = make_biased_shapley(0.3);
    const GameTree toy = make_chance_matrix_game(
        {0.4, 0.6},
        {{{1.0, -1.0}, {0.0, 0.5}}, {{-0.5, 0.25}, {1.5, -0.75}}},
        {{{-1.0, 1.0}, {0.0, -0.5}}, {{0.5, -0.25}, {-1.5, 0.75}}});
    for (const GameTree* g : {&shapley, &toy}) {
      const int rows = g->num_infostates();
      const int cols = g->max_actions();
      const int out_len = g->num_players() * g->num_terminals() + rows * cols;
      const auto w = random_signed_vec(rng, out_len, 0.2, 1.0);
      Builder walk = [&, g](Tape& t, Array sigma) {
        return weighted_sum(t, t.cfr_walk(*g, sigma), w);
      };
      for (int trial = 0; trial < 3; ++trial)
        check_fd(walk, rows, cols, random_vec(rng, static_cast<size_t>(rows) * cols, 0.1, 0.9));
    }
  }
}

TEST_CASE("normalize_simplex uniform fallback propagates zero gradient") {
  Tape t;
  Array x = t.input(2, 3, std::vector<double>{0.0, 0.0, 0.0, 1.0, 1.0, 2.0});
  Array y = t.normalize_simplex(x, {2, 3});
  // Zero-mass row falls back to uniform over its two live actions.
  CHECK(t.value(y)[0] == 0.5);
  CHECK(t.value(y)[1] == 0.5);
  CHECK(t.value(y)[2] == 0.0);
  CHECK(t.value(y)[3] == 0.25);
  t.backward(weighted_sum(t, y, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0}));
  for (int j = 0; j < 3; ++j) CHECK(t.grad(x)[j] == 0.0);
  CHECK(t.grad(x)[3] != 0.0);
}

TEST_CASE("safe_log floors tiny values and rejects negatives") {
  SUBCASE("negative input is a domain error") {
    Tape t;
    CHECK_THROWS_AS(t.safe_log(t.constant(1, 1, std::vector<double>{-0.5})), NumericDomainError);
  }
  SUBCASE("a floored entry counts, evaluates at the floor and gets zero gradient") {
    const uint64_t before = log_floor_count().load();
    Tape t;
    Array x = t.input(1, 2, std::vector<double>{1e-15, 0.5});
    Array y = t.safe_log(x);
    CHECK(t.value(y)[0] == std::log(1e-12));
    CHECK(t.value(y)[1] == std::log(0.5));
    CHECK(log_floor_count().load() > before);
    t.backward(t.sum(y));
    CHECK(t.grad(x)[0] == 0.0);
    CHECK(t.grad(x)[1] == 2.0);
  }
}

TEST_CASE("rebuilding the same graph reproduces gradients bitwise") {
  const GameTree g = make_biased_shapley(0.25);
  std::mt19937_64 rng = make_stream(7, "tape_det");
  const auto sigma = random_vec(rng, 6, 0.1, 0.9);
  const auto w = random_signed_vec(
      rng, static_cast<size_t>(g.num_players()) * g.num_terminals() +
               static_cast<size_t>(g.num_infostates()) * g.max_actions(),
      0.2, 1.0);

  auto run = [&](std::vector<double>& out_grad) {
    Tape t;
    Array x = t.input(2, 3, sigma);
    Array y = t.normalize_simplex(x);
    Array walk = t.cfr_walk(g, y);
    t.backward(weighted_sum(t, walk, w));
    out_grad.assign(t.grad(x).begin(), t.grad(x).end());
  };
  std::vector<double> first, second;
  run(first);
  run(second);
  REQUIRE(first.size() == second.size());
  for (size_t i = 0; i < first.size(); ++i) CHECK(first[i] == second[i]);
}

TEST_CASE("tape contract violations") {
  Tape t;
  Array a = t.input(2, 2, std::vector<double>{1, 2, 3, 4});
  Array b = t.constant(1, 2, std::vector<double>{1, 2});
  CHECK_THROWS_AS(t.add(a, b), ContractViolation);
  CHECK_THROWS_AS(t.matmul(a, t.constant(3, 1, std::vector<double>{1, 2, 3})), ContractViolation);
  CHECK_THROWS_AS(t.input(2, 2, std::vector<double>{1.0}), ContractViolation);
  CHECK_THROWS_AS(t.gather(a, {0, 2}), ContractViolation);
  CHECK_THROWS_AS(t.slice_cols(a, 1, 2), ContractViolation);
  CHECK_THROWS_AS(t.reshape(a, 3, 2), ContractViolation);
  CHECK_THROWS_AS(t.broadcast(b, 3, 3), ContractViolation);
  CHECK_THROWS_AS(t.normalize_simplex(a, {1}), ContractViolation);
  CHECK_THROWS_AS(t.normalize_simplex(a, {1, 5}), ContractViolation);
  CHECK_THROWS_AS(t.backward(a), ContractViolation);  // non-scalar loss
  CHECK_THROWS_AS(t.grad(a), ContractViolation);      // before backward

  Array scalar_const = t.sum(t.constant(1, 1, std::vector<double>{2.0}));
  CHECK_THROWS_AS(t.backward(scalar_const), ContractViolation);  // no tracked dependency

  t.backward(t.sum(a));
  CHECK_THROWS_AS(t.grad(scalar_const), ContractViolation);  // constants carry no gradient
  CHECK_THROWS_AS(t.add(a, a), ContractViolation);           // tape already swept
}

TEST_CASE("adam optimizer") {
  SUBCASE("defaults") {
    AdamState s;
    CHECK(s.lr == 1e-3);
    CHECK(s.beta1 == 0.9);
    CHECK(s.beta2 == 0.999);
    CHECK(s.epsilon == 1e-8);
    CHECK(s.weight_decay == 0.0);
  }
  SUBCASE("first step is a bias-corrected sign step of size lr") {
    AdamState s;
    std::vector<double> theta = {0.5};
    adam_step(s, theta, std::vector<double>{1.0});
    CHECK(s.step_count == 1);
    CHECK(theta[0] == doctest::Approx(0.5 - 0.001).epsilon(1e-9));
  }
  SUBCASE("zero gradient leaves parameters untouched") {
    AdamState s;
    std::vector<double> theta = {0.5, -1.25, 3.0};
    adam_step(s, theta, std::vector<double>{0.0, 0.0, 0.0});
    adam_step(s, theta, std::vector<double>{0.0, 0.0, 0.0});
    CHECK(theta[0] == 0.5);
    CHECK(theta[1] == -1.25);
    CHECK(theta[2] == 3.0);
    CHECK(s.step_count == 2);
  }
  SUBCASE("200 steps on a convex quadratic reach loss below 1e-6") {
    AdamState s;
    s.lr = 0.02;
    std::vector<double> theta = {1.0, -0.5, 0.25};
    for (int step = 0; step < 200; ++step) {
      std::vector<double> g(theta.size());
      for (size_t i = 0; i < theta.size(); ++i) g[i] = 2.0 * theta[i];
      adam_step(s, theta, g);
    }
    double loss = 0.0;
    for (double x : theta) loss += x * x;
    CHECK(loss < 1e-6);
  }
  SUBCASE("decoupled weight decay shrinks parameters with zero gradient") {
    AdamState s;
    s.weight_decay = 0.1;
    std::vector<double> theta = {2.0};
    adam_step(s, theta, std::vector<double>{0.0});
    CHECK(theta[0] == doctest::Approx(2.0 - s.lr * 0.1 * 2.0).epsilon(1e-12));
  }
  SUBCASE("size mismatch is a contract violation") {
    AdamState s;
    std::vector<double> theta = {1.0, 2.0};
    CHECK_THROWS_AS(adam_step(s, theta, std::vector<double>{1.0}), ContractViolation);
  }
}

TEST_CASE("batched lstm cell") {
  SUBCASE("zero weights and state give exactly zero output for any input") {
    PredictorParams p = make_predictor(2, 2, 3, 4, HeadKind::kTanh, 1.0);
    Tape t;
    TapePredictor tp = load_predictor(t, p);
    std::mt19937_64 rng = make_stream(11, "lstm_zero");
    Array x = t.constant(4, 6, random_signed_vec(rng, 24, 0.1, 2.0));
    TapeLstmState st = zero_lstm_state(t, 4, p.hidden);
    auto [h1, c1] = lstm_cell(t, tp.l1, x, st.h1, st.c1);
    for (double v : t.value(h1)) CHECK(v == 0.0);
    for (double v : t.value(c1)) CHECK(v == 0.0);
  }
  SUBCASE("a forget bias of +10 preserves the cell over 5 zero-input steps") {
    PredictorParams p = make_predictor(1, 1, 3, 1, HeadKind::kTanh, 1.0);
    for (int j = 0; j < 3; ++j) p.l1_b[3 + j] = 10.0;  // forget gate block
    Tape t;
    TapePredictor tp = load_predictor(t, p);
    const std::vector<double> c0 = {0.3, -0.4, 0.2};
    Array h = t.constant_fill(1, 3, 0.0);
    Array c = t.constant(1, 3, c0);
    Array x = t.constant_fill(1, 3, 0.0);
    for (int step = 0; step < 5; ++step) {
      auto [hn, cn] = lstm_cell(t, tp.l1, x, h, c);
      h = hn;
      c = cn;
    }
    for (int j = 0; j < 3; ++j) CHECK(std::abs(t.value(c)[j] - c0[j]) < 1e-4);
  }
  SUBCASE("batched forward matches the scalar predictor step row by row") {
    PredictorParams p = make_predictor(3, 2, 4, 5, HeadKind::kSigmoid, 2.0);
    std::mt19937_64 rng = make_stream(23, "lstm_match");
    init_predictor(p, rng);
    const int rows = 3;
    std::vector<double> r0 = random_signed_vec(rng, 9, 0.05, 1.0);
    std::vector<double> R0 = random_signed_vec(rng, 9, 0.05, 2.0);
    std::vector<double> r1 = random_signed_vec(rng, 9, 0.05, 1.0);
    std::vector<double> R1 = random_signed_vec(rng, 9, 0.05, 2.0);

    Tape t;
    TapePredictor tp = load_predictor(t, p);
    TapeLstmState st = zero_lstm_state(t, rows, p.hidden);
    std::vector<int> idx = {0, 1, 2};
    Array emb = t.gather(tp.embed, idx);
    Array in0 = t.concat(t.concat(t.constant(rows, 3, r0), t.constant(rows, 3, R0)), emb);
    Array out0 = predictor_forward(t, tp, in0, st);
    Array in1 = t.concat(t.concat(t.constant(rows, 3, r1), t.constant(rows, 3, R1)), emb);
    Array out1 = predictor_forward(t, tp, in1, st);

    for (int i = 0; i < rows; ++i) {
      std::vector<double> h1(p.hidden, 0.0), c1(p.hidden, 0.0);
      std::vector<double> h2(p.hidden, 0.0), c2(p.hidden, 0.0);
      std::vector<double> out(3, 0.0);
      predictor_step(p, &r0[i * 3], &R0[i * 3], 3, i, h1.data(), c1.data(), h2.data(), c2.data(),
                     out.data());
      for (int a = 0; a < 3; ++a)
        CHECK(t.value(out0)[i * 3 + a] == doctest::Approx(out[a]).epsilon(1e-12));
      predictor_step(p, &r1[i * 3], &R1[i * 3], 3, i, h1.data(), c1.data(), h2.data(), c2.data(),
                     out.data());
      for (int a = 0; a < 3; ++a)
        CHECK(t.value(out1)[i * 3 + a] == doctest::Approx(out[a]).epsilon(1e-12));
    }
  }
  SUBCASE("three step unroll passes central differences over every parameter") {
    PredictorParams proto = make_predictor(2, 2, 4, 3, HeadKind::kTanh, 1.0);
    std::mt19937_64 rng = make_stream(31, "lstm_fd");
    init_predictor(proto, rng);
    const int rows = 3;
    std::vector<std::vector<double>> rs, Rs, ws;
    for (int step = 0; step < 3; ++step) {
      rs.push_back(random_signed_vec(rng, 6, 0.05, 1.0));
      Rs.push_back(random_signed_vec(rng, 6, 0.05, 2.0));
      ws.push_back(random_signed_vec(rng, 6, 0.2, 1.0));
    }
    const std::vector<int> idx = {0, 1, 2};

    auto build = [&](Tape& t, PredictorParams& p) {
      TapePredictor tp = load_predictor(t, p);
      std::vector<Array> inputs;
      Array emb = t.gather(tp.embed, idx);
      for (int step = 0; step < 3; ++step)
        inputs.push_back(t.concat(
            t.concat(t.constant(rows, 2, rs[step]), t.constant(rows, 2, Rs[step])), emb));
      std::vector<Array> outs = stacked_forward(t, tp, inputs);
      Array acc = weighted_sum(t, outs[0], ws[0]);
      for (int step = 1; step < 3; ++step)
        acc = t.add(acc, weighted_sum(t, outs[step], ws[step]));
      return std::pair(tp, acc);
    };

    Tape t;
    PredictorParams p = proto;
    auto [tp, loss] = build(t, p);
    t.backward(loss);
    std::vector<double> analytic = collect_predictor_grad(t, tp);

    std::vector<double> flat = flatten_parameters(proto);
    auto numeric = fd_gradient(
        [&](const std::vector<double>& theta) {
          PredictorParams probe = proto;
          load_parameters(probe, theta);
          Tape ft;
          auto [ftp, floss] = build(ft, probe);
          (void)ftp;
          return ft.value(floss)[0];
        },
        flat);
    CHECK(analytic.size() == numeric.size());
    CHECK(max_rel_error(analytic, numeric) < 1e-4);
  }
}
