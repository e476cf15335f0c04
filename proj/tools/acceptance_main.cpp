// Checks the project's eleven release criteria and prints one verdict line
// per criterion. Exit code 0 means every selected criterion passed.
//
// The desk-scale criteria (6 and 9) meta-train a predictor in-process, which
// dominates the runtime; pass --checkpoint to reuse an existing desk
// checkpoint while iterating.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "regretforge/checkpoint.hpp"
#include "regretforge/errors.hpp"
#include "regretforge/harness.hpp"
#include "regretforge/marginal.hpp"
#include "regretforge/metrics.hpp"
#include "regretforge/minimizer.hpp"
#include "regretforge/normal_form.hpp"
#include "regretforge/rng.hpp"
#include "regretforge/solver.hpp"
#include "regretforge/trace.hpp"
#include "regretforge/trainer.hpp"
#include "regretforge/zoo.hpp"

using namespace regretforge;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return std::string(buf);
}

StrategyProfile matrix_profile(const std::vector<double>& row, const std::vector<double>& col) {
  StrategyProfile p;
  p.probs = {row, col};
  return p;
}

StrategyProfile pure_cell(int r, int c) {
  std::vector<double> row(3, 0.0), col(3, 0.0);
  row[r] = 1.0;
  col[c] = 1.0;
  return matrix_profile(row, col);
}

// The six-cell correlated reference distribution, visited once per cell.
std::vector<StrategyProfile> reference_cycle() {
  return {pure_cell(0, 0), pure_cell(0, 1), pure_cell(1, 1),
          pure_cell(1, 2), pure_cell(2, 2), pure_cell(2, 0)};
}

GameTree chance_toy_2x2() {
  return make_chance_matrix_game(
      {0.4, 0.6},
      {{{1.0, -1.0}, {0.0, 2.0}}, {{-2.0, 1.0}, {0.5, 0.0}}},
      {{{-1.0, 1.0}, {0.0, -2.0}}, {{2.0, -1.0}, {-0.5, 0.0}}});
}

GameTree chance_toy_4x4() {
  // Hidden two-outcome lottery in front of a pair of 4x4 bimatrix games.
  const std::vector<std::vector<double>> a1 = {{1.0, -0.5, 0.25, 2.0},
                                               {0.0, 1.5, -1.0, 0.5},
                                               {-2.0, 0.75, 1.0, -0.25},
                                               {0.5, -1.5, 2.0, 0.0}};
  const std::vector<std::vector<double>> a2 = {{-1.0, 0.5, 1.25, -2.0},
                                               {2.0, -0.5, 1.0, 0.25},
                                               {0.75, 1.0, -1.5, 0.5},
                                               {-0.25, 2.0, 0.0, -1.0}};
  const std::vector<std::vector<double>> b1 = {{0.5, 1.0, -1.25, 0.75},
                                               {-0.5, 2.0, 0.25, -1.0},
                                               {1.5, -0.75, 0.0, 1.0},
                                               {-2.0, 0.5, 1.0, -0.5}};
  const std::vector<std::vector<double>> b2 = {{1.0, -2.0, 0.5, 1.5},
                                               {0.25, 1.0, -0.5, 2.0},
                                               {-1.0, 0.0, 1.75, -0.25},
                                               {2.0, -1.5, 0.5, 0.0}};
  return make_chance_matrix_game({0.3, 0.7}, {a1, b1}, {a2, b2});
}

std::shared_ptr<PredictorParams> fresh_predictor(const GameTree& g, Algorithm a, uint64_t seed) {
  auto p = std::make_shared<PredictorParams>(
      make_predictor(g.max_actions(), 2, 4, g.num_infostates(), HeadKind::kTanh, 1.0));
  p->form = a == Algorithm::kNpcfrPlus ? PredictionForm::kDirect : PredictionForm::kResidual;
  auto rng = make_stream(seed, "acceptance_predictor");
  init_predictor(*p, rng);
  return p;
}

// ---------------------------------------------------------------------------
// 1. Analytic equilibria and the reference-distribution deviation gap.

Verdict criterion_1() {
  double worst_gap = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double eta = 0.5 * static_cast<double>(i) / 99.0;
    const GameTree g = make_biased_shapley(eta);
    worst_gap = std::max(worst_gap, nash_gap(g, analytic_nash_biased_shapley(eta)));
  }

  double worst_delta = 0.0;
  const auto cycle = reference_cycle();
  for (int k = 1; k <= 5; ++k) {
    const double eta = 0.1 * k;
    const GameTree g = make_biased_shapley(eta);
    const RunTrace trace = accumulate_trace(g, cycle);
    const double gap = cce_gap(g, trace);
    const double expected = (1.0 + eta) / 3.0 - 0.5;
    worst_delta = std::max(worst_delta, std::abs(gap - expected));
  }
  const GameTree g_half = make_biased_shapley(0.5);
  const double gap_half = cce_gap(g_half, accumulate_trace(g_half, cycle));
  const GameTree g_past = make_biased_shapley(0.55);
  const double gap_past = cce_gap(g_past, accumulate_trace(g_past, cycle));

  Verdict v;
  v.pass = worst_gap <= 1e-9 && worst_delta <= 1e-12 && std::abs(gap_half) <= 1e-12 &&
           gap_past > 0.0;
  v.detail = "worst analytic nash gap " + fmt(worst_gap) + " (<= 1e-9), worst |cce - formula| " +
             fmt(worst_delta) + " (<= 1e-12), gap " + fmt(gap_half) + " at bias 0.5, " +
             fmt(gap_past) + " at 0.55";
  return v;
}

// ---------------------------------------------------------------------------
// 2. Tree-side marginalizability equals normal-form total correlation.

Verdict criterion_2() {
  auto rng = make_stream(2, "acceptance_equivalence");
  double worst = 0.0;
  for (const GameTree& g : {make_biased_shapley(0.3), chance_toy_4x4()}) {
    for (int trial = 0; trial < 50; ++trial) {
      const int len = 1 + static_cast<int>(rng() % 8);
      std::vector<StrategyProfile> steps;
      steps.reserve(len);
      for (int t = 0; t < len; ++t) steps.push_back(random_profile(g, rng));
      const auto [tree_side, normal_side] = nfm_efm_equivalence_check(g, steps);
      worst = std::max(worst, std::abs(tree_side - normal_side));
    }
  }
  Verdict v;
  v.pass = worst <= 1e-9;
  v.detail = "worst |efm - total correlation| " + fmt(worst) + " over 100 sequences (<= 1e-9)";
  return v;
}

// ---------------------------------------------------------------------------
// 3. The convergence bound certificate holds on a battery of real traces.

Verdict criterion_3() {
  int certified = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  std::string failure;

  auto certify = [&](const GameTree& g, const RunTrace& trace) {
    const BoundCertificate cert = certify_bound(g, trace);
    min_slack = std::min(min_slack, cert.slack);
    ++certified;
  };

  try {
    uint64_t seed = 300;
    const GameTree shapley = make_biased_shapley(0.3);
    const GameTree lottery = chance_toy_2x2();
    const GameTree deal = make_private_deal_toy();
    for (const GameTree* g : {&shapley, &lottery, &deal}) {
      for (Algorithm a : all_algorithms()) {
        SolveConfig c;
        c.algorithm = a;
        c.steps = 200;
        if (is_neural(a)) c.predictor = fresh_predictor(*g, a, seed++);
        certify(*g, cfr_solve(*g, c));
      }
    }
    const GameTree leduc = make_leduc(2, 1.0);
    for (Algorithm a : {Algorithm::kCfr, Algorithm::kCfrPlus, Algorithm::kNpcfr}) {
      SolveConfig c;
      c.algorithm = a;
      c.steps = 256;
      if (is_neural(a)) c.predictor = fresh_predictor(leduc, a, seed++);
      certify(leduc, cfr_solve(leduc, c));
    }
  } catch (const CertificationFailure& e) {
    Verdict v;
    v.pass = false;
    v.detail = std::string("certificate failed: ") + e.what();
    return v;
  }

  Verdict v;
  v.pass = true;
  v.detail = std::to_string(certified) + " traces certified (slack >= -1e-6), min slack " +
             fmt(min_slack) + "; the unit tests certify their own traces on top";
  return v;
}

// ---------------------------------------------------------------------------
// 4. Pinning one player to a pure strategy never adds total correlation.

Verdict criterion_4() {
  auto rng = make_stream(4, "acceptance_monotone");
  const std::vector<std::vector<int>> shapes = {
      {3, 3}, {2, 4, 3}, {2, 2, 2, 2}, {4, 4, 4, 4}};
  double worst_increase = -std::numeric_limits<double>::infinity();
  int trials_run = 0;
  for (const auto& sizes : shapes) {
    int64_t total = 1;
    for (int s : sizes) total *= s;
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> joint(total);
      double sum = 0.0;
      for (double& x : joint) {
        x = uniform_unit(rng);
        if (x < 0.2) x = 0.0;  // keep some sparsity in the support
        sum += x;
      }
      if (sum == 0.0) continue;
      for (double& x : joint) x /= sum;

      const int pinned_player = static_cast<int>(rng() % sizes.size());
      // Strides for the pinned player's axis (player 0 is the slowest index).
      int64_t inner = 1;
      for (size_t i = pinned_player + 1; i < sizes.size(); ++i) inner *= sizes[i];
      const int64_t axis = sizes[pinned_player];
      std::vector<double> pinned(total, 0.0);
      for (int64_t outer = 0; outer < total / (axis * inner); ++outer) {
        for (int64_t in = 0; in < inner; ++in) {
          double m = 0.0;
          for (int64_t k = 0; k < axis; ++k)
            m += joint[(outer * axis + k) * inner + in];
          pinned[(outer * axis + 0) * inner + in] = m;
        }
      }
      const double increase =
          total_correlation_shape(sizes, pinned) - total_correlation_shape(sizes, joint);
      worst_increase = std::max(worst_increase, increase);
      ++trials_run;
    }
  }
  Verdict v;
  v.pass = worst_increase <= 1e-12;
  v.detail = std::to_string(trials_run) + " trials over 4 shapes up to 4 players x 4 actions, "
             "worst correlation increase " + fmt(worst_increase) + " (<= 1e-12)";
  return v;
}

// ---------------------------------------------------------------------------
// 5. Finite-difference fidelity of every autodiff primitive and the unroll.

Verdict criterion_5() {
  const GradcheckReport report = run_gradcheck(5);
  Verdict v;
  v.pass = report.worst_primitive <= 1e-4 && report.worst_unroll <= 1e-3;
  v.detail = "primitives worst rel error " + fmt(report.worst_primitive) +
             " (<= 1e-4), 4-step unrolled meta-loss " + fmt(report.worst_unroll) + " (<= 1e-3)";
  return v;
}

// ---------------------------------------------------------------------------
// Desk-scale artifacts shared by criteria 6 and 9.

struct DeskArtifacts {
  std::string checkpoint_path;
  double train_seconds = 0.0;
  // In-distribution evaluation at 2^14 on 64 fresh games.
  double frac_npcfr = 0.0, frac_cfr = 0.0, frac_pcfr_plus = 0.0;
  double median_final_npcfr = 0.0;
};

double median_of(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double threshold_fraction(const EvalResult& result, const std::string& tag, double thr) {
  int hit = 0, n = 0;
  for (const auto& cell : result.cells) {
    if (cell.algorithm != tag) continue;
    ++n;
    if (cell.min_nash_gap <= thr) ++hit;
  }
  return n == 0 ? 0.0 : static_cast<double>(hit) / n;
}

const DeskArtifacts& desk_artifacts(const std::string& dir, const std::string& reuse_checkpoint) {
  static std::optional<DeskArtifacts> cached;
  if (cached) return *cached;

  DeskArtifacts art;
  if (!reuse_checkpoint.empty()) {
    art.checkpoint_path = reuse_checkpoint;
  } else {
    const auto t0 = std::chrono::steady_clock::now();
    TrainConfig tc = default_tier_train_config(Tier::kDesk, GameFamily::kBiasedShapley);
    tc.seed = 1;
    const TrainResult trained = train(tc);
    art.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    PredictorParams params = trained.params;
    art.checkpoint_path = dir + "/desk_checkpoint.bin";
    save_checkpoint(art.checkpoint_path, params, train_config_echo(tc));
  }

  ExperimentConfig ec;
  ec.distribution = {GameFamily::kBiasedShapley, 0.0, 0.5};
  ec.num_games = 64;
  ec.algorithms = {Algorithm::kNpcfr, Algorithm::kCfr, Algorithm::kPcfrPlus};
  ec.max_exponent = 14;
  ec.seeds = {101};
  ec.checkpoint_path = art.checkpoint_path;
  const EvalResult result = run_eval(ec);

  art.frac_npcfr = threshold_fraction(result, "npcfr", 1e-3);
  art.frac_cfr = threshold_fraction(result, "cfr", 1e-3);
  art.frac_pcfr_plus = threshold_fraction(result, "pcfr+", 1e-3);
  std::vector<double> finals;
  for (const auto& cell : result.cells)
    if (cell.algorithm == "npcfr") finals.push_back(cell.final_nash_gap);
  art.median_final_npcfr = median_of(finals);

  cached = std::move(art);
  return *cached;
}

Verdict criterion_6(const std::string& dir, const std::string& reuse_checkpoint) {
  const DeskArtifacts& art = desk_artifacts(dir, reuse_checkpoint);
  Verdict v;
  v.pass = art.frac_npcfr >= 0.9 && art.frac_cfr <= 0.2 && art.frac_pcfr_plus <= 0.1;
  v.detail = "fraction of 64 fresh games solved to nash gap 1e-3 within 2^14 steps: npcfr " +
             fmt(art.frac_npcfr) + " (>= 0.9), cfr " + fmt(art.frac_cfr) + " (<= 0.2), pcfr+ " +
             fmt(art.frac_pcfr_plus) + " (<= 0.1)";
  if (art.train_seconds > 0.0) v.detail += "; training took " + fmt(art.train_seconds) + "s";
  return v;
}

// ---------------------------------------------------------------------------
// 7. Zero-sum sanity on two-player Leduc.

Verdict criterion_7() {
  const GameTree g = make_leduc(2, 1.0);
  SolveConfig c;
  c.algorithm = Algorithm::kCfrPlus;
  c.steps = 1 << 12;
  CfrSolver solver(g, c);

  double gap_64 = 0.0, gap_4096 = 0.0;
  double worst_bound_violation = -std::numeric_limits<double>::infinity();
  int64_t next_cp = 1;
  for (int64_t t = 1; t <= c.steps; ++t) {
    solver.step();
    if (t == next_cp) {
      next_cp *= 2;
      const double gap = nash_gap(g, solver.average_profile());
      if (t == 64) gap_64 = gap;
      if (t == 4096) gap_4096 = gap;
      const double regret_rate = sum_positive_cf_regret(solver.trace()) / static_cast<double>(t);
      const double deviation_gap = cce_gap(g, solver.trace());
      worst_bound_violation = std::max(worst_bound_violation, deviation_gap - regret_rate);
    }
  }
  Verdict v;
  v.pass = gap_4096 <= gap_64 / 10.0 && worst_bound_violation <= 1e-9;
  v.detail = "cfr+ nash gap " + fmt(gap_64) + " at 2^6 vs " + fmt(gap_4096) +
             " at 2^12 (>= 10x drop), worst cce_gap minus regret-rate " +
             fmt(worst_bound_violation) + " over 13 checkpoints (<= 1e-9)";
  return v;
}

// ---------------------------------------------------------------------------
// 8. Zero-predictor NPCFR at unit scale reproduces PCFR exactly.

Verdict criterion_8() {
  auto rng = make_stream(8, "acceptance_reduction");
  int mismatches = 0;

  for (int trial = 0; trial < 100; ++trial) {
    const int actions = 2 + static_cast<int>(rng() % 4);
    auto zero = std::make_shared<PredictorParams>(
        make_predictor(actions, 2, 4, 4, HeadKind::kTanh, 1.0));
    RegretMinimizer neural(Algorithm::kNpcfr, actions, zero, 0);
    RegretMinimizer plain(Algorithm::kPcfr, actions);
    std::vector<double> reward(actions);
    const int len = 40;
    for (int t = 0; t < len; ++t) {
      const std::vector<double> sn = neural.next_strategy();
      const std::vector<double> sp = plain.next_strategy();
      if (sn != sp) ++mismatches;
      for (double& r : reward) r = uniform_in(rng, -3.0, 3.0);
      neural.observe(reward);
      plain.observe(reward);
      if (neural.cumulative_regret() != plain.cumulative_regret()) ++mismatches;
      if (neural.prediction() != plain.prediction()) ++mismatches;
    }
  }

  const GameTree g = make_biased_shapley(0.3);
  SolveConfig cn;
  cn.algorithm = Algorithm::kNpcfr;
  cn.steps = 500;
  cn.predictor = std::make_shared<PredictorParams>(
      make_predictor(g.max_actions(), 2, 4, g.num_infostates(), HeadKind::kTanh, 1.0));
  SolveConfig cp;
  cp.algorithm = Algorithm::kPcfr;
  cp.steps = 500;
  const RunTrace tn = cfr_solve(g, cn);
  const RunTrace tp = cfr_solve(g, cp);
  const StrategyProfile an = tn.average_strategy();
  const StrategyProfile ap = tp.average_strategy();
  bool solve_equal = an.probs == ap.probs && tn.final_regret() == tp.final_regret() &&
                     tn.sum_reach() == tp.sum_reach();

  Verdict v;
  v.pass = mismatches == 0 && solve_equal;
  v.detail = "100 random reward sequences bitwise identical (" + std::to_string(mismatches) +
             " mismatches), 500-step solve " + (solve_equal ? "identical" : "DIFFERS");
  return v;
}

// ---------------------------------------------------------------------------
// 9. The desk checkpoint degrades off its training distribution.

Verdict criterion_9(const std::string& dir, const std::string& reuse_checkpoint) {
  const DeskArtifacts& art = desk_artifacts(dir, reuse_checkpoint);

  ExperimentConfig ec;
  ec.distribution = {GameFamily::kBiasedShapley, -1.0, 0.0};
  ec.num_games = 64;
  ec.algorithms = {Algorithm::kNpcfr};
  ec.max_exponent = 14;
  ec.seeds = {102};
  ec.checkpoint_path = art.checkpoint_path;
  const EvalResult result = run_eval(ec);
  std::vector<double> finals;
  for (const auto& cell : result.cells) finals.push_back(cell.final_nash_gap);
  const double ood = median_of(finals);

  Verdict v;
  v.pass = ood >= 10.0 * art.median_final_npcfr;
  v.detail = "median final nash gap on bias ~ U(-1,0): " + fmt(ood) + " vs in-distribution " +
             fmt(art.median_final_npcfr) + " (>= 10x)";
  return v;
}

// ---------------------------------------------------------------------------
// 10. Full-tier tables are out of desk scope; smoke training must still learn.

Verdict criterion_10() {
  TrainConfig tc = default_tier_train_config(Tier::kSmoke, GameFamily::kBiasedLeduc2p);
  tc.seed = 1;
  const TrainResult result = train(tc);
  double late = 0.0;
  const size_t half = result.epoch_loss.size() / 2;
  for (size_t i = half; i < result.epoch_loss.size(); ++i) late += result.epoch_loss[i];
  late /= static_cast<double>(result.epoch_loss.size() - half);
  const double first = result.epoch_loss.front();

  Verdict v;
  v.pass = late < first;
  v.detail = "full-scale poker tables (2^18-step evaluations, ~10h training) are gated behind "
             "the opt-in full tier and not reproduced here; smoke substitute: 8 epochs of "
             "two-player poker meta-training moved mean meta-loss " + fmt(first) + " -> " +
             fmt(late) + " (must drop)";
  return v;
}

// ---------------------------------------------------------------------------
// 11. Reruns of one config + seed are byte-identical.

Verdict criterion_11(const std::string& dir) {
  ExperimentConfig ec;
  ec.distribution = {GameFamily::kBiasedShapley, 0.0, 0.5};
  ec.num_games = 4;
  ec.algorithms = {Algorithm::kCfr, Algorithm::kCfrPlus, Algorithm::kPcfrPlus};
  ec.max_exponent = 8;
  ec.seeds = {11};

  const std::string a = dir + "/determinism_a.csv";
  const std::string b = dir + "/determinism_b.csv";
  const std::string c = dir + "/determinism_c.csv";
  write_results_csv(a, run_eval(ec).rows);
  write_results_csv(b, run_eval(ec).rows);
  setenv("REGRETFORGE_THREADS", "1", 1);
  write_results_csv(c, run_eval(ec).rows);
  unsetenv("REGRETFORGE_THREADS");

  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  const std::string bytes = slurp(a);
  const bool same = !bytes.empty() && bytes == slurp(b) && bytes == slurp(c);

  Verdict v;
  v.pass = same;
  v.detail = same ? "three runs (parallel twice, single-threaded once) byte-identical"
                  : "reruns differ";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"release criteria for the regretforge toolkit"};
  std::vector<int> only;
  std::string reuse_checkpoint;
  app.add_option("--only", only, "criteria to run (default: all)");
  app.add_option("--checkpoint", reuse_checkpoint,
                 "reuse an existing desk checkpoint instead of training");
  CLI11_PARSE(app, argc, argv);

  const std::string dir =
      (std::filesystem::temp_directory_path() / "regretforge_acceptance").string();
  std::filesystem::create_directories(dir);

  std::set<int> selected(only.begin(), only.end());
  auto wanted = [&](int i) { return selected.empty() || selected.count(i) > 0; };

  struct Entry {
    int index;
    std::string name;
    std::function<Verdict()> run;
  };
  const std::vector<Entry> entries = {
      {1, "analytic equilibria and reference-distribution gap", [] { return criterion_1(); }},
      {2, "marginalizability matches normal-form total correlation", [] { return criterion_2(); }},
      {3, "convergence bound certificate on solver traces", [] { return criterion_3(); }},
      {4, "pinning a player never raises total correlation", [] { return criterion_4(); }},
      {5, "autodiff matches central differences", [] { return criterion_5(); }},
      {6, "desk-scale one-shot training beats the baselines",
       [&] { return criterion_6(dir, reuse_checkpoint); }},
      {7, "zero-sum poker sanity for cfr+", [] { return criterion_7(); }},
      {8, "zero-predictor reduction to pcfr is exact", [] { return criterion_8(); }},
      {9, "trained predictor degrades off-distribution",
       [&] { return criterion_9(dir, reuse_checkpoint); }},
      {10, "full-tier tables gated; smoke training still learns", [] { return criterion_10(); }},
      {11, "reruns are byte-identical", [&] { return criterion_11(dir); }},
  };

  int failed = 0, run_count = 0;
  for (const auto& entry : entries) {
    if (!wanted(entry.index)) continue;
    ++run_count;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = entry.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2d. %s (%.1fs)\n       %s\n", v.pass ? "PASS" : "FAIL", entry.index,
                entry.name.c_str(), secs, v.detail.c_str());
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  std::printf("%d/%d criteria passed\n", run_count - failed, run_count);
  return failed == 0 ? 0 : 1;
}
