#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "regretforge/checkpoint.hpp"
#include "regretforge/errors.hpp"
#include "regretforge/harness.hpp"
#include "regretforge/trainer.hpp"
#include "regretforge/zoo.hpp"

using namespace regretforge;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string config_error_field(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

ExperimentConfig tiny_eval_config() {
  ExperimentConfig cfg;
  cfg.distribution = {GameFamily::kBiasedShapley, 0.25, 0.25};
  cfg.num_games = 2;
  cfg.algorithms = {Algorithm::kCfr};
  cfg.max_exponent = 0;
  cfg.seeds = {11};
  cfg.thresholds = {1.0, 1e-3};
  return cfg;
}

}  // namespace

TEST_CASE("tier names round trip") {
  for (Tier t : {Tier::kSmoke, Tier::kDesk, Tier::kFull}) CHECK(parse_tier(tier_name(t)) == t);
  CHECK_THROWS_AS(parse_tier("gigantic"), ConfigError);
}

TEST_CASE("experiment config parsing applies overrides and names bad fields") {
  nlohmann::json doc = {
      {"family", "biased_2p_leduc"}, {"num_games", 3},       {"max_exponent", 5},
      {"algorithms", {"cfr+", "pcfr"}}, {"seeds", {4, 5}},   {"thresholds", {1e-1, 1e-3}},
      {"timing", true},              {"checkpoint", "w.bin"},
  };
  const ExperimentConfig cfg = parse_experiment_config(doc, Tier::kSmoke);
  CHECK(cfg.distribution.family == GameFamily::kBiasedLeduc2p);
  CHECK(cfg.distribution.low == 0.0);
  CHECK(cfg.distribution.high == 0.5);
  CHECK(cfg.num_games == 3);
  CHECK(cfg.max_exponent == 5);
  REQUIRE(cfg.algorithms.size() == 2);
  CHECK(cfg.algorithms[0] == Algorithm::kCfrPlus);
  CHECK(cfg.algorithms[1] == Algorithm::kPcfr);
  CHECK(cfg.seeds == std::vector<uint64_t>{4, 5});
  CHECK(cfg.timing);
  CHECK(cfg.checkpoint_path == "w.bin");

  CHECK(config_error_field([] {
          parse_experiment_config({{"num_gmaes", 3}}, Tier::kSmoke);
        }) == "num_gmaes");
  CHECK(config_error_field([] {
          parse_experiment_config({{"num_games", 0}}, Tier::kSmoke);
        }) == "num_games");
  CHECK(config_error_field([] {
          parse_experiment_config({{"thresholds", {1e-3, 1e-1}}}, Tier::kSmoke);
        }) == "thresholds");
  CHECK(config_error_field([] {
          parse_experiment_config({{"algorithms", {"cfr++"}}}, Tier::kSmoke);
        }) == "algorithm");
  CHECK(config_error_field([] {
          parse_experiment_config({{"low", 0.4}, {"high", 0.1}}, Tier::kSmoke);
        }) == "high");
  CHECK(config_error_field([] {
          parse_experiment_config({{"num_games", "many"}}, Tier::kSmoke);
        }) == "num_games");
}

TEST_CASE("train config parsing uses tier presets and family defaults") {
  const TrainConfig smoke = parse_train_config(nlohmann::json::object(), Tier::kSmoke);
  CHECK(smoke.epochs == 8);
  CHECK(smoke.games_per_batch == 8);
  CHECK(smoke.unroll_steps == 32);
  CHECK(resolved_head(smoke) == HeadKind::kSigmoid);
  CHECK(resolved_alpha(smoke) == 3.0);

  const TrainConfig desk = parse_train_config({{"family", "three_player_leduc"}}, Tier::kDesk);
  CHECK(desk.epochs == 256);
  CHECK(desk.distribution.family == GameFamily::kLeduc3p);
  CHECK(resolved_head(desk) == HeadKind::kTanh);
  CHECK(resolved_alpha(desk) == 1.0);

  const TrainConfig tuned = parse_train_config(
      {{"algorithm", "npcfr+"}, {"hidden", 12}, {"alpha", 0.5}, {"head", "tanh"}, {"lr", 2e-4}},
      Tier::kSmoke);
  CHECK(tuned.algorithm == Algorithm::kNpcfrPlus);
  CHECK(tuned.hidden == 12);
  CHECK(resolved_alpha(tuned) == 0.5);
  CHECK(resolved_head(tuned) == HeadKind::kTanh);
  CHECK(tuned.lr == 2e-4);

  CHECK(config_error_field([] {
          parse_train_config({{"head", "relu"}}, Tier::kSmoke);
        }) == "head");
  CHECK(config_error_field([] {
          parse_train_config({{"momentum", 0.9}}, Tier::kSmoke);
        }) == "momentum");
}

TEST_CASE("thread cap reads the environment variable") {
  setenv("REGRETFORGE_THREADS", "3", 1);
  CHECK(harness_threads() == 3);
  setenv("REGRETFORGE_THREADS", "not-a-number", 1);
  CHECK(harness_threads() >= 1);
  unsetenv("REGRETFORGE_THREADS");
  CHECK(harness_threads() >= 1);
}

TEST_CASE("eval emits the power-of-two schedule") {
  ExperimentConfig cfg = tiny_eval_config();
  cfg.max_exponent = 3;
  cfg.num_games = 1;
  const EvalResult result = run_eval(cfg);
  REQUIRE(result.rows.size() == 4);
  const std::vector<int64_t> want = {1, 2, 4, 8};
  for (size_t i = 0; i < want.size(); ++i) {
    CHECK(result.rows[i].step == want[i]);
    CHECK(result.rows[i].algorithm == "cfr");
    CHECK(result.rows[i].wall_ms == 0.0);
    CHECK(std::isfinite(result.rows[i].nash_gap));
    CHECK(std::isfinite(result.rows[i].cce_gap));
    CHECK(result.rows[i].efm >= 0.0);
  }
  REQUIRE(result.cells.size() == 1);
  CHECK(result.cells[0].final_nash_gap == result.rows.back().nash_gap);
  double min_seen = result.rows[0].nash_gap;
  for (const auto& row : result.rows) min_seen = std::min(min_seen, row.nash_gap);
  CHECK(result.cells[0].min_nash_gap == min_seen);
}

TEST_CASE("eval with one step per cell stays degenerate but complete") {
  const ExperimentConfig cfg = tiny_eval_config();
  const EvalResult result = run_eval(cfg);
  REQUIRE(result.rows.size() == 2);  // two games, single step each
  for (const auto& row : result.rows) {
    CHECK(row.step == 1);
    CHECK(row.game_param == 0.25);
  }
  REQUIRE(result.cells.size() == 2);
  for (const auto& cell : result.cells) CHECK(cell.min_nash_gap == cell.final_nash_gap);
}

TEST_CASE("algorithms share the sampled evaluation games") {
  ExperimentConfig cfg = tiny_eval_config();
  cfg.distribution = {GameFamily::kBiasedShapley, 0.0, 0.5};
  cfg.algorithms = {Algorithm::kCfr, Algorithm::kCfrPlus};
  cfg.num_games = 3;
  cfg.max_exponent = 1;
  const EvalResult result = run_eval(cfg);
  REQUIRE(result.cells.size() == 6);
  // Cells are algorithm-major: the second algorithm's games repeat the first's.
  for (int g = 0; g < 3; ++g) {
    CHECK(result.cells[g].algorithm == "cfr");
    CHECK(result.cells[3 + g].algorithm == "cfr+");
    CHECK(result.cells[g].game_param == result.cells[3 + g].game_param);
  }
  // Distinct indices draw distinct parameters.
  CHECK(result.cells[0].game_param != result.cells[1].game_param);
}

TEST_CASE("threshold table fractions are sane and monotone") {
  ExperimentConfig cfg = tiny_eval_config();
  cfg.distribution = {GameFamily::kBiasedShapley, 0.1, 0.4};
  cfg.algorithms = {Algorithm::kCfrPlus, Algorithm::kCfr};
  cfg.num_games = 4;
  cfg.max_exponent = 9;
  const EvalResult result = run_eval(cfg);
  const std::vector<double> thresholds = {10.0, 1e-2, 1e-12};
  const nlohmann::json table = build_threshold_table(result, thresholds);
  CHECK(table["kind"] == "threshold_fractions");
  REQUIRE(table["algorithms"].size() == 2);
  CHECK(table["algorithms"][0]["algorithm"] == "cfr+");
  for (const auto& entry : table["algorithms"]) {
    CHECK(entry["games"] == 4);
    const std::vector<double> fr = entry["fractions"].get<std::vector<double>>();
    REQUIRE(fr.size() == thresholds.size());
    // The gap is bounded well under 10, so every game clears the top
    // threshold, and fractions cannot grow as the threshold tightens.
    CHECK(fr[0] == 1.0);
    for (size_t i = 1; i < fr.size(); ++i) CHECK(fr[i] <= fr[i - 1]);
    for (double f : fr) {
      CHECK(f >= 0.0);
      CHECK(f <= 1.0);
    }
  }
  CHECK_THROWS_AS(build_threshold_table(result, {1e-3, 1e-1}), ConfigError);

  const nlohmann::json best = build_best_table(result);
  REQUIRE(best["algorithms"].size() == 2);
  for (const auto& entry : best["algorithms"])
    CHECK(entry["best"].get<double>() <= entry["median"].get<double>());
}

TEST_CASE("results csv reruns byte identical and round trips") {
  ExperimentConfig cfg = tiny_eval_config();
  cfg.distribution = {GameFamily::kBiasedShapley, 0.05, 0.45};
  cfg.algorithms = {Algorithm::kCfr, Algorithm::kPcfrPlus};
  cfg.num_games = 2;
  cfg.max_exponent = 4;
  cfg.seeds = {7};

  const std::string path_a = "/tmp/regretforge_results_a.csv";
  const std::string path_b = "/tmp/regretforge_results_b.csv";
  write_results_csv(path_a, run_eval(cfg).rows);

  setenv("REGRETFORGE_THREADS", "1", 1);  // same bytes regardless of worker count
  write_results_csv(path_b, run_eval(cfg).rows);
  unsetenv("REGRETFORGE_THREADS");

  const std::string bytes_a = read_file(path_a);
  CHECK(bytes_a == read_file(path_b));
  CHECK(bytes_a.substr(0, bytes_a.find('\n')) ==
        "algorithm,game_param,seed,step,nash_gap,cce_gap,efm,wall_ms");

  const EvalResult fresh = run_eval(cfg);
  const std::vector<ResultRow> parsed = read_results_csv(path_a);
  REQUIRE(parsed.size() == fresh.rows.size());
  for (size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].algorithm == fresh.rows[i].algorithm);
    CHECK(parsed[i].game_param == fresh.rows[i].game_param);
    CHECK(parsed[i].seed == fresh.rows[i].seed);
    CHECK(parsed[i].step == fresh.rows[i].step);
    CHECK(parsed[i].nash_gap == fresh.rows[i].nash_gap);
    CHECK(parsed[i].cce_gap == fresh.rows[i].cce_gap);
    CHECK(parsed[i].efm == fresh.rows[i].efm);
    CHECK(parsed[i].wall_ms == 0.0);
  }
  std::remove(path_a.c_str());
  std::remove(path_b.c_str());

  CHECK_THROWS_AS(read_results_csv("/tmp/regretforge_missing.csv"), ConfigError);
}

TEST_CASE("train log csv layout") {
  const std::string path = "/tmp/regretforge_train_log.csv";
  write_train_log_csv(path, {0.5, 0.25});
  CHECK(read_file(path) == "epoch,loss\n1,0.5\n2,0.25\n");
  std::remove(path.c_str());
}

TEST_CASE("neural eval needs a checkpoint and then runs from one") {
  ExperimentConfig cfg = tiny_eval_config();
  cfg.algorithms = {Algorithm::kNpcfr};
  cfg.max_exponent = 2;
  cfg.num_games = 1;
  CHECK(config_error_field([&] { run_eval(cfg); }) == "checkpoint");

  TrainConfig tc;
  tc.distribution = {GameFamily::kBiasedShapley, 0.0, 0.5};
  tc.hidden = 4;
  tc.embed_dim = 2;
  PredictorParams params = make_family_predictor(tc);
  const std::string path = "/tmp/regretforge_eval_ckpt.bin";
  save_checkpoint(path, params, train_config_echo(tc));

  cfg.checkpoint_path = path;
  const EvalResult result = run_eval(cfg);
  REQUIRE(result.rows.size() == 3);
  for (const auto& row : result.rows) {
    CHECK(row.algorithm == "npcfr");
    CHECK(std::isfinite(row.nash_gap));
  }
  std::remove(path.c_str());
}

TEST_CASE("gradcheck sweep stays within tolerance") {
  const GradcheckReport report = run_gradcheck(2024);
  CAPTURE(report.worst_primitive);
  CAPTURE(report.worst_unroll);
  CHECK(report.worst_primitive <= 1e-4);
  CHECK(report.worst_unroll <= 1e-3);
  CHECK(report.ok());
}
