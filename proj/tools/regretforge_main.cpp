#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "regretforge/checkpoint.hpp"
#include "regretforge/errors.hpp"
#include "regretforge/harness.hpp"
#include "regretforge/metrics.hpp"
#include "regretforge/solver.hpp"
#include "regretforge/trainer.hpp"
#include "regretforge/zoo.hpp"

namespace rf = regretforge;

namespace {

// Exit codes: 0 ok, 1 check failed, 2 bad config, 3 bad checkpoint, 4 runtime.
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCheckpoint = 3;
constexpr int kExitRuntime = 4;

void print_error_record(const std::string& kind, const std::string& field,
                        const std::string& message) {
  nlohmann::json record;
  record["error"] = kind;
  if (!field.empty()) record["field"] = field;
  record["message"] = message;
  std::cerr << record.dump() << "\n";
}

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw rf::ConfigError("config", "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw rf::ConfigError("config", std::string("not valid JSON: ") + e.what());
  }
}

std::filesystem::path prepare_out_dir(const std::string& out) {
  std::filesystem::path dir = out.empty() ? "." : out;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw rf::ConfigError("out", "cannot create '" + dir.string() + "': " + ec.message());
  return dir;
}

nlohmann::json build_tables(const rf::EvalResult& result, const std::vector<double>& thresholds) {
  nlohmann::json tables;
  tables["threshold_table"] = rf::build_threshold_table(result, thresholds);
  tables["final_table"] = rf::build_best_table(result);
  return tables;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rf::ConfigError("out", "cannot open '" + path.string() + "' for writing");
  out << doc.dump(2) << "\n";
}

int cmd_solve(const std::string& config_path, const std::string& tier_name, uint64_t seed,
              const std::string& out, const std::string& checkpoint) {
  const nlohmann::json doc = load_config(config_path);
  static const std::vector<std::string> allowed = {"tier",         "family",    "param",
                                                   "algorithm",    "max_exponent", "checkpoint"};
  for (const auto& item : doc.items())
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      throw rf::ConfigError(item.key(), "unknown field");

  rf::ExperimentConfig cfg;
  cfg.tier = rf::parse_tier(doc.value("tier", tier_name));
  const rf::GameFamily family = rf::parse_family(doc.value("family", std::string("biased_shapley")));
  const double param = doc.value("param", family == rf::GameFamily::kLeduc3p ? 1.0 : 0.25);
  cfg.distribution = {family, param, param};
  cfg.num_games = 1;
  cfg.algorithms = {rf::parse_algorithm(doc.value("algorithm", std::string("cfr")))};
  cfg.max_exponent = doc.value("max_exponent", 10);
  cfg.seeds = {seed};
  if (!checkpoint.empty()) cfg.checkpoint_path = checkpoint;
  else cfg.checkpoint_path = doc.value("checkpoint", std::string());

  const rf::EvalResult result = rf::run_eval(cfg);
  std::printf("%-8s %-12s %-12s %-12s\n", "step", "nash_gap", "cce_gap", "efm");
  for (const auto& row : result.rows)
    std::printf("%-8lld %-12.6g %-12.6g %-12.6g\n", static_cast<long long>(row.step), row.nash_gap,
                row.cce_gap, row.efm);
  if (!out.empty()) {
    const auto dir = prepare_out_dir(out);
    rf::write_results_csv((dir / "results.csv").string(), result.rows);
    std::printf("wrote %s\n", (dir / "results.csv").c_str());
  }
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& tier_name, uint64_t seed,
              bool seed_given, const std::string& out, bool verbose) {
  const nlohmann::json doc = load_config(config_path);
  rf::TrainConfig cfg = rf::parse_train_config(doc, rf::parse_tier(tier_name));
  if (seed_given) cfg.seed = seed;
  if (verbose) cfg.verbose = true;

  const rf::TrainResult result = rf::train(cfg);
  const auto dir = prepare_out_dir(out);
  rf::PredictorParams params = result.params;
  rf::save_checkpoint((dir / "checkpoint.bin").string(), params, rf::train_config_echo(cfg));
  rf::write_train_log_csv((dir / "train_log.csv").string(), result.epoch_loss);
  std::printf("trained %s on %s for %d epochs: loss %.6g -> %.6g\n",
              rf::algorithm_tag(cfg.algorithm).c_str(),
              rf::family_name(cfg.distribution.family).c_str(), cfg.epochs,
              result.epoch_loss.front(), result.epoch_loss.back());
  std::printf("wrote %s and %s\n", (dir / "checkpoint.bin").c_str(),
              (dir / "train_log.csv").c_str());
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& tier_name, uint64_t seed,
             bool seed_given, const std::string& out, const std::string& checkpoint, bool timing) {
  const nlohmann::json doc = load_config(config_path);
  rf::ExperimentConfig cfg = rf::parse_experiment_config(doc, rf::parse_tier(tier_name));
  if (seed_given) cfg.seeds = {seed};
  if (!checkpoint.empty()) cfg.checkpoint_path = checkpoint;
  if (timing) cfg.timing = true;

  const rf::EvalResult result = rf::run_eval(cfg);
  const auto dir = prepare_out_dir(out);
  rf::write_results_csv((dir / "results.csv").string(), result.rows);
  write_json(dir / "tables.json", build_tables(result, cfg.thresholds));
  std::printf("evaluated %zu algorithms x %d games x %zu seeds to step %lld\n",
              cfg.algorithms.size(), cfg.num_games, cfg.seeds.size(),
              static_cast<long long>(int64_t{1} << cfg.max_exponent));
  std::printf("wrote %s and %s\n", (dir / "results.csv").c_str(), (dir / "tables.json").c_str());
  return 0;
}

int cmd_table(const std::string& results_path, const std::string& config_path,
              const std::string& tier_name, const std::string& out) {
  const nlohmann::json doc = load_config(config_path);
  const rf::ExperimentConfig cfg = rf::parse_experiment_config(doc, rf::parse_tier(tier_name));
  const rf::EvalResult result = rf::summarize_rows(rf::read_results_csv(results_path));
  const auto dir = prepare_out_dir(out);
  write_json(dir / "tables.json", build_tables(result, cfg.thresholds));
  std::printf("summarized %zu rows into %zu cells; wrote %s\n", result.rows.size(),
              result.cells.size(), (dir / "tables.json").c_str());
  return 0;
}

int cmd_gradcheck(uint64_t seed) {
  const rf::GradcheckReport report = rf::run_gradcheck(seed);
  std::printf("primitives: worst relative error %.3g (tolerance 1e-4)\n", report.worst_primitive);
  std::printf("unrolled meta-loss: worst relative error %.3g (tolerance 1e-3)\n",
              report.worst_unroll);
  if (!report.ok()) {
    std::printf("FAIL\n");
    return kExitCheckFailed;
  }
  std::printf("OK\n");
  return 0;
}

int cmd_oracle(const std::string& grid) {
  double lo = 0.0, hi = 0.0, step = 0.0;
  if (std::sscanf(grid.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0.0 || hi < lo)
    throw rf::ConfigError("eta-grid", "expected 'low:high:step' with positive step, got '" + grid +
                                          "'");
  if (hi > 1.0)
    throw rf::ConfigError("eta-grid", "the closed-form equilibrium covers bias at most 1");
  const int n = static_cast<int>((hi - lo) / step + 1e-9) + 1;
  double worst = 0.0;
  double worst_eta = lo;
  for (int i = 0; i < n; ++i) {
    const double eta = lo + i * step;
    const rf::GameTree g = rf::make_biased_shapley(eta);
    const double gap = rf::nash_gap(g, rf::analytic_nash_biased_shapley(eta));
    if (gap > worst) {
      worst = gap;
      worst_eta = eta;
    }
  }
  std::printf("checked %d bias values in [%g, %g]: worst nash gap %.3g at eta %g\n", n, lo, hi,
              worst, worst_eta);
  if (worst > 1e-9) {
    std::printf("FAIL (tolerance 1e-9)\n");
    return kExitCheckFailed;
  }
  std::printf("OK\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regretforge: regret minimization over extensive-form games"};
  app.require_subcommand(1);

  std::string config_path, out, checkpoint, tier = "smoke", results_path = "results.csv";
  std::string eta_grid = "0:0.5:0.01";
  uint64_t seed = 1;
  bool timing = false, verbose = false;

  auto* solve = app.add_subcommand("solve", "solve one game and report metrics per step");
  solve->add_option("--config", config_path, "JSON config file");
  solve->add_option("--tier", tier, "smoke, desk or full");
  solve->add_option("--seed", seed, "master seed");
  solve->add_option("--out", out, "output directory for results.csv");
  solve->add_option("--checkpoint", checkpoint, "predictor weights for neural tags");

  auto* train = app.add_subcommand("train", "meta-train a predictor, write checkpoint + log");
  train->add_option("--config", config_path, "JSON config file");
  train->add_option("--tier", tier, "smoke, desk or full");
  auto* train_seed = train->add_option("--seed", seed, "master seed");
  train->add_option("--out", out, "output directory");
  train->add_flag("--verbose", verbose, "print per-epoch losses to stderr");

  auto* eval = app.add_subcommand("eval", "run the algorithm x game x seed sweep");
  eval->add_option("--config", config_path, "JSON config file");
  eval->add_option("--tier", tier, "smoke, desk or full");
  auto* eval_seed = eval->add_option("--seed", seed, "single master seed override");
  eval->add_option("--out", out, "output directory");
  eval->add_option("--checkpoint", checkpoint, "predictor weights for neural tags");
  eval->add_flag("--timing", timing, "record wall times (breaks byte-identical reruns)");

  auto* table = app.add_subcommand("table", "rebuild tables.json from a results file");
  table->add_option("--results", results_path, "results.csv produced by eval");
  table->add_option("--config", config_path, "JSON config file (for thresholds)");
  table->add_option("--tier", tier, "smoke, desk or full");
  table->add_option("--out", out, "output directory");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the autodiff");
  gradcheck->add_option("--seed", seed, "probe seed");

  auto* oracle = app.add_subcommand("oracle", "closed-form equilibrium self-check");
  oracle->add_option("--eta-grid", eta_grid, "low:high:step bias grid");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(config_path, tier, seed, out, checkpoint);
    if (train->parsed())
      return cmd_train(config_path, tier, seed, train_seed->count() > 0, out, verbose);
    if (eval->parsed())
      return cmd_eval(config_path, tier, seed, eval_seed->count() > 0, out, checkpoint, timing);
    if (table->parsed()) return cmd_table(results_path, config_path, tier, out);
    if (gradcheck->parsed()) return cmd_gradcheck(seed);
    if (oracle->parsed()) return cmd_oracle(eta_grid);
  } catch (const rf::ConfigError& e) {
    print_error_record("config", e.field(), e.what());
    return kExitConfig;
  } catch (const rf::CheckpointError& e) {
    print_error_record("checkpoint", "", e.what());
    return kExitCheckpoint;
  } catch (const std::exception& e) {
    print_error_record("runtime", "", e.what());
    return kExitRuntime;
  }
  return 0;
}
