#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "regretforge/minimizer.hpp"
#include "regretforge/predictor.hpp"
#include "regretforge/trainer.hpp"

namespace regretforge {

// Experiment sizes. Smoke finishes in a couple of minutes and is what CI
// runs; desk matches a ten-minute training budget on the one-shot games;
// full is the opt-in many-hour poker configuration.
enum class Tier : uint8_t { kSmoke, kDesk, kFull };

Tier parse_tier(const std::string& name);
std::string tier_name(Tier tier);

struct ExperimentConfig {
  GameDistribution distribution;
  int num_games = 64;
  std::vector<Algorithm> algorithms;
  int max_exponent = 14;  // metrics at steps 2^0 .. 2^max_exponent
  std::vector<uint64_t> seeds = {1};
  std::vector<double> thresholds = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};  // descending
  std::string checkpoint_path;  // weights for neural tags
  Tier tier = Tier::kSmoke;
  // Wall times are recorded only when asked: the column is zero otherwise so
  // reruns stay byte-identical.
  bool timing = false;
};

// Tier presets, then field-by-field JSON overrides. Unknown fields and bad
// values raise ConfigError naming the offending field.
ExperimentConfig default_experiment_config(Tier tier, GameFamily family);
ExperimentConfig parse_experiment_config(const nlohmann::json& doc, Tier tier);
TrainConfig default_tier_train_config(Tier tier, GameFamily family);
TrainConfig parse_train_config(const nlohmann::json& doc, Tier tier);

struct ResultRow {
  std::string algorithm;
  double game_param = 0.0;
  uint64_t seed = 0;
  int64_t step = 0;
  double nash_gap = 0.0;
  double cce_gap = 0.0;
  double efm = 0.0;
  double wall_ms = 0.0;
};

// One (algorithm, game, seed) trajectory summary.
struct CellSummary {
  std::string algorithm;
  double game_param = 0.0;
  uint64_t seed = 0;
  double min_nash_gap = 0.0;    // trajectory minimum over the schedule
  double final_nash_gap = 0.0;  // at 2^max_exponent
};

struct EvalResult {
  std::vector<ResultRow> rows;  // algorithm-major, then game, seed, step
  std::vector<CellSummary> cells;
};

// Runs the full cross product algorithm x game x seed, evaluating the
// reported average strategy at every power-of-two step. Games are sampled
// per (seed, game index) from a named stream, shared by all algorithms so
// fractions compare like for like. Cells run in parallel (see
// harness_threads) with order-fixed assembly.
EvalResult run_eval(const ExperimentConfig& cfg);

// Rebuilds per-cell summaries from saved rows, grouping by (algorithm,
// game_param, seed) in order of first appearance. Lets the table verb work
// from a results file alone.
EvalResult summarize_rows(std::vector<ResultRow> rows);

// Fraction of games per (algorithm, threshold) whose trajectory-minimum
// NashGap is at or below the threshold. Thresholds must arrive descending.
nlohmann::json build_threshold_table(const EvalResult& result,
                                     const std::vector<double>& thresholds);

// Best (lowest) final NashGap per algorithm, the point-mass table shape.
nlohmann::json build_best_table(const EvalResult& result);

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(const std::string& path);
void write_train_log_csv(const std::string& path, const std::vector<double>& epoch_loss);

// REGRETFORGE_THREADS caps worker count; otherwise hardware concurrency.
int harness_threads();

// Finite-difference sweep over every tape primitive plus a four-step
// unrolled meta-loss over all predictor weights. Primitives are held to
// 1e-4; the long composite chain tolerates 1e-3 of difference noise.
struct GradcheckReport {
  double worst_primitive = 0.0;
  double worst_unroll = 0.0;
  bool ok() const { return worst_primitive <= 1e-4 && worst_unroll <= 1e-3; }
};

GradcheckReport run_gradcheck(uint64_t seed);

}  // namespace regretforge
