#include "regretforge/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <utility>

#include "regretforge/checkpoint.hpp"
#include "regretforge/errors.hpp"
#include "regretforge/marginal.hpp"
#include "regretforge/metrics.hpp"
#include "regretforge/rng.hpp"
#include "regretforge/solver.hpp"
#include "regretforge/zoo.hpp"

namespace regretforge {

namespace {

// Pulls a typed field out of the document, translating json's type errors
// into a ConfigError that names the field.
template <typename T>
T field_as(const nlohmann::json& doc, const std::string& key) {
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(key, e.what());
  }
}

void reject_unknown_fields(const nlohmann::json& doc, const std::set<std::string>& allowed) {
  if (!doc.is_object()) throw ConfigError("config", "top level must be a JSON object");
  for (const auto& item : doc.items()) {
    if (allowed.find(item.key()) == allowed.end()) throw ConfigError(item.key(), "unknown field");
  }
}

GameDistribution family_default_distribution(GameFamily family) {
  GameDistribution d;
  d.family = family;
  switch (family) {
    case GameFamily::kBiasedShapley:
    case GameFamily::kBiasedLeduc2p:
      d.low = 0.0;
      d.high = 0.5;
      break;
    case GameFamily::kLeduc3p:
      d.low = 1.0;
      d.high = 1.0;
      break;
  }
  return d;
}

const std::vector<Algorithm>& classical_algorithms() {
  static const std::vector<Algorithm> algos = {
      Algorithm::kCfr,   Algorithm::kCfrPlus,   Algorithm::kPcfr,  Algorithm::kPcfrPlus,
      Algorithm::kSpcfr, Algorithm::kSpcfrPlus, Algorithm::kDcfr,  Algorithm::kLcfr,
      Algorithm::kHedge, Algorithm::kHedgePlus,
  };
  return algos;
}

void validate_experiment_config(const ExperimentConfig& cfg) {
  if (cfg.num_games < 1) throw ConfigError("num_games", "need at least one game");
  if (cfg.max_exponent < 0 || cfg.max_exponent > 30)
    throw ConfigError("max_exponent", "must lie in [0, 30]");
  if (cfg.algorithms.empty()) throw ConfigError("algorithms", "need at least one algorithm");
  if (cfg.seeds.empty()) throw ConfigError("seeds", "need at least one seed");
  if (cfg.thresholds.empty()) throw ConfigError("thresholds", "need at least one threshold");
  for (size_t i = 0; i < cfg.thresholds.size(); ++i) {
    if (!(cfg.thresholds[i] > 0.0))
      throw ConfigError("thresholds", "thresholds must be positive");
    if (i > 0 && !(cfg.thresholds[i] < cfg.thresholds[i - 1]))
      throw ConfigError("thresholds", "thresholds must be strictly descending");
  }
  if (cfg.distribution.low > cfg.distribution.high)
    throw ConfigError("high", "parameter range is inverted");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_csv_double(const std::string& s, int line_no) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw ConfigError("results", "line " + std::to_string(line_no) + ": bad number '" + s + "'");
  return v;
}

}  // namespace

Tier parse_tier(const std::string& name) {
  if (name == "smoke") return Tier::kSmoke;
  if (name == "desk") return Tier::kDesk;
  if (name == "full") return Tier::kFull;
  throw ConfigError("tier", "unknown tier '" + name + "' (expected smoke, desk or full)");
}

std::string tier_name(Tier tier) {
  switch (tier) {
    case Tier::kSmoke: return "smoke";
    case Tier::kDesk: return "desk";
    case Tier::kFull: return "full";
  }
  throw ContractViolation("unhandled tier");
}

ExperimentConfig default_experiment_config(Tier tier, GameFamily family) {
  ExperimentConfig cfg;
  cfg.distribution = family_default_distribution(family);
  cfg.tier = tier;
  switch (tier) {
    case Tier::kSmoke:
      cfg.num_games = 8;
      cfg.max_exponent = 10;
      cfg.algorithms = {Algorithm::kCfr, Algorithm::kCfrPlus, Algorithm::kPcfrPlus};
      cfg.thresholds = {1e-1, 1e-2, 1e-3};
      break;
    case Tier::kDesk:
      cfg.num_games = 64;
      cfg.max_exponent = 14;
      cfg.algorithms = classical_algorithms();
      cfg.thresholds = {1e-1, 1e-2, 1e-3, 1e-4};
      break;
    case Tier::kFull:
      cfg.num_games = 64;
      cfg.max_exponent = 16;
      cfg.algorithms = classical_algorithms();
      cfg.seeds = {1, 2, 3};
      cfg.thresholds = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
      break;
  }
  return cfg;
}

ExperimentConfig parse_experiment_config(const nlohmann::json& doc, Tier tier) {
  static const std::set<std::string> allowed = {
      "tier",      "family",       "low",        "high",   "num_games", "algorithms",
      "max_exponent", "seeds",     "thresholds", "checkpoint", "timing",
  };
  reject_unknown_fields(doc, allowed);
  const Tier resolved =
      doc.contains("tier") ? parse_tier(field_as<std::string>(doc, "tier")) : tier;
  const GameFamily family = doc.contains("family")
                                ? parse_family(field_as<std::string>(doc, "family"))
                                : GameFamily::kBiasedShapley;
  ExperimentConfig cfg = default_experiment_config(resolved, family);
  if (doc.contains("low")) cfg.distribution.low = field_as<double>(doc, "low");
  if (doc.contains("high")) cfg.distribution.high = field_as<double>(doc, "high");
  if (doc.contains("num_games")) cfg.num_games = field_as<int>(doc, "num_games");
  if (doc.contains("max_exponent")) cfg.max_exponent = field_as<int>(doc, "max_exponent");
  if (doc.contains("algorithms")) {
    cfg.algorithms.clear();
    for (const auto& tag : field_as<std::vector<std::string>>(doc, "algorithms"))
      cfg.algorithms.push_back(parse_algorithm(tag));
  }
  if (doc.contains("seeds")) cfg.seeds = field_as<std::vector<uint64_t>>(doc, "seeds");
  if (doc.contains("thresholds")) cfg.thresholds = field_as<std::vector<double>>(doc, "thresholds");
  if (doc.contains("checkpoint")) cfg.checkpoint_path = field_as<std::string>(doc, "checkpoint");
  if (doc.contains("timing")) cfg.timing = field_as<bool>(doc, "timing");
  validate_experiment_config(cfg);
  return cfg;
}

TrainConfig default_tier_train_config(Tier tier, GameFamily family) {
  TrainConfig cfg;
  cfg.distribution = family_default_distribution(family);
  switch (tier) {
    case Tier::kSmoke:
      cfg.epochs = 8;
      cfg.games_per_batch = 8;
      break;
    case Tier::kDesk:
    case Tier::kFull:
      cfg.epochs = 256;
      cfg.games_per_batch = 8;
      break;
  }
  return cfg;
}

TrainConfig parse_train_config(const nlohmann::json& doc, Tier tier) {
  static const std::set<std::string> allowed = {
      "tier",  "family", "low",    "high",  "algorithm", "unroll_steps", "epochs",
      "games_per_batch", "seed",   "hidden", "embed_dim", "head",        "alpha",
      "lr",    "beta1",  "beta2",  "epsilon", "weight_decay", "verbose",
  };
  reject_unknown_fields(doc, allowed);
  const Tier resolved =
      doc.contains("tier") ? parse_tier(field_as<std::string>(doc, "tier")) : tier;
  const GameFamily family = doc.contains("family")
                                ? parse_family(field_as<std::string>(doc, "family"))
                                : GameFamily::kBiasedShapley;
  TrainConfig cfg = default_tier_train_config(resolved, family);
  if (doc.contains("low")) cfg.distribution.low = field_as<double>(doc, "low");
  if (doc.contains("high")) cfg.distribution.high = field_as<double>(doc, "high");
  if (doc.contains("algorithm"))
    cfg.algorithm = parse_algorithm(field_as<std::string>(doc, "algorithm"));
  if (doc.contains("unroll_steps")) cfg.unroll_steps = field_as<int>(doc, "unroll_steps");
  if (doc.contains("epochs")) cfg.epochs = field_as<int>(doc, "epochs");
  if (doc.contains("games_per_batch")) cfg.games_per_batch = field_as<int>(doc, "games_per_batch");
  if (doc.contains("seed")) cfg.seed = field_as<uint64_t>(doc, "seed");
  if (doc.contains("hidden")) cfg.hidden = field_as<int>(doc, "hidden");
  if (doc.contains("embed_dim")) cfg.embed_dim = field_as<int>(doc, "embed_dim");
  if (doc.contains("head")) cfg.head = parse_head(field_as<std::string>(doc, "head"));
  if (doc.contains("alpha")) cfg.alpha = field_as<double>(doc, "alpha");
  if (doc.contains("lr")) cfg.lr = field_as<double>(doc, "lr");
  if (doc.contains("beta1")) cfg.beta1 = field_as<double>(doc, "beta1");
  if (doc.contains("beta2")) cfg.beta2 = field_as<double>(doc, "beta2");
  if (doc.contains("epsilon")) cfg.epsilon = field_as<double>(doc, "epsilon");
  if (doc.contains("weight_decay")) cfg.weight_decay = field_as<double>(doc, "weight_decay");
  if (doc.contains("verbose")) cfg.verbose = field_as<bool>(doc, "verbose");
  return cfg;
}

int harness_threads() {
  if (const char* env = std::getenv("REGRETFORGE_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(std::min(v, 256L));
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

EvalResult run_eval(const ExperimentConfig& cfg) {
  validate_experiment_config(cfg);

  std::shared_ptr<const PredictorParams> predictor;
  const bool any_neural =
      std::any_of(cfg.algorithms.begin(), cfg.algorithms.end(), [](Algorithm a) { return is_neural(a); });
  if (any_neural) {
    if (cfg.checkpoint_path.empty())
      throw ConfigError("checkpoint", "a neural algorithm is listed but no checkpoint was given");
    Checkpoint ck = load_checkpoint(cfg.checkpoint_path);
    predictor = std::make_shared<const PredictorParams>(std::move(ck.params));
  }

  // Sample the evaluation games once per (seed, game index) from a dedicated
  // stream; every algorithm then sees exactly the same games.
  std::vector<std::vector<SampledGame>> games(cfg.seeds.size());
  for (size_t si = 0; si < cfg.seeds.size(); ++si) {
    games[si].reserve(static_cast<size_t>(cfg.num_games));
    for (int gi = 0; gi < cfg.num_games; ++gi) {
      auto rng = make_stream(cfg.seeds[si], "eval_game", static_cast<uint64_t>(gi));
      games[si].push_back(sample_game(cfg.distribution, rng));
    }
  }

  const int64_t total_steps = int64_t{1} << cfg.max_exponent;
  std::vector<int64_t> schedule;
  schedule.reserve(static_cast<size_t>(cfg.max_exponent) + 1);
  for (int e = 0; e <= cfg.max_exponent; ++e) schedule.push_back(int64_t{1} << e);

  struct Cell {
    size_t ai, gi, si;
  };
  std::vector<Cell> cells;
  cells.reserve(cfg.algorithms.size() * static_cast<size_t>(cfg.num_games) * cfg.seeds.size());
  for (size_t ai = 0; ai < cfg.algorithms.size(); ++ai)
    for (size_t gi = 0; gi < static_cast<size_t>(cfg.num_games); ++gi)
      for (size_t si = 0; si < cfg.seeds.size(); ++si) cells.push_back({ai, gi, si});

  std::vector<std::vector<ResultRow>> cell_rows(cells.size());
  std::vector<CellSummary> cell_summary(cells.size());

  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto run_cell = [&](size_t idx) {
    const Cell& cell = cells[idx];
    const Algorithm algo = cfg.algorithms[cell.ai];
    const SampledGame& sg = games[cell.si][cell.gi];
    SolveConfig sc;
    sc.algorithm = algo;
    sc.steps = total_steps;
    if (is_neural(algo)) sc.predictor = predictor;
    CfrSolver solver(sg.game, sc);

    const std::string tag = algorithm_tag(algo);
    auto& rows = cell_rows[idx];
    rows.reserve(schedule.size());
    double min_nash = std::numeric_limits<double>::infinity();
    double final_nash = 0.0;
    size_t cp = 0;
    const auto started = std::chrono::steady_clock::now();
    for (int64_t t = 1; t <= total_steps; ++t) {
      solver.step();
      if (cp < schedule.size() && t == schedule[cp]) {
        double wall_ms = 0.0;
        if (cfg.timing) {
          wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              started)
                        .count();
        }
        const StrategyProfile avg = solver.trace().average_strategy();
        ResultRow row;
        row.algorithm = tag;
        row.game_param = sg.param;
        row.seed = cfg.seeds[cell.si];
        row.step = t;
        row.nash_gap = nash_gap(sg.game, avg);
        row.cce_gap = cce_gap(sg.game, solver.trace());
        row.efm = efm(solver.trace());
        row.wall_ms = wall_ms;
        min_nash = std::min(min_nash, row.nash_gap);
        final_nash = row.nash_gap;
        rows.push_back(std::move(row));
        ++cp;
      }
    }
    cell_summary[idx] = {tag, sg.param, cfg.seeds[cell.si], min_nash, final_nash};
  };

  auto worker = [&]() {
    for (;;) {
      const size_t idx = next.fetch_add(1);
      if (idx >= cells.size() || failed.load()) return;
      try {
        run_cell(idx);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  const int nthreads = std::max(1, std::min<int>(harness_threads(), static_cast<int>(cells.size())));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(nthreads));
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  EvalResult result;
  result.rows.reserve(cells.size() * schedule.size());
  result.cells.reserve(cells.size());
  for (size_t i = 0; i < cells.size(); ++i) {
    for (auto& row : cell_rows[i]) result.rows.push_back(std::move(row));
    result.cells.push_back(cell_summary[i]);
  }
  return result;
}

EvalResult summarize_rows(std::vector<ResultRow> rows) {
  if (rows.empty()) throw ConfigError("results", "no data rows");
  struct Key {
    std::string algorithm;
    double param;
    uint64_t seed;
    bool operator==(const Key& o) const {
      return algorithm == o.algorithm && param == o.param && seed == o.seed;
    }
  };
  std::vector<Key> order;
  std::vector<CellSummary> cells;
  std::vector<int64_t> best_step;
  for (const auto& row : rows) {
    const Key key{row.algorithm, row.game_param, row.seed};
    size_t i = 0;
    while (i < order.size() && !(order[i] == key)) ++i;
    if (i == order.size()) {
      order.push_back(key);
      cells.push_back({row.algorithm, row.game_param, row.seed, row.nash_gap, row.nash_gap});
      best_step.push_back(row.step);
    } else {
      cells[i].min_nash_gap = std::min(cells[i].min_nash_gap, row.nash_gap);
      if (row.step >= best_step[i]) {
        best_step[i] = row.step;
        cells[i].final_nash_gap = row.nash_gap;
      }
    }
  }
  EvalResult result;
  result.rows = std::move(rows);
  result.cells = std::move(cells);
  return result;
}

nlohmann::json build_threshold_table(const EvalResult& result,
                                     const std::vector<double>& thresholds) {
  if (thresholds.empty()) throw ConfigError("thresholds", "need at least one threshold");
  for (size_t i = 1; i < thresholds.size(); ++i)
    if (!(thresholds[i] < thresholds[i - 1]))
      throw ConfigError("thresholds", "thresholds must be strictly descending");

  std::vector<std::string> order;
  for (const auto& cell : result.cells)
    if (std::find(order.begin(), order.end(), cell.algorithm) == order.end())
      order.push_back(cell.algorithm);

  nlohmann::json table;
  table["kind"] = "threshold_fractions";
  table["thresholds"] = thresholds;
  nlohmann::json algos = nlohmann::json::array();
  for (const auto& name : order) {
    std::vector<double> mins;
    for (const auto& cell : result.cells)
      if (cell.algorithm == name) mins.push_back(cell.min_nash_gap);
    nlohmann::json entry;
    entry["algorithm"] = name;
    entry["games"] = mins.size();
    std::vector<double> fractions;
    fractions.reserve(thresholds.size());
    for (double thr : thresholds) {
      size_t hit = 0;
      for (double m : mins)
        if (m <= thr) ++hit;
      fractions.push_back(static_cast<double>(hit) / static_cast<double>(mins.size()));
    }
    entry["fractions"] = fractions;
    algos.push_back(std::move(entry));
  }
  table["algorithms"] = std::move(algos);
  return table;
}

nlohmann::json build_best_table(const EvalResult& result) {
  std::vector<std::string> order;
  for (const auto& cell : result.cells)
    if (std::find(order.begin(), order.end(), cell.algorithm) == order.end())
      order.push_back(cell.algorithm);

  nlohmann::json table;
  table["kind"] = "final_nash_gap";
  nlohmann::json algos = nlohmann::json::array();
  for (const auto& name : order) {
    std::vector<double> finals;
    for (const auto& cell : result.cells)
      if (cell.algorithm == name) finals.push_back(cell.final_nash_gap);
    std::sort(finals.begin(), finals.end());
    const size_t n = finals.size();
    const double median = n % 2 == 1 ? finals[n / 2] : 0.5 * (finals[n / 2 - 1] + finals[n / 2]);
    nlohmann::json entry;
    entry["algorithm"] = name;
    entry["games"] = n;
    entry["best"] = finals.front();
    entry["median"] = median;
    algos.push_back(std::move(entry));
  }
  table["algorithms"] = std::move(algos);
  return table;
}

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("out", "cannot open '" + path + "' for writing");
  out << "algorithm,game_param,seed,step,nash_gap,cce_gap,efm,wall_ms\n";
  for (const auto& r : rows) {
    out << r.algorithm << ',' << format_double(r.game_param) << ',' << r.seed << ',' << r.step
        << ',' << format_double(r.nash_gap) << ',' << format_double(r.cce_gap) << ','
        << format_double(r.efm) << ',' << format_double(r.wall_ms) << '\n';
  }
  if (!out) throw ConfigError("out", "failed while writing '" + path + "'");
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("results", "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("results", "empty file '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "algorithm,game_param,seed,step,nash_gap,cce_gap,efm,wall_ms")
    throw ConfigError("results", "unexpected header '" + line + "'");
  std::vector<ResultRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> parts = split_csv_line(line);
    if (parts.size() != 8)
      throw ConfigError("results",
                        "line " + std::to_string(line_no) + ": expected 8 columns, got " +
                            std::to_string(parts.size()));
    ResultRow row;
    row.algorithm = parts[0];
    row.game_param = parse_csv_double(parts[1], line_no);
    row.seed = static_cast<uint64_t>(std::strtoull(parts[2].c_str(), nullptr, 10));
    row.step = static_cast<int64_t>(std::strtoll(parts[3].c_str(), nullptr, 10));
    row.nash_gap = parse_csv_double(parts[4], line_no);
    row.cce_gap = parse_csv_double(parts[5], line_no);
    row.efm = parse_csv_double(parts[6], line_no);
    row.wall_ms = parse_csv_double(parts[7], line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_train_log_csv(const std::string& path, const std::vector<double>& epoch_loss) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("out", "cannot open '" + path + "' for writing");
  out << "epoch,loss\n";
  for (size_t i = 0; i < epoch_loss.size(); ++i)
    out << (i + 1) << ',' << format_double(epoch_loss[i]) << '\n';
  if (!out) throw ConfigError("out", "failed while writing '" + path + "'");
}

namespace {

// One finite-difference probe: a graph builder over named inputs whose output
// is scalarized through a fixed random weighting so every entry gets a
// nontrivial adjoint.
struct GradProbe {
  std::string name;
  std::vector<std::pair<int, int>> shapes;
  std::function<Array(Tape&, const std::vector<Array>&)> body;
  double positive_low = 0.0;   // > 0 draws inputs from [low, high]
  double positive_high = 0.0;
  double min_abs = 0.0;        // keep inputs away from kinks at zero
};

double probe_error(const GradProbe& probe, std::mt19937_64& rng) {
  std::vector<double> flat;
  std::vector<size_t> offsets;
  for (const auto& [r, c] : probe.shapes) {
    offsets.push_back(flat.size());
    for (int i = 0; i < r * c; ++i) {
      double v;
      if (probe.positive_high > 0.0) {
        v = uniform_in(rng, probe.positive_low, probe.positive_high);
      } else {
        v = uniform_in(rng, -1.5, 1.5);
        if (std::abs(v) < probe.min_abs) v = v < 0 ? -probe.min_abs : probe.min_abs;
      }
      flat.push_back(v);
    }
  }

  // First build fixes the output shape so the scalarizing weights can be
  // drawn once and shared between the analytic and difference passes.
  std::vector<double> weights;
  {
    Tape t;
    std::vector<Array> inputs;
    for (size_t i = 0; i < probe.shapes.size(); ++i) {
      auto [r, c] = probe.shapes[i];
      inputs.push_back(t.input(r, c, std::span<const double>(flat.data() + offsets[i],
                                                             static_cast<size_t>(r) * c)));
    }
    Array out = probe.body(t, inputs);
    weights.resize(static_cast<size_t>(t.rows(out)) * t.cols(out));
    for (auto& w : weights) w = uniform_in(rng, 0.5, 1.5);
  }

  auto build_loss = [&](Tape& t, const std::vector<double>& x, std::vector<Array>* tracked) {
    std::vector<Array> inputs;
    for (size_t i = 0; i < probe.shapes.size(); ++i) {
      auto [r, c] = probe.shapes[i];
      inputs.push_back(t.input(r, c, std::span<const double>(x.data() + offsets[i],
                                                             static_cast<size_t>(r) * c)));
    }
    Array out = probe.body(t, inputs);
    Array w = t.constant(t.rows(out), t.cols(out), weights);
    Array loss = t.sum(t.mul(out, w));
    if (tracked) *tracked = inputs;
    return loss;
  };

  std::vector<Array> tracked;
  Tape t;
  Array loss = build_loss(t, flat, &tracked);
  t.backward(loss);
  std::vector<double> analytic;
  for (Array a : tracked) {
    auto g = t.grad(a);
    analytic.insert(analytic.end(), g.begin(), g.end());
  }

  const std::vector<double> fd = fd_gradient(
      [&](const std::vector<double>& x) {
        Tape tt;
        Array l = build_loss(tt, x, nullptr);
        return tt.value(l)[0];
      },
      flat);
  return max_rel_error(analytic, fd);
}

}  // namespace

GradcheckReport run_gradcheck(uint64_t seed) {
  auto rng = make_stream(seed, "gradcheck", 0);
  GradcheckReport report;

  const GameTree shapley = make_biased_shapley(0.3);
  std::vector<int> shapley_counts;
  for (int s = 0; s < shapley.num_infostates(); ++s)
    shapley_counts.push_back(shapley.infostate(s).num_actions);

  std::vector<GradProbe> probes;
  probes.push_back({"add", {{2, 3}, {2, 3}},
                    [](Tape& t, const std::vector<Array>& in) { return t.add(in[0], in[1]); }});
  probes.push_back({"sub", {{2, 3}, {2, 3}},
                    [](Tape& t, const std::vector<Array>& in) { return t.sub(in[0], in[1]); }});
  probes.push_back({"mul", {{2, 3}, {2, 3}},
                    [](Tape& t, const std::vector<Array>& in) { return t.mul(in[0], in[1]); }});
  probes.push_back({"div", {{2, 3}, {2, 3}},
                    [](Tape& t, const std::vector<Array>& in) { return t.div(in[0], in[1]); },
                    0.4, 2.0});
  probes.push_back({"matmul", {{2, 3}, {3, 2}},
                    [](Tape& t, const std::vector<Array>& in) { return t.matmul(in[0], in[1]); }});
  probes.push_back({"sum", {{2, 3}},
                    [](Tape& t, const std::vector<Array>& in) { return t.sum(in[0]); }});
  probes.push_back({"mean", {{2, 3}},
                    [](Tape& t, const std::vector<Array>& in) { return t.mean(in[0]); }});
  probes.push_back({"row_sum", {{3, 2}},
                    [](Tape& t, const std::vector<Array>& in) { return t.row_sum(in[0]); }});
  probes.push_back({"concat", {{2, 2}, {2, 3}},
                    [](Tape& t, const std::vector<Array>& in) { return t.concat(in[0], in[1]); }});
  probes.push_back({"gather", {{4, 3}},
                    [](Tape& t, const std::vector<Array>& in) {
                      return t.gather(in[0], {1, 0, 3, 1});
                    }});
  probes.push_back({"broadcast_scalar", {{1, 1}},
                    [](Tape& t, const std::vector<Array>& in) { return t.broadcast(in[0], 2, 3); }});
  probes.push_back({"broadcast_row", {{1, 3}},
                    [](Tape& t, const std::vector<Array>& in) { return t.broadcast(in[0], 2, 3); }});
  probes.push_back({"broadcast_col", {{2, 1}},
                    [](Tape& t, const std::vector<Array>& in) { return t.broadcast(in[0], 2, 3); }});
  probes.push_back({"transpose", {{2, 3}},
                    [](Tape& t, const std::vector<Array>& in) { return t.transpose(in[0]); }});
  probes.push_back({"reshape", {{2, 3}},
                    [](Tape& t, const std::vector<Array>& in) { return t.reshape(in[0], 3, 2); }});
  probes.push_back({"slice_cols", {{2, 5}},
                    [](Tape& t, const std::vector<Array>& in) {
                      return t.slice_cols(in[0], 1, 3);
                    }});
  probes.push_back({"scale", {{2, 3}},
                    [](Tape& t, const std::vector<Array>& in) { return t.scale(in[0], 1.7); }});
  probes.push_back({"positive_part", {{2, 3}},
                    [](Tape& t, const std::vector<Array>& in) { return t.positive_part(in[0]); },
                    0.0, 0.0, 0.05});
  probes.push_back({"tanh", {{2, 3}},
                    [](Tape& t, const std::vector<Array>& in) { return t.tanh(in[0]); }});
  probes.push_back({"sigmoid", {{2, 3}},
                    [](Tape& t, const std::vector<Array>& in) { return t.sigmoid(in[0]); }});
  probes.push_back({"exp", {{2, 3}},
                    [](Tape& t, const std::vector<Array>& in) { return t.exp(in[0]); }});
  probes.push_back({"safe_log", {{2, 3}},
                    [](Tape& t, const std::vector<Array>& in) { return t.safe_log(in[0]); },
                    0.2, 2.0});
  probes.push_back({"normalize_simplex", {{2, 3}},
                    [](Tape& t, const std::vector<Array>& in) {
                      return t.normalize_simplex(in[0]);
                    },
                    0.2, 2.0});
  probes.push_back({"normalize_simplex_counts", {{2, 3}},
                    [](Tape& t, const std::vector<Array>& in) {
                      return t.normalize_simplex(in[0], {2, 3});
                    },
                    0.2, 2.0});
  probes.push_back({"softmax", {{2, 3}},
                    [](Tape& t, const std::vector<Array>& in) { return t.softmax(in[0]); }});
  probes.push_back({"cfr_walk", {{shapley.num_infostates(), shapley.max_actions()}},
                    [&](Tape& t, const std::vector<Array>& in) {
                      Array sigma = t.normalize_simplex(in[0], shapley_counts);
                      return t.cfr_walk(shapley, sigma);
                    },
                    0.2, 2.0});

  for (const auto& probe : probes) {
    const double err = probe_error(probe, rng);
    report.worst_primitive = std::max(report.worst_primitive, err);
  }

  // Four unrolled predictive steps on the one-shot game, differentiated
  // against every predictor weight.
  PredictorParams params;
  params.max_actions = shapley.max_actions();
  params.embed_dim = 2;
  params.hidden = 4;
  params.num_embeddings = shapley.num_infostates();
  params.head = HeadKind::kSigmoid;
  params.form = PredictionForm::kResidual;
  params.alpha = 2.0;
  params.resize_arrays();
  init_predictor(params, rng);

  const std::vector<double> base = flatten_parameters(params);
  auto unroll_value = [&](const std::vector<double>& x) {
    load_parameters(params, x);
    Tape t;
    TapePredictor p = load_predictor(t, params);
    Array loss = unrolled_meta_loss(t, p, shapley, 4, Algorithm::kNpcfr);
    return t.value(loss)[0];
  };

  load_parameters(params, base);
  std::vector<double> analytic;
  {
    Tape t;
    TapePredictor p = load_predictor(t, params);
    Array loss = unrolled_meta_loss(t, p, shapley, 4, Algorithm::kNpcfr);
    t.backward(loss);
    analytic = collect_predictor_grad(t, p);
  }
  const std::vector<double> fd = fd_gradient(unroll_value, base);
  load_parameters(params, base);
  report.worst_unroll = max_rel_error(analytic, fd);
  return report;
}

}  // namespace regretforge
