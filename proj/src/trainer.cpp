#include "regretforge/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "regretforge/adam.hpp"
#include "regretforge/errors.hpp"
#include "regretforge/rng.hpp"
#include "regretforge/zoo.hpp"

namespace regretforge {

GameFamily parse_family(const std::string& name) {
  if (name == "biased_shapley") return GameFamily::kBiasedShapley;
  if (name == "biased_2p_leduc") return GameFamily::kBiasedLeduc2p;
  if (name == "three_player_leduc") return GameFamily::kLeduc3p;
  throw ConfigError("family", "unknown game family '" + name + "'");
}

std::string family_name(GameFamily family) {
  switch (family) {
    case GameFamily::kBiasedShapley: return "biased_shapley";
    case GameFamily::kBiasedLeduc2p: return "biased_2p_leduc";
    case GameFamily::kLeduc3p: return "three_player_leduc";
  }
  throw ContractViolation("unhandled game family");
}

SampledGame sample_game(const GameDistribution& dist, std::mt19937_64& rng) {
  switch (dist.family) {
    case GameFamily::kBiasedShapley: {
      const double eta = uniform_in(rng, dist.low, dist.high);
      return {make_biased_shapley(eta), eta};
    }
    case GameFamily::kBiasedLeduc2p: {
      const double beta = uniform_in(rng, dist.low, dist.high);
      return {make_leduc(2, beta), beta};
    }
    case GameFamily::kLeduc3p:
      return {make_leduc(3, 1.0), 1.0};
  }
  throw ContractViolation("unhandled game family");
}

GameTree family_prototype(GameFamily family) {
  switch (family) {
    case GameFamily::kBiasedShapley: return make_biased_shapley(0.25);
    case GameFamily::kBiasedLeduc2p: return make_leduc(2, 0.25);
    case GameFamily::kLeduc3p: return make_leduc(3, 1.0);
  }
  throw ContractViolation("unhandled game family");
}

HeadKind resolved_head(const TrainConfig& cfg) {
  if (cfg.head) return *cfg.head;
  return cfg.distribution.family == GameFamily::kBiasedShapley ? HeadKind::kSigmoid
                                                               : HeadKind::kTanh;
}

double resolved_alpha(const TrainConfig& cfg) {
  if (cfg.alpha) return *cfg.alpha;
  return cfg.distribution.family == GameFamily::kBiasedShapley ? 3.0 : 1.0;
}

nlohmann::json train_config_echo(const TrainConfig& cfg) {
  return {
      {"family", family_name(cfg.distribution.family)},
      {"param_low", cfg.distribution.low},
      {"param_high", cfg.distribution.high},
      {"algorithm", algorithm_tag(cfg.algorithm)},
      {"unroll_steps", cfg.unroll_steps},
      {"epochs", cfg.epochs},
      {"games_per_batch", cfg.games_per_batch},
      {"seed", cfg.seed},
      {"hidden", cfg.hidden},
      {"embed_dim", cfg.embed_dim},
      {"head", head_name(resolved_head(cfg))},
      {"alpha", resolved_alpha(cfg)},
      {"lr", cfg.lr},
      {"beta1", cfg.beta1},
      {"beta2", cfg.beta2},
      {"epsilon", cfg.epsilon},
      {"weight_decay", cfg.weight_decay},
  };
}

namespace {

void validate_train_config(const TrainConfig& cfg) {
  if (!is_neural(cfg.algorithm))
    throw ConfigError("algorithm", "meta-training needs a neural algorithm tag");
  if (cfg.unroll_steps < 1) throw ConfigError("unroll_steps", "need at least one step");
  if (cfg.epochs < 1) throw ConfigError("epochs", "need at least one epoch");
  if (cfg.games_per_batch < 1) throw ConfigError("games_per_batch", "need at least one game");
  if (cfg.hidden < 1) throw ConfigError("hidden", "hidden size must be positive");
  if (cfg.embed_dim < 0) throw ConfigError("embed_dim", "embedding width cannot be negative");
  if (cfg.distribution.low > cfg.distribution.high)
    throw ConfigError("distribution", "parameter range is inverted");
}

}  // namespace

PredictorParams make_family_predictor(const TrainConfig& cfg) {
  validate_train_config(cfg);
  const GameTree proto = family_prototype(cfg.distribution.family);
  PredictorParams params =
      make_predictor(proto.max_actions(), cfg.embed_dim, cfg.hidden, proto.num_infostates(),
                     resolved_head(cfg), resolved_alpha(cfg));
  params.form = cfg.algorithm == Algorithm::kNpcfrPlus ? PredictionForm::kDirect
                                                       : PredictionForm::kResidual;
  std::mt19937_64 rng = make_stream(cfg.seed, "predictor_init");
  init_predictor(params, rng);
  return params;
}

Array unrolled_meta_loss(Tape& t, const TapePredictor& tp, const GameTree& g, int steps,
                         Algorithm algorithm) {
  if (!is_neural(algorithm))
    throw ConfigError("algorithm", "the unrolled solve is defined for neural tags");
  if (steps < 1) throw ConfigError("unroll_steps", "need at least one step");
  const PredictorParams& pp = *tp.params;
  if (pp.max_actions < g.max_actions())
    throw ConfigError("checkpoint", "predictor supports fewer actions than the game needs");
  if (pp.num_embeddings < g.num_infostates())
    throw ConfigError("checkpoint", "predictor has fewer embeddings than the game has infostates");
  const PredictionForm want = algorithm == Algorithm::kNpcfrPlus ? PredictionForm::kDirect
                                                                 : PredictionForm::kResidual;
  if (pp.form != want)
    throw ConfigError("predictor.form",
                      "prediction form '" + form_name(pp.form) +
                          "' does not match this algorithm (wants '" + form_name(want) + "')");

  const int S = g.num_infostates();
  const int A = pp.max_actions;
  const int P = g.num_players();
  const int Z = g.num_terminals();
  const bool plus = algorithm == Algorithm::kNpcfrPlus;  // direct form, alternating updates
  const double alpha = pp.alpha;

  // Static game facts as constants.
  std::vector<int> counts(S);
  std::vector<double> mask_data(static_cast<size_t>(S) * A, 0.0);
  for (int s = 0; s < S; ++s) {
    counts[s] = g.infostate(s).num_actions;
    for (int a = 0; a < counts[s]; ++a) mask_data[static_cast<size_t>(s) * A + a] = 1.0;
  }
  Array mask = t.constant(S, A, mask_data);

  WalkResult probe;
  cfr_forward_walk(g, std::vector<double>(static_cast<size_t>(S) * A, 0.0), probe);
  Array chance = t.constant(1, Z, probe.chance_contrib);

  std::vector<Array> act_mask_a(P), act_mask_h(P), hold_mask_a(P), hold_mask_h(P);
  if (plus) {
    for (int p = 0; p < P; ++p) {
      std::vector<double> act(static_cast<size_t>(S) * A, 0.0);
      std::vector<double> acth(static_cast<size_t>(S) * pp.hidden, 0.0);
      std::vector<double> hold(static_cast<size_t>(S) * A, 1.0);
      std::vector<double> holdh(static_cast<size_t>(S) * pp.hidden, 1.0);
      for (int s = 0; s < S; ++s)
        if (g.infostate(s).owner == p) {
          for (int a = 0; a < A; ++a) {
            act[static_cast<size_t>(s) * A + a] = 1.0;
            hold[static_cast<size_t>(s) * A + a] = 0.0;
          }
          for (int j = 0; j < pp.hidden; ++j) {
            acth[static_cast<size_t>(s) * pp.hidden + j] = 1.0;
            holdh[static_cast<size_t>(s) * pp.hidden + j] = 0.0;
          }
        }
      act_mask_a[p] = t.constant(S, A, act);
      act_mask_h[p] = t.constant(S, pp.hidden, acth);
      hold_mask_a[p] = t.constant(S, A, hold);
      hold_mask_h[p] = t.constant(S, pp.hidden, holdh);
    }
  }

  std::vector<int> embed_idx(S);
  for (int s = 0; s < S; ++s) embed_idx[s] = s;
  Array embeds = t.gather(tp.embed, embed_idx);

  Array R = t.constant_fill(S, A, 0.0);
  Array pred = t.constant_fill(S, A, 0.0);
  TapeLstmState state = zero_lstm_state(t, S, pp.hidden);

  Array sum_reach{}, loss_sum{};
  std::vector<Array> sum_contrib(P);

  for (int step = 1; step <= steps; ++step) {
    Array sigma = t.normalize_simplex(t.positive_part(t.add(R, pred)), counts);
    Array walk = t.cfr_walk(g, sigma);
    std::vector<Array> contrib(P);
    for (int p = 0; p < P; ++p) contrib[p] = t.slice_cols(walk, p * Z, Z);
    Array x = t.reshape(t.slice_cols(walk, P * Z, S * A), S, A);

    Array reach = chance;
    for (int p = 0; p < P; ++p) reach = t.mul(reach, contrib[p]);
    sum_reach = step == 1 ? reach : t.add(sum_reach, reach);
    for (int p = 0; p < P; ++p)
      sum_contrib[p] = step == 1 ? contrib[p] : t.add(sum_contrib[p], contrib[p]);

    // Prefix marginalizability: KL of the running empirical terminal
    // distribution against the product of its per-player factor averages.
    const double inv = 1.0 / static_cast<double>(step);
    Array dbar = t.scale(sum_reach, inv);
    Array mu = chance;
    for (int p = 0; p < P; ++p) mu = t.mul(mu, t.scale(sum_contrib[p], inv));
    Array kl = t.sum(t.mul(dbar, t.sub(t.safe_log(dbar), t.safe_log(mu))));
    loss_sum = step == 1 ? kl : t.add(loss_sum, kl);

    // Regret observation, mirroring the per-infostate minimizer.
    Array expected = t.row_sum(t.mul(sigma, x));
    Array r = t.mul(mask, t.sub(x, t.broadcast(expected, S, A)));
    Array r_new = t.add(R, r);
    if (plus) r_new = t.positive_part(r_new);
    const int acting = plus ? (step - 1) % P : -1;
    Array R_next = plus ? t.add(t.mul(act_mask_a[acting], r_new), t.mul(hold_mask_a[acting], R))
                        : r_new;

    // Prediction for the next step: the recurrent head reads the instant
    // regret and the post-update cumulative regret.
    Array input = t.concat(t.concat(r, R_next), embeds);
    TapeLstmState fresh = state;
    Array out = t.mul(mask, predictor_forward(t, tp, input, fresh));
    Array pred_new = pp.form == PredictionForm::kResidual ? t.scale(t.add(r, out), alpha)
                                                          : t.scale(out, alpha);
    if (plus) {
      state.h1 = t.add(t.mul(act_mask_h[acting], fresh.h1), t.mul(hold_mask_h[acting], state.h1));
      state.c1 = t.add(t.mul(act_mask_h[acting], fresh.c1), t.mul(hold_mask_h[acting], state.c1));
      state.h2 = t.add(t.mul(act_mask_h[acting], fresh.h2), t.mul(hold_mask_h[acting], state.h2));
      state.c2 = t.add(t.mul(act_mask_h[acting], fresh.c2), t.mul(hold_mask_h[acting], state.c2));
      pred = t.add(t.mul(act_mask_a[acting], pred_new), t.mul(hold_mask_a[acting], pred));
    } else {
      state = fresh;
      pred = pred_new;
    }
    R = R_next;
  }

  return t.scale(loss_sum, 1.0 / static_cast<double>(steps));
}

TrainResult train(const TrainConfig& cfg) {
  validate_train_config(cfg);
  TrainResult result;
  result.params = make_family_predictor(cfg);
  std::vector<double> flat = flatten_parameters(result.params);

  AdamState opt;
  opt.lr = cfg.lr;
  opt.beta1 = cfg.beta1;
  opt.beta2 = cfg.beta2;
  opt.epsilon = cfg.epsilon;
  opt.weight_decay = cfg.weight_decay;
  opt.init(flat.size());

  const int report_every = std::max(1, cfg.epochs / 32);
  result.epoch_loss.reserve(cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<double> grad(flat.size(), 0.0);
    double loss_acc = 0.0;
    for (int b = 0; b < cfg.games_per_batch; ++b) {
      std::mt19937_64 game_rng = make_stream(
          cfg.seed, "train_game",
          static_cast<uint64_t>(epoch) * static_cast<uint64_t>(cfg.games_per_batch) + b);
      SampledGame sample = sample_game(cfg.distribution, game_rng);

      Tape tape;
      TapePredictor tp = load_predictor(tape, result.params);
      Array loss = unrolled_meta_loss(tape, tp, sample.game, cfg.unroll_steps, cfg.algorithm);
      const double lv = tape.value(loss)[0];
      if (!std::isfinite(lv))
        throw NumericDomainError(
            "meta-loss is not finite at epoch " + std::to_string(epoch) + ", game " +
            std::to_string(b) + " (" + family_name(cfg.distribution.family) +
            " param=" + std::to_string(sample.param) + "); aborting before the optimizer step");
      loss_acc += lv;
      tape.backward(loss);
      std::vector<double> g = collect_predictor_grad(tape, tp);
      for (size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
    }
    const double inv_batch = 1.0 / static_cast<double>(cfg.games_per_batch);
    for (double& v : grad) v *= inv_batch;
    adam_step(opt, flat, grad);
    load_parameters(result.params, flat);
    result.epoch_loss.push_back(loss_acc * inv_batch);
    if (cfg.verbose && (epoch % report_every == 0 || epoch + 1 == cfg.epochs))
      std::fprintf(stderr, "epoch %4d  meta-loss %.6e\n", epoch, result.epoch_loss.back());
  }
  return result;
}

}  // namespace regretforge
