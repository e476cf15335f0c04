#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "regretforge/game.hpp"
#include "regretforge/minimizer.hpp"
#include "regretforge/predictor.hpp"
#include "regretforge/tape.hpp"
#include "regretforge/tape_lstm.hpp"

namespace regretforge {

// Game families the meta-learner trains and evaluates over. Every sample from
// a family shares one tree structure (so infostate embeddings line up); only
// the payoffs and the recorded parameter vary.
enum class GameFamily : uint8_t { kBiasedShapley, kBiasedLeduc2p, kLeduc3p };

GameFamily parse_family(const std::string& name);
std::string family_name(GameFamily family);

struct GameDistribution {
  GameFamily family = GameFamily::kBiasedShapley;
  // Parameter range: eta for the Shapley family, beta for two-player poker.
  // The three-player family is a point mass and ignores the range.
  double low = 0.0;
  double high = 0.5;
};

struct SampledGame {
  GameTree game;
  double param = 0.0;
};

SampledGame sample_game(const GameDistribution& dist, std::mt19937_64& rng);

// The family's shared structure (an arbitrary parameter value), for sizing
// predictors and preallocating buffers.
GameTree family_prototype(GameFamily family);

struct TrainConfig {
  GameDistribution distribution;
  Algorithm algorithm = Algorithm::kNpcfr;  // a neural tag
  int unroll_steps = 32;
  int epochs = 256;
  int games_per_batch = 8;
  uint64_t seed = 1;
  int hidden = 32;
  int embed_dim = 8;
  // Head activation and output scale; unset picks the family default
  // (sigmoid with alpha 3 for the Shapley family, tanh with alpha 1 for the
  // poker families). Smaller alphas on the Shapley family tend to train into
  // predictors that only stabilize the dynamics for the unroll horizon.
  std::optional<HeadKind> head;
  std::optional<double> alpha;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  bool verbose = false;
};

HeadKind resolved_head(const TrainConfig& cfg);
double resolved_alpha(const TrainConfig& cfg);

// The configuration as JSON, used for the checkpoint's training echo.
nlohmann::json train_config_echo(const TrainConfig& cfg);

// A freshly initialized predictor sized for the family's shared structure.
PredictorParams make_family_predictor(const TrainConfig& cfg);

struct TrainResult {
  PredictorParams params;
  std::vector<double> epoch_loss;  // batch-mean meta-loss per epoch
};

// Builds the whole T-step predictive solve of `algorithm` on `g` as one tape
// graph and returns the meta-loss: the mean over steps of the prefix
// marginalizability. Mirrors the double-precision solver step for step, so
// the gradient is exactly the meta-gradient of what a solve would report.
Array unrolled_meta_loss(Tape& t, const TapePredictor& predictor, const GameTree& g, int steps,
                         Algorithm algorithm);

// The meta-training loop: per epoch, sample a batch of games, roll each out
// on its own tape, average the gradients in batch order and take one Adam
// step. A non-finite loss aborts with a diagnostics message.
TrainResult train(const TrainConfig& cfg);

}  // namespace regretforge
