#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace regretforge {

enum class HeadKind : uint8_t { kTanh, kSigmoid };

HeadKind parse_head(const std::string& name);
std::string head_name(HeadKind head);

// How a head output pi turns into the prediction fed to the regret matcher:
// residual adds it to the instant regret, alpha * (r + pi); direct uses
// alpha * pi alone. The plain neural tag uses residual, the plus tag direct.
enum class PredictionForm : uint8_t { kResidual, kDirect };

PredictionForm parse_form(const std::string& name);
std::string form_name(PredictionForm form);

// Two-layer LSTM over per-infostate inputs [instant regret, cumulative
// regret, infostate embedding], with a bounded linear head per action and a
// scalar output scale. Weights live in flat row-major arrays; gate order is
// input, forget, cell, output.
struct PredictorParams {
  int max_actions = 0;
  int embed_dim = 0;
  int hidden = 0;
  int num_embeddings = 0;
  HeadKind head = HeadKind::kTanh;
  PredictionForm form = PredictionForm::kResidual;
  double alpha = 1.0;

  int input_dim() const { return 2 * max_actions + embed_dim; }

  std::vector<double> embed;    // [num_embeddings x embed_dim]
  std::vector<double> l1_wx;    // [4*hidden x input_dim]
  std::vector<double> l1_wh;    // [4*hidden x hidden]
  std::vector<double> l1_b;     // [4*hidden]
  std::vector<double> l2_wx;    // [4*hidden x hidden]
  std::vector<double> l2_wh;    // [4*hidden x hidden]
  std::vector<double> l2_b;     // [4*hidden]
  std::vector<double> head_w;   // [max_actions x hidden]
  std::vector<double> head_b;   // [max_actions]

  // Named views over every weight array, in a fixed order shared by the
  // checkpoint format, the flat optimizer state and the training tape.
  struct ArrayRef {
    const char* name;
    std::vector<double>* data;
    int rows;
    int cols;
  };
  std::vector<ArrayRef> arrays();

  void resize_arrays();  // allocates zero-filled arrays from the dims
  int64_t num_parameters() const;
};

PredictorParams make_predictor(int max_actions, int embed_dim, int hidden, int num_embeddings,
                               HeadKind head, double alpha);

// Concatenation of every weight array in arrays() order, and its inverse.
// This is the layout shared by the flat optimizer state and gradient vectors.
std::vector<double> flatten_parameters(PredictorParams& params);
void load_parameters(PredictorParams& params, std::span<const double> flat);

// Uniform [-k, k] init with k = 1/sqrt(hidden), embeddings k = 1.
void init_predictor(PredictorParams& params, std::mt19937_64& rng);

// One recurrent step for one infostate. r and R have num_actions entries;
// h1/c1/h2/c2 have hidden entries and are updated in place. Writes the first
// num_actions head outputs (activation applied, not yet scaled by alpha).
void predictor_step(const PredictorParams& params, const double* r, const double* R,
                    int num_actions, int embed_index, double* h1, double* c1, double* h2,
                    double* c2, double* out);

}  // namespace regretforge
