#include "regretforge/predictor.hpp"

#include <algorithm>
#include <cmath>

#include "regretforge/errors.hpp"
#include "regretforge/rng.hpp"

namespace regretforge {

HeadKind parse_head(const std::string& name) {
  if (name == "tanh") return HeadKind::kTanh;
  if (name == "sigmoid") return HeadKind::kSigmoid;
  throw ConfigError("head", "unknown head activation '" + name + "'");
}

std::string head_name(HeadKind head) { return head == HeadKind::kTanh ? "tanh" : "sigmoid"; }

PredictionForm parse_form(const std::string& name) {
  if (name == "residual") return PredictionForm::kResidual;
  if (name == "direct") return PredictionForm::kDirect;
  throw ConfigError("form", "unknown prediction form '" + name + "'");
}

std::string form_name(PredictionForm form) {
  return form == PredictionForm::kResidual ? "residual" : "direct";
}

std::vector<PredictorParams::ArrayRef> PredictorParams::arrays() {
  return {
      {"embed", &embed, num_embeddings, embed_dim},
      {"l1_wx", &l1_wx, 4 * hidden, input_dim()},
      {"l1_wh", &l1_wh, 4 * hidden, hidden},
      {"l1_b", &l1_b, 1, 4 * hidden},
      {"l2_wx", &l2_wx, 4 * hidden, hidden},
      {"l2_wh", &l2_wh, 4 * hidden, hidden},
      {"l2_b", &l2_b, 1, 4 * hidden},
      {"head_w", &head_w, max_actions, hidden},
      {"head_b", &head_b, 1, max_actions},
  };
}

void PredictorParams::resize_arrays() {
  for (auto& a : arrays()) a.data->assign(static_cast<size_t>(a.rows) * a.cols, 0.0);
}

int64_t PredictorParams::num_parameters() const {
  int64_t n = 0;
  for (auto& a : const_cast<PredictorParams*>(this)->arrays())
    n += static_cast<int64_t>(a.rows) * a.cols;
  return n;
}

PredictorParams make_predictor(int max_actions, int embed_dim, int hidden, int num_embeddings,
                               HeadKind head, double alpha) {
  if (max_actions < 1 || hidden < 1 || embed_dim < 0 || num_embeddings < 1)
    throw ConfigError("predictor", "invalid predictor dimensions");
  PredictorParams p;
  p.max_actions = max_actions;
  p.embed_dim = embed_dim;
  p.hidden = hidden;
  p.num_embeddings = num_embeddings;
  p.head = head;
  p.alpha = alpha;
  p.resize_arrays();
  return p;
}

std::vector<double> flatten_parameters(PredictorParams& params) {
  std::vector<double> flat;
  flat.reserve(static_cast<size_t>(params.num_parameters()));
  for (auto& a : params.arrays()) flat.insert(flat.end(), a.data->begin(), a.data->end());
  return flat;
}

void load_parameters(PredictorParams& params, std::span<const double> flat) {
  if (flat.size() != static_cast<size_t>(params.num_parameters()))
    throw ContractViolation("load_parameters: flat vector does not match the parameter count");
  size_t off = 0;
  for (auto& a : params.arrays()) {
    std::copy(flat.begin() + off, flat.begin() + off + a.data->size(), a.data->begin());
    off += a.data->size();
  }
}

void init_predictor(PredictorParams& params, std::mt19937_64& rng) {
  const double k = 1.0 / std::sqrt(static_cast<double>(params.hidden));
  for (auto& a : params.arrays()) {
    const double scale = a.data == &params.embed ? 1.0 : k;
    for (double& v : *a.data) v = uniform_in(rng, -scale, scale);
  }
}

namespace {

inline double stable_sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// y = W x + U h + b, one LSTM layer step updating h and c in place.
void lstm_cell(const std::vector<double>& wx, const std::vector<double>& wh,
               const std::vector<double>& b, const double* x, int in_dim, double* h, double* c,
               int hidden, std::vector<double>& gates) {
  gates.assign(static_cast<size_t>(4) * hidden, 0.0);
  for (int g = 0; g < 4 * hidden; ++g) {
    double acc = b[g];
    const double* wrow = &wx[static_cast<size_t>(g) * in_dim];
    for (int j = 0; j < in_dim; ++j) acc += wrow[j] * x[j];
    const double* urow = &wh[static_cast<size_t>(g) * hidden];
    for (int j = 0; j < hidden; ++j) acc += urow[j] * h[j];
    gates[g] = acc;
  }
  for (int j = 0; j < hidden; ++j) {
    const double i = stable_sigmoid(gates[j]);
    const double f = stable_sigmoid(gates[hidden + j]);
    const double g = std::tanh(gates[2 * hidden + j]);
    const double o = stable_sigmoid(gates[3 * hidden + j]);
    c[j] = f * c[j] + i * g;
    h[j] = o * std::tanh(c[j]);
  }
}

}  // namespace

void predictor_step(const PredictorParams& params, const double* r, const double* R,
                    int num_actions, int embed_index, double* h1, double* c1, double* h2,
                    double* c2, double* out) {
  if (num_actions > params.max_actions)
    throw ContractViolation("infostate has more actions than the predictor supports");
  if (embed_index < 0 || embed_index >= params.num_embeddings)
    throw ContractViolation("embedding index out of range");
  const int ma = params.max_actions;
  const int hid = params.hidden;
  std::vector<double> x(params.input_dim(), 0.0);
  for (int a = 0; a < num_actions; ++a) {
    x[a] = r[a];
    x[ma + a] = R[a];
  }
  for (int e = 0; e < params.embed_dim; ++e)
    x[2 * ma + e] = params.embed[static_cast<size_t>(embed_index) * params.embed_dim + e];

  std::vector<double> gates;
  lstm_cell(params.l1_wx, params.l1_wh, params.l1_b, x.data(), params.input_dim(), h1, c1, hid,
            gates);
  lstm_cell(params.l2_wx, params.l2_wh, params.l2_b, h1, hid, h2, c2, hid, gates);

  for (int a = 0; a < num_actions; ++a) {
    double acc = params.head_b[a];
    const double* wrow = &params.head_w[static_cast<size_t>(a) * hid];
    for (int j = 0; j < hid; ++j) acc += wrow[j] * h2[j];
    out[a] = params.head == HeadKind::kTanh ? std::tanh(acc) : stable_sigmoid(acc);
  }
}

}  // namespace regretforge
