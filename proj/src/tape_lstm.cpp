#include "regretforge/tape_lstm.hpp"

#include "regretforge/errors.hpp"

namespace regretforge {

namespace {

TapeLstmLayer load_layer(Tape& t, int hidden, int in, const std::vector<double>& wx,
                         const std::vector<double>& wh, const std::vector<double>& b) {
  TapeLstmLayer layer;
  layer.hidden = hidden;
  layer.wx = t.input(4 * hidden, in, wx);
  layer.wh = t.input(4 * hidden, hidden, wh);
  layer.b = t.input(1, 4 * hidden, b);
  layer.wx_t = t.transpose(layer.wx);
  layer.wh_t = t.transpose(layer.wh);
  return layer;
}

}  // namespace

TapePredictor load_predictor(Tape& t, const PredictorParams& params) {
  if (params.hidden <= 0 || params.max_actions <= 0)
    throw ContractViolation("load_predictor: predictor has no allocated shape");
  TapePredictor p;
  p.params = &params;
  p.embed = t.input(params.num_embeddings, params.embed_dim, params.embed);
  p.l1 = load_layer(t, params.hidden, params.input_dim(), params.l1_wx, params.l1_wh, params.l1_b);
  p.l2 = load_layer(t, params.hidden, params.hidden, params.l2_wx, params.l2_wh, params.l2_b);
  p.head_w = t.input(params.max_actions, params.hidden, params.head_w);
  p.head_b = t.input(1, params.max_actions, params.head_b);
  p.head_w_t = t.transpose(p.head_w);
  return p;
}

TapeLstmState zero_lstm_state(Tape& t, int rows, int hidden) {
  TapeLstmState s;
  s.h1 = t.constant_fill(rows, hidden, 0.0);
  s.c1 = t.constant_fill(rows, hidden, 0.0);
  s.h2 = t.constant_fill(rows, hidden, 0.0);
  s.c2 = t.constant_fill(rows, hidden, 0.0);
  return s;
}

std::pair<Array, Array> lstm_cell(Tape& t, const TapeLstmLayer& layer, Array x, Array h, Array c) {
  const int rows = t.rows(x);
  const int hidden = layer.hidden;
  Array z = t.add(t.add(t.matmul(x, layer.wx_t), t.matmul(h, layer.wh_t)),
                  t.broadcast(layer.b, rows, 4 * hidden));
  Array gi = t.sigmoid(t.slice_cols(z, 0, hidden));
  Array gf = t.sigmoid(t.slice_cols(z, hidden, hidden));
  Array gc = t.tanh(t.slice_cols(z, 2 * hidden, hidden));
  Array go = t.sigmoid(t.slice_cols(z, 3 * hidden, hidden));
  Array c_next = t.add(t.mul(gf, c), t.mul(gi, gc));
  Array h_next = t.mul(go, t.tanh(c_next));
  return {h_next, c_next};
}

Array predictor_forward(Tape& t, const TapePredictor& p, Array input, TapeLstmState& state) {
  auto [h1, c1] = lstm_cell(t, p.l1, input, state.h1, state.c1);
  auto [h2, c2] = lstm_cell(t, p.l2, h1, state.h2, state.c2);
  state.h1 = h1;
  state.c1 = c1;
  state.h2 = h2;
  state.c2 = c2;
  const int rows = t.rows(input);
  Array pre = t.add(t.matmul(h2, p.head_w_t), t.broadcast(p.head_b, rows, p.params->max_actions));
  return p.params->head == HeadKind::kSigmoid ? t.sigmoid(pre) : t.tanh(pre);
}

std::vector<Array> stacked_forward(Tape& t, const TapePredictor& p,
                                   const std::vector<Array>& inputs) {
  if (inputs.empty()) throw ContractViolation("stacked_forward: empty input sequence");
  TapeLstmState state = zero_lstm_state(t, t.rows(inputs.front()), p.params->hidden);
  std::vector<Array> outputs;
  outputs.reserve(inputs.size());
  for (Array x : inputs) outputs.push_back(predictor_forward(t, p, x, state));
  return outputs;
}

std::vector<double> collect_predictor_grad(const Tape& t, const TapePredictor& p) {
  const Array order[] = {p.embed,  p.l1.wx, p.l1.wh, p.l1.b,   p.l2.wx,
                         p.l2.wh,  p.l2.b,  p.head_w, p.head_b};
  std::vector<double> flat;
  for (Array a : order) {
    auto g = t.grad(a);
    flat.insert(flat.end(), g.begin(), g.end());
  }
  return flat;
}

}  // namespace regretforge
