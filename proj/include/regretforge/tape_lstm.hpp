#pragma once

#include <utility>
#include <vector>

#include "regretforge/predictor.hpp"
#include "regretforge/tape.hpp"

namespace regretforge {

// The recurrent predictor expressed as tape graphs, batched over rows (one
// row per infostate). Mirrors the scalar predictor_step math: two LSTM layers
// with gate order input, forget, cell, output, then a bounded linear head.

// One LSTM layer's weights on the tape, kept in the canonical [4*hidden x in]
// row-major layout so gradients read back in the same shape the optimizer and
// the checkpoint use. The transposed copies are tape nodes reused per step.
struct TapeLstmLayer {
  int hidden = 0;
  Array wx;    // [4H x in]
  Array wh;    // [4H x H]
  Array b;     // [1 x 4H]
  Array wx_t;  // transpose(wx), built once
  Array wh_t;  // transpose(wh)
};

// Full predictor loaded onto a tape as tracked inputs, in arrays() order.
struct TapePredictor {
  const PredictorParams* params = nullptr;
  Array embed;   // [num_embeddings x embed_dim]
  TapeLstmLayer l1;
  TapeLstmLayer l2;
  Array head_w;    // [max_actions x hidden]
  Array head_b;    // [1 x max_actions]
  Array head_w_t;  // transpose(head_w)
};

struct TapeLstmState {
  Array h1, c1, h2, c2;  // each [rows x hidden]
};

TapePredictor load_predictor(Tape& t, const PredictorParams& params);

TapeLstmState zero_lstm_state(Tape& t, int rows, int hidden);

// One gated recurrence step for a batch: x is [rows x in]. Returns (h', c').
std::pair<Array, Array> lstm_cell(Tape& t, const TapeLstmLayer& layer, Array x, Array h, Array c);

// Both layers plus the head for one step. input is [rows x input_dim]
// (instant regret, cumulative regret, embedding, zero-padded); the result is
// the head activation per action, [rows x max_actions], not yet scaled by
// alpha or masked. Updates the state in place.
Array predictor_forward(Tape& t, const TapePredictor& p, Array input, TapeLstmState& state);

// Convenience for whole sequences: runs predictor_forward over each input in
// order from a zero state and returns the per-step head outputs.
std::vector<Array> stacked_forward(Tape& t, const TapePredictor& p,
                                   const std::vector<Array>& inputs);

// Collects grad(every predictor array) into one flat vector in arrays()
// order, matching the layout adam_step expects. Call after t.backward().
std::vector<double> collect_predictor_grad(const Tape& t, const TapePredictor& p);

}  // namespace regretforge
