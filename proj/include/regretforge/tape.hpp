#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "regretforge/game.hpp"
#include "regretforge/walk.hpp"

namespace regretforge {

// Reverse-mode autodiff over dense row-major double matrices.
//
// Nodes live in an arena owned by the tape and an Array is just an index into
// it. Construction order is already topological, so backward is one reverse
// scan, and a value reused by several consumers accumulates gradient by
// summation. Everything is double precision and single-threaded; run
// independent tapes in parallel instead of sharing one.
//
// The op set is deliberately small: elementwise arithmetic, matmul, shape
// plumbing, the clamps and links a regret-matching solver needs
// (positive_part, normalize_simplex, softmax, safe_log), and one fused
// operation wrapping a full game-tree traversal so a solver step can sit on
// the tape without per-tree-node graph overhead.

struct Array {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves. Inputs are tracked (their gradients are readable after backward),
  // constants are not.
  Array input(int rows, int cols, std::span<const double> data);
  Array constant(int rows, int cols, std::span<const double> data);
  Array constant_fill(int rows, int cols, double value);

  // Elementwise arithmetic on equal shapes.
  Array add(Array a, Array b);
  Array sub(Array a, Array b);
  Array mul(Array a, Array b);
  Array div(Array a, Array b);

  // [m x k] * [k x n] -> [m x n].
  Array matmul(Array a, Array b);

  // Reductions. sum and mean collapse everything to 1x1; row_sum keeps rows.
  Array sum(Array a);
  Array mean(Array a);
  Array row_sum(Array a);

  // Shape plumbing.
  Array concat(Array a, Array b);  // columns, equal row counts
  Array gather(Array table, std::vector<int> row_indices);
  Array broadcast(Array a, int rows, int cols);  // from 1x1, 1xn or mx1
  Array transpose(Array a);
  Array reshape(Array a, int rows, int cols);
  Array slice_cols(Array a, int begin, int count);
  Array scale(Array a, double factor);

  // Elementwise nonlinearities. positive_part uses subgradient 0 at exactly
  // 0. safe_log floors nonnegative inputs at 1e-12 (bumping the shared
  // diagnostics counter, zero gradient on floored entries) and throws
  // NumericDomainError on negative input.
  Array positive_part(Array a);
  Array tanh(Array a);
  Array sigmoid(Array a);
  Array exp(Array a);
  Array safe_log(Array a);

  // Row-wise simplex projection y = x / sum(x) for nonnegative x. A row whose
  // mass is <= 0 falls back to uniform and propagates zero gradient. The
  // counts overload treats only the first counts[i] columns of row i as live
  // actions: the fallback spreads over those and padding stays zero.
  Array normalize_simplex(Array a);
  Array normalize_simplex(Array a, std::vector<int> counts);

  // Row-wise max-subtracted softmax.
  Array softmax(Array a);

  // Fused game traversal. sigma is the padded [num_infostates x max_actions]
  // behavior profile; the result is a single row holding the per-player
  // terminal contributions d_i(z) (players*terminals entries, player-major)
  // followed by the padded counterfactual rewards (infostates*max_actions).
  // Slice and reshape to taste. The referenced game must outlive the tape.
  Array cfr_walk(const GameTree& g, Array sigma);

  // Reverse sweep from a scalar loss. Call once; the op graph is released
  // afterwards (values and gradients stay readable).
  void backward(Array loss);

  int rows(Array a) const;
  int cols(Array a) const;
  std::span<const double> value(Array a) const;
  std::span<const double> grad(Array a) const;  // tracked arrays, after backward

  size_t num_nodes() const;

 private:
  struct Node;
  struct WalkAux;

  Array push(Node&& n);
  const Node& at(Array a) const;
  Node& at(Array a);
  void check_open(const char* op) const;

  std::vector<Node> nodes_;
  std::vector<std::unique_ptr<WalkAux>> walks_;
  bool finished_ = false;
};

// Central-difference gradient of a scalar function, for checking backward
// passes. Returns one derivative per coordinate of x.
std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                const std::vector<double>& x, double h = 1e-5);

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor). The unit floor keeps
// finite-difference noise on near-zero coordinates from dominating.
double max_rel_error(std::span<const double> a, std::span<const double> b, double floor = 1.0);

}  // namespace regretforge
