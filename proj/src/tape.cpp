#include "regretforge/tape.hpp"

#include <cmath>
#include <cstddef>
#include <string>

#include "regretforge/errors.hpp"
#include "regretforge/numerics.hpp"

namespace regretforge {

namespace {

enum class Op : uint8_t {
  kInput,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kMatmul,
  kSum,
  kMean,
  kRowSum,
  kConcat,
  kGather,
  kBroadcast,
  kTranspose,
  kReshape,
  kSliceCols,
  kScale,
  kPositivePart,
  kTanh,
  kSigmoid,
  kExp,
  kSafeLog,
  kNormalizeSimplex,
  kSoftmax,
  kCfrWalk,
};

}  // namespace

struct Tape::Node {
  Op op = Op::kConstant;
  int rows = 0;
  int cols = 0;
  int a = -1;
  int b = -1;
  int p0 = 0;          // op-specific int (slice begin, walk index, ...)
  double factor = 0;   // for kScale
  bool needs_grad = false;
  std::vector<int> idx;  // gather rows / normalize counts
  std::vector<double> value;
  std::vector<double> grad;

  size_t size() const { return static_cast<size_t>(rows) * cols; }
};

struct Tape::WalkAux {
  const GameTree* game = nullptr;
  WalkResult rec;
};

Tape::Tape() = default;
Tape::~Tape() = default;

Array Tape::push(Node&& n) {
  nodes_.push_back(std::move(n));
  return Array{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::at(Array a) const {
  if (a.id < 0 || a.id >= static_cast<int>(nodes_.size()))
    throw ContractViolation("array handle does not belong to this tape");
  return nodes_[a.id];
}

Tape::Node& Tape::at(Array a) { return const_cast<Node&>(static_cast<const Tape&>(*this).at(a)); }

void Tape::check_open(const char* op) const {
  if (finished_)
    throw ContractViolation(std::string(op) + ": tape already swept, build a fresh one");
}

int Tape::rows(Array a) const { return at(a).rows; }
int Tape::cols(Array a) const { return at(a).cols; }

std::span<const double> Tape::value(Array a) const {
  const Node& n = at(a);
  return {n.value.data(), n.value.size()};
}

std::span<const double> Tape::grad(Array a) const {
  const Node& n = at(a);
  if (!n.needs_grad)
    throw ContractViolation("gradient requested for an untracked (constant) array");
  if (!finished_)
    throw ContractViolation("gradient requested before backward");
  return {n.grad.data(), n.grad.size()};
}

size_t Tape::num_nodes() const { return nodes_.size(); }

namespace {

void check_shape(int rows, int cols) {
  if (rows <= 0 || cols <= 0)
    throw ContractViolation("array dimensions must be positive");
}

}  // namespace

Array Tape::input(int rows, int cols, std::span<const double> data) {
  check_open("input");
  check_shape(rows, cols);
  if (data.size() != static_cast<size_t>(rows) * cols)
    throw ContractViolation("input data length does not match its shape");
  Node n;
  n.op = Op::kInput;
  n.rows = rows;
  n.cols = cols;
  n.needs_grad = true;
  n.value.assign(data.begin(), data.end());
  return push(std::move(n));
}

Array Tape::constant(int rows, int cols, std::span<const double> data) {
  check_open("constant");
  check_shape(rows, cols);
  if (data.size() != static_cast<size_t>(rows) * cols)
    throw ContractViolation("constant data length does not match its shape");
  Node n;
  n.op = Op::kConstant;
  n.rows = rows;
  n.cols = cols;
  n.value.assign(data.begin(), data.end());
  return push(std::move(n));
}

Array Tape::constant_fill(int rows, int cols, double value) {
  check_open("constant_fill");
  check_shape(rows, cols);
  Node n;
  n.op = Op::kConstant;
  n.rows = rows;
  n.cols = cols;
  n.value.assign(static_cast<size_t>(rows) * cols, value);
  return push(std::move(n));
}

namespace {

const char* op_label(Op op) {
  switch (op) {
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    default: return "elementwise op";
  }
}

}  // namespace

Array Tape::add(Array a, Array b) {
  check_open("add");
  const Node& x = at(a);
  const Node& y = at(b);
  if (x.rows != y.rows || x.cols != y.cols)
    throw ContractViolation(std::string(op_label(Op::kAdd)) + ": shape mismatch");
  Node n;
  n.op = Op::kAdd;
  n.rows = x.rows;
  n.cols = x.cols;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = x.needs_grad || y.needs_grad;
  n.value.resize(x.size());
  for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = x.value[i] + y.value[i];
  return push(std::move(n));
}

Array Tape::sub(Array a, Array b) {
  check_open("sub");
  const Node& x = at(a);
  const Node& y = at(b);
  if (x.rows != y.rows || x.cols != y.cols)
    throw ContractViolation(std::string(op_label(Op::kSub)) + ": shape mismatch");
  Node n;
  n.op = Op::kSub;
  n.rows = x.rows;
  n.cols = x.cols;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = x.needs_grad || y.needs_grad;
  n.value.resize(x.size());
  for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = x.value[i] - y.value[i];
  return push(std::move(n));
}

Array Tape::mul(Array a, Array b) {
  check_open("mul");
  const Node& x = at(a);
  const Node& y = at(b);
  if (x.rows != y.rows || x.cols != y.cols)
    throw ContractViolation(std::string(op_label(Op::kMul)) + ": shape mismatch");
  Node n;
  n.op = Op::kMul;
  n.rows = x.rows;
  n.cols = x.cols;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = x.needs_grad || y.needs_grad;
  n.value.resize(x.size());
  for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = x.value[i] * y.value[i];
  return push(std::move(n));
}

Array Tape::div(Array a, Array b) {
  check_open("div");
  const Node& x = at(a);
  const Node& y = at(b);
  if (x.rows != y.rows || x.cols != y.cols)
    throw ContractViolation(std::string(op_label(Op::kDiv)) + ": shape mismatch");
  Node n;
  n.op = Op::kDiv;
  n.rows = x.rows;
  n.cols = x.cols;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = x.needs_grad || y.needs_grad;
  n.value.resize(x.size());
  for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = x.value[i] / y.value[i];
  return push(std::move(n));
}

Array Tape::matmul(Array a, Array b) {
  check_open("matmul");
  const Node& x = at(a);
  const Node& y = at(b);
  if (x.cols != y.rows) throw ContractViolation("matmul: inner dimensions disagree");
  Node n;
  n.op = Op::kMatmul;
  n.rows = x.rows;
  n.cols = y.cols;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = x.needs_grad || y.needs_grad;
  n.value.assign(n.size(), 0.0);
  const int m = x.rows, k = x.cols, c = y.cols;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < c; ++j) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += x.value[i * k + t] * y.value[t * c + j];
      n.value[i * c + j] = acc;
    }
  return push(std::move(n));
}

Array Tape::sum(Array a) {
  check_open("sum");
  const Node& x = at(a);
  Node n;
  n.op = Op::kSum;
  n.rows = 1;
  n.cols = 1;
  n.a = a.id;
  n.needs_grad = x.needs_grad;
  double acc = 0.0;
  for (double v : x.value) acc += v;
  n.value = {acc};
  return push(std::move(n));
}

Array Tape::mean(Array a) {
  check_open("mean");
  const Node& x = at(a);
  Node n;
  n.op = Op::kMean;
  n.rows = 1;
  n.cols = 1;
  n.a = a.id;
  n.needs_grad = x.needs_grad;
  double acc = 0.0;
  for (double v : x.value) acc += v;
  n.value = {acc / static_cast<double>(x.size())};
  return push(std::move(n));
}

Array Tape::row_sum(Array a) {
  check_open("row_sum");
  const Node& x = at(a);
  Node n;
  n.op = Op::kRowSum;
  n.rows = x.rows;
  n.cols = 1;
  n.a = a.id;
  n.needs_grad = x.needs_grad;
  n.value.assign(x.rows, 0.0);
  for (int i = 0; i < x.rows; ++i) {
    double acc = 0.0;
    for (int j = 0; j < x.cols; ++j) acc += x.value[static_cast<size_t>(i) * x.cols + j];
    n.value[i] = acc;
  }
  return push(std::move(n));
}

Array Tape::concat(Array a, Array b) {
  check_open("concat");
  const Node& x = at(a);
  const Node& y = at(b);
  if (x.rows != y.rows) throw ContractViolation("concat: row counts disagree");
  Node n;
  n.op = Op::kConcat;
  n.rows = x.rows;
  n.cols = x.cols + y.cols;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = x.needs_grad || y.needs_grad;
  n.value.resize(n.size());
  for (int i = 0; i < n.rows; ++i) {
    for (int j = 0; j < x.cols; ++j)
      n.value[static_cast<size_t>(i) * n.cols + j] = x.value[static_cast<size_t>(i) * x.cols + j];
    for (int j = 0; j < y.cols; ++j)
      n.value[static_cast<size_t>(i) * n.cols + x.cols + j] =
          y.value[static_cast<size_t>(i) * y.cols + j];
  }
  return push(std::move(n));
}

Array Tape::gather(Array table, std::vector<int> row_indices) {
  check_open("gather");
  const Node& x = at(table);
  if (row_indices.empty()) throw ContractViolation("gather: empty index list");
  for (int r : row_indices)
    if (r < 0 || r >= x.rows) throw ContractViolation("gather: row index out of range");
  Node n;
  n.op = Op::kGather;
  n.rows = static_cast<int>(row_indices.size());
  n.cols = x.cols;
  n.a = table.id;
  n.needs_grad = x.needs_grad;
  n.idx = std::move(row_indices);
  n.value.resize(n.size());
  for (int i = 0; i < n.rows; ++i)
    for (int j = 0; j < n.cols; ++j)
      n.value[static_cast<size_t>(i) * n.cols + j] =
          x.value[static_cast<size_t>(n.idx[i]) * x.cols + j];
  return push(std::move(n));
}

Array Tape::broadcast(Array a, int rows, int cols) {
  check_open("broadcast");
  check_shape(rows, cols);
  const Node& x = at(a);
  const bool from_scalar = x.rows == 1 && x.cols == 1;
  const bool from_row = x.rows == 1 && x.cols == cols;
  const bool from_col = x.cols == 1 && x.rows == rows;
  if (!from_scalar && !from_row && !from_col)
    throw ContractViolation("broadcast: source must be 1x1, a matching row or a matching column");
  Node n;
  n.op = Op::kBroadcast;
  n.rows = rows;
  n.cols = cols;
  n.a = a.id;
  n.needs_grad = x.needs_grad;
  n.value.resize(n.size());
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      double v;
      if (from_scalar)
        v = x.value[0];
      else if (from_row)
        v = x.value[j];
      else
        v = x.value[i];
      n.value[static_cast<size_t>(i) * cols + j] = v;
    }
  return push(std::move(n));
}

Array Tape::transpose(Array a) {
  check_open("transpose");
  const Node& x = at(a);
  Node n;
  n.op = Op::kTranspose;
  n.rows = x.cols;
  n.cols = x.rows;
  n.a = a.id;
  n.needs_grad = x.needs_grad;
  n.value.resize(x.size());
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j)
      n.value[static_cast<size_t>(j) * x.rows + i] = x.value[static_cast<size_t>(i) * x.cols + j];
  return push(std::move(n));
}

Array Tape::reshape(Array a, int rows, int cols) {
  check_open("reshape");
  check_shape(rows, cols);
  const Node& x = at(a);
  if (static_cast<size_t>(rows) * cols != x.size())
    throw ContractViolation("reshape: element count changes");
  Node n;
  n.op = Op::kReshape;
  n.rows = rows;
  n.cols = cols;
  n.a = a.id;
  n.needs_grad = x.needs_grad;
  n.value = x.value;
  return push(std::move(n));
}

Array Tape::slice_cols(Array a, int begin, int count) {
  check_open("slice_cols");
  const Node& x = at(a);
  if (begin < 0 || count <= 0 || begin + count > x.cols)
    throw ContractViolation("slice_cols: window out of range");
  Node n;
  n.op = Op::kSliceCols;
  n.rows = x.rows;
  n.cols = count;
  n.a = a.id;
  n.p0 = begin;
  n.needs_grad = x.needs_grad;
  n.value.resize(n.size());
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < count; ++j)
      n.value[static_cast<size_t>(i) * count + j] =
          x.value[static_cast<size_t>(i) * x.cols + begin + j];
  return push(std::move(n));
}

Array Tape::scale(Array a, double factor) {
  check_open("scale");
  const Node& x = at(a);
  Node n;
  n.op = Op::kScale;
  n.rows = x.rows;
  n.cols = x.cols;
  n.a = a.id;
  n.factor = factor;
  n.needs_grad = x.needs_grad;
  n.value.resize(x.size());
  for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = factor * x.value[i];
  return push(std::move(n));
}

Array Tape::positive_part(Array a) {
  check_open("positive_part");
  const Node& x = at(a);
  Node n;
  n.op = Op::kPositivePart;
  n.rows = x.rows;
  n.cols = x.cols;
  n.a = a.id;
  n.needs_grad = x.needs_grad;
  n.value.resize(x.size());
  for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = x.value[i] > 0.0 ? x.value[i] : 0.0;
  return push(std::move(n));
}

Array Tape::tanh(Array a) {
  check_open("tanh");
  const Node& x = at(a);
  Node n;
  n.op = Op::kTanh;
  n.rows = x.rows;
  n.cols = x.cols;
  n.a = a.id;
  n.needs_grad = x.needs_grad;
  n.value.resize(x.size());
  for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = std::tanh(x.value[i]);
  return push(std::move(n));
}

namespace {

double stable_sigmoid(double v) {
  if (v >= 0.0) {
    const double e = std::exp(-v);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Array Tape::sigmoid(Array a) {
  check_open("sigmoid");
  const Node& x = at(a);
  Node n;
  n.op = Op::kSigmoid;
  n.rows = x.rows;
  n.cols = x.cols;
  n.a = a.id;
  n.needs_grad = x.needs_grad;
  n.value.resize(x.size());
  for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = stable_sigmoid(x.value[i]);
  return push(std::move(n));
}

Array Tape::exp(Array a) {
  check_open("exp");
  const Node& x = at(a);
  Node n;
  n.op = Op::kExp;
  n.rows = x.rows;
  n.cols = x.cols;
  n.a = a.id;
  n.needs_grad = x.needs_grad;
  n.value.resize(x.size());
  for (size_t i = 0; i < n.value.size(); ++i) n.value[i] = std::exp(x.value[i]);
  return push(std::move(n));
}

Array Tape::safe_log(Array a) {
  check_open("safe_log");
  const Node& x = at(a);
  Node n;
  n.op = Op::kSafeLog;
  n.rows = x.rows;
  n.cols = x.cols;
  n.a = a.id;
  n.needs_grad = x.needs_grad;
  n.value.resize(x.size());
  for (size_t i = 0; i < n.value.size(); ++i)
    n.value[i] = regretforge::safe_log(x.value[i]);  // throws on negative, floors tiny
  return push(std::move(n));
}

Array Tape::normalize_simplex(Array a) { return normalize_simplex(a, std::vector<int>{}); }

Array Tape::normalize_simplex(Array a, std::vector<int> counts) {
  check_open("normalize_simplex");
  const Node& x = at(a);
  if (!counts.empty()) {
    if (static_cast<int>(counts.size()) != x.rows)
      throw ContractViolation("normalize_simplex: one action count per row required");
    for (int c : counts)
      if (c < 1 || c > x.cols) throw ContractViolation("normalize_simplex: count out of range");
  }
  Node n;
  n.op = Op::kNormalizeSimplex;
  n.rows = x.rows;
  n.cols = x.cols;
  n.a = a.id;
  n.needs_grad = x.needs_grad;
  n.idx = std::move(counts);
  n.value.assign(x.size(), 0.0);
  for (int i = 0; i < x.rows; ++i) {
    const int live = n.idx.empty() ? x.cols : n.idx[i];
    const size_t base = static_cast<size_t>(i) * x.cols;
    double mass = 0.0;
    for (int j = 0; j < live; ++j) mass += x.value[base + j];
    if (mass > 0.0) {
      for (int j = 0; j < live; ++j) n.value[base + j] = x.value[base + j] / mass;
    } else {
      const double u = 1.0 / live;
      for (int j = 0; j < live; ++j) n.value[base + j] = u;
    }
  }
  return push(std::move(n));
}

Array Tape::softmax(Array a) {
  check_open("softmax");
  const Node& x = at(a);
  Node n;
  n.op = Op::kSoftmax;
  n.rows = x.rows;
  n.cols = x.cols;
  n.a = a.id;
  n.needs_grad = x.needs_grad;
  n.value.resize(x.size());
  for (int i = 0; i < x.rows; ++i) {
    const size_t base = static_cast<size_t>(i) * x.cols;
    double hi = x.value[base];
    for (int j = 1; j < x.cols; ++j) hi = std::max(hi, x.value[base + j]);
    double mass = 0.0;
    for (int j = 0; j < x.cols; ++j) {
      n.value[base + j] = std::exp(x.value[base + j] - hi);
      mass += n.value[base + j];
    }
    for (int j = 0; j < x.cols; ++j) n.value[base + j] /= mass;
  }
  return push(std::move(n));
}

Array Tape::cfr_walk(const GameTree& g, Array sigma) {
  check_open("cfr_walk");
  const Node& x = at(sigma);
  if (x.rows != g.num_infostates() || x.cols != g.max_actions())
    throw ContractViolation("cfr_walk: sigma must be [num_infostates x max_actions]");
  auto aux = std::make_unique<WalkAux>();
  aux->game = &g;
  cfr_forward_walk(g, x.value, aux->rec);
  const int contrib_len = g.num_players() * g.num_terminals();
  const int reward_len = g.num_infostates() * g.max_actions();
  Node n;
  n.op = Op::kCfrWalk;
  n.rows = 1;
  n.cols = contrib_len + reward_len;
  n.a = sigma.id;
  n.p0 = static_cast<int>(walks_.size());
  n.needs_grad = x.needs_grad;
  n.value.resize(n.size());
  for (int i = 0; i < contrib_len; ++i) n.value[i] = aux->rec.player_contrib[i];
  for (int i = 0; i < reward_len; ++i) n.value[contrib_len + i] = aux->rec.cf_reward[i];
  walks_.push_back(std::move(aux));
  return push(std::move(n));
}

void Tape::backward(Array loss) {
  check_open("backward");
  const Node& top = at(loss);
  if (top.rows != 1 || top.cols != 1)
    throw ContractViolation("backward: loss must be a 1x1 scalar");
  if (!top.needs_grad)
    throw ContractViolation("backward: loss does not depend on any tracked input");

  for (Node& n : nodes_)
    if (n.needs_grad) n.grad.assign(n.size(), 0.0);
  nodes_[loss.id].grad[0] = 1.0;

  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.empty()) continue;
    Node* pa = n.a >= 0 ? &nodes_[n.a] : nullptr;
    Node* pb = n.b >= 0 ? &nodes_[n.b] : nullptr;
    const bool ga = pa && pa->needs_grad;
    const bool gb = pb && pb->needs_grad;
    switch (n.op) {
      case Op::kInput:
      case Op::kConstant:
        break;
      case Op::kAdd:
        for (size_t i = 0; i < n.grad.size(); ++i) {
          if (ga) pa->grad[i] += n.grad[i];
          if (gb) pb->grad[i] += n.grad[i];
        }
        break;
      case Op::kSub:
        for (size_t i = 0; i < n.grad.size(); ++i) {
          if (ga) pa->grad[i] += n.grad[i];
          if (gb) pb->grad[i] -= n.grad[i];
        }
        break;
      case Op::kMul:
        for (size_t i = 0; i < n.grad.size(); ++i) {
          if (ga) pa->grad[i] += n.grad[i] * pb->value[i];
          if (gb) pb->grad[i] += n.grad[i] * pa->value[i];
        }
        break;
      case Op::kDiv:
        for (size_t i = 0; i < n.grad.size(); ++i) {
          const double inv = 1.0 / pb->value[i];
          if (ga) pa->grad[i] += n.grad[i] * inv;
          if (gb) pb->grad[i] -= n.grad[i] * pa->value[i] * inv * inv;
        }
        break;
      case Op::kMatmul: {
        const int m = pa->rows, k = pa->cols, c = pb->cols;
        if (ga)
          for (int i = 0; i < m; ++i)
            for (int t = 0; t < k; ++t) {
              double acc = 0.0;
              for (int j = 0; j < c; ++j) acc += n.grad[i * c + j] * pb->value[t * c + j];
              pa->grad[i * k + t] += acc;
            }
        if (gb)
          for (int t = 0; t < k; ++t)
            for (int j = 0; j < c; ++j) {
              double acc = 0.0;
              for (int i = 0; i < m; ++i) acc += pa->value[i * k + t] * n.grad[i * c + j];
              pb->grad[t * c + j] += acc;
            }
        break;
      }
      case Op::kSum:
        if (ga)
          for (size_t i = 0; i < pa->grad.size(); ++i) pa->grad[i] += n.grad[0];
        break;
      case Op::kMean:
        if (ga) {
          const double g = n.grad[0] / static_cast<double>(pa->size());
          for (size_t i = 0; i < pa->grad.size(); ++i) pa->grad[i] += g;
        }
        break;
      case Op::kRowSum:
        if (ga)
          for (int i = 0; i < pa->rows; ++i)
            for (int j = 0; j < pa->cols; ++j)
              pa->grad[static_cast<size_t>(i) * pa->cols + j] += n.grad[i];
        break;
      case Op::kConcat:
        for (int i = 0; i < n.rows; ++i) {
          if (ga)
            for (int j = 0; j < pa->cols; ++j)
              pa->grad[static_cast<size_t>(i) * pa->cols + j] +=
                  n.grad[static_cast<size_t>(i) * n.cols + j];
          if (gb)
            for (int j = 0; j < pb->cols; ++j)
              pb->grad[static_cast<size_t>(i) * pb->cols + j] +=
                  n.grad[static_cast<size_t>(i) * n.cols + pa->cols + j];
        }
        break;
      case Op::kGather:
        if (ga)
          for (int i = 0; i < n.rows; ++i)
            for (int j = 0; j < n.cols; ++j)
              pa->grad[static_cast<size_t>(n.idx[i]) * pa->cols + j] +=
                  n.grad[static_cast<size_t>(i) * n.cols + j];
        break;
      case Op::kBroadcast:
        if (ga) {
          const bool from_scalar = pa->rows == 1 && pa->cols == 1;
          const bool from_row = pa->rows == 1 && pa->cols == n.cols;
          for (int i = 0; i < n.rows; ++i)
            for (int j = 0; j < n.cols; ++j) {
              const double g = n.grad[static_cast<size_t>(i) * n.cols + j];
              if (from_scalar)
                pa->grad[0] += g;
              else if (from_row)
                pa->grad[j] += g;
              else
                pa->grad[i] += g;
            }
        }
        break;
      case Op::kTranspose:
        if (ga)
          for (int i = 0; i < n.rows; ++i)
            for (int j = 0; j < n.cols; ++j)
              pa->grad[static_cast<size_t>(j) * pa->cols + i] +=
                  n.grad[static_cast<size_t>(i) * n.cols + j];
        break;
      case Op::kReshape:
        if (ga)
          for (size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.grad[i];
        break;
      case Op::kSliceCols:
        if (ga)
          for (int i = 0; i < n.rows; ++i)
            for (int j = 0; j < n.cols; ++j)
              pa->grad[static_cast<size_t>(i) * pa->cols + n.p0 + j] +=
                  n.grad[static_cast<size_t>(i) * n.cols + j];
        break;
      case Op::kScale:
        if (ga)
          for (size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.factor * n.grad[i];
        break;
      case Op::kPositivePart:
        if (ga)
          for (size_t i = 0; i < n.grad.size(); ++i)
            if (pa->value[i] > 0.0) pa->grad[i] += n.grad[i];
        break;
      case Op::kTanh:
        if (ga)
          for (size_t i = 0; i < n.grad.size(); ++i)
            pa->grad[i] += n.grad[i] * (1.0 - n.value[i] * n.value[i]);
        break;
      case Op::kSigmoid:
        if (ga)
          for (size_t i = 0; i < n.grad.size(); ++i)
            pa->grad[i] += n.grad[i] * n.value[i] * (1.0 - n.value[i]);
        break;
      case Op::kExp:
        if (ga)
          for (size_t i = 0; i < n.grad.size(); ++i) pa->grad[i] += n.grad[i] * n.value[i];
        break;
      case Op::kSafeLog:
        if (ga)
          for (size_t i = 0; i < n.grad.size(); ++i)
            if (!log_would_floor(pa->value[i])) pa->grad[i] += n.grad[i] / pa->value[i];
        break;
      case Op::kNormalizeSimplex:
        if (ga)
          for (int i = 0; i < n.rows; ++i) {
            const int live = n.idx.empty() ? n.cols : n.idx[i];
            const size_t base = static_cast<size_t>(i) * n.cols;
            double mass = 0.0;
            for (int j = 0; j < live; ++j) mass += pa->value[base + j];
            if (mass <= 0.0) continue;  // uniform fallback: no gradient
            double dot = 0.0;
            for (int j = 0; j < live; ++j) dot += n.grad[base + j] * n.value[base + j];
            for (int j = 0; j < live; ++j)
              pa->grad[base + j] += (n.grad[base + j] - dot) / mass;
          }
        break;
      case Op::kSoftmax:
        if (ga)
          for (int i = 0; i < n.rows; ++i) {
            const size_t base = static_cast<size_t>(i) * n.cols;
            double dot = 0.0;
            for (int j = 0; j < n.cols; ++j) dot += n.grad[base + j] * n.value[base + j];
            for (int j = 0; j < n.cols; ++j)
              pa->grad[base + j] += n.value[base + j] * (n.grad[base + j] - dot);
          }
        break;
      case Op::kCfrWalk:
        if (ga) {
          const WalkAux& aux = *walks_[n.p0];
          const GameTree& g = *aux.game;
          const int contrib_len = g.num_players() * g.num_terminals();
          const int reward_len = g.num_infostates() * g.max_actions();
          std::vector<double> contrib_bar(n.grad.begin(), n.grad.begin() + contrib_len);
          std::vector<double> reward_bar(n.grad.begin() + contrib_len,
                                         n.grad.begin() + contrib_len + reward_len);
          std::vector<double> sigma_bar(pa->size(), 0.0);
          cfr_walk_backward(g, pa->value, aux.rec, contrib_bar, reward_bar, sigma_bar);
          for (size_t i = 0; i < sigma_bar.size(); ++i) pa->grad[i] += sigma_bar[i];
        }
        break;
    }
  }

  walks_.clear();  // forward traversal caches are the bulk of the memory
  finished_ = true;
}

std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                const std::vector<double>& x, double h) {
  std::vector<double> g(x.size(), 0.0);
  std::vector<double> probe = x;
  for (size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double max_rel_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw ContractViolation("max_rel_error: length mismatch");
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace regretforge
