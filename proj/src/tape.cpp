#include "gdial/tape.hpp"

#include <algorithm>
#include <cmath>

#include "gdial/errors.hpp"

namespace gdial {

namespace {

// c[m,n] += a[m,k] * b[k,n]
void matmul_nn(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
               std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      const double* brow = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[m,k] += a[m,n] * b[k,n]^T
void matmul_nt(double* c, const double* a, const double* b, std::size_t m, std::size_t n,
               std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    double* crow = c + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double* brow = b + kk * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += arow[j] * brow[j];
      crow[kk] += s;
    }
  }
}

// c[k,n] += a[m,k]^T * b[m,n]
void matmul_tn(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
               std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      if (av == 0.0) continue;
      double* crow = c + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

const Array& Value::array() const {
  if (!valid()) throw ContractError("Value: dereferenced an empty handle");
  return tape->value_of(*this);
}

const char* Tape::op_name(Op op) {
  switch (op) {
    case Op::Constant: return "constant";
    case Op::Param: return "param";
    case Op::Matmul: return "matmul";
    case Op::Add: return "add";
    case Op::Mul: return "mul";
    case Op::Tanh: return "tanh";
    case Op::Relu: return "relu";
    case Op::Sigmoid: return "sigmoid";
    case Op::Softmax: return "softmax";
    case Op::Reshape: return "reshape";
    case Op::ConcatRows: return "concat_rows";
    case Op::ConcatCols: return "concat_cols";
    case Op::SliceRows: return "slice_rows";
    case Op::GatherCols: return "gather_cols";
    case Op::Sum: return "sum";
    case Op::Scale: return "scale";
    case Op::NllFromScores: return "nll_from_scores";
    case Op::MaskedNllCols: return "masked_nll_cols";
  }
  return "?";
}

int Tape::push(Node n) {
  check_finite(n);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Tape::Node& Tape::node(Value v) { return nodes_[static_cast<std::size_t>(v.node)]; }
const Tape::Node& Tape::node(Value v) const { return nodes_[static_cast<std::size_t>(v.node)]; }

void Tape::check_owned(Value v, const char* what) const {
  if (!v.valid() || v.tape != this || static_cast<std::size_t>(v.node) >= nodes_.size()) {
    throw ContractError(std::string(what) + ": value does not belong to this tape");
  }
}

void Tape::check_finite(const Node& n) {
  if (!n.value.all_finite()) {
    throw NumericError(std::string("non-finite values produced by ") + op_name(n.op));
  }
}

const Array& Tape::value_of(Value v) const {
  check_owned(v, "value_of");
  return node(v).value;
}

const Array& Tape::grad_of(Value v) const {
  check_owned(v, "grad_of");
  const Node& n = node(v);
  if (n.grad.empty()) throw ContractError("grad_of: no gradient recorded for this node");
  return n.grad;
}

void Tape::clear() { nodes_.clear(); }

Value Tape::constant(Array a) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(a);
  return wrap(push(std::move(n)));
}

Value Tape::param(Parameter& p) {
  Node n;
  n.op = Op::Param;
  n.value = p.value;
  n.parameter = &p;
  n.needs_grad = grad_enabled_;
  return wrap(push(std::move(n)));
}

Value Tape::matmul(Value a, Value b) {
  check_owned(a, "matmul");
  check_owned(b, "matmul");
  const Array& av = node(a).value;
  const Array& bv = node(b).value;
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
    throw DimensionError("matmul: incompatible shapes " + av.shape_str() + " and " + bv.shape_str());
  }
  Node n;
  n.op = Op::Matmul;
  n.in = {a.node, b.node};
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  n.value = Array::zeros({av.rows(), bv.cols()});
  matmul_nn(n.value.data(), av.data(), bv.data(), av.rows(), av.cols(), bv.cols());
  return wrap(push(std::move(n)));
}

namespace {
enum class BroadcastKind { Equal, ScalarLeft, ScalarRight };

BroadcastKind broadcast_kind(const Array& a, const Array& b, const char* what) {
  if (a.same_shape(b)) return BroadcastKind::Equal;
  if (a.size() == 1) return BroadcastKind::ScalarLeft;
  if (b.size() == 1) return BroadcastKind::ScalarRight;
  throw DimensionError(std::string(what) + ": incompatible shapes " + a.shape_str() + " and " +
                       b.shape_str() + " (only equal-shape or scalar broadcasting)");
}
}  // namespace

Value Tape::add(Value a, Value b) {
  check_owned(a, "add");
  check_owned(b, "add");
  const Array& av = node(a).value;
  const Array& bv = node(b).value;
  BroadcastKind k = broadcast_kind(av, bv, "add");
  Node n;
  n.op = Op::Add;
  n.in = {a.node, b.node};
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  switch (k) {
    case BroadcastKind::Equal: {
      n.value = av;
      for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] += bv[i];
      break;
    }
    case BroadcastKind::ScalarLeft: {
      n.value = bv;
      const double s = av[0];
      for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] += s;
      break;
    }
    case BroadcastKind::ScalarRight: {
      n.value = av;
      const double s = bv[0];
      for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] += s;
      break;
    }
  }
  return wrap(push(std::move(n)));
}

Value Tape::mul(Value a, Value b) {
  check_owned(a, "mul");
  check_owned(b, "mul");
  const Array& av = node(a).value;
  const Array& bv = node(b).value;
  BroadcastKind k = broadcast_kind(av, bv, "mul");
  Node n;
  n.op = Op::Mul;
  n.in = {a.node, b.node};
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  switch (k) {
    case BroadcastKind::Equal: {
      n.value = av;
      for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] *= bv[i];
      break;
    }
    case BroadcastKind::ScalarLeft: {
      n.value = bv;
      const double s = av[0];
      for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] *= s;
      break;
    }
    case BroadcastKind::ScalarRight: {
      n.value = av;
      const double s = bv[0];
      for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] *= s;
      break;
    }
  }
  return wrap(push(std::move(n)));
}

Value Tape::tanh(Value a) {
  check_owned(a, "tanh");
  Node n;
  n.op = Op::Tanh;
  n.in = {a.node};
  n.needs_grad = node(a).needs_grad;
  n.value = node(a).value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = std::tanh(n.value[i]);
  return wrap(push(std::move(n)));
}

Value Tape::relu(Value a) {
  check_owned(a, "relu");
  Node n;
  n.op = Op::Relu;
  n.in = {a.node};
  n.needs_grad = node(a).needs_grad;
  n.value = node(a).value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = std::max(0.0, n.value[i]);
  return wrap(push(std::move(n)));
}

Value Tape::sigmoid(Value a) {
  check_owned(a, "sigmoid");
  Node n;
  n.op = Op::Sigmoid;
  n.in = {a.node};
  n.needs_grad = node(a).needs_grad;
  n.value = node(a).value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = 1.0 / (1.0 + std::exp(-n.value[i]));
  return wrap(push(std::move(n)));
}

Value Tape::softmax(Value scores, const std::vector<std::uint8_t>* mask) {
  check_owned(scores, "softmax");
  const Array& z = node(scores).value;
  const std::size_t n_elem = z.size();
  if (n_elem == 0) throw ContractError("softmax: empty input");
  if (mask && mask->size() != n_elem) {
    throw DimensionError("softmax: mask length " + std::to_string(mask->size()) +
                         " does not match " + std::to_string(n_elem) + " scores");
  }
  auto unmasked = [&](std::size_t i) { return !mask || (*mask)[i] != 0; };
  double max_z = -HUGE_VAL;
  std::size_t live = 0;
  for (std::size_t i = 0; i < n_elem; ++i) {
    if (unmasked(i)) {
      ++live;
      max_z = std::max(max_z, z[i]);
    }
  }
  if (live == 0) throw ContractError("softmax: all positions masked");

  Node n;
  n.op = Op::Softmax;
  n.in = {scores.node};
  n.needs_grad = node(scores).needs_grad;
  if (mask) n.mask = *mask;
  n.value = Array::zeros(z.shape());
  double denom = 0.0;
  for (std::size_t i = 0; i < n_elem; ++i) {
    if (unmasked(i)) {
      n.value[i] = std::exp(z[i] - max_z);
      denom += n.value[i];
    }
  }
  for (std::size_t i = 0; i < n_elem; ++i) {
    if (unmasked(i)) n.value[i] /= denom;
  }
  return wrap(push(std::move(n)));
}

Value Tape::reshape(Value a, std::vector<std::size_t> shape) {
  check_owned(a, "reshape");
  const Array& av = node(a).value;
  Node n;
  n.op = Op::Reshape;
  n.in = {a.node};
  n.needs_grad = node(a).needs_grad;
  n.value = Array(std::move(shape), std::vector<double>(av.data(), av.data() + av.size()));
  if (n.value.size() != av.size()) {
    throw DimensionError("reshape: cannot view " + av.shape_str() + " as " + n.value.shape_str());
  }
  return wrap(push(std::move(n)));
}

Value Tape::concat_rows(const std::vector<Value>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: no parts");
  std::size_t total_rows = 0;
  std::size_t cols = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    check_owned(parts[p], "concat_rows");
    const Array& v = node(parts[p]).value;
    if (v.rank() != 2) throw DimensionError("concat_rows: parts must be rank 2, got " + v.shape_str());
    if (p == 0) cols = v.cols();
    if (v.cols() != cols) {
      throw DimensionError("concat_rows: column mismatch " + v.shape_str() + " vs " +
                           std::to_string(cols) + " columns");
    }
    total_rows += v.rows();
  }
  Node n;
  n.op = Op::ConcatRows;
  n.needs_grad = false;
  n.value = Array::zeros({total_rows, cols});
  std::size_t r = 0;
  for (const Value& p : parts) {
    n.in.push_back(p.node);
    n.needs_grad = n.needs_grad || node(p).needs_grad;
    const Array& v = node(p).value;
    std::copy(v.data(), v.data() + v.size(), n.value.data() + r * cols);
    r += v.rows();
  }
  return wrap(push(std::move(n)));
}

Value Tape::concat_cols(const std::vector<Value>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no parts");
  std::size_t rows = 0;
  std::size_t total_cols = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    check_owned(parts[p], "concat_cols");
    const Array& v = node(parts[p]).value;
    if (v.rank() != 2) throw DimensionError("concat_cols: parts must be rank 2, got " + v.shape_str());
    if (p == 0) rows = v.rows();
    if (v.rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " + v.shape_str() + " vs " +
                           std::to_string(rows) + " rows");
    }
    total_cols += v.cols();
  }
  Node n;
  n.op = Op::ConcatCols;
  n.needs_grad = false;
  n.value = Array::zeros({rows, total_cols});
  std::size_t c = 0;
  for (const Value& p : parts) {
    n.in.push_back(p.node);
    n.needs_grad = n.needs_grad || node(p).needs_grad;
    const Array& v = node(p).value;
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy(v.data() + i * v.cols(), v.data() + (i + 1) * v.cols(),
                n.value.data() + i * total_cols + c);
    }
    c += v.cols();
  }
  return wrap(push(std::move(n)));
}

Value Tape::slice_rows(Value a, std::size_t row0, std::size_t row1) {
  check_owned(a, "slice_rows");
  const Array& v = node(a).value;
  if (v.rank() != 2 || row0 >= row1 || row1 > v.rows()) {
    throw DimensionError("slice_rows: invalid range [" + std::to_string(row0) + "," +
                         std::to_string(row1) + ") for " + v.shape_str());
  }
  Node n;
  n.op = Op::SliceRows;
  n.in = {a.node};
  n.needs_grad = node(a).needs_grad;
  n.idx = {row0, row1};
  n.value = Array({row1 - row0, v.cols()},
                  std::vector<double>(v.data() + row0 * v.cols(), v.data() + row1 * v.cols()));
  return wrap(push(std::move(n)));
}

Value Tape::gather_cols(Value a, std::vector<std::size_t> cols) {
  check_owned(a, "gather_cols");
  const Array& v = node(a).value;
  if (v.rank() != 2) throw DimensionError("gather_cols: need a rank-2 array, got " + v.shape_str());
  if (cols.empty()) throw ContractError("gather_cols: empty index list");
  for (std::size_t c : cols) {
    if (c >= v.cols()) {
      throw ContractError("gather_cols: column " + std::to_string(c) + " out of range for " +
                          v.shape_str());
    }
  }
  Node n;
  n.op = Op::GatherCols;
  n.in = {a.node};
  n.needs_grad = node(a).needs_grad;
  n.value = Array::zeros({v.rows(), cols.size()});
  for (std::size_t i = 0; i < v.rows(); ++i) {
    const double* src = v.data() + i * v.cols();
    double* dst = n.value.data() + i * cols.size();
    for (std::size_t j = 0; j < cols.size(); ++j) dst[j] = src[cols[j]];
  }
  n.idx = std::move(cols);
  return wrap(push(std::move(n)));
}

Value Tape::sum(Value a) {
  check_owned(a, "sum");
  const Array& v = node(a).value;
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i];
  Node n;
  n.op = Op::Sum;
  n.in = {a.node};
  n.needs_grad = node(a).needs_grad;
  n.value = Array::scalar(s);
  return wrap(push(std::move(n)));
}

Value Tape::scale(Value a, double c) {
  check_owned(a, "scale");
  Node n;
  n.op = Op::Scale;
  n.in = {a.node};
  n.needs_grad = node(a).needs_grad;
  n.scalar = c;
  n.value = node(a).value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] *= c;
  return wrap(push(std::move(n)));
}

Value Tape::nll_from_scores(Value scores, std::size_t target) {
  check_owned(scores, "nll_from_scores");
  const Array& z = node(scores).value;
  if (z.size() == 0) throw ContractError("nll_from_scores: empty scores");
  if (target >= z.size()) {
    throw ContractError("nll_from_scores: target " + std::to_string(target) +
                        " out of range for " + std::to_string(z.size()) + " scores");
  }
  double max_z = z[0];
  for (std::size_t i = 1; i < z.size(); ++i) max_z = std::max(max_z, z[i]);
  double denom = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) denom += std::exp(z[i] - max_z);
  Node n;
  n.op = Op::NllFromScores;
  n.in = {scores.node};
  n.needs_grad = node(scores).needs_grad;
  n.idx = {target};
  n.value = Array::scalar(max_z + std::log(denom) - z[target]);
  return wrap(push(std::move(n)));
}

Value Tape::masked_nll_cols(Value logits, std::vector<std::size_t> targets,
                            std::vector<std::uint8_t> mask) {
  check_owned(logits, "masked_nll_cols");
  const Array& z = node(logits).value;
  if (z.rank() != 2) throw DimensionError("masked_nll_cols: need rank-2 logits, got " + z.shape_str());
  const std::size_t v = z.rows();
  const std::size_t cols = z.cols();
  if (targets.size() != cols || mask.size() != cols) {
    throw DimensionError("masked_nll_cols: targets/mask must have one entry per column");
  }
  Node n;
  n.op = Op::MaskedNllCols;
  n.in = {logits.node};
  n.needs_grad = node(logits).needs_grad;
  n.value = Array::zeros({cols});
  for (std::size_t j = 0; j < cols; ++j) {
    if (!mask[j]) continue;
    if (targets[j] >= v) {
      throw VocabularyError("masked_nll_cols: target id " + std::to_string(targets[j]) +
                            " out of range for " + std::to_string(v) + " rows");
    }
    double max_z = z.at(0, j);
    for (std::size_t i = 1; i < v; ++i) max_z = std::max(max_z, z.at(i, j));
    double denom = 0.0;
    for (std::size_t i = 0; i < v; ++i) denom += std::exp(z.at(i, j) - max_z);
    n.value[j] = max_z + std::log(denom) - z.at(targets[j], j);
  }
  n.idx = std::move(targets);
  n.mask = std::move(mask);
  return wrap(push(std::move(n)));
}

void Tape::backward(Value loss) {
  check_owned(loss, "backward");
  if (!grad_enabled_) throw ContractError("backward: tape was built with gradients disabled");
  Node& ln = node(loss);
  if (ln.value.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " + ln.value.shape_str());
  }
  if (!ln.needs_grad) return;  // loss independent of all parameters

  const int last = loss.node;
  for (int i = 0; i <= last; ++i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.needs_grad) {
      n.grad = Array::zeros(n.value.shape());
    } else {
      n.grad = Array();
    }
  }
  node(loss).grad[0] = 1.0;
  for (int i = last; i >= 0; --i) {
    if (nodes_[static_cast<std::size_t>(i)].needs_grad) backprop_node(i);
  }
}

void Tape::backprop_node(int i) {
  Node& n = nodes_[static_cast<std::size_t>(i)];
  const Array& g = n.grad;
  auto in_node = [&](std::size_t slot) -> Node& {
    return nodes_[static_cast<std::size_t>(n.in[slot])];
  };
  auto wants = [&](std::size_t slot) { return in_node(slot).needs_grad; };

  switch (n.op) {
    case Op::Constant:
      break;
    case Op::Param:
      for (std::size_t j = 0; j < g.size(); ++j) n.parameter->grad[j] += g[j];
      break;
    case Op::Matmul: {
      const Array& a = in_node(0).value;
      const Array& b = in_node(1).value;
      if (wants(0)) {
        matmul_nt(in_node(0).grad.data(), g.data(), b.data(), a.rows(), b.cols(), a.cols());
      }
      if (wants(1)) {
        matmul_tn(in_node(1).grad.data(), a.data(), g.data(), a.rows(), a.cols(), b.cols());
      }
      break;
    }
    case Op::Add: {
      for (int slot = 0; slot < 2; ++slot) {
        if (!wants(static_cast<std::size_t>(slot))) continue;
        Array& dst = in_node(static_cast<std::size_t>(slot)).grad;
        if (dst.size() == g.size()) {
          for (std::size_t j = 0; j < g.size(); ++j) dst[j] += g[j];
        } else {  // scalar operand
          double s = 0.0;
          for (std::size_t j = 0; j < g.size(); ++j) s += g[j];
          dst[0] += s;
        }
      }
      break;
    }
    case Op::Mul: {
      const Array& a = in_node(0).value;
      const Array& b = in_node(1).value;
      if (wants(0)) {
        Array& dst = in_node(0).grad;
        if (a.size() == g.size()) {
          if (b.size() == 1) {
            for (std::size_t j = 0; j < g.size(); ++j) dst[j] += g[j] * b[0];
          } else {
            for (std::size_t j = 0; j < g.size(); ++j) dst[j] += g[j] * b[j];
          }
        } else {  // a scalar
          double s = 0.0;
          for (std::size_t j = 0; j < g.size(); ++j) s += g[j] * b[j];
          dst[0] += s;
        }
      }
      if (wants(1)) {
        Array& dst = in_node(1).grad;
        if (b.size() == g.size()) {
          if (a.size() == 1) {
            for (std::size_t j = 0; j < g.size(); ++j) dst[j] += g[j] * a[0];
          } else {
            for (std::size_t j = 0; j < g.size(); ++j) dst[j] += g[j] * a[j];
          }
        } else {  // b scalar
          double s = 0.0;
          for (std::size_t j = 0; j < g.size(); ++j) s += g[j] * a[j];
          dst[0] += s;
        }
      }
      break;
    }
    case Op::Tanh: {
      if (!wants(0)) break;
      Array& dst = in_node(0).grad;
      for (std::size_t j = 0; j < g.size(); ++j) dst[j] += g[j] * (1.0 - n.value[j] * n.value[j]);
      break;
    }
    case Op::Relu: {
      if (!wants(0)) break;
      Array& dst = in_node(0).grad;
      const Array& x = in_node(0).value;
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (x[j] > 0.0) dst[j] += g[j];
      }
      break;
    }
    case Op::Sigmoid: {
      if (!wants(0)) break;
      Array& dst = in_node(0).grad;
      for (std::size_t j = 0; j < g.size(); ++j) dst[j] += g[j] * n.value[j] * (1.0 - n.value[j]);
      break;
    }
    case Op::Softmax: {
      if (!wants(0)) break;
      Array& dst = in_node(0).grad;
      auto unmasked = [&](std::size_t j) { return n.mask.empty() || n.mask[j] != 0; };
      double dot = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (unmasked(j)) dot += g[j] * n.value[j];
      }
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (unmasked(j)) dst[j] += n.value[j] * (g[j] - dot);
      }
      break;
    }
    case Op::Reshape: {
      if (!wants(0)) break;
      Array& dst = in_node(0).grad;
      for (std::size_t j = 0; j < g.size(); ++j) dst[j] += g[j];
      break;
    }
    case Op::ConcatRows: {
      std::size_t r = 0;
      const std::size_t cols = n.value.cols();
      for (std::size_t slot = 0; slot < n.in.size(); ++slot) {
        Node& src = in_node(slot);
        const std::size_t nr = src.value.rows();
        if (src.needs_grad) {
          const double* gp = g.data() + r * cols;
          for (std::size_t j = 0; j < nr * cols; ++j) src.grad[j] += gp[j];
        }
        r += nr;
      }
      break;
    }
    case Op::ConcatCols: {
      std::size_t c = 0;
      const std::size_t rows = n.value.rows();
      const std::size_t total_cols = n.value.cols();
      for (std::size_t slot = 0; slot < n.in.size(); ++slot) {
        Node& src = in_node(slot);
        const std::size_t nc = src.value.cols();
        if (src.needs_grad) {
          for (std::size_t i = 0; i < rows; ++i) {
            const double* gp = g.data() + i * total_cols + c;
            double* dp = src.grad.data() + i * nc;
            for (std::size_t j = 0; j < nc; ++j) dp[j] += gp[j];
          }
        }
        c += nc;
      }
      break;
    }
    case Op::SliceRows: {
      if (!wants(0)) break;
      Array& dst = in_node(0).grad;
      const std::size_t cols = n.value.cols();
      double* dp = dst.data() + n.idx[0] * cols;
      for (std::size_t j = 0; j < g.size(); ++j) dp[j] += g[j];
      break;
    }
    case Op::GatherCols: {
      if (!wants(0)) break;
      Array& dst = in_node(0).grad;
      const std::size_t src_cols = in_node(0).value.cols();
      const std::size_t rows = n.value.rows();
      const std::size_t out_cols = n.value.cols();
      for (std::size_t i = 0; i < rows; ++i) {
        const double* gp = g.data() + i * out_cols;
        double* dp = dst.data() + i * src_cols;
        for (std::size_t j = 0; j < out_cols; ++j) dp[n.idx[j]] += gp[j];
      }
      break;
    }
    case Op::Sum: {
      if (!wants(0)) break;
      Array& dst = in_node(0).grad;
      const double s = g[0];
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += s;
      break;
    }
    case Op::Scale: {
      if (!wants(0)) break;
      Array& dst = in_node(0).grad;
      for (std::size_t j = 0; j < g.size(); ++j) dst[j] += g[j] * n.scalar;
      break;
    }
    case Op::NllFromScores: {
      if (!wants(0)) break;
      Array& dst = in_node(0).grad;
      const Array& z = in_node(0).value;
      double max_z = z[0];
      for (std::size_t j = 1; j < z.size(); ++j) max_z = std::max(max_z, z[j]);
      double denom = 0.0;
      for (std::size_t j = 0; j < z.size(); ++j) denom += std::exp(z[j] - max_z);
      const double go = g[0];
      for (std::size_t j = 0; j < z.size(); ++j) {
        double p = std::exp(z[j] - max_z) / denom;
        dst[j] += go * (p - (j == n.idx[0] ? 1.0 : 0.0));
      }
      break;
    }
    case Op::MaskedNllCols: {
      if (!wants(0)) break;
      Array& dst = in_node(0).grad;
      const Array& z = in_node(0).value;
      const std::size_t v = z.rows();
      const std::size_t cols = z.cols();
      for (std::size_t j = 0; j < cols; ++j) {
        if (!n.mask[j]) continue;
        const double go = g[j];
        if (go == 0.0) continue;
        double max_z = z.at(0, j);
        for (std::size_t i = 1; i < v; ++i) max_z = std::max(max_z, z.at(i, j));
        double denom = 0.0;
        for (std::size_t i = 0; i < v; ++i) denom += std::exp(z.at(i, j) - max_z);
        for (std::size_t i = 0; i < v; ++i) {
          double p = std::exp(z.at(i, j) - max_z) / denom;
          dst.at(i, j) += go * (p - (i == n.idx[j] ? 1.0 : 0.0));
        }
      }
      break;
    }
  }
}

}  // namespace gdial
