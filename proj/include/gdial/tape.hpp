#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gdial/array.hpp"

namespace gdial {

// A named trainable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  Array value;
  Array grad;

  Parameter(std::string name_, Array value_)
      : name(std::move(name_)), value(std::move(value_)), grad(Array::zeros(value.shape())) {}

  void zero_grad() { grad.fill(0.0); }
};

class Tape;

// Handle to a node on a tape.
struct Value {
  Tape* tape = nullptr;
  int node = -1;

  bool valid() const noexcept { return tape != nullptr && node >= 0; }
  const Array& array() const;
  const std::vector<std::size_t>& shape() const { return array().shape(); }
};

// Records every primitive applied during a forward pass, in evaluation
// order; reverse traversal of the record is the backward pass. One tape per
// forward pass, single-threaded; distinct tapes never share state.
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Value constant(Array a);
  Value param(Parameter& p);

  // inner dimensions must agree: [m,k] x [k,n] -> [m,n]
  Value matmul(Value a, Value b);

  // Elementwise with restricted broadcasting: equal shapes, or one operand
  // a scalar (single element).
  Value add(Value a, Value b);
  Value mul(Value a, Value b);

  Value tanh(Value a);
  Value relu(Value a);
  Value sigmoid(Value a);

  // Masked stable softmax over a flat array of n scores. Masked positions
  // (mask[i] == 0) get exactly 0; the rest sum to 1.
  Value softmax(Value scores, const std::vector<std::uint8_t>* mask = nullptr);

  Value reshape(Value a, std::vector<std::size_t> shape);
  Value concat_rows(const std::vector<Value>& parts);
  Value concat_cols(const std::vector<Value>& parts);
  Value slice_rows(Value a, std::size_t row0, std::size_t row1);
  Value gather_cols(Value a, std::vector<std::size_t> cols);

  Value sum(Value a);
  Value scale(Value a, double c);

  // -log softmax(scores)[target], computed via a stable log-sum-exp.
  Value nll_from_scores(Value scores, std::size_t target);

  // Per-column -log softmax(logits[:,j])[targets[j]] for unmasked columns,
  // 0 for masked ones. logits is [v,n]; result is {n}.
  Value masked_nll_cols(Value logits, std::vector<std::size_t> targets,
                        std::vector<std::uint8_t> mask);

  // Accumulates d(loss)/d(parameter) into every reachable Parameter's grad.
  void backward(Value loss);

  const Array& value_of(Value v) const;
  const Array& grad_of(Value v) const;  // valid after backward, for diagnostics
  bool grad_enabled() const noexcept { return grad_enabled_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  void clear();

 private:
  enum class Op : std::uint8_t {
    Constant,
    Param,
    Matmul,
    Add,
    Mul,
    Tanh,
    Relu,
    Sigmoid,
    Softmax,
    Reshape,
    ConcatRows,
    ConcatCols,
    SliceRows,
    GatherCols,
    Sum,
    Scale,
    NllFromScores,
    MaskedNllCols,
  };

  struct Node {
    Op op;
    Array value;
    Array grad;  // allocated during backward, only when needs_grad
    std::vector<int> in;
    bool needs_grad = false;
    Parameter* parameter = nullptr;
    std::vector<std::size_t> idx;     // gather/slice/target indices
    std::vector<std::uint8_t> mask;   // softmax / nll column mask
    double scalar = 0.0;              // scale factor
  };

  static const char* op_name(Op op);
  int push(Node n);
  Value wrap(int i) { return Value{this, i}; }
  Node& node(Value v);
  const Node& node(Value v) const;
  void check_owned(Value v, const char* what) const;
  void check_finite(const Node& n);
  void backprop_node(int i);

  std::vector<Node> nodes_;
  bool grad_enabled_;
};

}  // namespace gdial
