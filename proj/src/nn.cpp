#include "gdial/nn.hpp"

#include <cmath>

#include "gdial/errors.hpp"

namespace gdial {

Value as_col(Tape& t, Value v) {
  return t.reshape(v, {v.array().size(), 1});
}

Value as_row(Tape& t, Value v) {
  return t.reshape(v, {1, v.array().size()});
}

Value as_flat(Tape& t, Value v) {
  return t.reshape(v, {v.array().size()});
}

Value repeat_col(Tape& t, Value col, std::size_t n) {
  const Array& v = col.array();
  if (v.rank() != 2 || v.cols() != 1) {
    throw DimensionError("repeat_col: need a column vector, got " + v.shape_str());
  }
  return t.matmul(col, t.constant(Array::full({1, n}, 1.0)));
}

Value mean_cols(Tape& t, Value m, const std::vector<std::uint8_t>* col_mask) {
  const Array& v = m.array();
  const std::size_t n = v.cols();
  if (col_mask && col_mask->size() != n) {
    throw DimensionError("mean_cols: mask length does not match column count");
  }
  std::size_t live = 0;
  if (col_mask) {
    for (auto b : *col_mask) live += b ? 1 : 0;
  } else {
    live = n;
  }
  if (live == 0) throw ContractError("mean_cols: no columns selected");
  Array w({n, 1});
  for (std::size_t j = 0; j < n; ++j) {
    w[j] = (!col_mask || (*col_mask)[j]) ? 1.0 / static_cast<double>(live) : 0.0;
  }
  return t.matmul(m, t.constant(std::move(w)));
}

Value zero_masked_cols(Tape& t, Value m, const std::vector<std::uint8_t>& keep) {
  const Array& v = m.array();
  const std::size_t rows = v.rows();
  const std::size_t cols = v.cols();
  if (keep.size() != cols) throw DimensionError("zero_masked_cols: mask length mismatch");
  Array mask({rows, cols});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) mask.at(i, j) = keep[j] ? 1.0 : 0.0;
  }
  return t.mul(m, t.constant(std::move(mask)));
}

LstmState lstm_zero_state(Tape& t, std::size_t d, std::size_t n) {
  return {t.constant(Array::zeros({d, n})), t.constant(Array::zeros({d, n}))};
}

LstmState lstm_step(Tape& t, Value x, const LstmState& state, const LstmParams& p,
                    const std::vector<std::uint8_t>* col_mask) {
  const Array& wv = p.weight->value;
  const std::size_t n = x.array().cols();
  const std::size_t d = state.h.array().rows();
  const std::size_t e = x.array().rows();
  if (wv.rank() != 2 || wv.rows() != 4 * d || wv.cols() != e + d) {
    throw DimensionError("lstm_step: weight " + wv.shape_str() + " does not match input " +
                         x.array().shape_str() + " and state of size " + std::to_string(d));
  }
  if (p.bias->value.size() != 4 * d) {
    throw DimensionError("lstm_step: bias size " + std::to_string(p.bias->value.size()) +
                         " does not match 4*" + std::to_string(d));
  }
  Value xh = t.concat_rows({x, state.h});
  Value pre = t.matmul(t.param(*p.weight), xh);
  pre = t.add(pre, repeat_col(t, as_col(t, t.param(*p.bias)), n));
  Value gi = t.sigmoid(t.slice_rows(pre, 0, d));
  Value gf = t.sigmoid(t.slice_rows(pre, d, 2 * d));
  Value go = t.sigmoid(t.slice_rows(pre, 2 * d, 3 * d));
  Value gc = t.tanh(t.slice_rows(pre, 3 * d, 4 * d));
  Value c_new = t.add(t.mul(gf, state.c), t.mul(gi, gc));
  Value h_new = t.mul(go, t.tanh(c_new));
  if (!col_mask) return {h_new, c_new};

  if (col_mask->size() != n) throw DimensionError("lstm_step: column mask length mismatch");
  Array live({d, n});
  Array stale({d, n});
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      live.at(i, j) = (*col_mask)[j] ? 1.0 : 0.0;
      stale.at(i, j) = (*col_mask)[j] ? 0.0 : 1.0;
    }
  }
  Value vm = t.constant(std::move(live));
  Value vs = t.constant(std::move(stale));
  Value h = t.add(t.mul(h_new, vm), t.mul(state.h, vs));
  Value c = t.add(t.mul(c_new, vm), t.mul(state.c, vs));
  return {h, c};
}

Array glorot_uniform(Rng& rng, std::size_t rows, std::size_t cols) {
  const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Array a({rows, cols});
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.uniform(-s, s);
  return a;
}

Array glorot_uniform_vec(Rng& rng, std::size_t n) {
  const double s = std::sqrt(6.0 / static_cast<double>(1 + n));
  Array a({n});
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.uniform(-s, s);
  return a;
}

}  // namespace gdial
