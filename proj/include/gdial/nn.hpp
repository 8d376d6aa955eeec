#pragma once

#include <cstdint>
#include <vector>

#include "gdial/rng.hpp"
#include "gdial/tape.hpp"

namespace gdial {

// Shape helpers.
Value as_col(Tape& t, Value v);  // {n} or {1,n} -> {n,1}
Value as_row(Tape& t, Value v);  // {n} or {n,1} -> {1,n}
Value as_flat(Tape& t, Value v);

// col is {d,1}; returns {d,n} = col * ones(1,n).
Value repeat_col(Tape& t, Value col, std::size_t n);

// Mean over columns of a {d,n} matrix; with a mask, mean over the selected
// columns only. Returns {d,1}. At least one selected column required.
Value mean_cols(Tape& t, Value m, const std::vector<std::uint8_t>* col_mask = nullptr);

// Zeroes out columns of a {d,n} matrix where keep[j] == 0.
Value zero_masked_cols(Tape& t, Value m, const std::vector<std::uint8_t>& keep);

// Standard gated recurrent cell. The packed weight matrix holds the four
// gates stacked as rows [input; forget; output; candidate], each d x (e+d);
// the bias is {4d}.
struct LstmParams {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;
};

struct LstmState {
  Value h;
  Value c;
};

LstmState lstm_zero_state(Tape& t, std::size_t d, std::size_t n);

// One step over a column batch: x is {e,n}, state holds {d,n}. When
// col_mask is given, masked columns keep their previous state (padding).
LstmState lstm_step(Tape& t, Value x, const LstmState& state, const LstmParams& p,
                    const std::vector<std::uint8_t>* col_mask = nullptr);

// Fan-based uniform init on [-s, s] with s = sqrt(6 / (fan_in + fan_out)).
Array glorot_uniform(Rng& rng, std::size_t rows, std::size_t cols);
Array glorot_uniform_vec(Rng& rng, std::size_t n);  // treated as a 1 x n map

}  // namespace gdial
