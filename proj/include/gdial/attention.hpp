#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gdial/hiergcn.hpp"
#include "gdial/tape.hpp"

namespace gdial {

// One additive attention head. w_ctx is null for heads conditioned on the
// question alone (history attention).
struct AttentionParams {
  Parameter* w_values = nullptr;  // [D_a, d]
  Parameter* w_query = nullptr;   // [D_a, d]
  Parameter* w_ctx = nullptr;     // [D_a, d] or null
  Parameter* w_score = nullptr;   // {D_a}
};

struct AttendedContext {
  Value weights;  // {n}, nonnegative, unmasked entries sum to 1
  Value context;  // {d}
};

// z = w_score^T tanh(W_v values + (W_q ctx_a) 1^T + (W_c ctx_b) 1^T),
// weights = softmax(z, mask), context = values * weights.
AttendedContext additive_attend(Tape& t, Value values, Value ctx_a, std::optional<Value> ctx_b,
                                const AttentionParams& p,
                                const std::vector<std::uint8_t>* mask = nullptr);

// History head: conditioned on the question only, no mask (the caption
// column always exists).
AttendedContext history_attend(Tape& t, Value history, Value question, const AttentionParams& p);

// Visual head over projected region features, conditioned on question and
// attended history.
AttendedContext visual_attend(Tape& t, Value regions, Value question, Value attended_history,
                              const AttentionParams& p);

// Graph head over node embeddings; absent slots are masked out of the
// softmax. A scene with no present nodes yields zero weights and a zero
// context instead of failing.
AttendedContext graph_attend(Tape& t, const NodeEmbeddings& nodes, Value question,
                             Value attended_history, const AttentionParams& p);

// Column-wise linear projection of raw region features from D_u to d.
Value project_regions(Tape& t, Value regions, Parameter& projection);

}  // namespace gdial
