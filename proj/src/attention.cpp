#include "gdial/attention.hpp"

#include <algorithm>

#include "gdial/errors.hpp"
#include "gdial/nn.hpp"

namespace gdial {

AttendedContext additive_attend(Tape& t, Value values, Value ctx_a, std::optional<Value> ctx_b,
                                const AttentionParams& p, const std::vector<std::uint8_t>* mask) {
  const Array& v = values.array();
  if (v.rank() != 2) throw DimensionError("additive_attend: values must be [d,n], got " + v.shape_str());
  const std::size_t n = v.cols();

  Value pre = t.matmul(t.param(*p.w_values), values);
  pre = t.add(pre, repeat_col(t, t.matmul(t.param(*p.w_query), as_col(t, ctx_a)), n));
  if (ctx_b.has_value()) {
    if (!p.w_ctx) throw ContractError("additive_attend: head has no context projection");
    pre = t.add(pre, repeat_col(t, t.matmul(t.param(*p.w_ctx), as_col(t, *ctx_b)), n));
  }
  Value scores = as_flat(t, t.matmul(as_row(t, t.param(*p.w_score)), t.tanh(pre)));
  Value weights = t.softmax(scores, mask);
  Value context = as_flat(t, t.matmul(values, as_col(t, weights)));
  return {weights, context};
}

AttendedContext history_attend(Tape& t, Value history, Value question, const AttentionParams& p) {
  return additive_attend(t, history, question, std::nullopt, p, nullptr);
}

AttendedContext visual_attend(Tape& t, Value regions, Value question, Value attended_history,
                              const AttentionParams& p) {
  return additive_attend(t, regions, question, attended_history, p, nullptr);
}

AttendedContext graph_attend(Tape& t, const NodeEmbeddings& nodes, Value question,
                             Value attended_history, const AttentionParams& p) {
  const std::size_t r = nodes.values.array().cols();
  if (nodes.mask.size() != r) {
    throw DimensionError("graph_attend: node mask does not match node count");
  }
  const bool any_present = std::any_of(nodes.mask.begin(), nodes.mask.end(),
                                       [](std::uint8_t b) { return b != 0; });
  if (!any_present) {
    // Degenerate scene: keep the example trainable with a zero graph context.
    const std::size_t d = nodes.values.array().rows();
    return {t.constant(Array::zeros({r})), t.constant(Array::zeros({d}))};
  }
  return additive_attend(t, nodes.values, question, attended_history, p, &nodes.mask);
}

Value project_regions(Tape& t, Value regions, Parameter& projection) {
  const Array& u = regions.array();
  const Array& w = projection.value;
  if (u.rank() != 2 || w.rank() != 2 || w.cols() != u.rows()) {
    throw DimensionError("project_regions: projection " + w.shape_str() +
                         " does not match regions " + u.shape_str());
  }
  return t.matmul(t.param(projection), regions);
}

}  // namespace gdial
