#include "gdial/hiergcn.hpp"

#include <numeric>

#include "gdial/errors.hpp"
#include "gdial/nn.hpp"

namespace gdial {

namespace {

Value gcn_layer(Tape& t, Value nodes, const Array& adjacency, Parameter& weight, Parameter* bias,
                bool normalize) {
  const Array& v = nodes.array();
  if (adjacency.rank() != 2 || adjacency.rows() != adjacency.cols() ||
      adjacency.rows() != v.cols()) {
    throw DimensionError("gcn: adjacency " + adjacency.shape_str() + " does not match nodes " +
                         v.shape_str());
  }
  Value a = t.constant(normalize ? normalize_adjacency(adjacency) : adjacency);
  Value mixed = t.matmul(t.matmul(t.param(weight), nodes), a);
  if (bias) {
    mixed = t.add(mixed, repeat_col(t, as_col(t, t.param(*bias)), v.cols()));
  }
  return t.relu(mixed);
}

}  // namespace

Value local_gcn(Tape& t, Value v_local, const Array& a1, const HierGcnParams& p, std::size_t r,
                const std::vector<std::uint8_t>& present) {
  Value all = gcn_layer(t, v_local, a1, *p.local_weight, p.local_bias, p.normalize_adjacency);
  Value objects = all;
  if (all.array().cols() != r) {  // discard the 2s relationship nodes
    std::vector<std::size_t> idx(r);
    std::iota(idx.begin(), idx.end(), 0);
    objects = t.gather_cols(all, std::move(idx));
  }
  return zero_masked_cols(t, objects, present);
}

Value global_gcn(Tape& t, Value v_obj, const Array& a2, const HierGcnParams& p,
                 const std::vector<std::uint8_t>& present) {
  Value mixed = gcn_layer(t, v_obj, a2, *p.global_weight, p.global_bias, p.normalize_adjacency);
  return zero_masked_cols(t, mixed, present);
}

NodeEmbeddings hiergcn_forward(Tape& t, const SceneGraphInstance& graph, Value object_features,
                               Value predicate_in, Value predicate_out, const HierGcnParams& p) {
  const std::size_t r = graph.slot_count();
  const std::size_t s = predicate_in.array().cols();
  Value v_local = assemble_local_nodes(t, object_features, predicate_in, predicate_out);
  Array a1 = build_local_adjacency(graph, r, s);
  Value local = local_gcn(t, v_local, a1, p, r, graph.present);
  Array a2 = build_global_adjacency(graph, r);
  Value global = global_gcn(t, local, a2, p, graph.present);
  return {global, graph.present};
}

}  // namespace gdial
