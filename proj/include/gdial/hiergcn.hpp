#pragma once

#include <cstdint>
#include <vector>

#include "gdial/scene_graph.hpp"
#include "gdial/tape.hpp"

namespace gdial {

struct HierGcnParams {
  Parameter* local_weight = nullptr;   // [d, d]
  Parameter* global_weight = nullptr;  // [d, d]
  Parameter* local_bias = nullptr;     // {d}, optional
  Parameter* global_bias = nullptr;    // {d}, optional
  bool normalize_adjacency = false;
};

// Relationship-aware object node embeddings; columns of absent slots are
// exactly zero.
struct NodeEmbeddings {
  Value values;                      // [d, r]
  std::vector<std::uint8_t> mask;    // present flag per slot
};

// relu(W1 * V_local * A1), keeping only the first r columns (relationship
// nodes are discarded) and re-zeroing absent object slots.
Value local_gcn(Tape& t, Value v_local, const Array& a1, const HierGcnParams& p, std::size_t r,
                const std::vector<std::uint8_t>& present);

// relu(W2 * V * A2) over object nodes, absent slots re-zeroed.
Value global_gcn(Tape& t, Value v_obj, const Array& a2, const HierGcnParams& p,
                 const std::vector<std::uint8_t>& present);

// Full two-stage pass: assemble the local node matrix, mix object and
// relationship nodes locally, then mix object-object connections globally.
NodeEmbeddings hiergcn_forward(Tape& t, const SceneGraphInstance& graph, Value object_features,
                               Value predicate_in, Value predicate_out, const HierGcnParams& p);

}  // namespace gdial
