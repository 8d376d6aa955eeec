#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gdial/array.hpp"
#include "gdial/tape.hpp"

namespace gdial {

// Fixed universe of object categories; the slot index of a category is its
// id, so every scene shares the same node layout.
struct ObjectCatalogue {
  std::vector<std::string> names;

  std::size_t size() const noexcept { return names.size(); }
  void validate() const;
};

struct PredicateCatalogue {
  std::vector<std::string> names;
  std::size_t max_edges = 10;  // edges kept per image

  std::size_t size() const noexcept { return names.size(); }
  void validate() const;
};

// Directed typed edge between two object slots.
struct SceneEdge {
  std::size_t subject = 0;
  std::size_t predicate = 0;
  std::size_t object = 0;

  friend bool operator==(const SceneEdge& a, const SceneEdge& b) {
    return a.subject == b.subject && a.predicate == b.predicate && a.object == b.object;
  }
};

struct SceneGraphInstance {
  std::vector<std::uint8_t> present;  // one flag per object slot
  std::vector<SceneEdge> edges;
  std::vector<int> region_index;  // region feature per present slot, -1 if absent

  std::size_t slot_count() const noexcept { return present.size(); }
  bool has_edge(std::size_t subject, std::size_t predicate, std::size_t object) const;
  bool connected(std::size_t a, std::size_t b) const;  // either direction, any predicate
  void validate(const ObjectCatalogue& objects, const PredicateCatalogue& predicates) const;
};

// One undirected incidence in the bipartite expansion. Nodes are indexed
// over [0,r) object slots, [r, r+s) in-slots, [r+s, r+2s) out-slots.
struct Incidence {
  std::size_t node_a = 0;
  std::size_t node_b = 0;

  friend bool operator==(const Incidence& a, const Incidence& b) {
    return a.node_a == b.node_a && a.node_b == b.node_b;
  }
};

// Rewrites each directed edge (subj, p, obj) as the two undirected
// incidences (subj <-> p_in) and (p_out <-> obj). Relationship slots are
// per predicate *type*, shared by all edges of that type.
std::vector<Incidence> expand_bipartite(const SceneGraphInstance& graph, std::size_t r,
                                        std::size_t s);

// Symmetric 0/1 adjacency over [objects | in-slots | out-slots] with unit
// diagonal; only the expanded incidences are connected.
Array build_local_adjacency(const SceneGraphInstance& graph, std::size_t r, std::size_t s);

// Symmetric 0/1 object-object adjacency with unit diagonal; slots i and j
// are connected iff some edge links them in either direction.
Array build_global_adjacency(const SceneGraphInstance& graph, std::size_t r);

// Stacks [object features | in-type embeddings | out-type embeddings] into
// the d x (r+2s) local node matrix. Absent object slots must already be
// zero columns of object_features.
Value assemble_local_nodes(Tape& t, Value object_features, Value predicate_in,
                           Value predicate_out);

// Symmetric degree normalization D^-1/2 (A) D^-1/2, optional via config.
Array normalize_adjacency(const Array& a);

}  // namespace gdial
