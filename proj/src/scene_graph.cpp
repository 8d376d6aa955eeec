#include "gdial/scene_graph.hpp"

#include <cmath>
#include <set>

#include "gdial/errors.hpp"

namespace gdial {

void ObjectCatalogue::validate() const {
  if (names.empty()) throw ContractError("ObjectCatalogue: at least one category required");
  std::set<std::string> seen(names.begin(), names.end());
  if (seen.size() != names.size()) throw ContractError("ObjectCatalogue: duplicate category name");
}

void PredicateCatalogue::validate() const {
  if (names.empty()) throw ContractError("PredicateCatalogue: at least one predicate required");
  if (max_edges == 0) throw ContractError("PredicateCatalogue: max_edges must be positive");
  std::set<std::string> seen(names.begin(), names.end());
  if (seen.size() != names.size()) throw ContractError("PredicateCatalogue: duplicate predicate name");
}

bool SceneGraphInstance::has_edge(std::size_t subject, std::size_t predicate,
                                  std::size_t object) const {
  for (const SceneEdge& e : edges) {
    if (e.subject == subject && e.predicate == predicate && e.object == object) return true;
  }
  return false;
}

bool SceneGraphInstance::connected(std::size_t a, std::size_t b) const {
  for (const SceneEdge& e : edges) {
    if ((e.subject == a && e.object == b) || (e.subject == b && e.object == a)) return true;
  }
  return false;
}

void SceneGraphInstance::validate(const ObjectCatalogue& objects,
                                  const PredicateCatalogue& predicates) const {
  const std::size_t r = objects.size();
  if (present.size() != r) {
    throw ContractError("SceneGraphInstance: field present has " + std::to_string(present.size()) +
                        " slots, catalogue has " + std::to_string(r));
  }
  if (region_index.size() != r) {
    throw ContractError("SceneGraphInstance: field region_index has " +
                        std::to_string(region_index.size()) + " slots, catalogue has " +
                        std::to_string(r));
  }
  for (std::size_t i = 0; i < r; ++i) {
    if (present[i] && region_index[i] < 0) {
      throw ContractError("SceneGraphInstance: field region_index missing for present slot " +
                          std::to_string(i));
    }
  }
  if (edges.size() > predicates.max_edges) {
    throw ContractError("SceneGraphInstance: field edges exceeds cap of " +
                        std::to_string(predicates.max_edges));
  }
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  for (const SceneEdge& e : edges) {
    if (e.subject >= r || e.object >= r) {
      throw ContractError("SceneGraphInstance: field edges references slot out of range");
    }
    if (e.predicate >= predicates.size()) {
      throw ContractError("SceneGraphInstance: field edges references predicate " +
                          std::to_string(e.predicate) + " outside the catalogue");
    }
    if (e.subject == e.object) {
      throw ContractError("SceneGraphInstance: field edges contains a self-edge on slot " +
                          std::to_string(e.subject));
    }
    if (!present[e.subject] || !present[e.object]) {
      throw ContractError("SceneGraphInstance: field edges references an absent slot");
    }
    if (!seen.insert({e.subject, e.predicate, e.object}).second) {
      throw ContractError("SceneGraphInstance: field edges contains a duplicate triple");
    }
  }
}

std::vector<Incidence> expand_bipartite(const SceneGraphInstance& graph, std::size_t r,
                                        std::size_t s) {
  std::vector<Incidence> out;
  out.reserve(graph.edges.size() * 2);
  for (const SceneEdge& e : graph.edges) {
    if (e.predicate >= s) {
      throw ContractError("expand_bipartite: predicate " + std::to_string(e.predicate) +
                          " outside a catalogue of " + std::to_string(s));
    }
    if (e.subject >= r || e.object >= r) {
      throw ContractError("expand_bipartite: slot outside a catalogue of " + std::to_string(r));
    }
    out.push_back({e.subject, r + e.predicate});          // subject <-> p_in
    out.push_back({r + s + e.predicate, e.object});       // p_out  <-> object
  }
  return out;
}

Array build_local_adjacency(const SceneGraphInstance& graph, std::size_t r, std::size_t s) {
  const std::size_t n = r + 2 * s;
  Array a({n, n});
  for (std::size_t i = 0; i < n; ++i) a.at(i, i) = 1.0;
  for (const Incidence& inc : expand_bipartite(graph, r, s)) {
    a.at(inc.node_a, inc.node_b) = 1.0;
    a.at(inc.node_b, inc.node_a) = 1.0;
  }
  return a;
}

Array build_global_adjacency(const SceneGraphInstance& graph, std::size_t r) {
  Array a({r, r});
  for (std::size_t i = 0; i < r; ++i) a.at(i, i) = 1.0;
  for (const SceneEdge& e : graph.edges) {
    if (e.subject >= r || e.object >= r) {
      throw ContractError("build_global_adjacency: slot outside a catalogue of " +
                          std::to_string(r));
    }
    a.at(e.subject, e.object) = 1.0;
    a.at(e.object, e.subject) = 1.0;
  }
  return a;
}

Value assemble_local_nodes(Tape& t, Value object_features, Value predicate_in,
                           Value predicate_out) {
  const Array& obj = object_features.array();
  const Array& pin = predicate_in.array();
  const Array& pout = predicate_out.array();
  if (obj.rank() != 2 || pin.rank() != 2 || pout.rank() != 2 || obj.rows() != pin.rows() ||
      pin.rows() != pout.rows() || pin.cols() != pout.cols()) {
    throw DimensionError("assemble_local_nodes: incompatible shapes " + obj.shape_str() + ", " +
                         pin.shape_str() + ", " + pout.shape_str());
  }
  return t.concat_cols({object_features, predicate_in, predicate_out});
}

Array normalize_adjacency(const Array& a) {
  const std::size_t n = a.rows();
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += a.at(i, j);
    inv_sqrt[i] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  Array out({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) = inv_sqrt[i] * a.at(i, j) * inv_sqrt[j];
  }
  return out;
}

}  // namespace gdial
