#pragma once

#include <set>
#include <vector>

#include "gdial/array.hpp"
#include "gdial/rng.hpp"
#include "gdial/scene_graph.hpp"

namespace gdial::testing {

inline Array random_array(Rng& rng, std::vector<std::size_t> shape, double lo = -1.0,
                          double hi = 1.0) {
  Array a(std::move(shape));
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.uniform(lo, hi);
  return a;
}

// Valid random instance: unique directed triples between distinct present
// slots, region indices assigned in slot order.
inline SceneGraphInstance random_graph(Rng& rng, std::size_t r, std::size_t s,
                                       std::size_t max_edges) {
  SceneGraphInstance g;
  g.present.assign(r, 0);
  g.region_index.assign(r, -1);
  std::vector<std::size_t> present;
  for (std::size_t i = 0; i < r; ++i) {
    if (rng.uniform() < 0.6) {
      g.present[i] = 1;
      g.region_index[i] = static_cast<int>(present.size());
      present.push_back(i);
    }
  }
  if (present.size() >= 2 && max_edges > 0) {
    const std::size_t want = rng.index(max_edges + 1);
    std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
    for (std::size_t tries = 0; tries < want * 4 && g.edges.size() < want; ++tries) {
      const std::size_t a = present[rng.index(present.size())];
      const std::size_t b = present[rng.index(present.size())];
      if (a == b) continue;
      const std::size_t p = rng.index(s);
      if (seen.insert({a, p, b}).second) g.edges.push_back({a, p, b});
    }
  }
  return g;
}

}  // namespace gdial::testing
