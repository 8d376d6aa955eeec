#include <algorithm>
#include <array>
#include <set>

#include "gdial/data.hpp"
#include "gdial/errors.hpp"

namespace gdial {

namespace {

// Category groups that make relation sampling plausible.
const std::set<std::string> kPeople = {"man", "woman", "child"};
const std::set<std::string> kClothing = {"hat", "shirt", "coat"};
const std::set<std::string> kPortable = {"ball", "book", "lamp"};
const std::set<std::string> kSurfaces = {"table", "chair", "house", "boat", "car"};
const std::set<std::string> kSitters = {"cat",  "dog",  "bird", "ball", "book",
                                        "lamp", "hat",  "shirt", "coat"};

bool in_group(const std::set<std::string>& group, const std::string& name) {
  return group.count(name) != 0;
}

}  // namespace

WorldCatalogues WorldCatalogues::defaults(std::size_t max_edges) {
  WorldCatalogues cats;
  cats.objects.names = {"man",  "woman", "child", "dog",  "cat",   "car",  "bike",
                        "tree", "house", "chair", "table", "hat",   "shirt", "coat",
                        "ball", "bird",  "horse", "boat",  "lamp",  "book"};
  cats.predicates.names = {"wear", "on", "behind", "left-of", "right-of", "hold", "near", "under"};
  cats.predicates.max_edges = max_edges;
  cats.colors = {"red",   "blue",   "green",  "yellow", "black",
                 "white", "brown",  "orange", "purple", "gray"};
  cats.sizes = {"small", "large", "tiny"};
  return cats;
}

std::string WorldCatalogues::predicate_phrase(std::size_t predicate) const {
  const std::string& name = predicates.names.at(predicate);
  if (name == "wear") return "wearing";
  if (name == "hold") return "holding";
  if (name == "left-of") return "left of";
  if (name == "right-of") return "right of";
  return name;
}

std::optional<std::size_t> WorldCatalogues::predicate_from_phrase(const std::string& phrase) const {
  for (std::size_t p = 0; p < predicates.size(); ++p) {
    if (predicate_phrase(p) == phrase) return p;
  }
  return std::nullopt;
}

std::vector<std::string> WorldCatalogues::answer_pool() const {
  std::vector<std::string> pool = {"yes", "no",   "zero", "one", "two",
                                   "three", "four", "five", "six"};
  pool.insert(pool.end(), colors.begin(), colors.end());
  pool.insert(pool.end(), sizes.begin(), sizes.end());
  pool.insert(pool.end(), objects.names.begin(), objects.names.end());
  for (const std::string& c : colors) {
    for (const std::string& o : objects.names) pool.push_back(c + " " + o);
  }
  return pool;
}

namespace {

bool predicate_feasible(const WorldCatalogues& cats, std::size_t p, std::size_t subj_cat,
                        std::size_t obj_cat) {
  if (subj_cat == obj_cat) return false;
  const std::string& pred = cats.predicates.names[p];
  const std::string& s = cats.objects.names[subj_cat];
  const std::string& o = cats.objects.names[obj_cat];
  if (pred == "wear") return in_group(kPeople, s) && in_group(kClothing, o);
  if (pred == "hold") return in_group(kPeople, s) && in_group(kPortable, o);
  if (pred == "on") return in_group(kSitters, s) && in_group(kSurfaces, o);
  return true;  // spatial relations hold between any distinct pair
}

bool is_orientation(const WorldCatalogues& cats, std::size_t p) {
  const std::string& n = cats.predicates.names[p];
  return n == "left-of" || n == "right-of";
}

bool is_symmetric_pred(const WorldCatalogues& cats, std::size_t p) {
  return cats.predicates.names[p] == "near";
}

struct EdgeSampler {
  const WorldCatalogues& cats;
  SceneGraphInstance& graph;
  std::set<std::pair<std::size_t, std::size_t>> used_ordered;
  std::set<std::pair<std::size_t, std::size_t>> oriented_unordered;

  bool can_add(std::size_t a, std::size_t p, std::size_t b) const {
    if (used_ordered.count({a, b})) return false;
    if (is_orientation(cats, p)) {
      auto key = std::minmax(a, b);
      if (oriented_unordered.count({key.first, key.second})) return false;
    }
    return predicate_feasible(cats, p, a, b);
  }

  void add(std::size_t a, std::size_t p, std::size_t b) {
    graph.edges.push_back({a, p, b});
    used_ordered.insert({a, b});
    if (is_orientation(cats, p)) {
      auto key = std::minmax(a, b);
      oriented_unordered.insert({key.first, key.second});
    }
  }
};

}  // namespace

Scene generate_world(std::uint64_t seed, const RunConfig& cfg, const WorldCatalogues& cats) {
  Rng rng(seed);
  const std::size_t r = cats.objects.size();
  const std::size_t n_colors = cats.colors.size();
  const std::size_t n_sizes = cats.sizes.size();
  const std::size_t k = static_cast<std::size_t>(cfg.regions_per_image);
  const std::size_t d_u = static_cast<std::size_t>(cfg.region_feature_size);

  Scene scene;
  scene.slots.assign(r, std::nullopt);
  scene.graph.present.assign(r, 0);
  scene.graph.region_index.assign(r, -1);

  const std::size_t span = static_cast<std::size_t>(cfg.objects_max - cfg.objects_min + 1);
  const std::size_t n_obj = static_cast<std::size_t>(cfg.objects_min) + rng.index(span);

  std::vector<std::size_t> slot_order(r);
  for (std::size_t i = 0; i < r; ++i) slot_order[i] = i;
  rng.shuffle(slot_order);
  std::vector<std::size_t> chosen(slot_order.begin(), slot_order.begin() + n_obj);
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t slot : chosen) {
    SceneObject obj;
    obj.category = slot;
    obj.color = rng.index(n_colors);
    obj.size = rng.index(n_sizes);
    scene.slots[slot] = obj;
    scene.graph.present[slot] = 1;
  }

  // Relations. A cross-binding theme (two edges with the same predicate on
  // disjoint pairs) makes pooled graph features ambiguous where attention
  // is not, which the ablation study leans on.
  EdgeSampler sampler{cats, scene.graph, {}, {}};
  const std::size_t max_edges = static_cast<std::size_t>(cfg.max_edges);
  if (n_obj >= 4 && rng.uniform() < 0.7) {
    std::vector<std::size_t> pred_order(cats.predicates.size());
    for (std::size_t i = 0; i < pred_order.size(); ++i) pred_order[i] = i;
    rng.shuffle(pred_order);
    for (std::size_t p : pred_order) {
      std::vector<std::pair<std::size_t, std::size_t>> feasible;
      for (std::size_t a : chosen) {
        for (std::size_t b : chosen) {
          if (a != b && predicate_feasible(cats, p, a, b)) feasible.push_back({a, b});
        }
      }
      rng.shuffle(feasible);
      bool placed = false;
      for (std::size_t i = 0; i < feasible.size() && !placed; ++i) {
        for (std::size_t j = i + 1; j < feasible.size(); ++j) {
          auto [a1, b1] = feasible[i];
          auto [a2, b2] = feasible[j];
          if (a1 == a2 || a1 == b2 || b1 == a2 || b1 == b2) continue;
          if (!sampler.can_add(a1, p, b1) || !sampler.can_add(a2, p, b2)) continue;
          sampler.add(a1, p, b1);
          sampler.add(a2, p, b2);
          placed = true;
          break;
        }
      }
      if (placed) break;
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a : chosen) {
    for (std::size_t b : chosen) {
      if (a != b) pairs.push_back({a, b});
    }
  }
  rng.shuffle(pairs);
  const std::size_t target = std::min(max_edges, 1 + rng.index(n_obj + 2));
  for (const auto& [a, b] : pairs) {
    if (scene.graph.edges.size() >= target || scene.graph.edges.size() >= max_edges) break;
    std::vector<std::size_t> options;
    for (std::size_t p = 0; p < cats.predicates.size(); ++p) {
      if (sampler.can_add(a, p, b)) options.push_back(p);
    }
    if (options.empty()) continue;
    sampler.add(a, options[rng.index(options.size())], b);
  }
  if (scene.graph.edges.empty() && n_obj >= 2) {
    // Guarantee at least one relation per scene.
    for (const auto& [a, b] : pairs) {
      std::size_t near_id = 0;
      for (std::size_t p = 0; p < cats.predicates.size(); ++p) {
        if (is_symmetric_pred(cats, p)) near_id = p;
      }
      if (sampler.can_add(a, near_id, b)) {
        sampler.add(a, near_id, b);
        break;
      }
    }
  }

  // Region features: [category one-hot | color one-hot | size one-hot |
  // gaussian noise], truncated or padded to D_u. Unassigned regions are
  // pure noise.
  scene.regions = Array::zeros({d_u, k});
  std::vector<std::size_t> region_order(k);
  for (std::size_t i = 0; i < k; ++i) region_order[i] = i;
  rng.shuffle(region_order);
  std::size_t next_region = 0;
  for (std::size_t slot : chosen) {
    scene.graph.region_index[slot] = static_cast<int>(region_order[next_region++]);
  }
  const std::size_t semantic = r + n_colors + n_sizes;
  for (std::size_t j = 0; j < k; ++j) {
    int owner = -1;
    for (std::size_t slot : chosen) {
      if (scene.graph.region_index[slot] == static_cast<int>(j)) owner = static_cast<int>(slot);
    }
    if (owner >= 0) {
      const SceneObject& obj = *scene.slots[static_cast<std::size_t>(owner)];
      auto set_hot = [&](std::size_t offset, std::size_t idx) {
        if (offset + idx < d_u) scene.regions.at(offset + idx, j) = 1.0;
      };
      set_hot(0, obj.category);
      set_hot(r, obj.color);
      set_hot(r + n_colors, obj.size);
      for (std::size_t i = semantic; i < d_u; ++i) {
        scene.regions.at(i, j) = cfg.noise_level * rng.gaussian();
      }
    } else {
      for (std::size_t i = 0; i < d_u; ++i) {
        scene.regions.at(i, j) = cfg.noise_level * rng.gaussian();
      }
    }
  }
  return scene;
}

namespace {

enum class Family { AttrColor, AttrSize, Existence, Count, RelType, RelConnection, Pronoun };

Family sample_family(Rng& rng) {
  const double u = rng.uniform();
  if (u < 0.14) return Family::AttrColor;
  if (u < 0.24) return Family::AttrSize;
  if (u < 0.32) return Family::Existence;
  if (u < 0.37) return Family::Count;
  if (u < 0.77) return Family::RelType;
  if (u < 0.88) return Family::RelConnection;
  return Family::Pronoun;
}

std::vector<std::size_t> present_slots(const Scene& scene) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scene.slots.size(); ++i) {
    if (scene.slots[i]) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> absent_slots(const Scene& scene) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scene.slots.size(); ++i) {
    if (!scene.slots[i]) out.push_back(i);
  }
  return out;
}

struct QA {
  std::string question;
  std::string answer;
};

std::optional<QA> make_rel_type(const Scene& scene, Rng& rng, const WorldCatalogues& cats) {
  const auto& edges = scene.graph.edges;
  if (edges.empty()) return std::nullopt;
  const auto& obj = cats.objects.names;
  auto question_for = [&](std::size_t s, std::size_t p, std::size_t o) {
    return "is the " + obj[s] + " " + cats.predicate_phrase(p) + " the " + obj[o];
  };
  if (rng.uniform() < 0.5) {
    const SceneEdge& e = edges[rng.index(edges.size())];
    return QA{question_for(e.subject, e.predicate, e.object), "yes"};
  }
  // Negative cases, in decreasing order of how much graph structure they
  // require: wrong predicate, reversed direction, cross-pair binding,
  // unconnected pair, absent object.
  const double u = rng.uniform();
  auto try_wrong_pred = [&]() -> std::optional<QA> {
    std::vector<std::size_t> order(edges.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t ei : order) {
      const SceneEdge& e = edges[ei];
      std::vector<std::size_t> alts;
      for (std::size_t p = 0; p < cats.predicates.size(); ++p) {
        if (p != e.predicate && predicate_feasible(cats, p, e.subject, e.object) &&
            !scene.graph.has_edge(e.subject, p, e.object)) {
          alts.push_back(p);
        }
      }
      if (!alts.empty()) {
        return QA{question_for(e.subject, alts[rng.index(alts.size())], e.object), "no"};
      }
    }
    return std::nullopt;
  };
  auto try_reversed = [&]() -> std::optional<QA> {
    std::vector<std::size_t> order(edges.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t ei : order) {
      const SceneEdge& e = edges[ei];
      if (is_symmetric_pred(cats, e.predicate)) continue;
      if (!predicate_feasible(cats, e.predicate, e.object, e.subject)) continue;
      if (scene.graph.has_edge(e.object, e.predicate, e.subject)) continue;
      return QA{question_for(e.object, e.predicate, e.subject), "no"};
    }
    return std::nullopt;
  };
  auto try_cross_pair = [&]() -> std::optional<QA> {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      for (std::size_t j = 0; j < edges.size(); ++j) {
        if (i == j) continue;
        const SceneEdge& a = edges[i];
        const SceneEdge& b = edges[j];
        if (a.predicate != b.predicate) continue;
        if (a.subject == b.subject || a.object == b.object) continue;
        if (scene.graph.has_edge(a.subject, a.predicate, b.object)) continue;
        if (!predicate_feasible(cats, a.predicate, a.subject, b.object)) continue;
        pairs.push_back({i, j});
      }
    }
    if (pairs.empty()) return std::nullopt;
    auto [i, j] = pairs[rng.index(pairs.size())];
    return QA{question_for(edges[i].subject, edges[i].predicate, edges[j].object), "no"};
  };
  auto try_unconnected = [&]() -> std::optional<QA> {
    auto present = present_slots(scene);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a : present) {
      for (std::size_t b : present) {
        if (a != b && !scene.graph.connected(a, b)) pairs.push_back({a, b});
      }
    }
    rng.shuffle(pairs);
    for (const auto& [a, b] : pairs) {
      std::vector<std::size_t> feas;
      for (std::size_t p = 0; p < cats.predicates.size(); ++p) {
        if (predicate_feasible(cats, p, a, b)) feas.push_back(p);
      }
      if (!feas.empty()) return QA{question_for(a, feas[rng.index(feas.size())], b), "no"};
    }
    return std::nullopt;
  };
  auto try_absent = [&]() -> std::optional<QA> {
    auto present = present_slots(scene);
    auto absent = absent_slots(scene);
    if (present.empty() || absent.empty()) return std::nullopt;
    const std::size_t a = present[rng.index(present.size())];
    const std::size_t b = absent[rng.index(absent.size())];
    std::vector<std::size_t> feas;
    for (std::size_t p = 0; p < cats.predicates.size(); ++p) {
      if (predicate_feasible(cats, p, a, b)) feas.push_back(p);
    }
    if (feas.empty()) return std::nullopt;
    return QA{question_for(a, feas[rng.index(feas.size())], b), "no"};
  };

  std::optional<QA> qa;
  if (u < 0.30) {
    qa = try_wrong_pred();
  } else if (u < 0.50) {
    qa = try_reversed();
  } else if (u < 0.80) {
    qa = try_cross_pair();
  } else if (u < 0.95) {
    qa = try_unconnected();
  } else {
    qa = try_absent();
  }
  if (!qa) qa = try_cross_pair();
  if (!qa) qa = try_wrong_pred();
  if (!qa) qa = try_reversed();
  if (!qa) qa = try_unconnected();
  if (!qa) qa = try_absent();
  return qa;
}

std::optional<QA> make_rel_connection(const Scene& scene, Rng& rng, const WorldCatalogues& cats) {
  const auto& obj = cats.objects.names;
  auto question_for = [&](std::size_t a, std::size_t b) {
    return "are the " + obj[a] + " and the " + obj[b] + " related";
  };
  if (rng.uniform() < 0.5 && !scene.graph.edges.empty()) {
    const SceneEdge& e = scene.graph.edges[rng.index(scene.graph.edges.size())];
    std::size_t a = e.subject;
    std::size_t b = e.object;
    if (rng.uniform() < 0.5) std::swap(a, b);
    return QA{question_for(a, b), "yes"};
  }
  auto present = present_slots(scene);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a : present) {
    for (std::size_t b : present) {
      if (a != b && !scene.graph.connected(a, b)) pairs.push_back({a, b});
    }
  }
  if (!pairs.empty() && rng.uniform() < 0.8) {
    const auto& [a, b] = pairs[rng.index(pairs.size())];
    return QA{question_for(a, b), "no"};
  }
  auto absent = absent_slots(scene);
  if (!absent.empty() && !present.empty()) {
    return QA{question_for(present[rng.index(present.size())], absent[rng.index(absent.size())]),
              "no"};
  }
  if (!pairs.empty()) {
    const auto& [a, b] = pairs[rng.index(pairs.size())];
    return QA{question_for(a, b), "no"};
  }
  return std::nullopt;
}

}  // namespace

DialogueExample render_dialogue(const Scene& scene, std::uint64_t seed, const RunConfig& cfg,
                                const WorldCatalogues& cats, std::uint64_t image_id,
                                GenStats* stats) {
  Rng rng(seed);
  DialogueExample ex;
  ex.image_id = image_id;
  ex.regions = scene.regions;
  ex.graph = scene.graph;

  const auto present = present_slots(scene);
  if (present.empty()) throw ContractError("render_dialogue: scene has no objects");
  const auto& obj = cats.objects.names;

  auto describe = [&](std::size_t slot) {
    const SceneObject& o = *scene.slots[slot];
    return "a " + cats.sizes[o.size] + " " + cats.colors[o.color] + " " + obj[slot];
  };
  ex.caption = "a picture of " + describe(present[0]);
  if (present.size() >= 2) ex.caption += " and " + describe(present[1]);

  const std::vector<std::string> pool = cats.answer_pool();
  const std::size_t n_cand = static_cast<std::size_t>(cfg.candidates_per_round);
  if (pool.size() < n_cand) {
    throw ContractError("render_dialogue: answer pool of " + std::to_string(pool.size()) +
                        " cannot fill " + std::to_string(n_cand) + " candidates");
  }

  int prev_attr_slot = -1;
  bool prev_was_color = false;
  for (int round = 0; round < cfg.rounds_per_dialogue; ++round) {
    Family family = sample_family(rng);
    if (family == Family::Pronoun && prev_attr_slot < 0) family = Family::AttrColor;

    QA qa;
    bool is_attr = false;
    bool attr_is_color = false;
    int attr_slot = -1;
    switch (family) {
      case Family::AttrColor: {
        const std::size_t slot = present[rng.index(present.size())];
        qa = {"what color is the " + obj[slot], cats.colors[scene.slots[slot]->color]};
        is_attr = true;
        attr_is_color = true;
        attr_slot = static_cast<int>(slot);
        break;
      }
      case Family::AttrSize: {
        const std::size_t slot = present[rng.index(present.size())];
        qa = {"what size is the " + obj[slot], cats.sizes[scene.slots[slot]->size]};
        is_attr = true;
        attr_is_color = false;
        attr_slot = static_cast<int>(slot);
        break;
      }
      case Family::Existence: {
        const auto absent = absent_slots(scene);
        if (!absent.empty() && rng.uniform() < 0.5) {
          qa = {"is there a " + obj[absent[rng.index(absent.size())]] + " in the image", "no"};
        } else {
          qa = {"is there a " + obj[present[rng.index(present.size())]] + " in the image", "yes"};
        }
        break;
      }
      case Family::Count: {
        const std::size_t cat = rng.index(obj.size());
        qa = {"how many " + obj[cat] + " are there", scene.slots[cat] ? "one" : "zero"};
        break;
      }
      case Family::RelType: {
        auto r = make_rel_type(scene, rng, cats);
        if (!r) {
          if (stats) ++stats->fallback_questions;
          qa = {"is there a " + obj[present[rng.index(present.size())]] + " in the image", "yes"};
        } else {
          qa = *r;
        }
        break;
      }
      case Family::RelConnection: {
        auto r = make_rel_connection(scene, rng, cats);
        if (!r) {
          if (stats) ++stats->fallback_questions;
          qa = {"is there a " + obj[present[rng.index(present.size())]] + " in the image", "yes"};
        } else {
          qa = *r;
        }
        break;
      }
      case Family::Pronoun: {
        const std::size_t slot = static_cast<std::size_t>(prev_attr_slot);
        const SceneObject& o = *scene.slots[slot];
        if (prev_was_color) {
          qa = {"what size is it", cats.sizes[o.size]};
          attr_is_color = false;
        } else {
          qa = {"what color is it", cats.colors[o.color]};
          attr_is_color = true;
        }
        is_attr = true;
        attr_slot = prev_attr_slot;
        break;
      }
    }
    prev_attr_slot = is_attr ? attr_slot : -1;
    prev_was_color = is_attr && attr_is_color;

    RoundData rd;
    rd.question = qa.question;
    rd.answer = qa.answer;

    // 99 distractors without replacement, never duplicating the GT string.
    std::vector<std::size_t> pool_ids;
    pool_ids.reserve(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (pool[i] != qa.answer) pool_ids.push_back(i);
    }
    rng.shuffle(pool_ids);
    rd.options.reserve(n_cand);
    for (std::size_t i = 0; i + 1 < n_cand; ++i) rd.options.push_back(pool[pool_ids[i]]);
    rd.gt_index = rng.index(n_cand);
    rd.options.insert(rd.options.begin() + static_cast<long>(rd.gt_index), qa.answer);
    ex.rounds.push_back(std::move(rd));
  }
  return ex;
}

Corpus generate_corpus(const RunConfig& cfg, GenStats* stats) {
  cfg.validate();
  Corpus corpus;
  corpus.header.config = cfg;
  corpus.header.catalogues = WorldCatalogues::defaults(static_cast<std::size_t>(cfg.max_edges));
  Rng master(cfg.seed);
  for (int i = 0; i < cfg.num_dialogues; ++i) {
    const std::uint64_t scene_seed = master.next_u64();
    const std::uint64_t dialogue_seed = master.next_u64();
    Scene scene = generate_world(scene_seed, cfg, corpus.header.catalogues);
    corpus.examples.push_back(render_dialogue(scene, dialogue_seed, cfg,
                                              corpus.header.catalogues,
                                              static_cast<std::uint64_t>(i + 1), stats));
  }
  return corpus;
}

std::optional<std::string> relational_answer_from_graph(const std::string& question,
                                                        const SceneGraphInstance& graph,
                                                        const WorldCatalogues& cats) {
  const std::vector<std::string> words = split_words(question);
  auto category_id = [&](const std::string& w) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < cats.objects.size(); ++i) {
      if (cats.objects.names[i] == w) return i;
    }
    return std::nullopt;
  };
  // "are the A and the B related"
  if (words.size() == 7 && words[0] == "are" && words[3] == "and" && words[6] == "related") {
    auto a = category_id(words[2]);
    auto b = category_id(words[5]);
    if (!a || !b) return std::nullopt;
    return graph.connected(*a, *b) ? "yes" : "no";
  }
  // "is the A <phrase...> the B"
  if (words.size() >= 6 && words[0] == "is" && words[1] == "the") {
    auto a = category_id(words[2]);
    auto b = category_id(words.back());
    if (!a || !b || words[words.size() - 2] != "the") return std::nullopt;
    std::string phrase;
    for (std::size_t i = 3; i + 2 < words.size(); ++i) {
      if (!phrase.empty()) phrase += " ";
      phrase += words[i];
    }
    auto p = cats.predicate_from_phrase(phrase);
    if (!p) return std::nullopt;
    return graph.has_edge(*a, *p, *b) ? "yes" : "no";
  }
  return std::nullopt;
}

}  // namespace gdial
