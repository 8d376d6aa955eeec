#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gdial/array.hpp"
#include "gdial/config.hpp"
#include "gdial/rng.hpp"
#include "gdial/scene_graph.hpp"

namespace gdial {

// Fixed catalogues shared by generator, corpus files and models.
struct WorldCatalogues {
  ObjectCatalogue objects;
  PredicateCatalogue predicates;
  std::vector<std::string> colors;
  std::vector<std::string> sizes;

  static WorldCatalogues defaults(std::size_t max_edges);

  // Phrase used for a predicate inside question text ("wearing", "left of").
  std::string predicate_phrase(std::size_t predicate) const;
  std::optional<std::size_t> predicate_from_phrase(const std::string& phrase) const;

  // All candidate-answer strings, in a fixed order.
  std::vector<std::string> answer_pool() const;
};

struct SceneObject {
  std::size_t category = 0;
  std::size_t color = 0;
  std::size_t size = 0;
};

struct Scene {
  std::vector<std::optional<SceneObject>> slots;  // one per catalogue category
  SceneGraphInstance graph;
  Array regions;  // [D_u, k]
};

struct RoundData {
  std::string question;
  std::string answer;
  std::vector<std::string> options;
  std::size_t gt_index = 0;
};

struct DialogueExample {
  std::uint64_t image_id = 0;
  Array regions;  // [D_u, k]
  SceneGraphInstance graph;
  std::string caption;
  std::vector<RoundData> rounds;
};

struct CorpusHeader {
  int format_version = 1;
  RunConfig config;
  WorldCatalogues catalogues;
};

struct Corpus {
  CorpusHeader header;
  std::vector<DialogueExample> examples;
};

struct GenStats {
  std::size_t fallback_questions = 0;
};

// Seeded scene sampling: objects with attributes, consistent relations
// (never both left-of and right-of on one ordered pair), one region feature
// per present object plus background noise regions.
Scene generate_world(std::uint64_t seed, const RunConfig& cfg, const WorldCatalogues& cats);

// Templated question families over a scene: attribute, existence, count,
// relation-type, relation-connection and pronoun follow-ups. Relation
// answers are decidable from the scene graph alone.
DialogueExample render_dialogue(const Scene& scene, std::uint64_t seed, const RunConfig& cfg,
                                const WorldCatalogues& cats, std::uint64_t image_id,
                                GenStats* stats = nullptr);

Corpus generate_corpus(const RunConfig& cfg, GenStats* stats = nullptr);

// Recomputes the expected answer of a relational question from the stored
// graph; nullopt for non-relational questions. Used as the generator
// consistency oracle.
std::optional<std::string> relational_answer_from_graph(const std::string& question,
                                                        const SceneGraphInstance& graph,
                                                        const WorldCatalogues& cats);

// --- vocabulary ---------------------------------------------------------

class Vocabulary {
 public:
  // PAD doubles as the end-of-sequence target of the generative decoder.
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kStart = 2;
  static constexpr int kSep = 3;
  static constexpr int kReserved = 4;

  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens_after_reserved);

  int id(const std::string& token) const;  // kUnk when unknown
  const std::string& token(int id) const;
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::vector<int> encode(const std::string& text) const;

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
};

std::vector<std::string> split_words(const std::string& text);
Vocabulary build_vocab(const Corpus& corpus, int min_freq);

// --- serialization ------------------------------------------------------

// JSONL: a header object carrying catalogues and config, then one object
// per dialogue with fields image_id, regions, graph, caption, dialog.
void save_corpus(const Corpus& corpus, const std::string& path);
Corpus load_corpus(const std::string& path);

std::string base64_encode(const unsigned char* data, std::size_t len);
std::vector<unsigned char> base64_decode(const std::string& text);

std::uint64_t fnv1a64(const void* data, std::size_t len);
std::string file_checksum_hex(const std::string& path);

// --- batching -----------------------------------------------------------

// Seeded shuffle of example indices, chunked into batches.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n_examples,
                                                   std::size_t batch_size, Rng& rng);

}  // namespace gdial
