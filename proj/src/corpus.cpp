#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gdial/data.hpp"
#include "gdial/errors.hpp"
#include "json.hpp"

namespace gdial {

using ojson = nlohmann::ordered_json;

// --- vocabulary ---------------------------------------------------------

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens_after_reserved) {
  tokens_ = {"<pad>", "<unk>", "<s>", "<sep>"};
  tokens_.insert(tokens_.end(), tokens_after_reserved.begin(), tokens_after_reserved.end());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw ContractError("Vocabulary: duplicate token '" + tokens_[i] + "'");
    }
  }
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw VocabularyError("Vocabulary: id " + std::to_string(id) + " out of range for " +
                          std::to_string(tokens_.size()) + " tokens");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::string& text) const {
  std::vector<int> out;
  for (const std::string& w : split_words(text)) out.push_back(id(w));
  return out;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocabulary build_vocab(const Corpus& corpus, int min_freq) {
  if (corpus.examples.empty()) throw ContractError("build_vocab: empty corpus");
  std::map<std::string, std::size_t> freq;
  auto count = [&](const std::string& text) {
    for (const std::string& w : split_words(text)) ++freq[w];
  };
  for (const DialogueExample& ex : corpus.examples) {
    count(ex.caption);
    for (const RoundData& rd : ex.rounds) {
      count(rd.question);
      count(rd.answer);
      for (const std::string& opt : rd.options) count(opt);
    }
  }
  // Sort by descending frequency, ties by token, so ids are stable.
  std::vector<std::pair<std::string, std::size_t>> kept(freq.begin(), freq.end());
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens;
  for (const auto& [tok, n] : kept) {
    if (n >= static_cast<std::size_t>(min_freq)) tokens.push_back(tok);
  }
  return Vocabulary(std::move(tokens));
}

// --- base64 --------------------------------------------------------------

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}
}  // namespace

std::string base64_encode(const unsigned char* data, std::size_t len) {
  std::string out;
  out.reserve((len + 2) / 3 * 4);
  for (std::size_t i = 0; i < len; i += 3) {
    unsigned int v = static_cast<unsigned int>(data[i]) << 16;
    if (i + 1 < len) v |= static_cast<unsigned int>(data[i + 1]) << 8;
    if (i + 2 < len) v |= static_cast<unsigned int>(data[i + 2]);
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(i + 1 < len ? kB64[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < len ? kB64[v & 63] : '=');
  }
  return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw ParseError("base64: length not a multiple of 4");
  std::vector<unsigned char> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int vals[4] = {0, 0, 0, 0};
    int pad = 0;
    for (int j = 0; j < 4; ++j) {
      char c = text[i + static_cast<std::size_t>(j)];
      if (c == '=') {
        ++pad;
        vals[j] = 0;
      } else {
        vals[j] = b64_value(c);
        if (vals[j] < 0 || pad > 0) throw ParseError("base64: invalid character");
      }
    }
    unsigned int v = (static_cast<unsigned int>(vals[0]) << 18) |
                     (static_cast<unsigned int>(vals[1]) << 12) |
                     (static_cast<unsigned int>(vals[2]) << 6) | static_cast<unsigned int>(vals[3]);
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xFF));
    if (pad < 2) out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
    if (pad < 1) out.push_back(static_cast<unsigned char>(v & 0xFF));
  }
  return out;
}

// --- checksums ------------------------------------------------------------

std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string file_checksum_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for checksum: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
  return hex;
}

// --- serialization --------------------------------------------------------

namespace {

std::string encode_regions(const Array& regions) {
  const std::size_t n = regions.size();
  std::vector<unsigned char> bytes(n * 8);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &regions[i], 8);
    for (int b = 0; b < 8; ++b) {
      bytes[i * 8 + static_cast<std::size_t>(b)] =
          static_cast<unsigned char>((bits >> (8 * b)) & 0xFF);
    }
  }
  return base64_encode(bytes.data(), bytes.size());
}

Array decode_regions(const std::string& text, std::size_t d_u, std::size_t k) {
  const std::vector<unsigned char> bytes = base64_decode(text);
  if (bytes.size() != d_u * k * 8) {
    throw ContractError("field regions: payload holds " + std::to_string(bytes.size() / 8) +
                        " values, expected " + std::to_string(d_u * k));
  }
  Array out({d_u, k});
  for (std::size_t i = 0; i < d_u * k; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(bytes[i * 8 + static_cast<std::size_t>(b)]) << (8 * b);
    }
    std::memcpy(&out[i], &bits, 8);
  }
  return out;
}

ojson header_to_json(const CorpusHeader& h) {
  ojson j;
  j["format_version"] = h.format_version;
  j["config"] = h.config.to_map();
  j["catalogues"] = {{"objects", h.catalogues.objects.names},
                     {"predicates", h.catalogues.predicates.names},
                     {"colors", h.catalogues.colors},
                     {"sizes", h.catalogues.sizes}};
  return j;
}

ojson example_to_json(const DialogueExample& ex) {
  ojson j;
  j["image_id"] = ex.image_id;
  j["regions"] = encode_regions(ex.regions);
  ojson edges = ojson::array();
  for (const SceneEdge& e : ex.graph.edges) {
    edges.push_back(ojson::array({e.subject, e.predicate, e.object}));
  }
  std::vector<int> present(ex.graph.present.begin(), ex.graph.present.end());
  j["graph"] = {{"present", present},
                {"edges", edges},
                {"region_index", ex.graph.region_index}};
  j["caption"] = ex.caption;
  ojson dialog = ojson::array();
  for (const RoundData& rd : ex.rounds) {
    dialog.push_back({{"question", rd.question},
                      {"answer", rd.answer},
                      {"answer_options", rd.options},
                      {"gt_index", rd.gt_index}});
  }
  j["dialog"] = dialog;
  return j;
}

void validate_example(const DialogueExample& ex, const CorpusHeader& h, std::size_t line_no) {
  auto fail = [&](const std::string& field, const std::string& why) {
    throw ContractError("line " + std::to_string(line_no) + " field " + field + ": " + why);
  };
  const RunConfig& cfg = h.config;
  if (ex.regions.rank() != 2 ||
      ex.regions.rows() != static_cast<std::size_t>(cfg.region_feature_size) ||
      ex.regions.cols() != static_cast<std::size_t>(cfg.regions_per_image)) {
    fail("regions", "shape " + ex.regions.shape_str() + " does not match header config");
  }
  try {
    ex.graph.validate(h.catalogues.objects, h.catalogues.predicates);
  } catch (const Error& e) {
    fail("graph", e.what());
  }
  for (std::size_t i = 0; i < ex.graph.region_index.size(); ++i) {
    if (ex.graph.region_index[i] >= cfg.regions_per_image) {
      fail("graph.region_index", "slot " + std::to_string(i) + " points past region count");
    }
  }
  if (ex.rounds.empty()) fail("dialog", "no rounds");
  for (std::size_t ri = 0; ri < ex.rounds.size(); ++ri) {
    const RoundData& rd = ex.rounds[ri];
    const std::string field = "dialog[" + std::to_string(ri) + "]";
    if (rd.options.size() != static_cast<std::size_t>(cfg.candidates_per_round)) {
      fail(field + ".answer_options", "expected " + std::to_string(cfg.candidates_per_round) +
                                          " options, got " + std::to_string(rd.options.size()));
    }
    if (rd.gt_index >= rd.options.size()) fail(field + ".gt_index", "out of range");
    if (rd.options[rd.gt_index] != rd.answer) {
      fail(field + ".gt_index", "does not point at the ground-truth answer");
    }
    std::set<std::string> uniq(rd.options.begin(), rd.options.end());
    if (uniq.size() != rd.options.size()) fail(field + ".answer_options", "duplicate candidate");
  }
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << header_to_json(corpus.header).dump() << "\n";
  for (const DialogueExample& ex : corpus.examples) {
    out << example_to_json(ex).dump() << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus: " + path);
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const std::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      if (!have_header) {
        CorpusHeader h;
        h.format_version = j.at("format_version").get<int>();
        if (h.format_version != 1) {
          throw CompatError("unsupported corpus format_version " +
                            std::to_string(h.format_version));
        }
        h.config = RunConfig::from_map(j.at("config").get<std::map<std::string, std::string>>());
        const ojson& cats = j.at("catalogues");
        h.catalogues.objects.names = cats.at("objects").get<std::vector<std::string>>();
        h.catalogues.predicates.names = cats.at("predicates").get<std::vector<std::string>>();
        h.catalogues.predicates.max_edges = static_cast<std::size_t>(h.config.max_edges);
        h.catalogues.colors = cats.at("colors").get<std::vector<std::string>>();
        h.catalogues.sizes = cats.at("sizes").get<std::vector<std::string>>();
        h.catalogues.objects.validate();
        h.catalogues.predicates.validate();
        corpus.header = std::move(h);
        have_header = true;
        continue;
      }
      DialogueExample ex;
      ex.image_id = j.at("image_id").get<std::uint64_t>();
      ex.regions = decode_regions(j.at("regions").get<std::string>(),
                                  static_cast<std::size_t>(corpus.header.config.region_feature_size),
                                  static_cast<std::size_t>(corpus.header.config.regions_per_image));
      const ojson& g = j.at("graph");
      std::vector<int> present = g.at("present").get<std::vector<int>>();
      ex.graph.present.assign(present.begin(), present.end());
      for (const ojson& e : g.at("edges")) {
        if (!e.is_array() || e.size() != 3) {
          throw ContractError("field graph.edges: expected [subject, predicate, object]");
        }
        ex.graph.edges.push_back(
            {e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<std::size_t>()});
      }
      ex.graph.region_index = g.at("region_index").get<std::vector<int>>();
      ex.caption = j.at("caption").get<std::string>();
      for (const ojson& r : j.at("dialog")) {
        RoundData rd;
        rd.question = r.at("question").get<std::string>();
        rd.answer = r.at("answer").get<std::string>();
        rd.options = r.at("answer_options").get<std::vector<std::string>>();
        rd.gt_index = r.at("gt_index").get<std::size_t>();
        ex.rounds.push_back(std::move(rd));
      }
      validate_example(ex, corpus.header, line_no);
      corpus.examples.push_back(std::move(ex));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw ParseError("line 1: missing corpus header");
  if (corpus.examples.empty()) throw ParseError("corpus has a header but no dialogues");
  return corpus;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n_examples,
                                                   std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw ContractError("make_batches: batch_size must be >= 1");
  std::vector<std::size_t> ids(n_examples);
  for (std::size_t i = 0; i < n_examples; ++i) ids[i] = i;
  rng.shuffle(ids);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < n_examples; i += batch_size) {
    batches.emplace_back(ids.begin() + static_cast<long>(i),
                         ids.begin() + static_cast<long>(std::min(n_examples, i + batch_size)));
  }
  return batches;
}

}  // namespace gdial
