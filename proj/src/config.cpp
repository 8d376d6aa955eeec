#include "gdial/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "gdial/errors.hpp"

namespace gdial {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError("config key " + key + ": expected true/false/1/0, got '" + v + "'");
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config key " + key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": expected a number, got '" + v + "'");
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct KeyDesc {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::map<std::string, KeyDesc>& key_table() {
  static const std::map<std::string, KeyDesc> table = [] {
    std::map<std::string, KeyDesc> t;
    auto add_u64 = [&t](const std::string& k, std::uint64_t RunConfig::* f) {
      t[k] = {[f](RunConfig& c, const std::string& key, const std::string& v) {
                c.*f = static_cast<std::uint64_t>(parse_int(key, v));
              },
              [f](const RunConfig& c) { return std::to_string(c.*f); }};
    };
    auto add_int = [&t](const std::string& k, int RunConfig::* f) {
      t[k] = {[f](RunConfig& c, const std::string& key, const std::string& v) {
                c.*f = static_cast<int>(parse_int(key, v));
              },
              [f](const RunConfig& c) { return std::to_string(c.*f); }};
    };
    auto add_dbl = [&t](const std::string& k, double RunConfig::* f) {
      t[k] = {[f](RunConfig& c, const std::string& key, const std::string& v) {
                c.*f = parse_double(key, v);
              },
              [f](const RunConfig& c) { return fmt_double(c.*f); }};
    };
    auto add_bool = [&t](const std::string& k, bool RunConfig::* f) {
      t[k] = {[f](RunConfig& c, const std::string& key, const std::string& v) {
                c.*f = parse_bool(key, v);
              },
              [f](const RunConfig& c) { return (c.*f) ? "true" : "false"; }};
    };

    add_u64("seed", &RunConfig::seed);
    add_int("epochs", &RunConfig::epochs);
    add_int("batch_size", &RunConfig::batch_size);
    add_dbl("learning_rate", &RunConfig::learning_rate);
    add_dbl("adam_beta1", &RunConfig::adam_beta1);
    add_dbl("adam_beta2", &RunConfig::adam_beta2);
    add_dbl("adam_epsilon", &RunConfig::adam_epsilon);
    t["decoder"] = {[](RunConfig& c, const std::string& key, const std::string& v) {
                      if (v == "disc") {
                        c.decoder = DecoderKind::Discriminative;
                      } else if (v == "gen") {
                        c.decoder = DecoderKind::Generative;
                      } else {
                        throw ConfigError("config key " + key + ": expected disc or gen, got '" +
                                          v + "'");
                      }
                    },
                    [](const RunConfig& c) {
                      return c.decoder == DecoderKind::Discriminative ? "disc" : "gen";
                    }};
    add_int("workers", &RunConfig::workers);
    add_int("hidden_size", &RunConfig::hidden_size);
    add_int("word_embedding_size", &RunConfig::word_embedding_size);
    add_int("region_feature_size", &RunConfig::region_feature_size);
    add_int("regions_per_image", &RunConfig::regions_per_image);
    add_int("attention_size", &RunConfig::attention_size);
    add_bool("use_graph", &RunConfig::use_graph);
    add_bool("use_relationship_edges", &RunConfig::use_relationship_edges);
    add_bool("use_graph_attention", &RunConfig::use_graph_attention);
    add_bool("use_visual", &RunConfig::use_visual);
    add_bool("use_coattention", &RunConfig::use_coattention);
    add_bool("gcn_bias", &RunConfig::gcn_bias);
    add_bool("gcn_normalize", &RunConfig::gcn_normalize);
    add_bool("gen_length_normalize", &RunConfig::gen_length_normalize);
    add_int("num_dialogues", &RunConfig::num_dialogues);
    add_int("objects_min", &RunConfig::objects_min);
    add_int("objects_max", &RunConfig::objects_max);
    add_int("rounds_per_dialogue", &RunConfig::rounds_per_dialogue);
    add_int("candidates_per_round", &RunConfig::candidates_per_round);
    add_int("max_edges", &RunConfig::max_edges);
    add_dbl("noise_level", &RunConfig::noise_level);
    add_int("vocab_min_freq", &RunConfig::vocab_min_freq);
    add_dbl("val_fraction", &RunConfig::val_fraction);
    return t;
  }();
  return table;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = key_table().find(key);
  if (it == key_table().end()) throw ConfigError("unknown config key: " + key);
  it->second.set(*this, key, value);
}

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> out;
  for (const auto& [k, desc] : key_table()) out[k] = desc.get(*this);
  return out;
}

RunConfig RunConfig::from_map(const std::map<std::string, std::string>& kv) {
  RunConfig c;
  for (const auto& [k, v] : kv) c.set(k, v);
  return c;
}

RunConfig RunConfig::from_string(const std::string& text) {
  RunConfig c;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    std::size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value, got '" +
                        s + "'");
    }
    c.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("invalid config: " + msg);
  };
  require(epochs >= 0, "epochs must be >= 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(learning_rate > 0, "learning_rate must be positive");
  require(adam_beta1 >= 0 && adam_beta1 < 1, "adam_beta1 must lie in [0,1)");
  require(adam_beta2 >= 0 && adam_beta2 < 1, "adam_beta2 must lie in [0,1)");
  require(adam_epsilon > 0, "adam_epsilon must be positive");
  require(workers >= 1, "workers must be >= 1");
  require(hidden_size >= 1, "hidden_size must be >= 1");
  require(word_embedding_size >= 1, "word_embedding_size must be >= 1");
  require(region_feature_size >= 1, "region_feature_size must be >= 1");
  require(regions_per_image >= 1, "regions_per_image must be >= 1");
  require(attention_size >= 1, "attention_size must be >= 1");
  require(num_dialogues >= 1, "num_dialogues must be >= 1");
  require(objects_min >= 1, "objects_min must be >= 1");
  require(objects_max >= objects_min, "objects_max must be >= objects_min");
  require(regions_per_image >= objects_max, "regions_per_image must cover objects_max");
  require(rounds_per_dialogue >= 1, "rounds_per_dialogue must be >= 1");
  require(candidates_per_round >= 2, "candidates_per_round must be >= 2");
  require(max_edges >= 1, "max_edges must be >= 1");
  require(noise_level >= 0, "noise_level must be >= 0");
  require(vocab_min_freq >= 1, "vocab_min_freq must be >= 1");
  require(val_fraction >= 0 && val_fraction < 1, "val_fraction must lie in [0,1)");
  require(use_graph_attention ? use_graph : true,
          "use_graph_attention requires use_graph");
  require(use_relationship_edges ? use_graph : true,
          "use_relationship_edges requires use_graph");
}

void RunConfig::apply_ablation(const std::string& name) {
  use_graph = true;
  use_relationship_edges = true;
  use_graph_attention = true;
  use_visual = true;
  use_coattention = true;
  if (name == "no-sg") {
    use_graph = false;
    use_relationship_edges = false;
    use_graph_attention = false;
  } else if (name == "sg") {
    use_relationship_edges = false;
    use_graph_attention = false;
  } else if (name == "sg-rel") {
    use_graph_attention = false;
  } else if (name == "sg-rel-attn") {
    // full model
  } else if (name == "no-vis") {
    use_visual = false;
  } else if (name == "no-coattn") {
    use_coattention = false;
  } else {
    throw ConfigError("unknown ablation: " + name +
                      " (expected no-sg, sg, sg-rel, sg-rel-attn, no-vis, no-coattn)");
  }
}

}  // namespace gdial
