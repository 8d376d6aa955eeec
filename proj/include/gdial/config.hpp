#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace gdial {

enum class DecoderKind { Discriminative, Generative };

// Every tunable of the artifact, parsed from a flat key=value file.
// Unknown keys are rejected. The full map is embedded in checkpoints and
// reports.
struct RunConfig {
  // run
  std::uint64_t seed = 0;
  int epochs = 5;
  int batch_size = 128;  // dialogues per optimizer step (16 at desk scale)
  double learning_rate = 4e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  DecoderKind decoder = DecoderKind::Discriminative;
  int workers = 1;

  // model dimensions
  int hidden_size = 512;           // d
  int word_embedding_size = 300;
  int region_feature_size = 2048;  // D_u
  int regions_per_image = 36;      // k
  int attention_size = 256;        // D_a

  // ablation switches
  bool use_graph = true;
  bool use_relationship_edges = true;
  bool use_graph_attention = true;
  bool use_visual = true;
  bool use_coattention = true;

  // options
  bool gcn_bias = false;
  bool gcn_normalize = false;
  bool gen_length_normalize = false;

  // synthetic world
  int num_dialogues = 64;
  int objects_min = 2;
  int objects_max = 6;
  int rounds_per_dialogue = 10;
  int candidates_per_round = 100;
  int max_edges = 10;
  double noise_level = 0.1;
  int vocab_min_freq = 1;
  double val_fraction = 0.2;

  void validate() const;

  // Number of d-wide blocks entering the fusion layer:
  // attended history + question always, plus visual and graph when enabled.
  int fusion_blocks() const { return 2 + (use_visual ? 1 : 0) + (use_graph ? 1 : 0); }

  static RunConfig from_file(const std::string& path);
  static RunConfig from_string(const std::string& text);
  static RunConfig from_map(const std::map<std::string, std::string>& kv);
  void set(const std::string& key, const std::string& value);

  // Deterministic key order (sorted); values in canonical text form.
  std::map<std::string, std::string> to_map() const;

  // Ablation presets from the CLI: no-sg, sg, sg-rel, sg-rel-attn, no-vis,
  // no-coattn.
  void apply_ablation(const std::string& name);
};

}  // namespace gdial
