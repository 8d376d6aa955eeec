#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gdial/checkpoint.hpp"
#include "gdial/data.hpp"
#include "gdial/metrics.hpp"
#include "gdial/model.hpp"
#include "json.hpp"

namespace gdial {

// Train/val membership is a stable hash of the dialogue id and the seed, so
// any process reproduces the same split from the checkpoint config.
bool in_validation_split(std::uint64_t image_id, const RunConfig& cfg);

struct TrainCallbacks {
  std::function<void(const std::string& epoch_json_line)> on_epoch;
  // Optional early stop, checked after each epoch's log entry.
  std::function<bool(int epoch, const Model& model)> should_stop;
};

struct TrainResult {
  int epochs_run = 0;
  double first_epoch_loss = 0.0;
  double best_val_mrr = -1.0;
  std::string log_path;
  std::string best_path;
  std::string last_path;
};

// Writes train_log.jsonl plus best.ckpt / last.ckpt under out_dir. The
// model config adopts the corpus header's world-shape fields so checkpoints
// always describe the data they were trained on.
TrainResult train_model(const RunConfig& cfg, const Corpus& corpus,
                        const std::string& corpus_checksum, const std::string& out_dir,
                        const TrainCallbacks& callbacks = {});

struct AttentionProbe {
  std::uint64_t image_id = 0;
  std::size_t round_index = 0;
  const Array* history_weights = nullptr;  // null when the head is disabled
  const Array* visual_weights = nullptr;
  const Array* graph_weights = nullptr;
  const std::vector<std::uint8_t>* graph_mask = nullptr;
  const Array* fused = nullptr;
};

struct EvalOptions {
  std::string split = "all";  // train | val | all
  int workers = 1;
  bool dump_ranks = false;
  // Runs per evaluated round; forces single-threaded evaluation.
  std::function<void(const AttentionProbe&)> probe;
};

struct EvalOutput {
  MetricsReport metrics;
  std::vector<std::size_t> ranks;  // in (dialogue, round) order
  nlohmann::ordered_json report;
};

EvalOutput evaluate_model(const Model& model, const Corpus& corpus,
                          const std::string& corpus_checksum, const EvalOptions& opts);

// Ranked options with scores for one round, plus per-head attention weights.
nlohmann::ordered_json infer_round(const Model& model, const Corpus& corpus,
                                   std::uint64_t image_id, std::size_t round_index);

// Finite-difference verification of every primitive, every layer, and the
// full d=8 pipeline under both decoders. Entries carry max relative error;
// "pass" requires all of them at or below the tolerance.
nlohmann::ordered_json run_gradcheck(double tolerance = 1e-4);

}  // namespace gdial
