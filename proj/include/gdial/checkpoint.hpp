#pragma once

#include <memory>
#include <string>

#include "gdial/model.hpp"
#include "gdial/optim.hpp"
#include "json.hpp"

namespace gdial {

struct CheckpointExtras {
  int epoch = 0;
  std::string rng_state;
  nlohmann::ordered_json val_metrics;  // null when no validation split exists
};

// Self-describing container: magic, JSON header (config, catalogues,
// vocabulary, array directory), then raw little-endian 64-bit payloads for
// parameter values and Adam moments.
void save_checkpoint(const std::string& path, const Model& model, const AdamState& adam,
                     const CheckpointExtras& extras);

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  std::unique_ptr<AdamState> adam;
  CheckpointExtras extras;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace gdial
