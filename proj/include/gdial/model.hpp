#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gdial/attention.hpp"
#include "gdial/config.hpp"
#include "gdial/data.hpp"
#include "gdial/hiergcn.hpp"
#include "gdial/nn.hpp"
#include "gdial/rng.hpp"

namespace gdial {

// Owns every Parameter of one model instance. Which members exist depends
// on the ablation flags; allocation order is fixed and determines the
// checkpoint array order and the optimizer slots.
class Model {
 public:
  Model(RunConfig cfg, WorldCatalogues catalogues, Vocabulary vocab);
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  // Fan-based uniform init of all weights, biases zero, from cfg.seed.
  static Model initialized(RunConfig cfg, WorldCatalogues catalogues, Vocabulary vocab);

  const RunConfig& config() const noexcept { return cfg_; }
  const WorldCatalogues& catalogues() const noexcept { return catalogues_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }

  std::vector<Parameter*> parameters() const;
  Parameter* find(const std::string& name) const;
  void zero_grads() const;

  std::size_t hidden_size() const { return static_cast<std::size_t>(cfg_.hidden_size); }
  std::size_t embed_size() const { return static_cast<std::size_t>(cfg_.word_embedding_size); }

  // null when the owning feature is disabled
  Parameter* word_embedding = nullptr;  // [emb, V]
  LstmParams lstm_question;
  LstmParams lstm_history;
  LstmParams lstm_answer;   // discriminative option encoder
  LstmParams lstm_decoder;  // generative decoder
  Parameter* decoder_out_weight = nullptr;  // [V, d]
  Parameter* decoder_out_bias = nullptr;    // {V}
  Parameter* region_projection = nullptr;   // [d, D_u]
  Parameter* predicate_in = nullptr;        // [d, s]
  Parameter* predicate_out = nullptr;       // [d, s]
  HierGcnParams gcn;
  AttentionParams attn_history;
  AttentionParams attn_visual;
  AttentionParams attn_graph;
  Parameter* fusion_weight = nullptr;  // [d, fusion_blocks*d]

 private:
  void init_params(Rng& rng);
  Parameter* add(const std::string& name, std::vector<std::size_t> shape);

  RunConfig cfg_;
  WorldCatalogues catalogues_;
  Vocabulary vocab_;
  std::vector<std::unique_ptr<Parameter>> store_;
};

}  // namespace gdial
