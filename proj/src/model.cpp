#include "gdial/model.hpp"

#include "gdial/errors.hpp"

namespace gdial {

Model::Model(RunConfig cfg, WorldCatalogues catalogues, Vocabulary vocab)
    : cfg_(std::move(cfg)), catalogues_(std::move(catalogues)), vocab_(std::move(vocab)) {
  cfg_.validate();
  catalogues_.objects.validate();
  catalogues_.predicates.validate();
  const std::size_t d = hidden_size();
  const std::size_t e = embed_size();
  const std::size_t v = vocab_.size();
  const std::size_t d_u = static_cast<std::size_t>(cfg_.region_feature_size);
  const std::size_t s = catalogues_.predicates.size();

  // Allocation order is the serialization order; append only.
  word_embedding = add("word_embedding", {e, v});
  lstm_question = {add("lstm_question.weight", {4 * d, e + d}), add("lstm_question.bias", {4 * d})};
  lstm_history = {add("lstm_history.weight", {4 * d, e + d}), add("lstm_history.bias", {4 * d})};
  lstm_answer = {add("lstm_answer.weight", {4 * d, e + d}), add("lstm_answer.bias", {4 * d})};
  lstm_decoder = {add("lstm_decoder.weight", {4 * d, e + d}), add("lstm_decoder.bias", {4 * d})};
  decoder_out_weight = add("decoder_out.weight", {v, d});
  decoder_out_bias = add("decoder_out.bias", {v});
  if (cfg_.use_visual || cfg_.use_graph) {
    region_projection = add("region_projection", {d, d_u});
  }
  if (cfg_.use_graph) {
    if (cfg_.use_relationship_edges) {
      predicate_in = add("predicate_in", {d, s});
      predicate_out = add("predicate_out", {d, s});
      gcn.local_weight = add("gcn_local.weight", {d, d});
      if (cfg_.gcn_bias) gcn.local_bias = add("gcn_local.bias", {d});
    }
    gcn.global_weight = add("gcn_global.weight", {d, d});
    if (cfg_.gcn_bias) gcn.global_bias = add("gcn_global.bias", {d});
    gcn.normalize_adjacency = cfg_.gcn_normalize;
  }
  const std::size_t d_a = static_cast<std::size_t>(cfg_.attention_size);
  if (cfg_.use_coattention) {
    attn_history.w_values = add("attn_history.values", {d_a, d});
    attn_history.w_query = add("attn_history.query", {d_a, d});
    attn_history.w_score = add("attn_history.score", {d_a});
    if (cfg_.use_visual) {
      attn_visual.w_values = add("attn_visual.values", {d_a, d});
      attn_visual.w_query = add("attn_visual.query", {d_a, d});
      attn_visual.w_ctx = add("attn_visual.context", {d_a, d});
      attn_visual.w_score = add("attn_visual.score", {d_a});
    }
    if (cfg_.use_graph && cfg_.use_graph_attention) {
      attn_graph.w_values = add("attn_graph.values", {d_a, d});
      attn_graph.w_query = add("attn_graph.query", {d_a, d});
      attn_graph.w_ctx = add("attn_graph.context", {d_a, d});
      attn_graph.w_score = add("attn_graph.score", {d_a});
    }
  }
  fusion_weight = add("fusion.weight", {d, static_cast<std::size_t>(cfg_.fusion_blocks()) * d});
}

Model Model::initialized(RunConfig cfg, WorldCatalogues catalogues, Vocabulary vocab) {
  Model m(std::move(cfg), std::move(catalogues), std::move(vocab));
  Rng rng(m.cfg_.seed);
  m.init_params(rng);
  return m;
}

void Model::init_params(Rng& rng) {
  for (const auto& p : store_) {
    if (p->name.ends_with(".bias") || p->name == "decoder_out.bias") {
      p->value.fill(0.0);
    } else if (p->value.rank() == 2) {
      p->value = glorot_uniform(rng, p->value.rows(), p->value.cols());
    } else {
      p->value = glorot_uniform_vec(rng, p->value.size());
    }
  }
}

Parameter* Model::add(const std::string& name, std::vector<std::size_t> shape) {
  store_.push_back(std::make_unique<Parameter>(name, Array::zeros(std::move(shape))));
  return store_.back().get();
}

std::vector<Parameter*> Model::parameters() const {
  std::vector<Parameter*> out;
  out.reserve(store_.size());
  for (const auto& p : store_) out.push_back(p.get());
  return out;
}

Parameter* Model::find(const std::string& name) const {
  for (const auto& p : store_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

void Model::zero_grads() const {
  for (const auto& p : store_) p->zero_grad();
}

}  // namespace gdial
