#include "gdial/encoder.hpp"

#include <algorithm>

#include "gdial/errors.hpp"

namespace gdial {

TokenizedDialogue tokenize_dialogue(const DialogueExample& ex, const Vocabulary& vocab) {
  TokenizedDialogue out;
  out.source = &ex;
  out.caption = vocab.encode(ex.caption);
  for (const RoundData& rd : ex.rounds) {
    TokenizedRound tr;
    tr.question = vocab.encode(rd.question);
    tr.answer = vocab.encode(rd.answer);
    tr.option_tokens.reserve(rd.options.size());
    for (const std::string& opt : rd.options) tr.option_tokens.push_back(vocab.encode(opt));
    tr.gt_index = rd.gt_index;
    out.rounds.push_back(std::move(tr));
  }
  return out;
}

std::vector<int> history_round_tokens(const std::vector<int>& question,
                                      const std::vector<int>& answer) {
  std::vector<int> out = question;
  out.push_back(Vocabulary::kSep);
  out.insert(out.end(), answer.begin(), answer.end());
  return out;
}

namespace {

void check_token_ids(std::span<const int> ids, std::size_t vocab_size, const char* what) {
  if (ids.empty()) throw ContractError(std::string(what) + ": empty token sequence");
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
      throw VocabularyError(std::string(what) + ": token id " + std::to_string(id) +
                            " outside vocabulary of " + std::to_string(vocab_size));
    }
  }
}

}  // namespace

Value encode_tokens(Tape& t, const Model& m, std::span<const int> ids, const LstmParams& lstm) {
  check_token_ids(ids, m.vocab().size(), "encode_tokens");
  Value emb = t.param(*m.word_embedding);
  LstmState state = lstm_zero_state(t, m.hidden_size(), 1);
  for (int id : ids) {
    Value x = t.gather_cols(emb, {static_cast<std::size_t>(id)});
    state = lstm_step(t, x, state, lstm);
  }
  return as_flat(t, state.h);
}

Value encode_question(Tape& t, const Model& m, std::span<const int> ids) {
  return encode_tokens(t, m, ids, m.lstm_question);
}

Value encode_history(Tape& t, const Model& m, const TokenizedDialogue& dlg,
                     std::size_t round_index) {
  if (round_index < 1 || round_index > dlg.rounds.size()) {
    throw ContractError("encode_history: round_index " + std::to_string(round_index) +
                        " outside [1, " + std::to_string(dlg.rounds.size()) + "]");
  }
  std::vector<Value> cols;
  cols.push_back(as_col(t, encode_tokens(t, m, dlg.caption, m.lstm_history)));
  for (std::size_t j = 0; j + 1 < round_index; ++j) {
    std::vector<int> toks = history_round_tokens(dlg.rounds[j].question, dlg.rounds[j].answer);
    cols.push_back(as_col(t, encode_tokens(t, m, toks, m.lstm_history)));
  }
  return t.concat_cols(cols);
}

DialogueEncodings encode_dialogue_shared(Tape& t, const Model& m, const TokenizedDialogue& dlg) {
  const RunConfig& cfg = m.config();
  DialogueEncodings out;
  out.round_encodings.push_back(encode_tokens(t, m, dlg.caption, m.lstm_history));
  // Position j holds round j's QA; the final round never appears as history.
  for (std::size_t j = 0; j + 1 < dlg.rounds.size(); ++j) {
    std::vector<int> toks = history_round_tokens(dlg.rounds[j].question, dlg.rounds[j].answer);
    out.round_encodings.push_back(encode_tokens(t, m, toks, m.lstm_history));
  }

  if (!cfg.use_visual && !cfg.use_graph) return out;
  if (!dlg.source) throw ContractError("encode_dialogue_shared: dialogue has no source example");

  const DialogueExample& ex = *dlg.source;
  if (ex.regions.rows() != static_cast<std::size_t>(cfg.region_feature_size)) {
    throw ConfigError("encoder: region features of " + ex.regions.shape_str() +
                      " do not match region_feature_size " +
                      std::to_string(cfg.region_feature_size));
  }
  out.projected_regions = project_regions(t, t.constant(ex.regions), *m.region_projection);

  if (!cfg.use_graph) return out;
  const SceneGraphInstance& graph = ex.graph;
  const std::size_t d = m.hidden_size();
  const std::size_t r = graph.slot_count();

  // Object node features: each present slot takes its representative
  // projected region; absent slots are zero columns.
  std::vector<Value> obj_cols;
  obj_cols.reserve(r);
  for (std::size_t slot = 0; slot < r; ++slot) {
    if (graph.present[slot]) {
      obj_cols.push_back(t.gather_cols(out.projected_regions,
                                       {static_cast<std::size_t>(graph.region_index[slot])}));
    } else {
      obj_cols.push_back(t.constant(Array::zeros({d, 1})));
    }
  }
  Value object_features = t.concat_cols(obj_cols);

  if (cfg.use_relationship_edges) {
    out.graph = hiergcn_forward(t, graph, object_features, t.param(*m.predicate_in),
                                t.param(*m.predicate_out), m.gcn);
  } else {
    Array a2 = build_global_adjacency(graph, r);
    Value mixed = global_gcn(t, object_features, a2, m.gcn, graph.present);
    out.graph = NodeEmbeddings{mixed, graph.present};
  }
  return out;
}

EncoderOutput encode_round(Tape& t, const Model& m, const TokenizedDialogue& dlg,
                           std::size_t round_index, const DialogueEncodings& shared) {
  const RunConfig& cfg = m.config();
  if (round_index < 1 || round_index > dlg.rounds.size()) {
    throw ContractError("encode_round: round_index " + std::to_string(round_index) +
                        " outside [1, " + std::to_string(dlg.rounds.size()) + "]");
  }
  EncoderOutput out;
  out.question = encode_question(t, m, dlg.rounds[round_index - 1].question);

  std::vector<Value> history_cols;
  for (std::size_t j = 0; j < round_index; ++j) {
    history_cols.push_back(as_col(t, shared.round_encodings[j]));
  }
  Value history = t.concat_cols(history_cols);

  Value attended_history;
  if (cfg.use_coattention) {
    AttendedContext hc = history_attend(t, history, out.question, m.attn_history);
    attended_history = hc.context;
    out.history_weights = hc.weights;
  } else {
    attended_history = as_flat(t, mean_cols(t, history));
  }

  std::vector<Value> blocks;
  blocks.push_back(as_col(t, attended_history));

  if (cfg.use_visual) {
    if (!shared.projected_regions.valid()) {
      throw ConfigError("encoder: visual features enabled but no regions available");
    }
    Value attended_visual;
    if (cfg.use_coattention) {
      AttendedContext vc =
          visual_attend(t, shared.projected_regions, out.question, attended_history, m.attn_visual);
      attended_visual = vc.context;
      out.visual_weights = vc.weights;
    } else {
      attended_visual = as_flat(t, mean_cols(t, shared.projected_regions));
    }
    blocks.push_back(as_col(t, attended_visual));
  }

  if (cfg.use_graph) {
    if (!shared.graph.has_value()) {
      throw ConfigError("encoder: graph features enabled but no scene graph available");
    }
    const NodeEmbeddings& nodes = *shared.graph;
    Value graph_ctx;
    if (cfg.use_graph_attention && cfg.use_coattention) {
      AttendedContext gc = graph_attend(t, nodes, out.question, attended_history, m.attn_graph);
      graph_ctx = gc.context;
      out.graph_weights = gc.weights;
    } else {
      // Average of the relationship-aware node embeddings over present slots.
      const bool any = std::any_of(nodes.mask.begin(), nodes.mask.end(),
                                   [](std::uint8_t b) { return b != 0; });
      graph_ctx = any ? as_flat(t, mean_cols(t, nodes.values, &nodes.mask))
                      : t.constant(Array::zeros({m.hidden_size()}));
    }
    blocks.push_back(as_col(t, graph_ctx));
  }

  blocks.push_back(as_col(t, out.question));

  Value stacked = t.concat_rows(blocks);
  const Array& w = m.fusion_weight->value;
  if (w.cols() != stacked.array().rows()) {
    throw DimensionError("encoder: fusion weight " + w.shape_str() +
                         " does not match stacked blocks " + stacked.array().shape_str());
  }
  out.fused = as_flat(t, t.tanh(t.matmul(t.param(*m.fusion_weight), stacked)));
  return out;
}

EncoderOutput encode_dialogue_state(Tape& t, const Model& m, const TokenizedDialogue& dlg,
                                    std::size_t round_index) {
  DialogueEncodings shared = encode_dialogue_shared(t, m, dlg);
  return encode_round(t, m, dlg, round_index, shared);
}

}  // namespace gdial
