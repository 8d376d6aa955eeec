#pragma once

#include <optional>
#include <span>
#include <vector>

#include "gdial/data.hpp"
#include "gdial/model.hpp"

namespace gdial {

struct TokenizedRound {
  std::vector<int> question;
  std::vector<int> answer;
  std::vector<std::vector<int>> option_tokens;
  std::vector<std::size_t> option_pool_ids;  // filled by the engine's shared pool
  std::size_t gt_index = 0;
};

struct TokenizedDialogue {
  const DialogueExample* source = nullptr;
  std::vector<int> caption;
  std::vector<TokenizedRound> rounds;
};

TokenizedDialogue tokenize_dialogue(const DialogueExample& ex, const Vocabulary& vocab);

// question + <sep> + answer, the encoding of one completed history round.
std::vector<int> history_round_tokens(const std::vector<int>& question,
                                      const std::vector<int>& answer);

// Final hidden state of a recurrent pass over the embedded tokens, from a
// zero initial state. Rejects empty sequences and out-of-range ids.
Value encode_tokens(Tape& t, const Model& m, std::span<const int> ids, const LstmParams& lstm);

Value encode_question(Tape& t, const Model& m, std::span<const int> ids);

// Column j is the encoding of history position j (caption first).
Value encode_history(Tape& t, const Model& m, const TokenizedDialogue& dlg,
                     std::size_t round_index);

// Everything shared by all rounds of one dialogue on one tape: history
// position encodings, projected regions, and graph node embeddings.
struct DialogueEncodings {
  std::vector<Value> round_encodings;
  Value projected_regions;  // valid when visual or graph features are on
  std::optional<NodeEmbeddings> graph;
};

DialogueEncodings encode_dialogue_shared(Tape& t, const Model& m, const TokenizedDialogue& dlg);

struct EncoderOutput {
  Value fused;     // E_t, every coordinate in (-1, 1)
  Value question;  // q_t
  Value history_weights;  // diagnostics; invalid handle when head disabled
  Value visual_weights;
  Value graph_weights;
};

// round_index is 1-based; history covers positions [0, round_index).
EncoderOutput encode_round(Tape& t, const Model& m, const TokenizedDialogue& dlg,
                           std::size_t round_index, const DialogueEncodings& shared);

EncoderOutput encode_dialogue_state(Tape& t, const Model& m, const TokenizedDialogue& dlg,
                                    std::size_t round_index);

}  // namespace gdial
