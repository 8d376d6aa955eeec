#pragma once

#include <vector>

#include "gdial/model.hpp"

namespace gdial {

// Final hidden state of the answer encoder per option, zero initial state,
// computed as one masked column batch. Column j is option j.
Value encode_candidates(Tape& t, const Model& m,
                        const std::vector<std::vector<int>>& option_tokens);

// score_i = dot(e_t, candidate column i)
Value disc_scores(Tape& t, Value e_t, Value candidate_embeddings);

// Multi-class N-pair objective: -log softmax(scores)[gt_index].
Value npair_loss(Tape& t, Value scores, std::size_t gt_index);

// Teacher-forced decode of the ground-truth answer with e_t as the initial
// hidden state; mean token negative log-likelihood. The answer is wrapped
// in start/end markers internally.
Value gen_decode_loss(Tape& t, const Model& m, Value e_t, const std::vector<int>& answer);

// Per-option summed token log-likelihood under teacher forcing (optionally
// normalized by length), decoded as one column batch.
Value gen_loglik_scores(Tape& t, const Model& m, Value e_t,
                        const std::vector<std::vector<int>>& option_tokens,
                        bool length_normalize);

struct Ranking {
  std::vector<std::size_t> order;  // candidate indices, best first
  std::size_t gt_rank = 0;         // 1-based
};

// Descending stable sort, ties broken by ascending candidate index.
Ranking rank_candidates(const Array& scores, std::size_t gt_index);

}  // namespace gdial
