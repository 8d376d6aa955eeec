#include "gdial/decoders.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gdial/errors.hpp"

namespace gdial {

namespace {

void check_options(const std::vector<std::vector<int>>& options, std::size_t vocab_size,
                   const char* what) {
  if (options.empty()) throw ContractError(std::string(what) + ": no candidates");
  for (const auto& toks : options) {
    if (toks.empty()) throw ContractError(std::string(what) + ": empty candidate sequence");
    for (int id : toks) {
      if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
        throw VocabularyError(std::string(what) + ": token id " + std::to_string(id) +
                              " outside vocabulary of " + std::to_string(vocab_size));
      }
    }
  }
}

}  // namespace

Value encode_candidates(Tape& t, const Model& m,
                        const std::vector<std::vector<int>>& option_tokens) {
  check_options(option_tokens, m.vocab().size(), "encode_candidates");
  const std::size_t n = option_tokens.size();
  std::size_t max_len = 0;
  for (const auto& toks : option_tokens) max_len = std::max(max_len, toks.size());

  Value emb = t.param(*m.word_embedding);
  LstmState state = lstm_zero_state(t, m.hidden_size(), n);
  for (std::size_t step = 0; step < max_len; ++step) {
    std::vector<std::size_t> ids(n);
    std::vector<std::uint8_t> mask(n);
    for (std::size_t j = 0; j < n; ++j) {
      const bool live = step < option_tokens[j].size();
      ids[j] = live ? static_cast<std::size_t>(option_tokens[j][step])
                    : static_cast<std::size_t>(Vocabulary::kPad);
      mask[j] = live ? 1 : 0;
    }
    Value x = t.gather_cols(emb, std::move(ids));
    state = lstm_step(t, x, state, m.lstm_answer, &mask);
  }
  return state.h;
}

Value disc_scores(Tape& t, Value e_t, Value candidate_embeddings) {
  const Array& c = candidate_embeddings.array();
  if (e_t.array().size() != c.rows()) {
    throw DimensionError("disc_scores: state of size " + std::to_string(e_t.array().size()) +
                         " does not match candidates " + c.shape_str());
  }
  return as_flat(t, t.matmul(as_row(t, e_t), candidate_embeddings));
}

Value npair_loss(Tape& t, Value scores, std::size_t gt_index) {
  const std::size_t n = scores.array().size();
  if (n < 2) throw ContractError("npair_loss: need at least two candidates");
  if (gt_index >= n) {
    throw ContractError("npair_loss: gt_index " + std::to_string(gt_index) +
                        " out of range for " + std::to_string(n) + " scores");
  }
  return t.nll_from_scores(scores, gt_index);
}

Value gen_decode_loss(Tape& t, const Model& m, Value e_t, const std::vector<int>& answer) {
  check_options({answer}, m.vocab().size(), "gen_decode_loss");
  const std::size_t steps = answer.size() + 1;  // predict each token, then the end marker

  Value emb = t.param(*m.word_embedding);
  LstmState state{as_col(t, e_t), t.constant(Array::zeros({m.hidden_size(), 1}))};
  Value w_out = t.param(*m.decoder_out_weight);
  Value b_out = as_col(t, t.param(*m.decoder_out_bias));

  std::vector<Value> logit_cols;
  std::vector<std::size_t> targets;
  for (std::size_t step = 0; step < steps; ++step) {
    const int input_id = step == 0 ? Vocabulary::kStart : answer[step - 1];
    Value x = t.gather_cols(emb, {static_cast<std::size_t>(input_id)});
    state = lstm_step(t, x, state, m.lstm_decoder);
    logit_cols.push_back(t.add(t.matmul(w_out, state.h), b_out));
    targets.push_back(step < answer.size() ? static_cast<std::size_t>(answer[step])
                                           : static_cast<std::size_t>(Vocabulary::kPad));
  }
  Value logits = t.concat_cols(logit_cols);
  Value nll = t.masked_nll_cols(logits, std::move(targets),
                                std::vector<std::uint8_t>(steps, 1));
  return t.scale(t.sum(nll), 1.0 / static_cast<double>(steps));
}

Value gen_loglik_scores(Tape& t, const Model& m, Value e_t,
                        const std::vector<std::vector<int>>& option_tokens,
                        bool length_normalize) {
  check_options(option_tokens, m.vocab().size(), "gen_loglik_scores");
  const std::size_t n = option_tokens.size();
  std::size_t max_len = 0;
  for (const auto& toks : option_tokens) max_len = std::max(max_len, toks.size());
  const std::size_t max_steps = max_len + 1;

  Value emb = t.param(*m.word_embedding);
  LstmState state{repeat_col(t, as_col(t, e_t), n), t.constant(Array::zeros({m.hidden_size(), n}))};
  Value w_out = t.param(*m.decoder_out_weight);
  Value bias_cols = repeat_col(t, as_col(t, t.param(*m.decoder_out_bias)), n);

  Value total = t.constant(Array::zeros({n}));
  for (std::size_t step = 0; step < max_steps; ++step) {
    std::vector<std::size_t> ids(n);
    std::vector<std::size_t> targets(n);
    std::vector<std::uint8_t> mask(n);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t len = option_tokens[j].size();
      const bool live = step <= len;  // one step per token plus the end marker
      mask[j] = live ? 1 : 0;
      if (step == 0) {
        ids[j] = static_cast<std::size_t>(Vocabulary::kStart);
      } else if (step - 1 < len) {
        ids[j] = static_cast<std::size_t>(option_tokens[j][step - 1]);
      } else {
        ids[j] = static_cast<std::size_t>(Vocabulary::kPad);
      }
      targets[j] = step < len ? static_cast<std::size_t>(option_tokens[j][step])
                              : static_cast<std::size_t>(Vocabulary::kPad);
    }
    Value x = t.gather_cols(emb, std::move(ids));
    state = lstm_step(t, x, state, m.lstm_decoder, &mask);
    Value logits = t.add(t.matmul(w_out, state.h), bias_cols);
    total = t.add(total, t.masked_nll_cols(logits, std::move(targets), std::move(mask)));
  }
  Value scores = t.scale(total, -1.0);
  if (length_normalize) {
    Array inv_len({n});
    for (std::size_t j = 0; j < n; ++j) {
      inv_len[j] = 1.0 / static_cast<double>(option_tokens[j].size() + 1);
    }
    scores = t.mul(scores, t.constant(std::move(inv_len)));
  }
  return scores;
}

Ranking rank_candidates(const Array& scores, std::size_t gt_index) {
  const std::size_t n = scores.size();
  if (gt_index >= n) {
    throw ContractError("rank_candidates: gt_index " + std::to_string(gt_index) +
                        " out of range for " + std::to_string(n) + " scores");
  }
  if (!scores.all_finite()) throw ContractError("rank_candidates: scores must be finite");
  Ranking r;
  r.order.resize(n);
  std::iota(r.order.begin(), r.order.end(), 0);
  std::stable_sort(r.order.begin(), r.order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (r.order[i] == gt_index) {
      r.gt_rank = i + 1;
      break;
    }
  }
  return r;
}

}  // namespace gdial
