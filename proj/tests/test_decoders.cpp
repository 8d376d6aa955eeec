#include <cmath>
#include <cstring>

#include "doctest.h"
#include "gdial/decoders.hpp"
#include "gdial/encoder.hpp"
#include "helpers.hpp"

using namespace gdial;
using gdial::testing::random_array;

namespace {

RunConfig desk_config(std::uint64_t seed) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.hidden_size = 10;
  cfg.word_embedding_size = 8;
  cfg.region_feature_size = 40;
  cfg.regions_per_image = 6;
  cfg.attention_size = 8;
  cfg.num_dialogues = 3;
  cfg.rounds_per_dialogue = 3;
  cfg.candidates_per_round = 12;
  cfg.max_edges = 8;
  return cfg;
}

struct Fixture {
  Corpus corpus;
  Vocabulary vocab;
  Model model;
  TokenizedDialogue dlg;

  explicit Fixture(std::uint64_t seed)
      : corpus(generate_corpus(desk_config(seed), nullptr)),
        vocab(build_vocab(corpus, 1)),
        model(Model::initialized(desk_config(seed), corpus.header.catalogues, vocab)),
        dlg(tokenize_dialogue(corpus.examples[0], vocab)) {}
};

}  // namespace

TEST_CASE("candidate encoding: per-option unroll oracle, batching, padding") {
  Fixture fx(2);
  const Model& m = fx.model;
  const auto& options = fx.dlg.rounds[0].option_tokens;
  Tape t;
  Value batch = encode_candidates(t, m, options);
  REQUIRE(batch.array().cols() == options.size());

  // column j equals an independent single-sequence unroll
  for (std::size_t j = 0; j < options.size(); ++j) {
    Value single = encode_tokens(t, m, options[j], m.lstm_answer);
    for (std::size_t i = 0; i < m.hidden_size(); ++i) {
      CHECK(batch.array().at(i, j) == single.array()[i]);
    }
  }

  // identical options encode identically
  std::vector<std::vector<int>> twins = {options[0], options[0]};
  Value tw = encode_candidates(t, m, twins);
  for (std::size_t i = 0; i < m.hidden_size(); ++i) {
    CHECK(tw.array().at(i, 0) == tw.array().at(i, 1));
  }

  // a padded position never leaks into the loss: perturb what the pad
  // column would read (the PAD embedding) and check nothing moves
  std::vector<std::vector<int>> mixed = {{5}, {6, 7, 8}};
  Value before = encode_candidates(t, m, mixed);
  Model& mutable_model = const_cast<Model&>(m);
  Array saved = mutable_model.word_embedding->value;
  for (std::size_t i = 0; i < m.embed_size(); ++i) {
    mutable_model.word_embedding->value.at(i, Vocabulary::kPad) += 11.0;
  }
  Tape t2;
  Value after = encode_candidates(t2, m, mixed);
  mutable_model.word_embedding->value = saved;
  for (std::size_t i = 0; i < m.hidden_size(); ++i) {
    CHECK(before.array().at(i, 0) == after.array().at(i, 0));
    CHECK(before.array().at(i, 1) == after.array().at(i, 1));
  }
}

TEST_CASE("discriminative scores are dot products") {
  Fixture fx(3);
  Tape t;
  const std::size_t d = fx.model.hidden_size();
  {
    Rng rng(3);
    Value e = t.constant(Array::zeros({d}));
    Value c = t.constant(random_array(rng, {d, 7}));
    const Array& s = disc_scores(t, e, c).array();
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == 0.0);
  }
  {
    Array cand = Array::zeros({d, 5});
    for (std::size_t j = 0; j < 5; ++j) cand.at(j, j) = 1.0;  // orthogonal unit columns
    Array e = Array::zeros({d});
    e[3] = 1.0;
    const Array& s = disc_scores(t, t.constant(e), t.constant(cand)).array();
    Ranking r = rank_candidates(s, 3);
    CHECK(r.order[0] == 3);
    CHECK(r.gt_rank == 1);
  }
  {
    Rng rng(4);
    Array e = random_array(rng, {d});
    Array cand = random_array(rng, {d, 6});
    const Array& s = disc_scores(t, t.constant(e), t.constant(cand)).array();
    for (std::size_t j = 0; j < 6; ++j) {
      double want = 0.0;
      for (std::size_t i = 0; i < d; ++i) want += e[i] * cand.at(i, j);
      CHECK(s[j] == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("n-pair loss values and invariants") {
  Tape t;
  {
    Value scores = t.constant(Array::zeros({100}));
    CHECK(npair_loss(t, scores, 17).array()[0] ==
          doctest::Approx(std::log(100.0)).epsilon(1e-12));
  }
  {
    Value scores = t.constant(Array::vec({50.0, 0.0}));
    CHECK(npair_loss(t, scores, 0).array()[0] < 1e-20);
  }
  {
    Value scores = t.constant(Array::vec({1.0, 0.0}));
    const double want = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
    CHECK(npair_loss(t, scores, 0).array()[0] == doctest::Approx(want).epsilon(1e-12));
    CHECK(npair_loss(t, scores, 0).array()[0] == doctest::Approx(0.31326).epsilon(1e-4));
  }
  CHECK_THROWS_AS(npair_loss(t, t.constant(Array::vec({1.0, 2.0})), 2), ContractError);
  CHECK_THROWS_AS(npair_loss(t, t.constant(Array::vec({1.0})), 0), ContractError);

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Array scores = random_array(rng, {8}, -2, 2);
    const std::size_t gt = rng.index(8);
    Tape t2;
    const double base = npair_loss(t2, t2.constant(scores), gt).array()[0];

    Array shifted = scores;
    for (std::size_t i = 0; i < 8; ++i) shifted[i] += 3.7;
    CHECK(std::fabs(npair_loss(t2, t2.constant(shifted), gt).array()[0] - base) <= 1e-9);

    Array better = scores;
    better[gt] += 0.5;  // raising only the GT score strictly lowers the loss
    CHECK(npair_loss(t2, t2.constant(better), gt).array()[0] < base);

    // gradient over scores sums to zero
    Parameter p("scores", scores);
    Parameter* ps[] = {&p};
    Tape t3;
    t3.backward(npair_loss(t3, t3.param(p), gt));
    double gsum = 0.0;
    for (std::size_t i = 0; i < 8; ++i) gsum += p.grad[i];
    CHECK(std::fabs(gsum) <= 1e-12);
    (void)ps;
  }
}

TEST_CASE("generative decode loss: uniform output layer gives ln|V|") {
  Fixture fx(6);
  Model& m = fx.model;
  m.decoder_out_weight->value.fill(0.0);
  m.decoder_out_bias->value.fill(0.0);
  Tape t;
  Rng rng(7);
  Value e_t = t.constant(random_array(rng, {m.hidden_size()}));
  const std::vector<int>& answer = fx.dlg.rounds[0].answer;
  const double loss = gen_decode_loss(t, m, e_t, answer).array()[0];
  CHECK(loss == doctest::Approx(std::log(static_cast<double>(m.vocab().size()))).epsilon(1e-12));

  // with zero decoder weights the loss ignores the fused state entirely
  m.lstm_decoder.weight->value.fill(0.0);
  m.lstm_decoder.bias->value.fill(0.0);
  Value other = t.constant(random_array(rng, {m.hidden_size()}));
  CHECK(gen_decode_loss(t, m, other, answer).array()[0] == doctest::Approx(loss).epsilon(1e-12));
}

TEST_CASE("generative decode loss matches a one-step hand computation") {
  Fixture fx(8);
  const Model& m = fx.model;
  Rng rng(9);
  Array e = random_array(rng, {m.hidden_size()}, -0.5, 0.5);
  const std::vector<int> answer = {fx.vocab.id("yes")};

  Tape t;
  const double got = gen_decode_loss(t, m, t.constant(e), answer).array()[0];

  // independent scalar computation of the two teacher-forced steps
  auto sigm = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const std::size_t d = m.hidden_size();
  const std::size_t emb = m.embed_size();
  std::vector<double> h(e.data(), e.data() + d);
  std::vector<double> c(d, 0.0);
  double total = 0.0;
  std::vector<int> inputs = {Vocabulary::kStart, answer[0]};
  std::vector<int> targets = {answer[0], Vocabulary::kPad};
  for (std::size_t step = 0; step < 2; ++step) {
    std::vector<double> x(emb);
    for (std::size_t i = 0; i < emb; ++i) {
      x[i] = m.word_embedding->value.at(i, static_cast<std::size_t>(inputs[step]));
    }
    std::vector<double> hc(d), cc(d);
    for (std::size_t j = 0; j < d; ++j) {
      double zi = m.lstm_decoder.bias->value[j];
      double zf = m.lstm_decoder.bias->value[d + j];
      double zo = m.lstm_decoder.bias->value[2 * d + j];
      double zg = m.lstm_decoder.bias->value[3 * d + j];
      for (std::size_t i = 0; i < emb; ++i) {
        zi += m.lstm_decoder.weight->value.at(j, i) * x[i];
        zf += m.lstm_decoder.weight->value.at(d + j, i) * x[i];
        zo += m.lstm_decoder.weight->value.at(2 * d + j, i) * x[i];
        zg += m.lstm_decoder.weight->value.at(3 * d + j, i) * x[i];
      }
      for (std::size_t i = 0; i < d; ++i) {
        zi += m.lstm_decoder.weight->value.at(j, emb + i) * h[i];
        zf += m.lstm_decoder.weight->value.at(d + j, emb + i) * h[i];
        zo += m.lstm_decoder.weight->value.at(2 * d + j, emb + i) * h[i];
        zg += m.lstm_decoder.weight->value.at(3 * d + j, emb + i) * h[i];
      }
      cc[j] = sigm(zf) * c[j] + sigm(zi) * std::tanh(zg);
      hc[j] = sigm(zo) * std::tanh(cc[j]);
    }
    h = hc;
    c = cc;
    const std::size_t v = m.vocab().size();
    std::vector<double> logits(v);
    double mx = -HUGE_VAL;
    for (std::size_t i = 0; i < v; ++i) {
      double z = m.decoder_out_bias->value[i];
      for (std::size_t j = 0; j < d; ++j) z += m.decoder_out_weight->value.at(i, j) * h[j];
      logits[i] = z;
      mx = std::max(mx, z);
    }
    double denom = 0.0;
    for (double z : logits) denom += std::exp(z - mx);
    total += mx + std::log(denom) - logits[static_cast<std::size_t>(targets[step])];
  }
  CHECK(got == doctest::Approx(total / 2.0).epsilon(1e-10));
}

TEST_CASE("generative ranking scores sum token log-likelihoods") {
  Fixture fx(10);
  Model& m = fx.model;
  m.decoder_out_weight->value.fill(0.0);
  m.decoder_out_bias->value.fill(0.0);
  Rng rng(11);

  // uniform output layer: every option scores -(len+1) ln|V|, shortest first
  std::vector<std::vector<int>> options = {{5, 6, 7}, {5}, {5, 6}};
  Tape t;
  Value e = t.constant(random_array(rng, {m.hidden_size()}));
  const Array& s = gen_loglik_scores(t, m, e, options, false).array();
  const double lv = std::log(static_cast<double>(m.vocab().size()));
  CHECK(s[0] == doctest::Approx(-4.0 * lv).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(-2.0 * lv).epsilon(1e-12));
  CHECK(s[2] == doctest::Approx(-3.0 * lv).epsilon(1e-12));
  Ranking r = rank_candidates(s, 0);
  CHECK(r.order[0] == 1);  // shortest option first
  CHECK(r.order[1] == 2);
  CHECK(r.order[2] == 0);

  // with length normalization all uniform options tie
  const Array& norm = gen_loglik_scores(t, m, e, options, true).array();
  CHECK(norm[0] == doctest::Approx(-lv).epsilon(1e-12));
  CHECK(norm[1] == doctest::Approx(-lv).epsilon(1e-12));

  // batched scoring equals one-option-at-a-time scoring on trained weights
  Fixture live(12);
  Tape t2;
  Value e2 = t2.constant(random_array(rng, {live.model.hidden_size()}, -0.4, 0.4));
  const auto& opts = live.dlg.rounds[0].option_tokens;
  std::vector<std::vector<int>> batch(opts.begin(), opts.begin() + 5);
  const Array& all = gen_loglik_scores(t2, live.model, e2, batch, false).array();
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const Array& one = gen_loglik_scores(t2, live.model, e2, {batch[j]}, false).array();
    CHECK(all[j] == doctest::Approx(one[0]).epsilon(1e-12));
  }
}

TEST_CASE("rank extraction: stable descending order with index tie-break") {
  {
    Ranking r = rank_candidates(Array::vec({3, 1, 2}), 0);
    CHECK(r.gt_rank == 1);
    CHECK(r.order == std::vector<std::size_t>{0, 2, 1});
  }
  {
    Ranking r = rank_candidates(Array::vec({5, 5, 5}), 1);
    CHECK(r.gt_rank == 2);
    CHECK(r.order == std::vector<std::size_t>{0, 1, 2});
  }
  {
    Rng rng(13);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t n = 2 + rng.index(30);
      Array scores = random_array(rng, {n});
      const std::size_t gt = rng.index(n);
      Ranking r = rank_candidates(scores, gt);

      // independent reference: count candidates strictly better, or equal
      // with a smaller index
      std::size_t better = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (scores[j] > scores[gt] || (scores[j] == scores[gt] && j < gt)) ++better;
      }
      CHECK(r.gt_rank == better + 1);

      // order is a permutation with descending scores
      std::vector<bool> seen(n, false);
      for (std::size_t j = 0; j < n; ++j) seen[r.order[j]] = true;
      for (bool b : seen) CHECK(b);
      for (std::size_t j = 1; j < n; ++j) {
        CHECK(scores[r.order[j - 1]] >= scores[r.order[j]]);
      }
      CHECK(r.gt_rank >= 1);
      CHECK(r.gt_rank <= n);

      // raising a non-GT score never improves the GT rank
      Array bumped = scores;
      const std::size_t other = (gt + 1) % n;
      bumped[other] += 1.0;
      Ranking r2 = rank_candidates(bumped, gt);
      CHECK(r2.gt_rank >= r.gt_rank);
    }
  }
}
