#include <cmath>
#include <cstring>

#include "doctest.h"
#include "gdial/encoder.hpp"
#include "gdial/gradcheck.hpp"
#include "helpers.hpp"

using namespace gdial;

namespace {

RunConfig desk_config(std::uint64_t seed) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.hidden_size = 12;
  cfg.word_embedding_size = 10;
  cfg.region_feature_size = 40;
  cfg.regions_per_image = 6;
  cfg.attention_size = 8;
  cfg.num_dialogues = 4;
  cfg.rounds_per_dialogue = 4;
  cfg.candidates_per_round = 15;
  cfg.max_edges = 8;
  return cfg;
}

struct Fixture {
  Corpus corpus;
  Vocabulary vocab;
  Model model;
  TokenizedDialogue dlg;

  explicit Fixture(RunConfig cfg)
      : corpus(generate_corpus(cfg, nullptr)),
        vocab(build_vocab(corpus, 1)),
        model(Model::initialized(cfg, corpus.header.catalogues, vocab)),
        dlg(tokenize_dialogue(corpus.examples[0], vocab)) {}
};

}  // namespace

TEST_CASE("question encoding composes lstm steps and rejects bad input") {
  Fixture fx(desk_config(3));
  const Model& m = fx.model;

  // single token equals one lstm step from zero state
  std::vector<int> one = {fx.vocab.id("what")};
  Tape t;
  Value got = encode_question(t, m, one);
  LstmState s = lstm_zero_state(t, m.hidden_size(), 1);
  s = lstm_step(t, t.gather_cols(t.param(*m.word_embedding), {static_cast<std::size_t>(one[0])}),
                s, m.lstm_question);
  for (std::size_t i = 0; i < m.hidden_size(); ++i) {
    CHECK(got.array()[i] == s.h.array()[i]);
  }

  // full unroll equals the step-by-step composition
  const std::vector<int>& q = fx.dlg.rounds[0].question;
  Value full = encode_question(t, m, q);
  LstmState acc = lstm_zero_state(t, m.hidden_size(), 1);
  for (int id : q) {
    acc = lstm_step(t, t.gather_cols(t.param(*m.word_embedding), {static_cast<std::size_t>(id)}),
                    acc, m.lstm_question);
  }
  for (std::size_t i = 0; i < m.hidden_size(); ++i) {
    CHECK(full.array()[i] == acc.h.array()[i]);
  }

  CHECK_THROWS_AS(encode_question(t, m, std::vector<int>{}), ContractError);
  CHECK_THROWS_AS(encode_question(t, m, std::vector<int>{static_cast<int>(fx.vocab.size())}),
                  VocabularyError);
}

TEST_CASE("history encoding: caption first, one column per round") {
  Fixture fx(desk_config(4));
  Tape t;
  Value h1 = encode_history(t, fx.model, fx.dlg, 1);
  CHECK(h1.array().cols() == 1);
  Value h3 = encode_history(t, fx.model, fx.dlg, 3);
  CHECK(h3.array().cols() == 3);
  // prefix property: the caption column is shared
  for (std::size_t i = 0; i < fx.model.hidden_size(); ++i) {
    CHECK(h1.array().at(i, 0) == h3.array().at(i, 0));
  }
  // column j is the round-j encoding built from question + <sep> + answer
  std::vector<int> toks = history_round_tokens(fx.dlg.rounds[0].question, fx.dlg.rounds[0].answer);
  Value round1 = encode_tokens(t, fx.model, toks, fx.model.lstm_history);
  for (std::size_t i = 0; i < fx.model.hidden_size(); ++i) {
    CHECK(h3.array().at(i, 1) == round1.array()[i]);
  }
  CHECK_THROWS_AS(encode_history(t, fx.model, fx.dlg, 0), ContractError);

  // identical rounds encode identically
  TokenizedDialogue twin = fx.dlg;
  twin.rounds[1] = twin.rounds[0];
  Tape t2;
  Value h = encode_history(t2, fx.model, twin, 3);
  for (std::size_t i = 0; i < fx.model.hidden_size(); ++i) {
    CHECK(h.array().at(i, 1) == h.array().at(i, 2));
  }
}

TEST_CASE("fused state stays inside the tanh range and is deterministic") {
  Fixture fx(desk_config(5));
  Tape t1;
  EncoderOutput a = encode_dialogue_state(t1, fx.model, fx.dlg, 2);
  Tape t2;
  EncoderOutput b = encode_dialogue_state(t2, fx.model, fx.dlg, 2);
  REQUIRE(a.fused.array().size() == fx.model.hidden_size());
  CHECK(std::memcmp(a.fused.array().data(), b.fused.array().data(),
                    a.fused.array().size() * sizeof(double)) == 0);
  for (std::size_t i = 0; i < a.fused.array().size(); ++i) {
    CHECK(std::fabs(a.fused.array()[i]) < 1.0);
  }
}

TEST_CASE("zero parameters give a zero fused state") {
  RunConfig cfg = desk_config(6);
  Corpus corpus = generate_corpus(cfg, nullptr);
  Vocabulary vocab = build_vocab(corpus, 1);
  Model model(cfg, corpus.header.catalogues, vocab);  // all parameters zero
  TokenizedDialogue dlg = tokenize_dialogue(corpus.examples[0], vocab);
  Tape t;
  EncoderOutput enc = encode_dialogue_state(t, model, dlg, 1);
  for (std::size_t i = 0; i < enc.fused.array().size(); ++i) {
    CHECK(enc.fused.array()[i] == 0.0);
  }
}

TEST_CASE("fusion width tracks the enabled blocks and ablations silence inputs") {
  RunConfig cfg = desk_config(7);
  {
    Corpus corpus = generate_corpus(cfg, nullptr);
    Vocabulary vocab = build_vocab(corpus, 1);
    Model full = Model::initialized(cfg, corpus.header.catalogues, vocab);
    CHECK(full.fusion_weight->value.cols() == 4 * full.hidden_size());

    RunConfig no_sg = cfg;
    no_sg.apply_ablation("no-sg");
    Model m2 = Model::initialized(no_sg, corpus.header.catalogues, vocab);
    CHECK(m2.fusion_weight->value.cols() == 3 * m2.hidden_size());

    RunConfig no_vis = cfg;
    no_vis.apply_ablation("no-vis");
    Model m3 = Model::initialized(no_vis, corpus.header.catalogues, vocab);
    CHECK(m3.fusion_weight->value.cols() == 3 * m3.hidden_size());

    // with use_graph=false, perturbing the scene graph leaves E_t unchanged
    DialogueExample perturbed = corpus.examples[0];
    if (perturbed.graph.edges.size() > 1) perturbed.graph.edges.pop_back();
    TokenizedDialogue base_dlg = tokenize_dialogue(corpus.examples[0], vocab);
    TokenizedDialogue pert_dlg = tokenize_dialogue(perturbed, vocab);
    Tape t;
    EncoderOutput base = encode_dialogue_state(t, m2, base_dlg, 2);
    EncoderOutput moved = encode_dialogue_state(t, m2, pert_dlg, 2);
    CHECK(std::memcmp(base.fused.array().data(), moved.fused.array().data(),
                      base.fused.array().size() * sizeof(double)) == 0);

    // with use_visual=false, perturbing region features leaves E_t unchanged
    RunConfig text_only = cfg;
    text_only.use_visual = false;
    text_only.use_graph = false;
    text_only.use_relationship_edges = false;
    text_only.use_graph_attention = false;
    Model m4 = Model::initialized(text_only, corpus.header.catalogues, vocab);
    DialogueExample noisy = corpus.examples[0];
    for (std::size_t i = 0; i < noisy.regions.size(); ++i) noisy.regions[i] += 3.25;
    TokenizedDialogue noisy_dlg = tokenize_dialogue(noisy, vocab);
    EncoderOutput b4 = encode_dialogue_state(t, m4, base_dlg, 2);
    EncoderOutput m4out = encode_dialogue_state(t, m4, noisy_dlg, 2);
    CHECK(std::memcmp(b4.fused.array().data(), m4out.fused.array().data(),
                      b4.fused.array().size() * sizeof(double)) == 0);
  }
}

TEST_CASE("ablation variants expose the expected attention heads") {
  RunConfig cfg = desk_config(8);
  Corpus corpus = generate_corpus(cfg, nullptr);
  Vocabulary vocab = build_vocab(corpus, 1);

  RunConfig sg_rel = cfg;
  sg_rel.apply_ablation("sg-rel");
  Model mean_graph = Model::initialized(sg_rel, corpus.header.catalogues, vocab);
  TokenizedDialogue dlg = tokenize_dialogue(corpus.examples[0], vocab);
  Tape t;
  EncoderOutput enc = encode_round(t, mean_graph, dlg, 1, encode_dialogue_shared(t, mean_graph, dlg));
  CHECK(enc.history_weights.valid());
  CHECK(enc.visual_weights.valid());
  CHECK(!enc.graph_weights.valid());  // graph context is a mean, not attended

  RunConfig no_coattn = cfg;
  no_coattn.apply_ablation("no-coattn");
  Model plain = Model::initialized(no_coattn, corpus.header.catalogues, vocab);
  Tape t2;
  EncoderOutput enc2 = encode_round(t2, plain, dlg, 1, encode_dialogue_shared(t2, plain, dlg));
  CHECK(!enc2.history_weights.valid());
  CHECK(!enc2.visual_weights.valid());
  CHECK(!enc2.graph_weights.valid());
}

TEST_CASE("end-to-end encoder gradients at small width pass 1e-4") {
  RunConfig cfg = desk_config(9);
  cfg.hidden_size = 8;
  cfg.word_embedding_size = 8;
  cfg.attention_size = 8;
  Fixture fx(cfg);
  Rng mix_rng(1);
  Array mix = gdial::testing::random_array(mix_rng, {fx.model.hidden_size()});

  // check a representative subset of parameters end to end
  std::vector<Parameter*> subset = {
      fx.model.fusion_weight,         fx.model.gcn.local_weight, fx.model.gcn.global_weight,
      fx.model.attn_graph.w_score,    fx.model.region_projection, fx.model.predicate_in,
      fx.model.attn_history.w_query,  fx.model.lstm_question.bias};
  GradCheckReport r = grad_check(subset, [&](Tape& t) {
    EncoderOutput enc = encode_dialogue_state(t, fx.model, fx.dlg, 2);
    return t.sum(t.mul(enc.fused, t.constant(mix)));
  });
  CHECK(r.max_rel_err <= 1e-4);
}
