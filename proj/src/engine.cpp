#include "gdial/engine.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "gdial/decoders.hpp"
#include "gdial/encoder.hpp"
#include "gdial/errors.hpp"
#include "gdial/gradcheck.hpp"

namespace gdial {

using ojson = nlohmann::ordered_json;

bool in_validation_split(std::uint64_t image_id, const RunConfig& cfg) {
  const std::uint64_t h = mix64(image_id ^ mix64(cfg.seed ^ 0x76616c5f73706c74ull));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return u < cfg.val_fraction;
}

namespace {

// Corpus tokenized once, with candidate strings deduplicated into a shared
// pool so option encodings are computed once per batch instead of once per
// round. Per-column matmul sums make the pooled encodings bitwise equal to
// encoding each round's options directly.
struct RuntimeCorpus {
  const Corpus* src = nullptr;
  std::vector<std::string> pool_strings;
  std::vector<std::vector<int>> pool_tokens;
  std::vector<TokenizedDialogue> dialogues;
};

RuntimeCorpus build_runtime(const Corpus& corpus, const Vocabulary& vocab) {
  RuntimeCorpus rt;
  rt.src = &corpus;
  std::map<std::string, std::size_t> pool_index;
  for (const DialogueExample& ex : corpus.examples) {
    for (const RoundData& rd : ex.rounds) {
      for (const std::string& opt : rd.options) pool_index.emplace(opt, 0);
    }
  }
  std::size_t next = 0;
  for (auto& [str, id] : pool_index) {
    id = next++;
    rt.pool_strings.push_back(str);
    rt.pool_tokens.push_back(vocab.encode(str));
  }
  rt.dialogues.reserve(corpus.examples.size());
  for (const DialogueExample& ex : corpus.examples) {
    TokenizedDialogue dlg;
    dlg.source = &ex;
    dlg.caption = vocab.encode(ex.caption);
    for (const RoundData& rd : ex.rounds) {
      TokenizedRound tr;
      tr.question = vocab.encode(rd.question);
      tr.answer = vocab.encode(rd.answer);
      tr.gt_index = rd.gt_index;
      tr.option_pool_ids.reserve(rd.options.size());
      for (const std::string& opt : rd.options) {
        tr.option_pool_ids.push_back(pool_index.at(opt));
      }
      dlg.rounds.push_back(std::move(tr));
    }
    rt.dialogues.push_back(std::move(dlg));
  }
  return rt;
}

std::vector<std::vector<int>> round_option_tokens(const RuntimeCorpus& rt,
                                                  const TokenizedRound& round) {
  std::vector<std::vector<int>> out;
  out.reserve(round.option_pool_ids.size());
  for (std::size_t pid : round.option_pool_ids) out.push_back(rt.pool_tokens[pid]);
  return out;
}

// World-shape fields always describe the corpus, not the run request.
RunConfig adopt_world_shape(RunConfig cfg, const CorpusHeader& header) {
  const RunConfig& h = header.config;
  cfg.region_feature_size = h.region_feature_size;
  cfg.regions_per_image = h.regions_per_image;
  cfg.candidates_per_round = h.candidates_per_round;
  cfg.rounds_per_dialogue = h.rounds_per_dialogue;
  cfg.max_edges = h.max_edges;
  cfg.num_dialogues = h.num_dialogues;
  cfg.objects_min = h.objects_min;
  cfg.objects_max = h.objects_max;
  cfg.noise_level = h.noise_level;
  return cfg;
}

void check_compat(const Model& model, const Corpus& corpus) {
  const RunConfig& mc = model.config();
  const RunConfig& cc = corpus.header.config;
  auto mismatch = [](const std::string& field) {
    throw CompatError("checkpoint and corpus disagree on " + field);
  };
  if (mc.region_feature_size != cc.region_feature_size) mismatch("region_feature_size");
  if (mc.regions_per_image != cc.regions_per_image) mismatch("regions_per_image");
  if (mc.candidates_per_round != cc.candidates_per_round) mismatch("candidates_per_round");
  if (model.catalogues().objects.names != corpus.header.catalogues.objects.names) {
    mismatch("catalogues.objects");
  }
  if (model.catalogues().predicates.names != corpus.header.catalogues.predicates.names) {
    mismatch("catalogues.predicates");
  }
}

std::vector<std::size_t> split_ids(const Corpus& corpus, const RunConfig& cfg,
                                   const std::string& split) {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < corpus.examples.size(); ++i) {
    const bool is_val = in_validation_split(corpus.examples[i].image_id, cfg);
    if (split == "all" || (split == "val" && is_val) || (split == "train" && !is_val)) {
      ids.push_back(i);
    }
  }
  if (split != "all" && split != "val" && split != "train") {
    throw ContractError("unknown split: " + split);
  }
  if (ids.empty()) throw ContractError("empty split: " + split);
  return ids;
}

ojson metrics_to_json(const MetricsReport& m) {
  ojson j;
  j["count"] = m.count;
  j["mrr"] = m.mrr;
  j["r_at_1"] = m.recall_at.at(1);
  j["r_at_5"] = m.recall_at.at(5);
  j["r_at_10"] = m.recall_at.at(10);
  j["mean_rank"] = m.mean_rank;
  return j;
}

Array encode_pool(const Model& model, const RuntimeCorpus& rt) {
  Tape tape(/*grad_enabled=*/false);
  return encode_candidates(tape, model, rt.pool_tokens).array();
}

// Ranks for one dialogue, all rounds, forward only.
std::vector<std::size_t> rank_dialogue(const Model& model, const RuntimeCorpus& rt,
                                       const TokenizedDialogue& dlg, const Array* pool_embeddings,
                                       const std::function<void(const AttentionProbe&)>& probe) {
  const RunConfig& cfg = model.config();
  std::vector<std::size_t> ranks;
  Tape tape(/*grad_enabled=*/false);
  DialogueEncodings shared = encode_dialogue_shared(tape, model, dlg);
  Value pool;
  if (pool_embeddings) pool = tape.constant(*pool_embeddings);
  for (std::size_t round = 1; round <= dlg.rounds.size(); ++round) {
    const TokenizedRound& tr = dlg.rounds[round - 1];
    EncoderOutput enc = encode_round(tape, model, dlg, round, shared);
    Value scores;
    if (cfg.decoder == DecoderKind::Discriminative) {
      Value cand = tape.gather_cols(pool, tr.option_pool_ids);
      scores = disc_scores(tape, enc.fused, cand);
    } else {
      scores = gen_loglik_scores(tape, model, enc.fused, round_option_tokens(rt, tr),
                                 cfg.gen_length_normalize);
    }
    Ranking ranking = rank_candidates(scores.array(), tr.gt_index);
    ranks.push_back(ranking.gt_rank);
    if (probe) {
      AttentionProbe p;
      p.image_id = dlg.source->image_id;
      p.round_index = round;
      p.history_weights = enc.history_weights.valid() ? &enc.history_weights.array() : nullptr;
      p.visual_weights = enc.visual_weights.valid() ? &enc.visual_weights.array() : nullptr;
      p.graph_weights = enc.graph_weights.valid() ? &enc.graph_weights.array() : nullptr;
      p.graph_mask = shared.graph.has_value() ? &shared.graph->mask : nullptr;
      p.fused = &enc.fused.array();
      probe(p);
    }
  }
  return ranks;
}

std::vector<std::size_t> eval_ids(const Model& model, const RuntimeCorpus& rt,
                                  const std::vector<std::size_t>& ids, int workers,
                                  const std::function<void(const AttentionProbe&)>& probe) {
  Array pool_embeddings;
  const Array* pool_ptr = nullptr;
  if (model.config().decoder == DecoderKind::Discriminative) {
    pool_embeddings = encode_pool(model, rt);
    pool_ptr = &pool_embeddings;
  }
  std::vector<std::vector<std::size_t>> per_dialogue(ids.size());
  const std::size_t n_workers =
      probe ? 1 : std::max<std::size_t>(1, std::min<std::size_t>(workers, ids.size()));
  if (n_workers <= 1) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      per_dialogue[i] = rank_dialogue(model, rt, rt.dialogues[ids[i]], pool_ptr, probe);
    }
  } else {
    std::vector<std::thread> threads;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < n_workers; ++w) {
      threads.emplace_back([&, w]() {
        try {
          for (std::size_t i = w; i < ids.size(); i += n_workers) {
            per_dialogue[i] = rank_dialogue(model, rt, rt.dialogues[ids[i]], pool_ptr, nullptr);
          }
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
    for (auto& th : threads) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  std::vector<std::size_t> ranks;
  for (const auto& d : per_dialogue) ranks.insert(ranks.end(), d.begin(), d.end());
  return ranks;
}

}  // namespace

TrainResult train_model(const RunConfig& raw_cfg, const Corpus& corpus,
                        const std::string& corpus_checksum, const std::string& out_dir,
                        const TrainCallbacks& callbacks) {
  RunConfig cfg = adopt_world_shape(raw_cfg, corpus.header);
  cfg.validate();
  if (corpus.examples.empty()) throw ContractError("train: empty corpus");

  Vocabulary vocab = build_vocab(corpus, cfg.vocab_min_freq);
  Model model = Model::initialized(cfg, corpus.header.catalogues, vocab);
  RuntimeCorpus rt = build_runtime(corpus, vocab);

  std::vector<std::size_t> train_ids;
  std::vector<std::size_t> val_ids;
  for (std::size_t i = 0; i < corpus.examples.size(); ++i) {
    (in_validation_split(corpus.examples[i].image_id, cfg) ? val_ids : train_ids).push_back(i);
  }
  if (train_ids.empty()) throw ContractError("train: training split is empty");

  const std::vector<Parameter*> params = model.parameters();
  AdamState adam(params, {cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon});
  Rng shuffle_rng(mix64(cfg.seed ^ 0x73687566666c65ull));

  std::filesystem::create_directories(out_dir);
  TrainResult result;
  result.log_path = out_dir + "/train_log.jsonl";
  result.best_path = out_dir + "/best.ckpt";
  result.last_path = out_dir + "/last.ckpt";
  std::ofstream log(result.log_path, std::ios::binary);
  if (!log) throw IoError("cannot open training log: " + result.log_path);
  ojson log_header;
  log_header["kind"] = "training_log";
  log_header["config"] = cfg.to_map();
  log_header["corpus_checksum"] = corpus_checksum;
  log << log_header.dump() << "\n";

  ojson last_val = nullptr;
  bool wrote_best = false;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t rounds_seen = 0;
    const auto batches =
        make_batches(train_ids.size(), static_cast<std::size_t>(cfg.batch_size), shuffle_rng);
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      try {
        model.zero_grads();
        Tape tape;
        Value pool;
        if (cfg.decoder == DecoderKind::Discriminative) {
          pool = encode_candidates(tape, model, rt.pool_tokens);
        }
        Value batch_loss;
        std::size_t batch_rounds = 0;
        for (std::size_t pos : batches[bi]) {
          const TokenizedDialogue& dlg = rt.dialogues[train_ids[pos]];
          DialogueEncodings shared = encode_dialogue_shared(tape, model, dlg);
          for (std::size_t round = 1; round <= dlg.rounds.size(); ++round) {
            const TokenizedRound& tr = dlg.rounds[round - 1];
            EncoderOutput enc = encode_round(tape, model, dlg, round, shared);
            Value loss;
            if (cfg.decoder == DecoderKind::Discriminative) {
              Value cand = tape.gather_cols(pool, tr.option_pool_ids);
              loss = npair_loss(tape, disc_scores(tape, enc.fused, cand), tr.gt_index);
            } else {
              loss = gen_decode_loss(tape, model, enc.fused, tr.answer);
            }
            batch_loss = batch_loss.valid() ? tape.add(batch_loss, loss) : loss;
            ++batch_rounds;
          }
        }
        batch_loss = tape.scale(batch_loss, 1.0 / static_cast<double>(batch_rounds));
        tape.backward(batch_loss);
        adam.step(params);
        loss_sum += batch_loss.array()[0] * static_cast<double>(batch_rounds);
        rounds_seen += batch_rounds;
      } catch (const NumericError& e) {
        throw NumericError("training aborted at epoch " + std::to_string(epoch) + " batch " +
                           std::to_string(bi) + ": " + e.what());
      }
    }
    const double epoch_loss = loss_sum / static_cast<double>(rounds_seen);
    if (epoch == 1) result.first_epoch_loss = epoch_loss;

    ojson line;
    line["epoch"] = epoch;
    line["train_loss"] = epoch_loss;
    if (!val_ids.empty()) {
      MetricsReport vm = compute_metrics(eval_ids(model, rt, val_ids, 1, nullptr),
                                         static_cast<std::size_t>(cfg.candidates_per_round));
      last_val = metrics_to_json(vm);
      line["val"] = last_val;
      if (vm.mrr > result.best_val_mrr) {
        result.best_val_mrr = vm.mrr;
        save_checkpoint(result.best_path, model, adam,
                        {epoch, shuffle_rng.state(), last_val});
        wrote_best = true;
      }
    } else {
      line["val"] = nullptr;
    }
    const std::string line_text = line.dump();
    log << line_text << "\n";
    log.flush();
    if (callbacks.on_epoch) callbacks.on_epoch(line_text);
    result.epochs_run = epoch;
    if (callbacks.should_stop && callbacks.should_stop(epoch, model)) break;
  }

  save_checkpoint(result.last_path, model, adam,
                  {result.epochs_run, shuffle_rng.state(), last_val});
  if (!wrote_best) {
    save_checkpoint(result.best_path, model, adam,
                    {result.epochs_run, shuffle_rng.state(), last_val});
  }
  if (!log) throw IoError("training log write failed: " + result.log_path);
  return result;
}

EvalOutput evaluate_model(const Model& model, const Corpus& corpus,
                          const std::string& corpus_checksum, const EvalOptions& opts) {
  check_compat(model, corpus);
  if (opts.workers < 1) throw ContractError("evaluate: workers must be >= 1");
  RuntimeCorpus rt = build_runtime(corpus, model.vocab());
  const std::vector<std::size_t> ids = split_ids(corpus, model.config(), opts.split);

  EvalOutput out;
  out.ranks = eval_ids(model, rt, ids, opts.workers, opts.probe);
  out.metrics = compute_metrics(out.ranks,
                                static_cast<std::size_t>(model.config().candidates_per_round));
  ojson report;
  report["format_version"] = 1;
  report["kind"] = "evaluation";
  report["config"] = model.config().to_map();
  report["corpus_checksum"] = corpus_checksum;
  report["split"] = opts.split;
  for (auto& [k, v] : metrics_to_json(out.metrics).items()) report[k] = v;
  if (opts.dump_ranks) report["ranks"] = out.ranks;
  out.report = std::move(report);
  return out;
}

ojson infer_round(const Model& model, const Corpus& corpus, std::uint64_t image_id,
                  std::size_t round_index) {
  check_compat(model, corpus);
  const DialogueExample* example = nullptr;
  for (const DialogueExample& ex : corpus.examples) {
    if (ex.image_id == image_id) example = &ex;
  }
  if (!example) throw ContractError("infer: no dialogue with image_id " + std::to_string(image_id));
  if (round_index < 1 || round_index > example->rounds.size()) {
    throw ContractError("infer: round " + std::to_string(round_index) + " outside [1, " +
                        std::to_string(example->rounds.size()) + "]");
  }
  TokenizedDialogue dlg = tokenize_dialogue(*example, model.vocab());

  Tape tape(/*grad_enabled=*/false);
  DialogueEncodings shared = encode_dialogue_shared(tape, model, dlg);
  EncoderOutput enc = encode_round(tape, model, dlg, round_index, shared);
  const TokenizedRound& tr = dlg.rounds[round_index - 1];
  Value scores;
  if (model.config().decoder == DecoderKind::Discriminative) {
    scores = disc_scores(tape, enc.fused, encode_candidates(tape, model, tr.option_tokens));
  } else {
    scores = gen_loglik_scores(tape, model, enc.fused, tr.option_tokens,
                               model.config().gen_length_normalize);
  }
  Ranking ranking = rank_candidates(scores.array(), tr.gt_index);

  const RoundData& rd = example->rounds[round_index - 1];
  ojson result;
  result["image_id"] = image_id;
  result["round"] = round_index;
  result["question"] = rd.question;
  result["gt_answer"] = rd.answer;
  result["gt_rank"] = ranking.gt_rank;
  ojson top = ojson::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(5, ranking.order.size()); ++i) {
    const std::size_t c = ranking.order[i];
    top.push_back({{"answer", rd.options[c]}, {"score", scores.array()[c]}});
  }
  result["top"] = top;
  ojson attn;
  auto weights_json = [](const Array& a) {
    std::vector<double> v(a.data(), a.data() + a.size());
    return v;
  };
  if (enc.history_weights.valid()) attn["history"] = weights_json(enc.history_weights.array());
  if (enc.visual_weights.valid()) attn["visual"] = weights_json(enc.visual_weights.array());
  if (enc.graph_weights.valid()) attn["graph"] = weights_json(enc.graph_weights.array());
  result["attention"] = attn;
  return result;
}

// --- gradcheck -------------------------------------------------------------

namespace {

Array random_array(Rng& rng, std::vector<std::size_t> shape, double lo = -1.0, double hi = 1.0) {
  Array a(std::move(shape));
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.uniform(lo, hi);
  return a;
}

// Uniform in +-[0.1, 1.1]: keeps relu inputs away from the kink where the
// finite-difference oracle is invalid.
Array random_array_off_zero(Rng& rng, std::vector<std::size_t> shape) {
  Array a(std::move(shape));
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double mag = 0.1 + rng.uniform();
    a[i] = rng.uniform() < 0.5 ? -mag : mag;
  }
  return a;
}

}  // namespace

ojson run_gradcheck(double tolerance) {
  RunConfig tiny;
  tiny.seed = 1011;
  tiny.hidden_size = 8;
  tiny.word_embedding_size = 8;
  tiny.region_feature_size = 16;
  tiny.regions_per_image = 4;
  tiny.attention_size = 8;
  tiny.num_dialogues = 2;
  tiny.objects_min = 2;
  tiny.objects_max = 4;
  tiny.rounds_per_dialogue = 3;
  tiny.candidates_per_round = 12;
  tiny.max_edges = 6;
  tiny.batch_size = 2;
  tiny.epochs = 0;

  Corpus corpus = generate_corpus(tiny);
  Vocabulary vocab = build_vocab(corpus, 1);
  Model model = Model::initialized(tiny, corpus.header.catalogues, vocab);
  TokenizedDialogue dlg = tokenize_dialogue(corpus.examples[0], vocab);

  ojson entries = ojson::array();
  bool pass = true;
  auto record = [&](const std::string& name, const GradCheckReport& r) {
    entries.push_back({{"name", name},
                       {"max_rel_err", r.max_rel_err},
                       {"worst_param", r.worst_param}});
    if (r.max_rel_err > tolerance) pass = false;
  };

  Rng rng(99);

  {  // primitive operations
    Parameter p("op.matmul", random_array(rng, {3, 4}));
    Array b = random_array(rng, {4, 2});
    Parameter* ps[] = {&p};
    record("op.matmul", grad_check(ps, [&](Tape& t) {
             return t.sum(t.matmul(t.param(p), t.constant(b)));
           }));
  }
  {
    Parameter p("op.add", random_array(rng, {3, 3}));
    Array b = random_array(rng, {3, 3});
    Parameter* ps[] = {&p};
    record("op.add", grad_check(ps, [&](Tape& t) {
             return t.sum(t.add(t.param(p), t.constant(b)));
           }));
  }
  {
    Parameter p("op.mul", random_array(rng, {3, 3}));
    Array b = random_array(rng, {3, 3});
    Parameter* ps[] = {&p};
    record("op.mul", grad_check(ps, [&](Tape& t) {
             return t.sum(t.mul(t.param(p), t.constant(b)));
           }));
  }
  {
    Parameter p("op.tanh", random_array(rng, {2, 5}));
    Parameter* ps[] = {&p};
    record("op.tanh", grad_check(ps, [&](Tape& t) { return t.sum(t.tanh(t.param(p))); }));
  }
  {
    Parameter p("op.relu", random_array_off_zero(rng, {2, 5}));
    Array w = random_array(rng, {2, 5});
    Parameter* ps[] = {&p};
    record("op.relu", grad_check(ps, [&](Tape& t) {
             return t.sum(t.mul(t.relu(t.param(p)), t.constant(w)));
           }));
  }
  {
    Parameter p("op.sigmoid", random_array(rng, {2, 5}));
    Parameter* ps[] = {&p};
    record("op.sigmoid", grad_check(ps, [&](Tape& t) { return t.sum(t.sigmoid(t.param(p))); }));
  }
  {
    Parameter p("op.softmax", random_array(rng, {6}));
    Array w = random_array(rng, {6});
    std::vector<std::uint8_t> mask = {1, 1, 0, 1, 1, 1};
    Parameter* ps[] = {&p};
    record("op.softmax", grad_check(ps, [&](Tape& t) {
             return t.sum(t.mul(t.softmax(t.param(p), &mask), t.constant(w)));
           }));
  }
  {
    Parameter p("op.nll_from_scores", random_array(rng, {5}));
    Parameter* ps[] = {&p};
    record("op.nll_from_scores",
           grad_check(ps, [&](Tape& t) { return t.nll_from_scores(t.param(p), 2); }));
  }
  {
    Parameter p("op.masked_nll_cols", random_array(rng, {4, 3}));
    Parameter* ps[] = {&p};
    record("op.masked_nll_cols", grad_check(ps, [&](Tape& t) {
             return t.sum(t.masked_nll_cols(t.param(p), {1, 2, 0}, {1, 0, 1}));
           }));
  }
  {
    const std::size_t d = 4;
    const std::size_t e = 3;
    Parameter w("op.lstm_step.weight", random_array(rng, {4 * d, e + d}, -0.5, 0.5));
    Parameter b("op.lstm_step.bias", random_array(rng, {4 * d}, -0.5, 0.5));
    Array x1 = random_array(rng, {e, 2});
    Array x2 = random_array(rng, {e, 2});
    Parameter* ps[] = {&w, &b};
    record("op.lstm_step", grad_check(ps, [&](Tape& t) {
             LstmParams lp{&w, &b};
             LstmState s = lstm_zero_state(t, d, 2);
             s = lstm_step(t, t.constant(x1), s, lp);
             s = lstm_step(t, t.constant(x2), s, lp);
             return t.add(t.sum(s.h), t.sum(s.c));
           }));
  }

  {  // graph layers on a real scene
    const SceneGraphInstance& graph = corpus.examples[0].graph;
    const std::size_t d = model.hidden_size();
    const std::size_t r = graph.slot_count();
    const std::size_t s = corpus.header.catalogues.predicates.size();
    Array features = random_array(rng, {d, r}, -0.5, 0.5);
    for (std::size_t slot = 0; slot < r; ++slot) {
      if (!graph.present[slot]) {
        for (std::size_t i = 0; i < d; ++i) features.at(i, slot) = 0.0;
      }
    }
    Array weights = random_array(rng, {d, r});
    Parameter* local_ps[] = {model.gcn.local_weight, model.predicate_in, model.predicate_out};
    record("layer.local_gcn", grad_check(local_ps, [&](Tape& t) {
             Value v_local = assemble_local_nodes(t, t.constant(features),
                                                  t.param(*model.predicate_in),
                                                  t.param(*model.predicate_out));
             Array a1 = build_local_adjacency(graph, r, s);
             Value out = local_gcn(t, v_local, a1, model.gcn, r, graph.present);
             return t.sum(t.mul(out, t.constant(weights)));
           }));
    Parameter* global_ps[] = {model.gcn.global_weight};
    record("layer.global_gcn", grad_check(global_ps, [&](Tape& t) {
             Array a2 = build_global_adjacency(graph, r);
             Value out = global_gcn(t, t.constant(features), a2, model.gcn, graph.present);
             return t.sum(t.mul(out, t.constant(weights)));
           }));
  }
  {
    const std::size_t d = model.hidden_size();
    Array values = random_array(rng, {d, 5}, -0.5, 0.5);
    Array qv = random_array(rng, {d}, -0.5, 0.5);
    Array hv = random_array(rng, {d}, -0.5, 0.5);
    Array w = random_array(rng, {d});
    std::vector<std::uint8_t> mask = {1, 1, 1, 0, 1};
    Parameter* ps[] = {model.attn_graph.w_values, model.attn_graph.w_query,
                       model.attn_graph.w_ctx, model.attn_graph.w_score};
    record("layer.attention", grad_check(ps, [&](Tape& t) {
             AttendedContext c =
                 additive_attend(t, t.constant(values), t.constant(qv), t.constant(hv),
                                 model.attn_graph, &mask);
             return t.sum(t.mul(c.context, t.constant(w)));
           }));
  }

  // Full pipelines, one entry per parameter so a failure names its layer.
  auto pipeline = [&](const std::string& prefix, const Fragment& frag) {
    for (Parameter* p : model.parameters()) {
      model.zero_grads();
      Parameter* ps[] = {p};
      record(prefix + "/" + p->name, grad_check(ps, frag));
    }
  };
  pipeline("pipeline.disc", [&](Tape& t) {
    EncoderOutput enc = encode_dialogue_state(t, model, dlg, 2);
    Value cand = encode_candidates(t, model, dlg.rounds[1].option_tokens);
    return npair_loss(t, disc_scores(t, enc.fused, cand), dlg.rounds[1].gt_index);
  });
  pipeline("pipeline.gen", [&](Tape& t) {
    EncoderOutput enc = encode_dialogue_state(t, model, dlg, 2);
    return gen_decode_loss(t, model, enc.fused, dlg.rounds[1].answer);
  });

  ojson out;
  out["pass"] = pass;
  out["tolerance"] = tolerance;
  out["entries"] = entries;
  return out;
}

}  // namespace gdial
