#include "gdial/gdial.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "gdial/checkpoint.hpp"
#include "gdial/engine.hpp"
#include "gdial/errors.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

gdial_status to_status(const gdial::Error& e) {
  return static_cast<gdial_status>(static_cast<int>(e.status()));
}

template <class Fn>
gdial_status guarded(Fn&& fn) {
  try {
    fn();
    return GDIAL_OK;
  } catch (const gdial::Error& e) {
    g_last_error = e.what();
    return to_status(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GDIAL_ERR_CONFIG;
  }
}

}  // namespace

struct gdial_config {
  gdial::RunConfig cfg;
};

struct gdial_model {
  gdial::LoadedCheckpoint loaded;
};

extern "C" {

const char* gdial_version(void) { return "1.0.0"; }

const char* gdial_last_error(void) { return g_last_error.c_str(); }

void gdial_string_free(char* s) { std::free(s); }

gdial_config* gdial_config_new(void) { return new gdial_config(); }

void gdial_config_free(gdial_config* cfg) { delete cfg; }

gdial_status gdial_config_load_file(gdial_config* cfg, const char* path) {
  return guarded([&] { cfg->cfg = gdial::RunConfig::from_file(path); });
}

gdial_status gdial_config_set(gdial_config* cfg, const char* key, const char* value) {
  return guarded([&] { cfg->cfg.set(key, value); });
}

gdial_status gdial_config_apply_ablation(gdial_config* cfg, const char* name) {
  return guarded([&] { cfg->cfg.apply_ablation(name); });
}

gdial_status gdial_config_get(const gdial_config* cfg, const char* key, char** value_out) {
  return guarded([&] {
    auto map = cfg->cfg.to_map();
    auto it = map.find(key);
    if (it == map.end()) throw gdial::ConfigError("unknown config key: " + std::string(key));
    *value_out = dup_string(it->second);
  });
}

gdial_status gdial_gen_data(const gdial_config* cfg, const char* out_path,
                            char** summary_json_out) {
  return guarded([&] {
    gdial::GenStats stats;
    gdial::Corpus corpus = gdial::generate_corpus(cfg->cfg, &stats);
    gdial::save_corpus(corpus, out_path);
    nlohmann::ordered_json summary;
    summary["kind"] = "gen_data_summary";
    summary["path"] = out_path;
    summary["dialogues"] = corpus.examples.size();
    summary["rounds"] = corpus.examples.size() * corpus.examples[0].rounds.size();
    summary["fallback_questions"] = stats.fallback_questions;
    summary["corpus_checksum"] = gdial::file_checksum_hex(out_path);
    if (summary_json_out) *summary_json_out = dup_string(summary.dump());
  });
}

gdial_status gdial_train(const gdial_config* cfg, const char* corpus_path, const char* out_dir,
                         gdial_train_callback callback, void* user_data,
                         char** summary_json_out) {
  return guarded([&] {
    gdial::Corpus corpus = gdial::load_corpus(corpus_path);
    const std::string checksum = gdial::file_checksum_hex(corpus_path);
    gdial::TrainCallbacks cb;
    if (callback) {
      cb.on_epoch = [&](const std::string& line) { callback(line.c_str(), user_data); };
    }
    gdial::TrainResult result = gdial::train_model(cfg->cfg, corpus, checksum, out_dir, cb);
    nlohmann::ordered_json summary;
    summary["kind"] = "train_summary";
    summary["epochs_run"] = result.epochs_run;
    summary["first_epoch_loss"] = result.first_epoch_loss;
    summary["best_val_mrr"] = result.best_val_mrr;
    summary["log"] = result.log_path;
    summary["best_checkpoint"] = result.best_path;
    summary["last_checkpoint"] = result.last_path;
    if (summary_json_out) *summary_json_out = dup_string(summary.dump());
  });
}

gdial_model* gdial_model_load(const char* checkpoint_path) {
  gdial_model* out = nullptr;
  const gdial_status st = guarded([&] {
    auto loaded = gdial::load_checkpoint(checkpoint_path);
    out = new gdial_model{std::move(loaded)};
  });
  return st == GDIAL_OK ? out : nullptr;
}

void gdial_model_free(gdial_model* model) { delete model; }

gdial_status gdial_eval(const gdial_model* model, const char* corpus_path, const char* split,
                        int workers, int dump_ranks, char** report_json_out) {
  return guarded([&] {
    gdial::Corpus corpus = gdial::load_corpus(corpus_path);
    gdial::EvalOptions opts;
    opts.split = split ? split : "all";
    opts.workers = workers;
    opts.dump_ranks = dump_ranks != 0;
    gdial::EvalOutput out = gdial::evaluate_model(*model->loaded.model, corpus,
                                                  gdial::file_checksum_hex(corpus_path), opts);
    if (report_json_out) *report_json_out = dup_string(out.report.dump());
  });
}

gdial_status gdial_infer(const gdial_model* model, const char* corpus_path, uint64_t image_id,
                         int round_index, char** result_json_out) {
  return guarded([&] {
    if (round_index < 1) throw gdial::ContractError("infer: round_index must be >= 1");
    gdial::Corpus corpus = gdial::load_corpus(corpus_path);
    nlohmann::ordered_json result =
        gdial::infer_round(*model->loaded.model, corpus, image_id,
                           static_cast<std::size_t>(round_index));
    if (result_json_out) *result_json_out = dup_string(result.dump());
  });
}

gdial_status gdial_gradcheck(char** report_json_out) {
  gdial_status st = guarded([&] {
    nlohmann::ordered_json report = gdial::run_gradcheck();
    const bool pass = report.at("pass").get<bool>();
    if (report_json_out) *report_json_out = dup_string(report.dump());
    if (!pass) throw gdial::NumericError("gradient check failed");
  });
  return st;
}

}  // extern "C"
