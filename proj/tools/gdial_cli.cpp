// Command-line front end. Links the C API only.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "gdial/gdial.h"

namespace {

struct ConfigHandle {
  gdial_config* cfg = gdial_config_new();
  ~ConfigHandle() { gdial_config_free(cfg); }
};

struct ModelHandle {
  gdial_model* model = nullptr;
  ~ModelHandle() { gdial_model_free(model); }
};

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { gdial_string_free(s); }
};

int fail(gdial_status st) {
  std::cerr << "error: " << gdial_last_error() << "\n";
  return static_cast<int>(st);
}

struct CommonOpts {
  std::string config_path;
  std::string seed;
  std::string epochs;
  std::string decoder;
  std::string ablation;
  std::string workers;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "key=value config file");
  cmd->add_option("--seed", opts.seed, "override: RNG seed");
  cmd->add_option("--epochs", opts.epochs, "override: training epochs");
  cmd->add_option("--decoder", opts.decoder, "override: disc or gen")
      ->check(CLI::IsMember({"disc", "gen"}));
  cmd->add_option("--ablation", opts.ablation, "model variant")
      ->check(CLI::IsMember({"no-sg", "sg", "sg-rel", "sg-rel-attn", "no-vis", "no-coattn"}));
  cmd->add_option("--workers", opts.workers, "override: worker threads");
}

// Returns GDIAL_OK or the first failing status.
gdial_status apply_common(ConfigHandle& cfg, const CommonOpts& opts) {
  gdial_status st = GDIAL_OK;
  if (!opts.config_path.empty()) {
    st = gdial_config_load_file(cfg.cfg, opts.config_path.c_str());
    if (st != GDIAL_OK) return st;
  }
  auto set = [&](const char* key, const std::string& value) {
    if (st == GDIAL_OK && !value.empty()) st = gdial_config_set(cfg.cfg, key, value.c_str());
  };
  set("seed", opts.seed);
  set("epochs", opts.epochs);
  set("decoder", opts.decoder);
  set("workers", opts.workers);
  if (st == GDIAL_OK && !opts.ablation.empty()) {
    st = gdial_config_apply_ablation(cfg.cfg, opts.ablation.c_str());
  }
  return st;
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text << "\n";
  return static_cast<bool>(out);
}

void on_epoch(const char* line, void*) { std::cout << line << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scene-graph visual dialogue: data generation, training, evaluation"};
  app.require_subcommand(1);

  CommonOpts gen_opts;
  std::string gen_out = "corpus.jsonl";
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dialogue corpus");
  add_common(gen, gen_opts);
  gen->add_option("--out", gen_out, "corpus output path (JSONL)");

  CommonOpts train_opts;
  std::string train_corpus;
  std::string train_out = "run";
  auto* train = app.add_subcommand("train", "train a model on a corpus");
  add_common(train, train_opts);
  train->add_option("--corpus", train_corpus, "corpus file")->required();
  train->add_option("--out", train_out, "output directory for checkpoints and log");

  std::string eval_ckpt;
  std::string eval_corpus;
  std::string eval_split = "all";
  std::string eval_out;
  int eval_workers = 1;
  bool eval_dump_ranks = false;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a corpus split");
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--corpus", eval_corpus, "corpus file")->required();
  eval->add_option("--split", eval_split, "train, val or all")
      ->check(CLI::IsMember({"train", "val", "all"}));
  eval->add_option("--workers", eval_workers, "evaluation worker threads");
  eval->add_flag("--dump-ranks", eval_dump_ranks, "include per-round ranks in the report");
  eval->add_option("--out", eval_out, "write the report JSON here as well");

  std::string infer_ckpt;
  std::string infer_corpus;
  std::uint64_t infer_image = 0;
  int infer_round = 1;
  std::string infer_out;
  auto* infer = app.add_subcommand("infer", "rank answers for one dialogue round");
  infer->add_option("--checkpoint", infer_ckpt, "checkpoint file")->required();
  infer->add_option("--corpus", infer_corpus, "corpus file")->required();
  infer->add_option("--image-id", infer_image, "dialogue image id")->required();
  infer->add_option("--round", infer_round, "1-based round index")->required();
  infer->add_option("--out", infer_out, "write attention weights JSON here");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 3;
  }

  if (gen->parsed()) {
    ConfigHandle cfg;
    gdial_status st = apply_common(cfg, gen_opts);
    if (st != GDIAL_OK) return fail(st);
    OwnedString summary;
    st = gdial_gen_data(cfg.cfg, gen_out.c_str(), &summary.s);
    if (st != GDIAL_OK) return fail(st);
    std::cout << summary.s << "\n";
    return 0;
  }

  if (train->parsed()) {
    ConfigHandle cfg;
    gdial_status st = apply_common(cfg, train_opts);
    if (st != GDIAL_OK) return fail(st);
    OwnedString summary;
    st = gdial_train(cfg.cfg, train_corpus.c_str(), train_out.c_str(), on_epoch, nullptr,
                     &summary.s);
    if (st != GDIAL_OK) return fail(st);
    std::cout << summary.s << "\n";
    return 0;
  }

  if (eval->parsed()) {
    ModelHandle model;
    model.model = gdial_model_load(eval_ckpt.c_str());
    if (!model.model) return fail(GDIAL_ERR_IO);
    OwnedString report;
    gdial_status st = gdial_eval(model.model, eval_corpus.c_str(), eval_split.c_str(),
                                 eval_workers, eval_dump_ranks ? 1 : 0, &report.s);
    if (st != GDIAL_OK) return fail(st);
    std::cout << report.s << "\n";
    if (!eval_out.empty() && !write_file(eval_out, report.s)) {
      std::cerr << "error: cannot write " << eval_out << "\n";
      return 2;
    }
    return 0;
  }

  if (infer->parsed()) {
    ModelHandle model;
    model.model = gdial_model_load(infer_ckpt.c_str());
    if (!model.model) return fail(GDIAL_ERR_IO);
    OwnedString result;
    gdial_status st =
        gdial_infer(model.model, infer_corpus.c_str(), infer_image, infer_round, &result.s);
    if (st != GDIAL_OK) return fail(st);
    std::cout << result.s << "\n";
    if (!infer_out.empty() && !write_file(infer_out, result.s)) {
      std::cerr << "error: cannot write " << infer_out << "\n";
      return 2;
    }
    return 0;
  }

  if (gradcheck->parsed()) {
    OwnedString report;
    gdial_status st = gdial_gradcheck(&report.s);
    if (report.s) std::cout << report.s << "\n";
    if (st != GDIAL_OK) return fail(st);
    return 0;
  }
  return 3;
}
