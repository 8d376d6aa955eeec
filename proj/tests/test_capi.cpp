#include <unistd.h>

#include <filesystem>
#include <string>

#include "doctest.h"
#include "gdial/gdial.h"
#include "json.hpp"

using json = nlohmann::json;

namespace {

struct TempDir {
  std::string path;
  explicit TempDir(const char* name)
      : path(std::string("/tmp/gdial_capi_") + name + "_" + std::to_string(::getpid())) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

struct Config {
  gdial_config* cfg = gdial_config_new();
  ~Config() { gdial_config_free(cfg); }

  void set(const char* key, const char* value) {
    REQUIRE(gdial_config_set(cfg, key, value) == GDIAL_OK);
  }
};

void desk_scale(Config& c) {
  c.set("hidden_size", "12");
  c.set("word_embedding_size", "10");
  c.set("region_feature_size", "40");
  c.set("regions_per_image", "6");
  c.set("attention_size", "10");
  c.set("num_dialogues", "8");
  c.set("rounds_per_dialogue", "4");
  c.set("candidates_per_round", "20");
  c.set("batch_size", "4");
  c.set("epochs", "1");
  c.set("seed", "5");
}

std::string take(char* s) {
  REQUIRE(s != nullptr);
  std::string out(s);
  gdial_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("config keys round trip through the C API and bad keys fail") {
  Config c;
  c.set("hidden_size", "48");
  char* got = nullptr;
  REQUIRE(gdial_config_get(c.cfg, "hidden_size", &got) == GDIAL_OK);
  CHECK(take(got) == "48");

  CHECK(gdial_config_set(c.cfg, "no_such_key", "1") == GDIAL_ERR_CONFIG);
  CHECK(std::string(gdial_last_error()).find("no_such_key") != std::string::npos);
  CHECK(gdial_config_apply_ablation(c.cfg, "sg-rel") == GDIAL_OK);
  char* flag = nullptr;
  REQUIRE(gdial_config_get(c.cfg, "use_graph_attention", &flag) == GDIAL_OK);
  CHECK(take(flag) == "false");
  CHECK(gdial_config_apply_ablation(c.cfg, "bogus") == GDIAL_ERR_CONFIG);
}

TEST_CASE("the full command surface works through the shared library") {
  TempDir dir("flow");
  Config c;
  desk_scale(c);

  const std::string corpus = dir.path + "/corpus.jsonl";
  char* summary_raw = nullptr;
  REQUIRE(gdial_gen_data(c.cfg, corpus.c_str(), &summary_raw) == GDIAL_OK);
  json summary = json::parse(take(summary_raw));
  CHECK(summary.at("dialogues").get<int>() == 8);
  CHECK(summary.at("corpus_checksum").get<std::string>().size() == 16);

  // same seed, same checksum
  const std::string corpus2 = dir.path + "/corpus2.jsonl";
  char* summary2_raw = nullptr;
  REQUIRE(gdial_gen_data(c.cfg, corpus2.c_str(), &summary2_raw) == GDIAL_OK);
  json summary2 = json::parse(take(summary2_raw));
  CHECK(summary.at("corpus_checksum") == summary2.at("corpus_checksum"));

  int epoch_lines = 0;
  auto on_epoch = [](const char*, void* user) { ++*static_cast<int*>(user); };
  char* train_raw = nullptr;
  REQUIRE(gdial_train(c.cfg, corpus.c_str(), (dir.path + "/run").c_str(), on_epoch, &epoch_lines,
                      &train_raw) == GDIAL_OK);
  json train_summary = json::parse(take(train_raw));
  CHECK(epoch_lines == 1);
  const std::string ckpt = train_summary.at("last_checkpoint").get<std::string>();

  gdial_model* model = gdial_model_load(ckpt.c_str());
  REQUIRE(model != nullptr);
  char* report_raw = nullptr;
  REQUIRE(gdial_eval(model, corpus.c_str(), "all", 2, 1, &report_raw) == GDIAL_OK);
  json report = json::parse(take(report_raw));
  CHECK(report.at("kind") == "evaluation");
  CHECK(report.at("count").get<int>() == 32);
  CHECK(report.at("ranks").size() == 32);
  CHECK(report.at("config").at("hidden_size") == "12");
  CHECK(report.at("corpus_checksum") == summary.at("corpus_checksum"));

  char* infer_raw = nullptr;
  REQUIRE(gdial_infer(model, corpus.c_str(), 1, 2, &infer_raw) == GDIAL_OK);
  json infer = json::parse(take(infer_raw));
  CHECK(infer.at("top").size() == 5);
  CHECK(infer.at("attention").contains("graph"));

  // compatibility failure surfaces as status 5 with the field named
  Config other;
  desk_scale(other);
  other.set("region_feature_size", "48");
  const std::string corpus3 = dir.path + "/corpus3.jsonl";
  char* s3 = nullptr;
  REQUIRE(gdial_gen_data(other.cfg, corpus3.c_str(), &s3) == GDIAL_OK);
  gdial_string_free(s3);
  char* bad_raw = nullptr;
  CHECK(gdial_eval(model, corpus3.c_str(), "all", 1, 0, &bad_raw) == GDIAL_ERR_COMPAT);
  CHECK(std::string(gdial_last_error()).find("region_feature_size") != std::string::npos);

  gdial_model_free(model);
}

TEST_CASE("error statuses map io and contract failures") {
  CHECK(gdial_model_load("/nonexistent/path.ckpt") == nullptr);
  Config c;
  desk_scale(c);
  CHECK(gdial_gen_data(c.cfg, "/nonexistent-dir/out.jsonl", nullptr) == GDIAL_ERR_IO);
  CHECK(gdial_train(c.cfg, "/nonexistent.jsonl", "/tmp/gdial_capi_never", nullptr, nullptr,
                    nullptr) == GDIAL_ERR_IO);
}
