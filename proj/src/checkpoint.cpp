#include "gdial/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "gdial/errors.hpp"

namespace gdial {

using ojson = nlohmann::ordered_json;

namespace {

constexpr char kMagic[8] = {'G', 'D', 'L', 'C', 'K', 'P', 'T', '1'};

void put_u64_le(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return v;
}

void append_doubles_le(std::string& out, const Array& a) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    put_u64_le(out, std::bit_cast<std::uint64_t>(a[i]));
  }
}

void read_doubles_le(const unsigned char* p, Array& a) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = std::bit_cast<double>(get_u64_le(p + i * 8));
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, const AdamState& adam,
                     const CheckpointExtras& extras) {
  const std::vector<Parameter*> params = model.parameters();
  ojson arrays = ojson::array();
  std::string payload;
  auto add_array = [&](const std::string& name, const Array& a) {
    arrays.push_back({{"name", name}, {"shape", a.shape()}, {"offset", payload.size()}});
    append_doubles_le(payload, a);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    add_array(params[i]->name, params[i]->value);
    add_array(params[i]->name + ".adam_m", adam.first_moment(i));
    add_array(params[i]->name + ".adam_v", adam.second_moment(i));
  }

  ojson header;
  header["format_version"] = 1;
  header["config"] = model.config().to_map();
  const WorldCatalogues& cats = model.catalogues();
  header["catalogues"] = {{"objects", cats.objects.names},
                          {"predicates", cats.predicates.names},
                          {"colors", cats.colors},
                          {"sizes", cats.sizes}};
  std::vector<std::string> vocab_tail(model.vocab().tokens().begin() + Vocabulary::kReserved,
                                      model.vocab().tokens().end());
  header["vocab"] = vocab_tail;
  header["epoch"] = extras.epoch;
  header["adam"] = {{"step", adam.step_count()},
                    {"learning_rate", adam.config().learning_rate},
                    {"beta1", adam.config().beta1},
                    {"beta2", adam.config().beta2},
                    {"epsilon", adam.config().epsilon}};
  header["rng_state"] = extras.rng_state;
  header["val_metrics"] = extras.val_metrics;
  header["arrays"] = arrays;
  header["payload_bytes"] = payload.size();
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  std::string blob;
  blob.append(kMagic, sizeof(kMagic));
  put_u64_le(blob, header_text.size());
  blob += header_text;
  blob += payload;
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw IoError("checkpoint write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (blob.size() < sizeof(kMagic) + 8 || std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("not a checkpoint file: " + path);
  }
  const std::uint64_t header_len =
      get_u64_le(reinterpret_cast<const unsigned char*>(blob.data()) + sizeof(kMagic));
  const std::size_t header_off = sizeof(kMagic) + 8;
  if (header_off + header_len > blob.size()) throw ParseError("truncated checkpoint header");
  ojson header;
  try {
    header = ojson::parse(blob.substr(header_off, header_len));
  } catch (const std::exception& e) {
    throw ParseError(std::string("malformed checkpoint header: ") + e.what());
  }
  if (header.at("format_version").get<int>() != 1) {
    throw CompatError("unsupported checkpoint format_version");
  }

  RunConfig cfg = RunConfig::from_map(header.at("config").get<std::map<std::string, std::string>>());
  WorldCatalogues cats;
  const ojson& jc = header.at("catalogues");
  cats.objects.names = jc.at("objects").get<std::vector<std::string>>();
  cats.predicates.names = jc.at("predicates").get<std::vector<std::string>>();
  cats.predicates.max_edges = static_cast<std::size_t>(cfg.max_edges);
  cats.colors = jc.at("colors").get<std::vector<std::string>>();
  cats.sizes = jc.at("sizes").get<std::vector<std::string>>();
  Vocabulary vocab(header.at("vocab").get<std::vector<std::string>>());

  LoadedCheckpoint out;
  out.model = std::make_unique<Model>(cfg, cats, vocab);
  const std::vector<Parameter*> params = out.model->parameters();

  const std::size_t payload_off = header_off + header_len;
  const std::size_t payload_bytes = header.at("payload_bytes").get<std::size_t>();
  if (payload_off + payload_bytes != blob.size()) throw ParseError("truncated checkpoint payload");
  const unsigned char* payload = reinterpret_cast<const unsigned char*>(blob.data()) + payload_off;

  std::map<std::string, std::pair<std::vector<std::size_t>, std::size_t>> directory;
  for (const ojson& a : header.at("arrays")) {
    directory[a.at("name").get<std::string>()] = {
        a.at("shape").get<std::vector<std::size_t>>(), a.at("offset").get<std::size_t>()};
  }
  if (directory.size() != 3 * params.size()) {
    throw CompatError("checkpoint holds " + std::to_string(directory.size()) +
                      " arrays, model expects " + std::to_string(3 * params.size()));
  }
  auto load_into = [&](const std::string& name, Array& dst) {
    auto it = directory.find(name);
    if (it == directory.end()) throw CompatError("checkpoint is missing array " + name);
    if (it->second.first != dst.shape()) {
      throw CompatError("checkpoint array " + name + " has shape " +
                        shape_str(it->second.first) + ", model expects " + dst.shape_str());
    }
    if (it->second.second + dst.size() * 8 > payload_bytes) {
      throw ParseError("checkpoint array " + name + " overruns the payload");
    }
    read_doubles_le(payload + it->second.second, dst);
  };

  AdamConfig acfg;
  const ojson& ja = header.at("adam");
  acfg.learning_rate = ja.at("learning_rate").get<double>();
  acfg.beta1 = ja.at("beta1").get<double>();
  acfg.beta2 = ja.at("beta2").get<double>();
  acfg.epsilon = ja.at("epsilon").get<double>();
  out.adam = std::make_unique<AdamState>(std::span<Parameter* const>(params), acfg);
  std::vector<Array> moments_m;
  std::vector<Array> moments_v;
  for (Parameter* p : params) {
    load_into(p->name, p->value);
    Array m = Array::zeros(p->value.shape());
    Array v = Array::zeros(p->value.shape());
    load_into(p->name + ".adam_m", m);
    load_into(p->name + ".adam_v", v);
    moments_m.push_back(std::move(m));
    moments_v.push_back(std::move(v));
  }
  out.adam->restore(ja.at("step").get<std::uint64_t>(), std::move(moments_m),
                    std::move(moments_v));

  out.extras.epoch = header.at("epoch").get<int>();
  out.extras.rng_state = header.at("rng_state").get<std::string>();
  out.extras.val_metrics = header.at("val_metrics");
  return out;
}

}  // namespace gdial
