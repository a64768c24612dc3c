#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include <json.hpp>

#include "gaggle/common.hpp"
#include "gaggle/models.hpp"
#include "gaggle/optim.hpp"

namespace gaggle {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format stores raw little-endian doubles");

// Versioned binary container: 8-byte magic, u64 header length, JSON header
// (architecture descriptor, optimizer hyperparameters, seeds, array table),
// then the arrays as raw 64-bit little-endian reals in header order.
// Save/load round-trips bit-exactly.
inline constexpr char kCheckpointMagic[8] = {'G', 'G', 'L', 'C', 'K', 'P', 'T', '1'};

struct Checkpoint {
  QNetwork online;
  QNetwork target;
  OptimState optim;
  std::string encoder_variant = "full17";
  bool center_player = false;
  int center_cell = kDefaultCenterCell;
  uint64_t seed = 0;
  int64_t global_step = 0;
  int sync_period = 100;
  int steps_since_sync = 0;
  std::vector<uint64_t> rng_states;
};

namespace detail {

inline nlohmann::json spec_to_json(const LayerSpec& s) {
  nlohmann::json j;
  switch (s.kind) {
    case LayerSpec::Kind::Conv2d:
      j["kind"] = "conv2d";
      j["in_ch"] = s.in_ch;
      j["out_ch"] = s.out_ch;
      j["kh"] = s.kh;
      j["kw"] = s.kw;
      j["pad"] = s.pad == PadMode::Valid ? "valid" : "toroidal";
      break;
    case LayerSpec::Kind::BatchNorm2d:
      j["kind"] = "batchnorm2d";
      j["channels"] = s.in_ch;
      j["eps"] = s.eps;
      j["momentum"] = s.momentum;
      break;
    case LayerSpec::Kind::LeakyReLU:
      j["kind"] = "leaky_relu";
      j["negative_slope"] = s.negative_slope;
      break;
    case LayerSpec::Kind::Linear:
      j["kind"] = "linear";
      j["in_features"] = s.in_features;
      j["out_features"] = s.out_features;
      break;
    case LayerSpec::Kind::Flatten:
      j["kind"] = "flatten";
      break;
  }
  return j;
}

inline LayerSpec spec_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind");
  if (kind == "conv2d")
    return LayerSpec::conv2d(j.at("in_ch"), j.at("out_ch"), j.at("kh"), j.at("kw"),
                             j.at("pad") == "valid" ? PadMode::Valid : PadMode::Toroidal);
  if (kind == "batchnorm2d")
    return LayerSpec::batchnorm2d(j.at("channels"), j.at("eps"), j.at("momentum"));
  if (kind == "leaky_relu") return LayerSpec::leaky_relu(j.at("negative_slope"));
  if (kind == "linear") return LayerSpec::linear(j.at("in_features"), j.at("out_features"));
  if (kind == "flatten") return LayerSpec::flatten();
  throw ConfigError("checkpoint: unknown layer kind " + kind);
}

inline nlohmann::json chain_to_json(const std::vector<LayerSpec>& chain) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : chain) arr.push_back(spec_to_json(s));
  return arr;
}

inline std::vector<LayerSpec> chain_from_json(const nlohmann::json& arr) {
  std::vector<LayerSpec> out;
  for (const auto& j : arr) out.push_back(spec_from_json(j));
  return out;
}

inline void write_u64(std::ostream& os, uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline uint64_t read_u64(std::istream& is) {
  uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

inline void write_array(std::ostream& os, const std::vector<double>& a) {
  write_u64(os, a.size());
  os.write(reinterpret_cast<const char*>(a.data()),
           static_cast<std::streamsize>(a.size() * sizeof(double)));
}

inline void read_array(std::istream& is, std::vector<double>& a) {
  uint64_t n = read_u64(is);
  expects(n == a.size(), "checkpoint: array length mismatch");
  is.read(reinterpret_cast<char*>(a.data()), static_cast<std::streamsize>(n * sizeof(double)));
}

inline ModelKind model_kind_from_name(const std::string& name) {
  if (name == "vanilla_dqn") return ModelKind::VanillaDQN;
  if (name == "double_dqn") return ModelKind::DoubleDQN;
  if (name == "dueling_dqn") return ModelKind::DuelingDQN;
  throw ConfigError("checkpoint: unknown model kind " + name);
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, Checkpoint& c) {
  nlohmann::json h;
  h["version"] = 1;
  h["model_kind"] = model_name(c.online.kind());
  h["trunk"] = detail::chain_to_json(c.online.trunk_spec());
  h["value_stream"] = detail::chain_to_json(c.online.value_spec());
  h["advantage_stream"] = detail::chain_to_json(c.online.advantage_spec());
  h["encoder_variant"] = c.encoder_variant;
  h["center_player"] = c.center_player;
  h["center_cell"] = c.center_cell;
  h["seed"] = c.seed;
  h["global_step"] = c.global_step;
  h["sync_period"] = c.sync_period;
  h["steps_since_sync"] = c.steps_since_sync;
  h["rng_states"] = c.rng_states;
  h["optim"] = {{"lr", c.optim.lr},
                {"beta1", c.optim.beta1},
                {"beta2", c.optim.beta2},
                {"eps", c.optim.eps},
                {"step_count", c.optim.step_count}};
#if defined(_OPENMP)
  h["threads"] = omp_get_max_threads();
#else
  h["threads"] = 1;
#endif

  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("save_checkpoint: cannot open " + path);
  std::string header = h.dump();
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_u64(os, header.size());
  os.write(header.data(), static_cast<std::streamsize>(header.size()));

  for (Tensor* t : c.online.params()) detail::write_array(os, t->data);
  for (Tensor* t : c.online.state_buffers()) detail::write_array(os, t->data);
  for (Tensor* t : c.target.params()) detail::write_array(os, t->data);
  for (Tensor* t : c.target.state_buffers()) detail::write_array(os, t->data);
  for (const auto& m : c.optim.m) detail::write_array(os, m);
  for (const auto& v : c.optim.v) detail::write_array(os, v);
  if (!os) throw ConfigError("save_checkpoint: write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("load_checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw ConfigError("load_checkpoint: bad magic in " + path);
  uint64_t hlen = detail::read_u64(is);
  std::string header(hlen, '\0');
  is.read(header.data(), static_cast<std::streamsize>(hlen));
  nlohmann::json h = nlohmann::json::parse(header);
  if (h.at("version").get<int>() != 1)
    throw ConfigError("load_checkpoint: unsupported version");

  Checkpoint c;
  ModelKind kind = detail::model_kind_from_name(h.at("model_kind"));
  c.online = QNetwork(kind, detail::chain_from_json(h.at("trunk")),
                      detail::chain_from_json(h.at("value_stream")),
                      detail::chain_from_json(h.at("advantage_stream")), 0);
  c.target = c.online;
  c.encoder_variant = h.at("encoder_variant");
  c.center_player = h.at("center_player");
  c.center_cell = h.at("center_cell");
  c.seed = h.at("seed");
  c.global_step = h.at("global_step");
  c.sync_period = h.at("sync_period");
  c.steps_since_sync = h.at("steps_since_sync");
  c.rng_states = h.at("rng_states").get<std::vector<uint64_t>>();
  c.optim.lr = h.at("optim").at("lr");
  c.optim.beta1 = h.at("optim").at("beta1");
  c.optim.beta2 = h.at("optim").at("beta2");
  c.optim.eps = h.at("optim").at("eps");
  c.optim.init(c.online.params());
  c.optim.step_count = h.at("optim").at("step_count");

  auto read_into = [&is](Tensor* t) {
    detail::read_array(is, t->data);
    t->version += 1;
  };
  for (Tensor* t : c.online.params()) read_into(t);
  for (Tensor* t : c.online.state_buffers()) read_into(t);
  for (Tensor* t : c.target.params()) read_into(t);
  for (Tensor* t : c.target.state_buffers()) read_into(t);
  for (auto& m : c.optim.m) detail::read_array(is, m);
  for (auto& v : c.optim.v) detail::read_array(is, v);
  if (!is) throw ConfigError("load_checkpoint: truncated file " + path);
  return c;
}

inline EncoderKind checkpoint_encoder(const Checkpoint& c) {
  EncoderKind enc;
  enc.variant = c.encoder_variant == "slim3" ? EncoderVariant::Slim3 : EncoderVariant::Full17;
  enc.center_player = c.center_player;
  enc.center_cell = c.center_cell;
  return enc;
}

}  // namespace gaggle
