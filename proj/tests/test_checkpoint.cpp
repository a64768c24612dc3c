#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "gaggle/checkpoint.hpp"

using namespace gaggle;

namespace {

std::string temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "gaggle_test_ckpt";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Checkpoint make_checkpoint(ModelKind kind, uint64_t seed) {
  Checkpoint c;
  c.online = build(kind, seed);
  c.target = build(kind, seed + 1);
  c.target.copy_values_from(c.online);
  c.optim.lr = 3e-4;
  c.optim.init(c.online.params());
  // dirty the optimizer state so the roundtrip is non-trivial
  SplitMix64 rng(seed);
  for (auto& m : c.optim.m)
    for (auto& v : m) v = rng.normal();
  c.optim.step_count = 17;
  c.encoder_variant = kind == ModelKind::VanillaDQN ? "slim3" : "full17";
  c.seed = seed;
  c.global_step = 1234;
  c.sync_period = 50;
  c.steps_since_sync = 7;
  c.rng_states = {1, 2, 3, 4};
  return c;
}

}  // namespace

TEST_CASE("checkpoint round-trips bit-exactly") {
  for (ModelKind kind : {ModelKind::VanillaDQN, ModelKind::DuelingDQN}) {
    Checkpoint c = make_checkpoint(kind, 77);
    std::string p1 = temp_path("a.ggl"), p2 = temp_path("b.ggl");
    save_checkpoint(p1, c);
    Checkpoint back = load_checkpoint(p1);
    save_checkpoint(p2, back);
    CHECK(slurp(p1) == slurp(p2));

    CHECK(back.online.kind() == kind);
    CHECK(back.global_step == 1234);
    CHECK(back.sync_period == 50);
    CHECK(back.steps_since_sync == 7);
    CHECK(back.rng_states == std::vector<uint64_t>{1, 2, 3, 4});
    CHECK(back.optim.step_count == 17);
    CHECK(back.optim.lr == doctest::Approx(3e-4));

    auto a = c.online.params(), b = back.online.params();
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i]->data == b[i]->data);
    auto sa = c.online.state_buffers(), sb = back.online.state_buffers();
    for (size_t i = 0; i < sa.size(); ++i) CHECK(sa[i]->data == sb[i]->data);
    for (size_t i = 0; i < c.optim.m.size(); ++i) CHECK(c.optim.m[i] == back.optim.m[i]);

    // loaded network computes exactly what the saved one did
    SplitMix64 rng(5);
    Tensor x({1, kind == ModelKind::VanillaDQN ? 3 : 17, 7, 11});
    for (auto& v : x.data) v = rng.coin(0.2) ? 1.0 : 0.0;
    CHECK(c.online.forward(x, false).data == back.online.forward(x, false).data);
  }
}

TEST_CASE("checkpoint encoder metadata") {
  Checkpoint c = make_checkpoint(ModelKind::VanillaDQN, 3);
  c.center_player = true;
  c.center_cell = 20;
  std::string p = temp_path("enc.ggl");
  save_checkpoint(p, c);
  Checkpoint back = load_checkpoint(p);
  EncoderKind enc = checkpoint_encoder(back);
  CHECK(enc.variant == EncoderVariant::Slim3);
  CHECK(enc.center_player);
  CHECK(enc.center_cell == 20);
}

TEST_CASE("checkpoint error paths") {
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/nowhere.ggl"), ConfigError);

  std::string bad = temp_path("bad.ggl");
  std::ofstream os(bad, std::ios::binary);
  os << "NOTMAGICxxxxxxxxxxxxxxxx";
  os.close();
  CHECK_THROWS_AS(load_checkpoint(bad), ConfigError);
}
