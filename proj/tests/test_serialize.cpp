#include <doctest.h>

#include <cstring>

#include "support.hpp"
#include "wavets/error.hpp"
#include "wavets/serialize.hpp"

using namespace wavets;

namespace {

ModelConfig tiny(TransformKind kind) {
  ModelConfig c;
  c.lookback = 8;
  c.horizon = 4;
  c.channels = 2;
  c.branches = 2;
  c.levels = 2;
  c.transform = kind;
  c.seed = 11;
  return c;
}

// Exercises awkward doubles: subnormals, negative zero, long mantissas.
ModelParams awkward_params(const ModelConfig& c) {
  ModelParams p = init_params(c, 123);
  std::mt19937_64 gen(7);
  std::size_t i = 0;
  p.for_each_block([&](const std::string&, std::span<double> v) {
    for (double& x : v) {
      switch (i++ % 5) {
        case 0: x = testing::uniform(gen) * 1e-310; break;
        case 1: x = -0.0; break;
        case 2: x = testing::uniform(gen) / 3.0; break;
        default: x = testing::uniform(gen) * 1e12; break;
      }
    }
  });
  return p;
}

bool same_bits(const ModelParams& a, const ModelParams& b) {
  std::vector<double> x, y;
  a.for_each_block([&](const std::string&, std::span<const double> v) { x.insert(x.end(), v.begin(), v.end()); });
  b.for_each_block([&](const std::string&, std::span<const double> v) { y.insert(y.end(), v.begin(), v.end()); });
  return x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("checkpoint round trip is bit exact") {
  for (auto kind : {TransformKind::Wdt, TransformKind::Dwt, TransformKind::Dft}) {
    CAPTURE(to_string(kind));
    const ModelConfig c = tiny(kind);
    const Checkpoint ck{c, awkward_params(c), 99, {{"model", to_json(c)}}};
    const auto path = testing::scratch_dir("serialize") / (std::string(to_string(kind)) + ".json");
    save_checkpoint(path, ck);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back.model == c);
    CHECK(back.seed == 99);
    CHECK(same_bits(back.params, ck.params));
    CHECK(dump(checkpoint_to_json(back)) == dump(checkpoint_to_json(ck)));
  }
}

TEST_CASE("checkpoint layout") {
  const ModelConfig c = tiny(TransformKind::Wdt);
  const auto j = checkpoint_to_json({c, init_params(c, 1), 1, {{"model", to_json(c)}}});
  for (const char* key : {"version", "config", "seed", "fru_ll", "fru_lh", "fru_real", "fru_imag", "projection"})
    CHECK(j.contains(key));
  CHECK(j["version"] == kCheckpointVersion);
  CHECK(j["fru_ll"].size() == 2);
  CHECK(j["fru_lh"][0].size() == 2);
  CHECK(j["projection"]["weight"].size() == 24);
  CHECK(j["projection"]["weight"][0].size() == 12);
}

TEST_CASE("checkpoint errors") {
  const ModelConfig c = tiny(TransformKind::Wdt);
  auto j = checkpoint_to_json({c, init_params(c, 1), 1, {{"model", to_json(c)}}});
  auto v2 = j;
  v2["version"] = 2;
  CHECK_THROWS_AS(checkpoint_from_json(v2), DataError);
  auto shape = j;
  shape["projection"]["bias"].erase(0);
  CHECK_THROWS_AS(checkpoint_from_json(shape), DataError);
  auto missing = j;
  missing.erase("fru_lh");
  CHECK_THROWS_AS(checkpoint_from_json(missing), DataError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.json"), DataError);
}

TEST_CASE("config documents round trip") {
  ModelConfig m = tiny(TransformKind::Wdt);
  m.branch_orders = {0, 3};
  m.wavelet = "rbio1.1";
  CHECK(model_config_from_json(to_json(m)) == m);
  TrainConfig t;
  t.learning_rate = 0.125;
  t.grad_clip = 5.0;
  t.seed = 3;
  CHECK(train_config_from_json(to_json(t)) == t);
  CHECK_THROWS_AS(model_config_from_json(nlohmann::json{{"lookback", "eight"}}), ValidationError);
}

TEST_CASE("history document omits wall times") {
  TrainHistory h;
  h.train_loss = {1.0, 0.5};
  h.val_loss = {1.5, 0.75};
  h.wall_seconds = {0.1, 0.2};
  h.best_epoch = 2;
  h.stop_reason = "max_epochs";
  const auto j = to_json(h);
  CHECK_FALSE(j.contains("wall_seconds"));
  CHECK(j["best_epoch"] == 2);
}
