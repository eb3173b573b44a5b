#include <doctest.h>

#include "support.hpp"
#include "wavets/error.hpp"
#include "wavets/train.hpp"

using namespace wavets;

namespace {

ModelConfig tiny() {
  ModelConfig c;
  c.lookback = 8;
  c.horizon = 4;
  c.channels = 2;
  c.branches = 2;
  c.levels = 2;
  c.seed = 7;
  return c;
}

std::vector<WindowPair> random_batch(std::mt19937_64& gen, const ModelConfig& c, std::size_t n) {
  std::vector<WindowPair> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({testing::random_matrix(gen, c.lookback, c.channels),
                   testing::random_matrix(gen, c.horizon, c.channels), i});
  return out;
}

// Windows of a noiseless sum of two sinusoids, which a linear map forecasts exactly.
std::vector<WindowPair> periodic_windows(const ModelConfig& c, std::size_t count,
                                         std::size_t offset) {
  SeriesFrame f;
  const std::size_t T = count + c.lookback + c.horizon - 1;
  f.values = Matrix(T, c.channels);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t ch = 0; ch < c.channels; ++ch) {
      const double u = static_cast<double>(t + offset);
      f.values(t, ch) = std::sin(0.7 * u + ch) + 0.5 * std::cos(1.9 * u);
    }
  return windows(f, c.lookback, c.horizon);
}

void add_scaled(ModelParams& acc, const ModelParams& g, double s) {
  std::vector<std::span<const double>> src;
  g.for_each_block([&](const std::string&, std::span<const double> v) { src.push_back(v); });
  std::size_t b = 0;
  acc.for_each_block([&](const std::string&, std::span<double> v) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += s * src[b][i];
    ++b;
  });
}

double max_abs(const ModelParams& p) {
  double m = 0.0;
  p.for_each_block([&](const std::string&, std::span<const double> v) {
    for (double x : v) m = std::max(m, std::abs(x));
  });
  return m;
}

}  // namespace

TEST_CASE("joint loss hand cases") {
  Matrix x(1, 1, 1.0), y(1, 1, 1.0);
  CHECK(joint_loss(Matrix(2, 1), x, y) == 1.0);
  Matrix exact(2, 1, 1.0);
  CHECK(joint_loss(exact, x, y) == 0.0);
  Matrix x2(1, 2), y2(1, 2);
  x2.values = {1, 0};
  y2.values = {0, 1};
  CHECK(joint_loss(Matrix(2, 2), x2, y2) == 0.5);
  CHECK_THROWS_AS(joint_loss(Matrix(3, 1), x, y), ShapeError);
}

TEST_CASE("joint loss is invariant to channel permutation") {
  std::mt19937_64 gen(31);
  const Matrix p = testing::random_matrix(gen, 6, 3), x = testing::random_matrix(gen, 4, 3),
               y = testing::random_matrix(gen, 2, 3);
  auto permute = [](const Matrix& m) {
    Matrix out(m.rows, m.cols);
    for (std::size_t r = 0; r < m.rows; ++r)
      for (std::size_t c = 0; c < m.cols; ++c) out(r, c) = m(r, (c + 1) % m.cols);
    return out;
  };
  CHECK(joint_loss(permute(p), permute(x), permute(y)) ==
        doctest::Approx(joint_loss(p, x, y)).epsilon(1e-15));
}

TEST_CASE("mean loss matches the joint loss of forward") {
  std::mt19937_64 gen(32);
  const ModelConfig c = tiny();
  const Forecaster model(c);
  const ModelParams p = init_params(c, 1);
  const auto batch = random_batch(gen, c, 3);
  double expected = 0.0;
  for (const auto& w : batch) expected += joint_loss(model.forward(w.x, p), w.x, w.y);
  CHECK(mean_loss(model, p, batch) == doctest::Approx(expected / 3.0).epsilon(1e-13));
  CHECK(gradients(model, p, batch).loss == doctest::Approx(expected / 3.0).epsilon(1e-13));
  CHECK_THROWS_AS(gradients(model, p, {}), ValidationError);
  CHECK_THROWS_AS(mean_loss(model, p, {}), ValidationError);
}

TEST_CASE("analytic gradients agree with central differences") {
  std::mt19937_64 gen(33);
  for (auto kind : {TransformKind::Wdt, TransformKind::Dwt, TransformKind::Dft}) {
    ModelConfig c = tiny();
    c.transform = kind;
    CAPTURE(to_string(kind));
    const Forecaster model(c);
    const auto batch = random_batch(gen, c, 4);
    const auto report = gradient_check(model, init_params(c, 3), batch);
    std::size_t blocks = 0;
    init_params(c, 3).for_each_block([&](const std::string&, std::span<const double>) { ++blocks; });
    CHECK(report.size() == blocks);
    for (const auto& e : report) {
      CAPTURE(e.block);
      CHECK(e.max_rel_error < 1e-5);
    }
  }
}

TEST_CASE("higher derivative orders keep gradients exact") {
  std::mt19937_64 gen(34);
  ModelConfig c = tiny();
  c.lookback = 16;
  c.horizon = 8;
  c.branches = 4;
  c.levels = 3;
  const Forecaster model(c);
  const auto report = gradient_check(model, init_params(c, 5), random_batch(gen, c, 2));
  for (const auto& e : report) {
    CAPTURE(e.block);
    CHECK(e.max_rel_error < 1e-5);
  }
}

TEST_CASE("corrupted gradients are caught") {
  std::mt19937_64 gen(35);
  const ModelConfig c = tiny();
  const Forecaster model(c);
  const auto report = gradient_check(model, init_params(c, 3), random_batch(gen, c, 2), 1e-6,
                                     [](ModelParams& g) { g.projection.bias[0] += 1e-3; });
  double worst = 0.0;
  for (const auto& e : report) worst = std::max(worst, e.max_rel_error);
  CHECK(worst > 1e-5);
}

TEST_CASE("gradients vanish at exact interpolation") {
  std::mt19937_64 gen(36);
  ModelConfig c = tiny();
  c.branches = 1;
  c.std_epsilon = 0.0;
  ModelParams p = ModelParams::zeros(c);
  auto identity = [](Linear& lin) {
    for (std::size_t i = 0; i < std::min(lin.in, lin.out); ++i) lin.weight[i * lin.out + i] = 1.0;
  };
  identity(p.branches[0].fru_ll);
  for (auto& lh : p.branches[0].fru_lh) identity(lh);
  identity(p.projection);
  const Forecaster model(c);
  std::vector<WindowPair> batch;
  for (int i = 0; i < 3; ++i) {
    WindowPair w{testing::random_matrix(gen, 8, 2), Matrix(4, 2), 0};
    // The pass-through forecasts the window mean.
    const Matrix out = model.forward(w.x, p);
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t ch = 0; ch < 2; ++ch) w.y(t, ch) = out(8 + t, ch);
    batch.push_back(std::move(w));
  }
  const auto lg = gradients(model, p, batch);
  CHECK(lg.loss < 1e-28);
  CHECK(max_abs(lg.grad) < 1e-13);
}

TEST_CASE("gradients are affine in the target") {
  std::mt19937_64 gen(37);
  const ModelConfig c = tiny();
  const Forecaster model(c);
  const ModelParams p = init_params(c, 2);
  const Matrix x = testing::random_matrix(gen, 8, 2);
  const Matrix y1 = testing::random_matrix(gen, 4, 2), y2 = testing::random_matrix(gen, 4, 2);
  Matrix ym(4, 2);
  for (std::size_t i = 0; i < ym.values.size(); ++i) ym.values[i] = 0.5 * (y1.values[i] + y2.values[i]);
  const std::vector<WindowPair> b1{{x, y1, 0}}, b2{{x, y2, 0}}, bm{{x, ym, 0}};
  ModelParams sum = gradients(model, p, b1).grad;
  add_scaled(sum, gradients(model, p, b2).grad, 1.0);
  add_scaled(sum, gradients(model, p, bm).grad, -2.0);
  CHECK(max_abs(sum) < 1e-12);
}

TEST_CASE("adam step") {
  const ModelConfig c = tiny();
  TrainConfig tc;
  tc.learning_rate = 0.01;
  const ModelParams p0 = init_params(c, 1);

  SUBCASE("zero gradient leaves params unchanged") {
    ModelParams p = p0;
    AdamState s = AdamState::zeros_like(p);
    adam_step(p, ModelParams::zeros(c), s, tc);
    CHECK(p == p0);
    CHECK(s.step == 1);
  }
  SUBCASE("first step moves each entry by about the learning rate") {
    std::mt19937_64 gen(38);
    ModelParams g = ModelParams::zeros(c);
    g.for_each_block([&](const std::string&, std::span<double> v) {
      for (double& x : v) x = testing::uniform(gen, 0.1, 2.0) * (gen() % 2 ? 1.0 : -1.0);
    });
    ModelParams p = p0;
    AdamState s = AdamState::zeros_like(p);
    adam_step(p, g, s, tc);
    ModelParams delta = p0;
    add_scaled(delta, p, -1.0);
    std::vector<std::span<const double>> gb;
    g.for_each_block([&](const std::string&, std::span<const double> v) { gb.push_back(v); });
    std::size_t b = 0;
    delta.for_each_block([&](const std::string&, std::span<const double> v) {
      for (std::size_t i = 0; i < v.size(); ++i)
        CHECK(v[i] == doctest::Approx(0.01 * gb[b][i] / (std::abs(gb[b][i]) + 1e-8)).epsilon(1e-9));
      ++b;
    });
  }
  SUBCASE("identical inputs give identical outputs") {
    std::mt19937_64 gen(39);
    ModelParams g = init_params(c, 9);
    ModelParams pa = p0, pb = p0;
    AdamState sa = AdamState::zeros_like(pa), sb = AdamState::zeros_like(pb);
    for (int i = 0; i < 3; ++i) {
      adam_step(pa, g, sa, tc);
      adam_step(pb, g, sb, tc);
    }
    CHECK(pa == pb);
    CHECK(sa == sb);
  }
}

TEST_CASE("early stopping contract") {
  EarlyStopping es(1);
  CHECK(es.observe(1.0));
  CHECK_FALSE(es.should_stop());
  CHECK_FALSE(es.observe(2.0));
  CHECK(es.should_stop());
  CHECK(es.best_epoch() == 1);
  CHECK(es.best_loss() == 1.0);

  EarlyStopping p3(3);
  p3.observe(5.0);
  p3.observe(4.0);
  p3.observe(4.0);  // ties do not count as improvement
  p3.observe(4.5);
  CHECK_FALSE(p3.should_stop());
  p3.observe(3.9);
  CHECK(p3.best_epoch() == 5);
  CHECK_FALSE(p3.should_stop());
}

TEST_CASE("train config validation") {
  TrainConfig tc;
  CHECK(tc.problems().empty());
  tc.learning_rate = 0.0;
  tc.adam_beta1 = 1.0;
  tc.patience = 0;
  tc.grad_clip = -1.0;
  CHECK(tc.problems().size() == 4);
  CHECK_THROWS_AS(tc.validate(), ValidationError);
}

TEST_CASE("training is deterministic and keeps the best epoch") {
  const ModelConfig c = tiny();
  const auto train_set = periodic_windows(c, 60, 0);
  const auto val_set = periodic_windows(c, 20, 200);
  TrainConfig tc;
  tc.learning_rate = 0.01;
  tc.batch_size = 16;  // 60 windows: last batch is partial
  tc.max_epochs = 15;
  tc.patience = 3;
  tc.seed = 5;
  const TrainResult a = train(c, train_set, val_set, tc);
  const TrainResult b = train(c, train_set, val_set, tc);
  CHECK(a.history == b.history);
  CHECK(a.params == b.params);
  REQUIRE(!a.history.val_loss.empty());
  const auto& v = a.history.val_loss;
  const std::size_t best = static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
  CHECK(a.history.best_epoch == best + 1);
  CHECK(mean_loss(Forecaster(c), a.params, val_set) == v[best]);
  CHECK((a.history.stop_reason == "early_stop" || a.history.stop_reason == "max_epochs"));
  CHECK(a.history.train_loss.size() == v.size());
  CHECK(a.history.wall_seconds.size() == v.size());

  TrainConfig other = tc;
  other.seed = 6;
  CHECK_FALSE(train(c, train_set, val_set, other).history == a.history);
}

TEST_CASE("max_epochs stop reason") {
  const ModelConfig c = tiny();
  TrainConfig tc;
  tc.learning_rate = 0.01;
  tc.max_epochs = 2;
  tc.patience = 5;
  const auto r = train(c, periodic_windows(c, 20, 0), periodic_windows(c, 5, 100), tc);
  CHECK(r.history.stop_reason == "max_epochs");
  CHECK(r.history.val_loss.size() == 2);
}

TEST_CASE("realizable periodic task converges below 1e-6") {
  // Noiseless sinusoids obey a linear recurrence, so the joint loss has
  // optimum 0 within the model class.
  ModelConfig c = tiny();
  c.channels = 1;
  c.branches = 1;
  const auto train_set = periodic_windows(c, 64, 0);
  const auto val_set = periodic_windows(c, 16, 300);
  TrainConfig tc;
  tc.learning_rate = 0.01;
  tc.batch_size = 64;
  tc.max_epochs = 200;
  tc.patience = 200;
  const auto r = train(c, train_set, val_set, tc);
  CHECK(r.history.val_loss.size() == 200);
  CHECK(*std::min_element(r.history.val_loss.begin(), r.history.val_loss.end()) < 1e-6);
}

TEST_CASE("gradient clipping bounds the update and keeps training finite") {
  const ModelConfig c = tiny();
  TrainConfig tc;
  tc.learning_rate = 0.01;
  tc.max_epochs = 3;
  tc.grad_clip = 1e-3;
  const auto r = train(c, periodic_windows(c, 20, 0), periodic_windows(c, 5, 100), tc);
  for (double v : r.history.train_loss) CHECK(std::isfinite(v));
}

TEST_CASE("training rejects bad inputs") {
  const ModelConfig c = tiny();
  TrainConfig tc;
  std::mt19937_64 gen(40);
  const auto ok = random_batch(gen, c, 4);
  CHECK_THROWS_AS(train(c, ok, {}, tc), ValidationError);
  CHECK_THROWS_AS(train(c, {}, ok, tc), ValidationError);
  std::vector<WindowPair> wrong{{Matrix(8, 3), Matrix(4, 3), 0}};
  CHECK_THROWS_AS(train(c, wrong, ok, tc), ShapeError);

  TrainConfig explode = tc;
  explode.learning_rate = 1e300;
  explode.max_epochs = 5;
  CHECK_THROWS_AS(train(c, ok, ok, explode), NumericalError);
}
