#include "wavets/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "wavets/error.hpp"
#include "wavets/kernels.hpp"

namespace wavets {
namespace {

void check_pair(const ModelConfig& cfg, const WindowPair& w) {
  if (w.x.rows != cfg.lookback || w.x.cols != cfg.channels || w.y.rows != cfg.horizon ||
      w.y.cols != cfg.channels)
    throw ShapeError("window pair is (" + std::to_string(w.x.rows) + "x" +
                     std::to_string(w.x.cols) + ", " + std::to_string(w.y.rows) + "x" +
                     std::to_string(w.y.cols) + "), model expects (" +
                     std::to_string(cfg.lookback) + "x" + std::to_string(cfg.channels) + ", " +
                     std::to_string(cfg.horizon) + "x" + std::to_string(cfg.channels) + ")");
}

// Windows per batched pass when only the loss is needed.
constexpr std::size_t kLossChunk = 64;

// Squared error of a run of windows, optionally backpropagating
// `scale` * d/dparams. All window channels go through the model as one
// batch of rows, ordered by window then channel.
double windows_pass(const Forecaster& model, const ModelParams& params,
                    std::span<const WindowPair> ws, ModelParams* grad, double scale) {
  const ModelConfig& cfg = model.config();
  const std::size_t L = cfg.lookback, tau = cfg.horizon, M = L + tau, C = cfg.channels;
  const std::size_t rows = ws.size() * C;
  std::vector<double> x(rows * L), mu(rows), sd(rows);
  for (std::size_t w = 0; w < ws.size(); ++w) {
    check_pair(cfg, ws[w]);
    auto [normed, stats] = instance_normalize(ws[w].x, cfg.std_epsilon);
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t r = w * C + c;
      mu[r] = stats.mean[c];
      sd[r] = stats.std[c];
      for (std::size_t t = 0; t < L; ++t) x[r * L + t] = normed(t, c);
    }
  }
  Forecaster::Trace trace;
  std::vector<double> out = model.forward_normalized(x, rows, params, grad ? &trace : nullptr);
  std::vector<double> target(M), d_out(grad ? rows * M : 0);
  double sq = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const WindowPair& w = ws[r / C];
    const std::size_t c = r % C;
    for (std::size_t t = 0; t < L; ++t) target[t] = w.x(t, c);
    for (std::size_t t = 0; t < tau; ++t) target[L + t] = w.y(t, c);
    const std::span<double> o(out.data() + r * M, M);
    for (double& v : o) v = v * sd[r] + mu[r];
    sq += simd::squared_distance(o, target);
    if (grad)
      for (std::size_t t = 0; t < M; ++t)
        d_out[r * M + t] = 2.0 * (o[t] - target[t]) * sd[r] * scale;
  }
  if (grad) model.backward_normalized(trace, d_out, params, *grad);
  return sq;
}

std::vector<std::span<double>> blocks_of(ModelParams& p) {
  std::vector<std::span<double>> out;
  p.for_each_block([&](const std::string&, std::span<double> v) { out.push_back(v); });
  return out;
}

}  // namespace

double joint_loss(const Matrix& pred, const Matrix& x, const Matrix& y) {
  if (x.cols != y.cols || pred.cols != x.cols || pred.rows != x.rows + y.rows)
    throw ShapeError("joint_loss: prediction " + std::to_string(pred.rows) + "x" +
                     std::to_string(pred.cols) + " does not match [x ; y] of " +
                     std::to_string(x.rows + y.rows) + "x" + std::to_string(x.cols));
  const std::size_t backcast = x.values.size();
  const double sq = simd::squared_distance(std::span(pred.values).first(backcast), x.values) +
                    simd::squared_distance(std::span(pred.values).subspan(backcast), y.values);
  return sq / static_cast<double>(pred.values.size());
}

std::vector<std::string> TrainConfig::problems() const {
  std::vector<std::string> out;
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    out.push_back("learning_rate must be > 0");
  if (batch_size < 1) out.push_back("batch_size must be >= 1");
  if (max_epochs < 1) out.push_back("max_epochs must be >= 1");
  if (patience < 1) out.push_back("patience must be >= 1");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) out.push_back("adam_beta1 must be in (0, 1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) out.push_back("adam_beta2 must be in (0, 1)");
  if (!(adam_epsilon >= 0.0)) out.push_back("adam_epsilon must be >= 0");
  if (grad_clip && !(*grad_clip > 0.0)) out.push_back("grad_clip must be > 0 when set");
  return out;
}

void TrainConfig::validate() const {
  const auto issues = problems();
  if (issues.empty()) return;
  std::string msg = "invalid train config:";
  for (const auto& s : issues) msg += "\n  - " + s;
  throw ValidationError(msg);
}

double mean_loss(const Forecaster& model, const ModelParams& params,
                 std::span<const WindowPair> batch) {
  if (batch.empty()) throw ValidationError("cannot evaluate the loss of an empty batch");
  model.check_params(params);
  double sq = 0.0;
  for (std::size_t i = 0; i < batch.size(); i += kLossChunk)
    sq += windows_pass(model, params, batch.subspan(i, std::min(kLossChunk, batch.size() - i)),
                       nullptr, 0.0);
  const double per_window =
      static_cast<double>(model.config().channels * model.config().output_length());
  return sq / (per_window * static_cast<double>(batch.size()));
}

LossAndGradient gradients(const Forecaster& model, const ModelParams& params,
                          std::span<const WindowPair> batch) {
  if (batch.empty()) throw ValidationError("gradients need a non-empty batch");
  model.check_params(params);
  const ModelConfig& cfg = model.config();
  const double denom = static_cast<double>(cfg.channels * cfg.output_length()) *
                       static_cast<double>(batch.size());
  LossAndGradient out{0.0, ModelParams::zeros(cfg)};
  out.loss = windows_pass(model, params, batch, &out.grad, 1.0 / denom) / denom;
  return out;
}

double global_norm(const ModelParams& grad) {
  double ss = 0.0;
  grad.for_each_block([&](const std::string&, std::span<const double> v) { ss += simd::sum_squares(v); });
  return std::sqrt(ss);
}

AdamState AdamState::zeros_like(const ModelParams& params) {
  AdamState s{params, params, 0};
  for (auto b : blocks_of(s.m)) std::fill(b.begin(), b.end(), 0.0);
  for (auto b : blocks_of(s.v)) std::fill(b.begin(), b.end(), 0.0);
  return s;
}

void adam_step(ModelParams& params, const ModelParams& grad, AdamState& state,
               const TrainConfig& config) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const simd::AdamCoeffs coeffs{config.learning_rate,
                                config.adam_beta1,
                                config.adam_beta2,
                                config.adam_epsilon,
                                1.0 - std::pow(config.adam_beta1, t),
                                1.0 - std::pow(config.adam_beta2, t)};
  auto p = blocks_of(params);
  auto m = blocks_of(state.m);
  auto v = blocks_of(state.v);
  std::vector<std::span<const double>> g;
  grad.for_each_block([&](const std::string&, std::span<const double> b) { g.push_back(b); });
  if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size())
    throw ShapeError("adam_step: parameter, gradient and state blocks differ");
  const auto& k = simd::active();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].size() != g[i].size() || p[i].size() != m[i].size() || p[i].size() != v[i].size())
      throw ShapeError("adam_step: block sizes differ");
    k.adam_update(p[i].data(), g[i].data(), m[i].data(), v[i].data(), p[i].size(), coeffs);
  }
}

bool EarlyStopping::observe(double val_loss) {
  ++epoch_;
  if (best_epoch_ == 0 || val_loss < best_) {
    best_ = val_loss;
    best_epoch_ = epoch_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

TrainResult train(const ModelConfig& model_config, std::span<const WindowPair> train_set,
                  std::span<const WindowPair> val_set, const TrainConfig& config,
                  std::optional<ModelParams> initial) {
  config.validate();
  const Forecaster model(model_config);
  if (train_set.empty()) throw ValidationError("training set has no windows");
  if (val_set.empty()) throw ValidationError("validation set has no windows");
  for (const auto& w : train_set) check_pair(model_config, w);
  for (const auto& w : val_set) check_pair(model_config, w);

  ModelParams params = initial ? std::move(*initial) : init_params(model_config, model_config.seed);
  model.check_params(params);
  AdamState state = AdamState::zeros_like(params);
  EarlyStopping stopper(config.patience);
  TrainResult result{params, {}};

  std::mt19937_64 gen(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<WindowPair> batch;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[gen() % i]);

    double epoch_sq = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(train_set[order[i]]);
      LossAndGradient lg = gradients(model, params, batch);
      if (!std::isfinite(lg.loss))
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch) +
                             ", batch starting at " + std::to_string(start));
      if (config.grad_clip) {
        const double norm = global_norm(lg.grad);
        if (norm > *config.grad_clip) {
          const double s = *config.grad_clip / norm;
          for (auto b : blocks_of(lg.grad)) simd::scale(s, b);
        }
      }
      adam_step(params, lg.grad, state, config);
      epoch_sq += lg.loss * static_cast<double>(end - start);
    }

    const double val = mean_loss(model, params, val_set);
    if (!std::isfinite(val))
      throw NumericalError("non-finite validation loss at epoch " + std::to_string(epoch));
    result.history.train_loss.push_back(epoch_sq / static_cast<double>(order.size()));
    result.history.val_loss.push_back(val);
    result.history.wall_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
    if (stopper.observe(val)) result.params = params;
    if (stopper.should_stop()) {
      result.history.stop_reason = "early_stop";
      break;
    }
  }
  if (result.history.stop_reason.empty()) result.history.stop_reason = "max_epochs";
  result.history.best_epoch = stopper.best_epoch();
  return result;
}

std::vector<GradCheckEntry> gradient_check(const Forecaster& model, const ModelParams& params,
                                           std::span<const WindowPair> batch, double step,
                                           const std::function<void(ModelParams&)>& corrupt) {
  LossAndGradient analytic = gradients(model, params, batch);
  if (corrupt) corrupt(analytic.grad);

  std::vector<GradCheckEntry> report;
  std::vector<std::span<const double>> grad_blocks;
  analytic.grad.for_each_block(
      [&](const std::string& name, std::span<const double> v) {
        grad_blocks.push_back(v);
        report.push_back({name, v.size(), 0.0});
      });

  ModelParams probe = params;
  auto blocks = blocks_of(probe);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t i = 0; i < blocks[b].size(); ++i) {
      const double saved = blocks[b][i];
      blocks[b][i] = saved + step;
      const double up = mean_loss(model, probe, batch);
      blocks[b][i] = saved - step;
      const double down = mean_loss(model, probe, batch);
      blocks[b][i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double exact = grad_blocks[b][i];
      const double scale = std::max({std::abs(exact), std::abs(numeric), 1e-3});
      report[b].max_rel_error = std::max(report[b].max_rel_error, std::abs(exact - numeric) / scale);
    }
  }
  return report;
}

}  // namespace wavets
