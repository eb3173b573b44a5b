#include "wavets/metrics.hpp"

#include <cmath>
#include <json.hpp>

#include "wavets/error.hpp"

namespace wavets {
namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw ShapeError(std::string(what) + ": truth is " + std::to_string(a.rows) + "x" +
                     std::to_string(a.cols) + ", prediction is " + std::to_string(b.rows) + "x" +
                     std::to_string(b.cols));
}

}  // namespace

double mse(const Matrix& truth, const Matrix& pred) {
  require_same_shape(truth, pred, "mse");
  if (truth.values.empty()) throw ShapeError("mse of an empty matrix");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.values.size(); ++i) {
    const double d = truth.values[i] - pred.values[i];
    s += d * d;
  }
  return s / static_cast<double>(truth.values.size());
}

double mae(const Matrix& truth, const Matrix& pred) {
  require_same_shape(truth, pred, "mae");
  if (truth.values.empty()) throw ShapeError("mae of an empty matrix");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.values.size(); ++i)
    s += std::abs(truth.values[i] - pred.values[i]);
  return s / static_cast<double>(truth.values.size());
}

double smape(std::span<const double> truth, std::span<const double> pred) {
  if (truth.size() != pred.size() || truth.empty())
    throw ShapeError("smape needs equal, non-empty series");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double denom = std::abs(truth[i]) + std::abs(pred[i]);
    if (denom > 0.0) s += std::abs(truth[i] - pred[i]) / denom;
  }
  return 200.0 * s / static_cast<double>(truth.size());
}

std::optional<double> mase(std::span<const double> truth, std::span<const double> pred,
                           std::size_t period) {
  if (truth.size() != pred.size()) throw ShapeError("mase needs equal-length series");
  if (period < 1 || truth.size() <= period)
    throw ValidationError("mase needs horizon H > period m >= 1 (H=" +
                          std::to_string(truth.size()) + ", m=" + std::to_string(period) + ")");
  const std::size_t H = truth.size();
  double scale = 0.0;
  for (std::size_t j = period; j < H; ++j) scale += std::abs(truth[j] - truth[j - period]);
  scale /= static_cast<double>(H - period);
  if (!(scale > 0.0)) return std::nullopt;
  double err = 0.0;
  for (std::size_t i = 0; i < H; ++i) err += std::abs(truth[i] - pred[i]);
  return err / static_cast<double>(H) / scale;
}

double owa(double smape_model, double mase_model, double smape_ref, double mase_ref) {
  if (!(smape_ref > 0.0) || !(mase_ref > 0.0))
    throw ValidationError("owa needs positive reference SMAPE and MASE");
  return 0.5 * (smape_model / smape_ref + mase_model / mase_ref);
}

Matrix naive_repeat_last(const Matrix& window, std::size_t horizon) {
  return naive_seasonal(window, horizon, 1);
}

Matrix naive_seasonal(const Matrix& window, std::size_t horizon, std::size_t period) {
  if (window.rows < 1) throw ValidationError("naive forecast needs a non-empty window");
  if (period < 1 || period > window.rows)
    throw ValidationError("seasonal period " + std::to_string(period) +
                          " is larger than the window length " + std::to_string(window.rows));
  Matrix out(horizon, window.cols);
  const std::size_t base = window.rows - period;
  for (std::size_t i = 0; i < horizon; ++i)
    for (std::size_t c = 0; c < window.cols; ++c) out(i, c) = window(base + i % period, c);
  return out;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["mse"] = mse;
  j["mae"] = mae;
  if (smape) j["smape"] = *smape;
  if (mase) j["mase"] = *mase;
  if (owa) j["owa"] = *owa;
  j["horizon"] = horizon;
  j["channels"] = channels;
  if (period) j["period"] = *period;
  j["windows"] = windows;
  j["mase_skipped"] = mase_skipped;
  return j.dump(2) + "\n";
}

}  // namespace wavets
