#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wavets/data.hpp"
#include "wavets/matrix.hpp"
#include "wavets/model.hpp"

namespace wavets {

// ||pred - [x ; y]||_F^2 / (C (L + tau)).
double joint_loss(const Matrix& pred, const Matrix& x, const Matrix& y);

struct TrainConfig {
  double learning_rate = 5e-4;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t patience = 3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::optional<double> grad_clip;  // global-norm clip, off when empty
  std::uint64_t seed = 0;

  std::vector<std::string> problems() const;
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

// Mean joint loss over the windows.
double mean_loss(const Forecaster& model, const ModelParams& params,
                 std::span<const WindowPair> batch);

struct LossAndGradient {
  double loss = 0.0;
  ModelParams grad;
};

// Exact gradient of the batch-mean joint loss. The transforms are fixed
// linear operators, so backpropagation is a chain of transposed affine maps.
LossAndGradient gradients(const Forecaster& model, const ModelParams& params,
                          std::span<const WindowPair> batch);

double global_norm(const ModelParams& grad);

struct AdamState {
  ModelParams m;
  ModelParams v;
  std::uint64_t step = 0;

  static AdamState zeros_like(const ModelParams& params);
  bool operator==(const AdamState&) const = default;
};

// One bias-corrected Adam update; increments state.step.
void adam_step(ModelParams& params, const ModelParams& grad, AdamState& state,
               const TrainConfig& config);

class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  // Records the next epoch's validation loss; true if it is a new best.
  bool observe(double val_loss);
  bool should_stop() const { return since_best_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }  // 1-based, 0 before any epoch
  double best_loss() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_ = 0.0;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> wall_seconds;  // not reproducible; excluded from equality
  std::size_t best_epoch = 0;        // 1-based
  std::string stop_reason;           // "early_stop" or "max_epochs"

  bool operator==(const TrainHistory& o) const {
    return train_loss == o.train_loss && val_loss == o.val_loss && best_epoch == o.best_epoch &&
           stop_reason == o.stop_reason;
  }
};

struct TrainResult {
  ModelParams params;  // from the best validation epoch
  TrainHistory history;
};

// Seeded shuffled mini-batches (last partial batch kept), validation after
// every epoch, early stopping on validation joint loss. Throws
// NumericalError on a non-finite loss.
TrainResult train(const ModelConfig& model_config, std::span<const WindowPair> train_set,
                  std::span<const WindowPair> val_set, const TrainConfig& config,
                  std::optional<ModelParams> initial = std::nullopt);

struct GradCheckEntry {
  std::string block;
  std::size_t entries = 0;
  double max_rel_error = 0.0;
};

// Central finite differences over every entry of every block. The relative
// error is |a - n| / max(|a|, |n|, 1e-3); the floor keeps entries whose true
// partial is zero from being judged on difference roundoff alone. `corrupt`,
// when set, edits the analytic gradient before comparison.
std::vector<GradCheckEntry> gradient_check(
    const Forecaster& model, const ModelParams& params, std::span<const WindowPair> batch,
    double step = 1e-6, const std::function<void(ModelParams&)>& corrupt = {});

}  // namespace wavets
