#pragma once

// WaveTS forecaster: instance normalization, N derivative-order branches
// (WDT -> per-band frequency refinement units -> iWDT), concatenation along
// time, a shared projection, and denormalization. The dwt and dft transform
// kinds are the derivative-free and Fourier ablations of the same pipeline.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wavets/matrix.hpp"
#include "wavets/wavelet.hpp"

namespace wavets {

enum class TransformKind { Wdt, Dwt, Dft };

std::string_view to_string(TransformKind kind);
TransformKind parse_transform_kind(std::string_view text);

struct ModelConfig {
  std::size_t lookback = 96;  // L
  std::size_t horizon = 96;   // tau
  std::size_t channels = 1;   // C
  std::size_t branches = 1;   // N
  std::size_t levels = 1;     // K
  TransformKind transform = TransformKind::Wdt;
  // Per-branch derivative order override. Empty means branch n uses order n
  // for wdt and order 0 for dwt.
  std::vector<unsigned> branch_orders;
  std::string wavelet = "db1";
  double std_epsilon = 1e-5;
  std::uint64_t seed = 0;

  std::size_t output_length() const { return lookback + horizon; }
  unsigned order_of(std::size_t branch) const;  // branch is 0-based

  // Every violated constraint, empty when the config is usable.
  std::vector<std::string> problems() const;
  // Throws ValidationError listing every problem.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

// Affine map y = x W + b with W stored in x in-by-out row-major order.
struct Linear {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  Linear() = default;
  Linear(std::size_t in_dim, std::size_t out_dim)
      : in(in_dim), out(out_dim), weight(in_dim * out_dim, 0.0), bias(out_dim, 0.0) {}

  bool empty() const { return in == 0 && out == 0; }
  std::span<const double> weight_row(std::size_t i) const { return {weight.data() + i * out, out}; }
  std::span<double> weight_row(std::size_t i) { return {weight.data() + i * out, out}; }

  void apply(std::span<const double> x, std::span<double> y) const;

  bool operator==(const Linear&) const = default;
};

// Frequency refinement unit: coeff W + b. Throws ShapeError on dimension mismatch.
std::vector<double> fru_apply(std::span<const double> coeff, const Linear& layer);

struct BranchParams {
  Linear fru_ll;               // LL_K: L/2^K -> (L+tau)/2^K
  std::vector<Linear> fru_lh;  // LH_l: L/2^l -> (L+tau)/2^l, index l-1
  Linear fru_real;             // dft only: floor(L/2)+1 -> floor((L+tau)/2)+1
  Linear fru_imag;

  bool operator==(const BranchParams&) const = default;
};

struct ModelParams {
  std::vector<BranchParams> branches;
  Linear projection;  // N(L+tau) -> L+tau

  // All parameters zero, shaped for `config`.
  static ModelParams zeros(const ModelConfig& config);

  // Visits every non-empty weight and bias block as (name, values).
  template <class F>
  void for_each_block(F&& visit) {
    visit_blocks(*this, visit);
  }
  template <class F>
  void for_each_block(F&& visit) const {
    visit_blocks(*this, visit);
  }

  std::size_t parameter_count() const;
  bool operator==(const ModelParams&) const = default;

 private:
  template <class Self, class F>
  static void visit_blocks(Self& self, F& visit) {
    auto layer = [&](const std::string& prefix, auto& lin) {
      if (lin.empty()) return;
      visit(prefix + ".weight", std::span(lin.weight));
      visit(prefix + ".bias", std::span(lin.bias));
    };
    for (std::size_t n = 0; n < self.branches.size(); ++n) {
      auto& b = self.branches[n];
      const std::string base = "branch" + std::to_string(n + 1);
      layer(base + ".fru_ll", b.fru_ll);
      for (std::size_t l = 0; l < b.fru_lh.size(); ++l)
        layer(base + ".fru_lh" + std::to_string(l + 1), b.fru_lh[l]);
      layer(base + ".fru_real", b.fru_real);
      layer(base + ".fru_imag", b.fru_imag);
    }
    layer("projection", self.projection);
  }
};

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] from a seeded
// mt19937_64 stream, biases zero.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

struct InstanceStats {
  std::vector<double> mean;
  std::vector<double> std;  // population std + epsilon
};

std::pair<Matrix, InstanceStats> instance_normalize(const Matrix& window, double std_epsilon);
Matrix instance_denormalize(const Matrix& output, const InstanceStats& stats);

class Forecaster {
 public:
  // Validates the configuration; every dimension error surfaces here.
  explicit Forecaster(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  const FilterBank& filterbank() const { return filterbank_; }

  // Throws ShapeError unless params match the configuration exactly.
  void check_params(const ModelParams& params) const;

  // window: L x C raw values. Returns the (L+tau) x C backcast+forecast.
  Matrix forward(const Matrix& window, const ModelParams& params) const;
  // Many windows at once; bit-identical to calling forward on each.
  std::vector<Matrix> forward(std::span<const Matrix> windows, const ModelParams& params) const;

  // Intermediate values of a batched pass, kept for the backward pass.
  struct Trace {
    std::size_t rows = 0;
    std::vector<std::vector<std::vector<double>>> band_inputs;  // [branch][band], rows x length
    std::vector<double> concat;                                 // rows x N(L+tau): Z_1 .. Z_N
  };

  // `rows` normalized channels of length L, back to back, to rows x (L+tau)
  // outputs before denormalization. `trace` may be null.
  std::vector<double> forward_normalized(std::span<const double> x, std::size_t rows,
                                         const ModelParams& params, Trace* trace) const;
  std::vector<double> forward_normalized(std::span<const double> x, const ModelParams& params,
                                         Trace* trace) const {
    return forward_normalized(x, 1, params, trace);
  }
  // Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output) for the
  // rows recorded in `trace`.
  void backward_normalized(const Trace& trace, std::span<const double> d_output,
                           const ModelParams& params, ModelParams& grad) const;

 private:
  // Writes row r of the branch output to z + r * z_stride.
  void wavelet_branch(std::size_t branch, std::span<const double> x, std::size_t rows,
                      const BranchParams& p, std::vector<std::vector<double>>& bands, double* z,
                      std::size_t z_stride) const;
  void fourier_branch(std::span<const double> x, std::size_t rows, const BranchParams& p,
                      std::vector<std::vector<double>>& bands, double* z,
                      std::size_t z_stride) const;

  ModelConfig config_;
  FilterBank filterbank_;
  // Real-input DFT at length L and its inverse at length L+tau, as bias-free
  // linear maps: re = x Fr, im = x Fi, z = re Gr + im Gi.
  Linear dft_real_, dft_imag_, idft_real_, idft_imag_;
};

Matrix forward(const Matrix& window, const ModelParams& params, const ModelConfig& config);

}  // namespace wavets
