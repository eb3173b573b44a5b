#include "wavets/model.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "wavets/error.hpp"
#include "wavets/kernels.hpp"
#include "wavets/wdt.hpp"

namespace wavets {
namespace {

std::size_t spectrum_size(std::size_t length) { return length / 2 + 1; }

// Y += X W for `rows` rows of X. Every Y[r][j] adds the weight rows in
// ascending order, so the result depends neither on the kernel set nor on
// how rows are batched.
void accumulate_rows(const Linear& layer, const double* x, std::size_t rows, double* y) {
  simd::active().gemm_acc(rows, layer.out, layer.in, x, layer.in, layer.weight.data(), layer.out,
                          y, layer.out);
}

void apply_rows(const Linear& layer, const double* x, std::size_t rows, double* y) {
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(layer.bias.begin(), layer.bias.end(), y + r * layer.out);
  accumulate_rows(layer, x, rows, y);
}

std::vector<double> transpose(const double* a, std::size_t rows, std::size_t cols) {
  std::vector<double> t(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) t[c * rows + r] = a[r * cols + c];
  return t;
}

// dX = dY W^T for `rows` rows.
void input_grad_rows(const Linear& layer, const double* dy, std::size_t rows, double* dx) {
  const std::vector<double> wt = transpose(layer.weight.data(), layer.in, layer.out);
  std::fill(dx, dx + rows * layer.in, 0.0);
  simd::active().gemm_acc(rows, layer.in, layer.out, dy, layer.out, wt.data(), layer.in, dx,
                          layer.in);
}

// Backward of Y = X W + b: grad.W += X^T dY, grad.b += sum of dY rows, and
// dX = dY W^T when `dx` is set. Gradients add rows in ascending order.
void linear_backward(const Linear& layer, const double* x, const double* dy, std::size_t rows,
                     Linear& grad, double* dx) {
  const auto& k = simd::active();
  const std::vector<double> xt = transpose(x, rows, layer.in);
  k.gemm_acc(layer.in, layer.out, rows, xt.data(), rows, dy, layer.out, grad.weight.data(),
             layer.out);
  for (std::size_t r = 0; r < rows; ++r) k.axpy(1.0, dy + r * layer.out, grad.bias.data(), layer.out);
  if (dx) input_grad_rows(layer, dy, rows, dx);
}

void check_linear(const Linear& lin, std::size_t in, std::size_t out, const std::string& what) {
  if (lin.in != in || lin.out != out || lin.weight.size() != in * out || lin.bias.size() != out)
    throw ShapeError(what + " expects " + std::to_string(in) + "->" + std::to_string(out) +
                     ", got " + std::to_string(lin.in) + "->" + std::to_string(lin.out));
}

double angle(std::size_t k, std::size_t t, std::size_t n) {
  return 2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
}

}  // namespace

std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::Wdt:
      return "wdt";
    case TransformKind::Dwt:
      return "dwt";
    case TransformKind::Dft:
      return "dft";
  }
  return "wdt";
}

TransformKind parse_transform_kind(std::string_view text) {
  if (text == "wdt") return TransformKind::Wdt;
  if (text == "dwt") return TransformKind::Dwt;
  if (text == "dft") return TransformKind::Dft;
  throw ValidationError("unknown transform kind '" + std::string(text) +
                        "' (expected wdt, dwt or dft)");
}

unsigned ModelConfig::order_of(std::size_t branch) const {
  if (transform == TransformKind::Dft) return 0;
  if (!branch_orders.empty()) return branch_orders[branch];
  return transform == TransformKind::Dwt ? 0u : static_cast<unsigned>(branch + 1);
}

std::vector<std::string> ModelConfig::problems() const {
  std::vector<std::string> out;
  if (lookback < 2) out.push_back("lookback L must be >= 2");
  if (horizon < 1) out.push_back("horizon must be >= 1");
  if (channels < 1) out.push_back("channels C must be >= 1");
  if (branches < 1) out.push_back("branches N must be >= 1");
  if (levels < 1) out.push_back("levels K must be >= 1");
  if (!(std_epsilon >= 0.0) || !std::isfinite(std_epsilon))
    out.push_back("std_epsilon must be finite and >= 0");
  if (transform != TransformKind::Dft) {
    if (levels >= 1 && levels < 63) {
      const std::size_t block = std::size_t{1} << levels;
      if (lookback % block != 0)
        out.push_back("lookback L=" + std::to_string(lookback) + " is not divisible by 2^K=" +
                      std::to_string(block));
      if (output_length() % block != 0)
        out.push_back("L+horizon=" + std::to_string(output_length()) +
                      " is not divisible by 2^K=" + std::to_string(block));
    } else if (levels >= 63) {
      out.push_back("levels K is too large");
    }
    try {
      make_filterbank(wavelet);
    } catch (const Error& e) {
      out.push_back(e.what());
    }
  }
  if (!branch_orders.empty()) {
    if (branch_orders.size() != branches)
      out.push_back("branch_orders has " + std::to_string(branch_orders.size()) +
                    " entries for N=" + std::to_string(branches) + " branches");
    for (unsigned o : branch_orders) {
      if (transform == TransformKind::Dwt && o != 0)
        out.push_back("dwt transform requires every branch order to be 0");
      if (o > 16) out.push_back("branch order " + std::to_string(o) + " exceeds 16");
    }
  } else if (transform == TransformKind::Wdt && branches > 16) {
    out.push_back("branch count N exceeds the maximum derivative order 16");
  }
  return out;
}

void ModelConfig::validate() const {
  const auto issues = problems();
  if (issues.empty()) return;
  std::string msg = "invalid model config:";
  for (const auto& s : issues) msg += "\n  - " + s;
  throw ValidationError(msg);
}

void Linear::apply(std::span<const double> x, std::span<double> y) const {
  apply_rows(*this, x.data(), 1, y.data());
}

std::vector<double> fru_apply(std::span<const double> coeff, const Linear& layer) {
  if (coeff.size() != layer.in || layer.weight.size() != layer.in * layer.out ||
      layer.bias.size() != layer.out)
    throw ShapeError("fru_apply: coefficient length " + std::to_string(coeff.size()) +
                     " does not match a " + std::to_string(layer.in) + "x" +
                     std::to_string(layer.out) + " layer");
  std::vector<double> out(layer.out);
  layer.apply(coeff, out);
  return out;
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  config.validate();
  const std::size_t L = config.lookback;
  const std::size_t M = config.output_length();
  ModelParams p;
  p.branches.resize(config.branches);
  for (auto& b : p.branches) {
    if (config.transform == TransformKind::Dft) {
      b.fru_real = Linear(spectrum_size(L), spectrum_size(M));
      b.fru_imag = Linear(spectrum_size(L), spectrum_size(M));
    } else {
      const std::size_t K = config.levels;
      b.fru_ll = Linear(L >> K, M >> K);
      for (std::size_t l = 1; l <= K; ++l) b.fru_lh.emplace_back(L >> l, M >> l);
    }
  }
  p.projection = Linear(config.branches * M, M);
  return p;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each_block([&](const std::string&, std::span<const double> v) { n += v.size(); });
  return n;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(config);
  std::mt19937_64 gen(seed);
  auto fill = [&](Linear& lin) {
    if (lin.empty()) return;
    const double bound = 1.0 / std::sqrt(static_cast<double>(lin.in));
    for (double& w : lin.weight) {
      // 53 random bits -> [0, 1); avoids implementation-defined distributions.
      const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
      w = bound * (2.0 * u - 1.0);
    }
  };
  for (auto& b : p.branches) {
    fill(b.fru_ll);
    for (auto& lh : b.fru_lh) fill(lh);
    fill(b.fru_real);
    fill(b.fru_imag);
  }
  fill(p.projection);
  return p;
}

std::pair<Matrix, InstanceStats> instance_normalize(const Matrix& window, double std_epsilon) {
  if (window.rows < 2) throw ShapeError("instance normalization needs at least 2 time steps");
  const std::size_t T = window.rows;
  InstanceStats stats{std::vector<double>(window.cols), std::vector<double>(window.cols)};
  Matrix normed(T, window.cols);
  for (std::size_t c = 0; c < window.cols; ++c) {
    double sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) sum += window(t, c);
    const double mean = sum / static_cast<double>(T);
    double ss = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double d = window(t, c) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(T)) + std_epsilon;
    stats.mean[c] = mean;
    stats.std[c] = sd;
    for (std::size_t t = 0; t < T; ++t)
      normed(t, c) = sd > 0.0 ? (window(t, c) - mean) / sd : 0.0;
  }
  return {std::move(normed), std::move(stats)};
}

Matrix instance_denormalize(const Matrix& output, const InstanceStats& stats) {
  if (stats.mean.size() != output.cols || stats.std.size() != output.cols)
    throw ShapeError("instance stats have " + std::to_string(stats.mean.size()) +
                     " channels, output has " + std::to_string(output.cols));
  Matrix out(output.rows, output.cols);
  for (std::size_t t = 0; t < output.rows; ++t)
    for (std::size_t c = 0; c < output.cols; ++c)
      out(t, c) = output(t, c) * stats.std[c] + stats.mean[c];
  return out;
}

Forecaster::Forecaster(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  if (config_.transform != TransformKind::Dft) {
    filterbank_ = make_filterbank(config_.wavelet);
    return;
  }
  const std::size_t L = config_.lookback;
  const std::size_t M = config_.output_length();
  const std::size_t fin = spectrum_size(L);
  const std::size_t fout = spectrum_size(M);
  dft_real_ = Linear(L, fin);
  dft_imag_ = Linear(L, fin);
  for (std::size_t t = 0; t < L; ++t)
    for (std::size_t k = 0; k < fin; ++k) {
      const double a = angle(k, t, L);
      dft_real_.weight[t * fin + k] = std::cos(a);
      dft_imag_.weight[t * fin + k] = -std::sin(a);
    }
  idft_real_ = Linear(fout, M);
  idft_imag_ = Linear(fout, M);
  for (std::size_t k = 0; k < fout; ++k) {
    // DC and (even-length) Nyquist bins appear once, every other bin twice.
    const bool single = (k == 0) || (M % 2 == 0 && k == M / 2);
    const double weight = (single ? 1.0 : 2.0) / static_cast<double>(M);
    for (std::size_t t = 0; t < M; ++t) {
      const double a = angle(k, t, M);
      idft_real_.weight[k * M + t] = weight * std::cos(a);
      idft_imag_.weight[k * M + t] = -weight * std::sin(a);
    }
  }
}

void Forecaster::check_params(const ModelParams& params) const {
  const std::size_t L = config_.lookback;
  const std::size_t M = config_.output_length();
  if (params.branches.size() != config_.branches)
    throw ShapeError("params have " + std::to_string(params.branches.size()) +
                     " branches, config has N=" + std::to_string(config_.branches));
  for (std::size_t n = 0; n < params.branches.size(); ++n) {
    const auto& b = params.branches[n];
    const std::string base = "branch" + std::to_string(n + 1);
    if (config_.transform == TransformKind::Dft) {
      check_linear(b.fru_real, spectrum_size(L), spectrum_size(M), base + ".fru_real");
      check_linear(b.fru_imag, spectrum_size(L), spectrum_size(M), base + ".fru_imag");
      if (!b.fru_ll.empty() || !b.fru_lh.empty())
        throw ShapeError(base + " carries wavelet FRUs in a dft model");
    } else {
      const std::size_t K = config_.levels;
      check_linear(b.fru_ll, L >> K, M >> K, base + ".fru_ll");
      if (b.fru_lh.size() != K)
        throw ShapeError(base + " has " + std::to_string(b.fru_lh.size()) +
                         " detail FRUs, expected K=" + std::to_string(K));
      for (std::size_t l = 1; l <= K; ++l)
        check_linear(b.fru_lh[l - 1], L >> l, M >> l, base + ".fru_lh" + std::to_string(l));
      if (!b.fru_real.empty() || !b.fru_imag.empty())
        throw ShapeError(base + " carries Fourier FRUs in a wavelet model");
    }
  }
  check_linear(params.projection, config_.branches * M, M, "projection");
}

void Forecaster::wavelet_branch(std::size_t branch, std::span<const double> x, std::size_t rows,
                                const BranchParams& p, std::vector<std::vector<double>>& bands,
                                double* z, std::size_t z_stride) const {
  const std::size_t K = config_.levels;
  const std::size_t L = config_.lookback;
  const std::size_t M = config_.output_length();
  const unsigned order = config_.order_of(branch);
  // bands[0] is LL_K, bands[l] is LH_l; each holds `rows` rows back to back.
  bands.assign(K + 1, {});
  bands[0].resize(rows * (L >> K));
  for (std::size_t l = 1; l <= K; ++l) bands[l].resize(rows * (L >> l));
  for (std::size_t r = 0; r < rows; ++r) {
    const DerivativePyramid c = wdt_forward(x.subspan(r * L, L), filterbank_, K, order);
    std::copy(c.base.approx.begin(), c.base.approx.end(), bands[0].begin() + r * (L >> K));
    for (std::size_t l = 1; l <= K; ++l)
      std::copy(c.base.details[l - 1].begin(), c.base.details[l - 1].end(),
                bands[l].begin() + r * (L >> l));
  }
  std::vector<std::vector<double>> refined(K + 1);
  refined[0].resize(rows * (M >> K));
  apply_rows(p.fru_ll, bands[0].data(), rows, refined[0].data());
  for (std::size_t l = 1; l <= K; ++l) {
    refined[l].resize(rows * (M >> l));
    apply_rows(p.fru_lh[l - 1], bands[l].data(), rows, refined[l].data());
  }
  DerivativePyramid out = zero_derivative_pyramid(M, K, order);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = [&](std::size_t b, std::size_t len) {
      return refined[b].begin() + static_cast<std::ptrdiff_t>(r * len);
    };
    std::copy_n(row(0, M >> K), M >> K, out.base.approx.begin());
    for (std::size_t l = 1; l <= K; ++l)
      std::copy_n(row(l, M >> l), M >> l, out.base.details[l - 1].begin());
    const std::vector<double> zr = wdt_inverse(out, filterbank_);
    std::copy(zr.begin(), zr.end(), z + r * z_stride);
  }
}

void Forecaster::fourier_branch(std::span<const double> x, std::size_t rows, const BranchParams& p,
                                std::vector<std::vector<double>>& bands, double* z,
                                std::size_t z_stride) const {
  const std::size_t fin = dft_real_.out;
  const std::size_t fout = idft_real_.in;
  const std::size_t M = config_.output_length();
  bands.assign(2, std::vector<double>(rows * fin));
  apply_rows(dft_real_, x.data(), rows, bands[0].data());
  apply_rows(dft_imag_, x.data(), rows, bands[1].data());
  std::vector<double> re_hat(rows * fout), im_hat(rows * fout), zz(rows * M, 0.0);
  apply_rows(p.fru_real, bands[0].data(), rows, re_hat.data());
  apply_rows(p.fru_imag, bands[1].data(), rows, im_hat.data());
  accumulate_rows(idft_real_, re_hat.data(), rows, zz.data());
  accumulate_rows(idft_imag_, im_hat.data(), rows, zz.data());
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(zz.begin() + static_cast<std::ptrdiff_t>(r * M), M, z + r * z_stride);
}

std::vector<double> Forecaster::forward_normalized(std::span<const double> x, std::size_t rows,
                                                   const ModelParams& params, Trace* trace) const {
  const std::size_t L = config_.lookback;
  const std::size_t M = config_.output_length();
  const std::size_t N = config_.branches;
  if (x.size() != rows * L)
    throw ShapeError("forward_normalized: " + std::to_string(x.size()) + " values for " +
                     std::to_string(rows) + " rows of length " + std::to_string(L));
  Trace local;
  Trace& t = trace ? *trace : local;
  t.rows = rows;
  t.band_inputs.assign(N, {});
  t.concat.assign(rows * N * M, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    double* z = t.concat.data() + n * M;
    if (config_.transform == TransformKind::Dft)
      fourier_branch(x, rows, params.branches[n], t.band_inputs[n], z, N * M);
    else
      wavelet_branch(n, x, rows, params.branches[n], t.band_inputs[n], z, N * M);
  }
  std::vector<double> out(rows * M);
  apply_rows(params.projection, t.concat.data(), rows, out.data());
  return out;
}

void Forecaster::backward_normalized(const Trace& trace, std::span<const double> d_output,
                                     const ModelParams& params, ModelParams& grad) const {
  const std::size_t M = config_.output_length();
  const std::size_t N = config_.branches;
  const std::size_t K = config_.levels;
  const std::size_t rows = trace.rows;
  if (d_output.size() != rows * M)
    throw ShapeError("backward_normalized: output gradient has " +
                     std::to_string(d_output.size()) + " values, expected " +
                     std::to_string(rows * M));
  std::vector<double> d_concat(rows * N * M);
  linear_backward(params.projection, trace.concat.data(), d_output.data(), rows, grad.projection,
                  d_concat.data());

  const FilterBank adjoint = config_.transform == TransformKind::Dft
                                 ? FilterBank{}
                                 : synthesis_adjoint(filterbank_);
  for (std::size_t n = 0; n < N; ++n) {
    const auto& bands = trace.band_inputs[n];
    const BranchParams& p = params.branches[n];
    BranchParams& g = grad.branches[n];
    std::vector<double> dz(rows * M);
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(d_concat.begin() + static_cast<std::ptrdiff_t>(r * N * M + n * M), M,
                  dz.begin() + static_cast<std::ptrdiff_t>(r * M));
    if (config_.transform == TransformKind::Dft) {
      const std::size_t fout = idft_real_.in;
      std::vector<double> d_re(rows * fout), d_im(rows * fout);
      input_grad_rows(idft_real_, dz.data(), rows, d_re.data());
      input_grad_rows(idft_imag_, dz.data(), rows, d_im.data());
      linear_backward(p.fru_real, bands[0].data(), d_re.data(), rows, g.fru_real, nullptr);
      linear_backward(p.fru_imag, bands[1].data(), d_im.data(), rows, g.fru_imag, nullptr);
      continue;
    }
    // The iWDT is linear: its adjoint is the adjoint cascade followed by the
    // same division by the gains.
    const unsigned order = config_.order_of(n);
    std::vector<std::vector<double>> d_bands(K + 1);
    d_bands[0].resize(rows * (M >> K));
    for (std::size_t l = 1; l <= K; ++l) d_bands[l].resize(rows * (M >> l));
    for (std::size_t r = 0; r < rows; ++r) {
      WaveletPyramid d = dwt_multi(std::span<const double>(dz).subspan(r * M, M), adjoint, K);
      std::copy(d.approx.begin(), d.approx.end(), d_bands[0].begin() + r * (M >> K));
      for (std::size_t l = 1; l <= K; ++l) {
        auto& band = d.details[l - 1];
        if (order != 0) simd::scale(1.0 / derivative_gain(order, scale_index(K, l)), band);
        std::copy(band.begin(), band.end(), d_bands[l].begin() + r * (M >> l));
      }
    }
    linear_backward(p.fru_ll, bands[0].data(), d_bands[0].data(), rows, g.fru_ll, nullptr);
    for (std::size_t l = 1; l <= K; ++l)
      linear_backward(p.fru_lh[l - 1], bands[l].data(), d_bands[l].data(), rows,
                      g.fru_lh[l - 1], nullptr);
  }
}

Matrix Forecaster::forward(const Matrix& window, const ModelParams& params) const {
  return std::move(forward(std::span(&window, 1), params).front());
}

std::vector<Matrix> Forecaster::forward(std::span<const Matrix> windows,
                                        const ModelParams& params) const {
  check_params(params);
  const std::size_t L = config_.lookback, M = config_.output_length(), C = config_.channels;
  constexpr std::size_t chunk = 64;
  std::vector<Matrix> out;
  out.reserve(windows.size());
  for (std::size_t start = 0; start < windows.size(); start += chunk) {
    const std::size_t count = std::min(chunk, windows.size() - start);
    std::vector<double> x(count * C * L);
    std::vector<InstanceStats> stats;
    for (std::size_t w = 0; w < count; ++w) {
      const Matrix& win = windows[start + w];
      if (win.rows != L || win.cols != C)
        throw ShapeError("window is " + std::to_string(win.rows) + "x" +
                         std::to_string(win.cols) + ", model expects " + std::to_string(L) + "x" +
                         std::to_string(C));
      auto [normed, st] = instance_normalize(win, config_.std_epsilon);
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t t = 0; t < L; ++t) x[(w * C + c) * L + t] = normed(t, c);
      stats.push_back(std::move(st));
    }
    const std::vector<double> z = forward_normalized(x, count * C, params, nullptr);
    for (std::size_t w = 0; w < count; ++w) {
      Matrix o(M, C);
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t t = 0; t < M; ++t) o(t, c) = z[(w * C + c) * M + t];
      out.push_back(instance_denormalize(o, stats[w]));
    }
  }
  return out;
}

Matrix forward(const Matrix& window, const ModelParams& params, const ModelConfig& config) {
  return Forecaster(config).forward(window, params);
}

}  // namespace wavets
