#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <ostream>
#include <sstream>

#include "wavets/cli.hpp"
#include "wavets/error.hpp"
#include "wavets/format.hpp"
#include "wavets/kernels.hpp"
#include "wavets/serialize.hpp"
#include "wavets/wdt.hpp"

namespace wavets::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kGradTolerance = 1e-5;
constexpr std::size_t kGradCheckMaxDim = 16;
constexpr std::size_t kGradCheckWindows = 4;

// Options every run-style command accepts.
struct RunOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

void add_run_options(CLI::App& cmd, RunOptions& o, bool out_required) {
  cmd.add_option("--config", o.config, "JSON run config");
  cmd.add_option("--seed", o.seed, "seed for initialization, shuffling and synthetic data");
  auto* out = cmd.add_option("--out", o.out, "output directory");
  if (out_required) out->required();
  cmd.add_option("--set", o.overrides, "override a config field, e.g. model.levels=3");
}

RunConfig resolve(const RunOptions& o) {
  return parse_run_config(load_config_document(o.config, o.overrides, o.seed));
}

void echo_config(const fs::path& dir, const json& effective) {
  write_text(dir / "config.json", dump(effective));
}

Matrix forecast_rows(const Matrix& full, std::size_t lookback) {
  Matrix out(full.rows - lookback, full.cols);
  std::copy(full.values.begin() + static_cast<std::ptrdiff_t>(lookback * full.cols),
            full.values.end(), out.values.begin());
  return out;
}

std::vector<double> column(const Matrix& m, std::size_t c, const ChannelStats& stats) {
  std::vector<double> out(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) out[r] = m(r, c) * stats.std[c] + stats.mean[c];
  return out;
}

std::string metrics_row(const std::string& label, const MetricsReport& r, bool short_mode) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::string row = label + "," + format_double(r.mse) + "," + format_double(r.mae);
  if (short_mode) row += "," + opt(r.smape) + "," + opt(r.mase) + "," + opt(r.owa);
  return row;
}

// ---- transform / scalogram --------------------------------------------------

struct TransformOptions {
  std::string csv;
  std::string channel = "0";
  std::size_t levels = 1;
  unsigned order = 1;
  std::string wavelet = "db1";
  std::string out;
  bool scalogram = false;
};

void add_transform_options(CLI::App& cmd, TransformOptions& o) {
  cmd.add_option("--csv", o.csv, "input CSV")->required();
  cmd.add_option("--channel", o.channel, "channel name or 0-based index");
  cmd.add_option("--levels,-K", o.levels, "decomposition levels K");
  cmd.add_option("--order,-n", o.order, "derivative order n");
  cmd.add_option("--wavelet", o.wavelet, "db1, bior1.1 or rbio1.1");
  cmd.add_option("--out", o.out, "output directory")->required();
}

struct TransformResult {
  DerivativePyramid pyramid;
  std::size_t used = 0;
  std::size_t total = 0;
};

TransformResult run_transform(const TransformOptions& o, std::ostream& out) {
  if (o.levels < 1 || o.levels > 62) throw ValidationError("levels K must be in [1, 62]");
  const FilterBank fb = make_filterbank(o.wavelet);
  const SeriesFrame frame = load_csv(o.csv);
  const std::size_t c = frame.channel_index(o.channel);
  const std::size_t T = frame.length();
  const std::vector<double> series = frame.values.column(c);
  const std::size_t block = std::size_t{1} << o.levels;
  const std::size_t used = T / block * block;
  // Nothing survives the cut: let the cascade name the level that fails.
  if (used == 0) dwt_multi(series, fb, o.levels);
  if (used == T)
    out << "using all " << T << " samples\n";
  else
    out << "truncated to the first " << used << " of " << T
        << " samples (largest multiple of 2^K=" << block << ")\n";
  const std::span<const double> prefix(series.data(), used);
  TransformResult r{wdt_forward(prefix, fb, o.levels, o.order), used, T};
  json echo{{"csv", o.csv},         {"channel", frame.channel_names[c]},
            {"levels", o.levels},   {"order", o.order},
            {"wavelet", o.wavelet}, {"samples_total", T},
            {"samples_used", used}};
  write_text(fs::path(o.out) / "transform.json", dump(echo));
  return r;
}

void write_scalogram(const fs::path& path, const DerivativePyramid& p) {
  std::ostringstream csv;
  write_scalogram_csv(csv, scalogram(p));
  write_text(path, csv.str());
}

int cmd_transform(const TransformOptions& o, std::ostream& out) {
  const TransformResult r = run_transform(o, out);
  std::ostringstream csv;
  write_coefficients_csv(csv, r.pyramid);
  write_text(fs::path(o.out) / "coefficients.csv", csv.str());
  if (o.scalogram) write_scalogram(fs::path(o.out) / "scalogram.csv", r.pyramid);
  return 0;
}

int cmd_scalogram(const TransformOptions& o, std::ostream& out) {
  const TransformResult r = run_transform(o, out);
  write_scalogram(fs::path(o.out) / "scalogram.csv", r.pyramid);
  return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainOutcome {
  TrainResult result;
  PreparedData data;
  double seconds = 0.0;
};

TrainOutcome fit(const RunConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  TrainOutcome o;
  o.data = prepare_data(cfg);
  const auto train_w = windows(o.data.splits[0], cfg.model.lookback, cfg.model.horizon,
                               cfg.data.stride);
  const auto val_w = windows(o.data.splits[1], cfg.model.lookback, cfg.model.horizon,
                             cfg.data.stride);
  o.result = train(cfg.model, train_w, val_w, cfg.train);
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return o;
}

int cmd_train(const RunOptions& opts, std::ostream& out) {
  const RunConfig cfg = resolve(opts);
  const json effective = cfg.to_json();
  const fs::path dir(opts.out);
  echo_config(dir, effective);

  TrainOutcome o = fit(cfg);
  const Forecaster model(cfg.model);
  const MetricsReport train_report =
      forecast_report(model, o.result.params, o.data.splits[0], o.data.stats, cfg.metrics,
                      cfg.data.stride);
  const MetricsReport val_report = forecast_report(model, o.result.params, o.data.splits[1],
                                                   o.data.stats, cfg.metrics, cfg.data.stride);

  save_checkpoint(dir / "checkpoint.json",
                  Checkpoint{cfg.model, o.result.params, cfg.model.seed, effective});
  const auto& h = o.result.history;
  json run{{"config", effective},
           {"seed", cfg.model.seed},
           {"simd", std::string(simd::name(simd::active().isa))},
           {"parameters", o.result.params.parameter_count()},
           {"history", to_json(h)},
           {"train_forecast_mse", train_report.mse},
           {"train_forecast_mae", train_report.mae}};
  write_text(dir / "run.json", dump(run));
  write_text(dir / "metrics_val.json", val_report.to_json());

  std::ostringstream summary;
  summary << "transform: " << to_string(cfg.model.transform) << "\n"
          << "parameters: " << o.result.params.parameter_count() << "\n"
          << "epochs: " << h.train_loss.size() << " (" << h.stop_reason << ")\n"
          << "best epoch: " << h.best_epoch << "\n"
          << "best val loss: " << format_double(h.val_loss[h.best_epoch - 1]) << "\n"
          << "train forecast mse: " << format_double(train_report.mse) << "\n"
          << "val forecast mse: " << format_double(val_report.mse) << "\n"
          << "val forecast mae: " << format_double(val_report.mae) << "\n";
  const std::string stable = summary.str();
  summary << "epoch,train_loss,val_loss,wall_seconds\n";
  for (std::size_t e = 0; e < h.train_loss.size(); ++e)
    summary << e + 1 << "," << format_double(h.train_loss[e]) << ","
            << format_double(h.val_loss[e]) << "," << h.wall_seconds[e] << "\n";
  summary << "total wall seconds: " << o.seconds << "\n";
  write_text(dir / "summary.txt", summary.str());
  out << stable;
  return 0;
}

// ---- eval -------------------------------------------------------------------

struct EvalOptions {
  RunOptions run;
  std::string checkpoint;
  std::string split = "test";
  std::optional<std::size_t> horizon;
  std::optional<std::size_t> lookback;
  std::string metrics;
  std::optional<std::size_t> period;
};

void require_same(const char* what, std::size_t ckpt, std::size_t requested) {
  if (ckpt != requested)
    throw ValidationError(std::string("incompatible ") + what + ": checkpoint has " +
                          std::to_string(ckpt) + ", requested " + std::to_string(requested));
}

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  // Without --config the data source and metrics come from the checkpoint's run.
  json doc = ckpt.config;
  if (o.run.config.empty())
    apply_overrides(doc, o.run.overrides, o.run.seed);
  else
    doc = load_config_document(o.run.config, o.run.overrides, o.run.seed);
  if (!o.metrics.empty()) doc["metrics"]["mode"] = o.metrics;
  if (o.period) doc["metrics"]["period"] = *o.period;
  RunConfig cfg = parse_run_config(doc);

  require_same("horizon", ckpt.model.horizon, o.horizon.value_or(cfg.model.horizon));
  require_same("lookback", ckpt.model.lookback, o.lookback.value_or(cfg.model.lookback));
  require_same("channels", ckpt.model.channels, cfg.model.channels);
  cfg.model = ckpt.model;

  std::size_t split = 0;
  if (o.split == "train")
    split = 0;
  else if (o.split == "val")
    split = 1;
  else if (o.split == "test")
    split = 2;
  else
    throw ValidationError("split must be train, val or test");

  const PreparedData data = prepare_data(cfg);
  const Forecaster model(cfg.model);
  const MetricsReport report = forecast_report(model, ckpt.params, data.splits[split], data.stats,
                                               cfg.metrics, cfg.data.stride);
  const std::string text = report.to_json();
  if (!o.run.out.empty()) {
    const fs::path dir(o.run.out);
    echo_config(dir, cfg.to_json());
    write_text(dir / ("metrics_" + o.split + ".json"), text);
  }
  out << text;
  return 0;
}

// ---- ablate -----------------------------------------------------------------

int cmd_ablate(const RunOptions& opts, std::ostream& out) {
  const RunConfig base = resolve(opts);
  const fs::path dir(opts.out);
  echo_config(dir, base.to_json());
  const bool short_mode = base.metrics.mode == MetricMode::Short;
  std::string table = short_mode ? "transform,mse,mae,smape,mase,owa\n" : "transform,mse,mae\n";
  for (TransformKind kind : {TransformKind::Wdt, TransformKind::Dwt, TransformKind::Dft}) {
    RunConfig cfg = base;
    cfg.model.transform = kind;
    if (kind != TransformKind::Wdt) cfg.model.branch_orders.clear();
    cfg.model.validate();
    TrainOutcome o = fit(cfg);
    const Forecaster model(cfg.model);
    const MetricsReport r = forecast_report(model, o.result.params, o.data.splits[2],
                                            o.data.stats, cfg.metrics, cfg.data.stride);
    table += metrics_row(std::string(to_string(kind)), r, short_mode) + "\n";
  }
  write_text(dir / "ablation.csv", table);
  out << table;
  return 0;
}

// ---- gradcheck --------------------------------------------------------------

int cmd_gradcheck(const RunOptions& opts, bool corrupt, std::ostream& out) {
  const RunConfig cfg = resolve(opts);
  const ModelConfig& m = cfg.model;
  for (auto [name, v] : {std::pair{"lookback", m.lookback}, std::pair{"horizon", m.horizon},
                         std::pair{"channels", m.channels}, std::pair{"branches", m.branches}})
    if (v > kGradCheckMaxDim)
      throw ValidationError(std::string("gradcheck needs a tiny config: ") + name + "=" +
                            std::to_string(v) + " exceeds " + std::to_string(kGradCheckMaxDim));
  if (!opts.out.empty()) echo_config(opts.out, cfg.to_json());

  const PreparedData data = prepare_data(cfg);
  auto batch = windows(data.splits[0], m.lookback, m.horizon, cfg.data.stride);
  if (batch.size() > kGradCheckWindows) batch.resize(kGradCheckWindows);
  const Forecaster model(m);
  const ModelParams params = init_params(m, m.seed);
  std::function<void(ModelParams&)> hook;
  if (corrupt)
    hook = [](ModelParams& g) {
      g.for_each_block([done = false](const std::string&, std::span<double> v) mutable {
        if (done || v.empty()) return;
        v[0] += 1e-2 * (1.0 + std::abs(v[0]));
        done = true;
      });
    };
  const auto report = gradient_check(model, params, batch, 1e-6, hook);

  bool ok = true;
  std::ostringstream text;
  text << "block,entries,max_rel_error\n";
  for (const auto& e : report) {
    text << e.block << "," << e.entries << "," << format_double(e.max_rel_error) << "\n";
    ok = ok && e.max_rel_error < kGradTolerance;
  }
  text << (ok ? "PASS" : "FAIL") << ": tolerance " << format_double(kGradTolerance) << "\n";
  if (!opts.out.empty()) write_text(fs::path(opts.out) / "gradcheck.csv", text.str());
  out << text.str();
  return ok ? 0 : 1;
}

}  // namespace

MetricsReport forecast_report(const Forecaster& model, const ModelParams& params,
                              const SeriesFrame& frame, const ChannelStats& stats,
                              const MetricsConfig& metrics, std::size_t stride) {
  const ModelConfig& cfg = model.config();
  const auto wins = windows(frame, cfg.lookback, cfg.horizon, stride);
  const std::size_t H = cfg.horizon;
  const std::size_t C = cfg.channels;
  Matrix truth(wins.size() * H, C), pred(wins.size() * H, C);

  MetricsReport r;
  r.horizon = H;
  r.channels = C;
  r.windows = wins.size();
  const bool short_mode = metrics.mode == MetricMode::Short;
  double smape_sum = 0.0, smape_ref_sum = 0.0, mase_sum = 0.0, mase_ref_sum = 0.0;
  std::size_t series = 0, mase_series = 0;

  std::vector<Matrix> inputs;
  inputs.reserve(wins.size());
  for (const auto& w : wins) inputs.push_back(w.x);
  const std::vector<Matrix> outputs = model.forward(inputs, params);
  for (std::size_t w = 0; w < wins.size(); ++w) {
    const Matrix fc = forecast_rows(outputs[w], cfg.lookback);
    std::copy(fc.values.begin(), fc.values.end(),
              pred.values.begin() + static_cast<std::ptrdiff_t>(w * H * C));
    std::copy(wins[w].y.values.begin(), wins[w].y.values.end(),
              truth.values.begin() + static_cast<std::ptrdiff_t>(w * H * C));
    if (!short_mode) continue;
    const Matrix naive = naive_seasonal(wins[w].x, H, metrics.period);
    for (std::size_t c = 0; c < C; ++c) {
      const auto t = column(wins[w].y, c, stats);
      const auto p = column(fc, c, stats);
      const auto n = column(naive, c, stats);
      smape_sum += smape(t, p);
      smape_ref_sum += smape(t, n);
      ++series;
      const auto mm = mase(t, p, metrics.period);
      const auto mn = mase(t, n, metrics.period);
      if (mm && mn) {
        mase_sum += *mm;
        mase_ref_sum += *mn;
        ++mase_series;
      } else {
        ++r.mase_skipped;
      }
    }
  }
  r.mse = mse(truth, pred);
  r.mae = mae(truth, pred);
  if (short_mode) {
    r.period = metrics.period;
    r.smape = smape_sum / static_cast<double>(series);
    const double smape_ref = smape_ref_sum / static_cast<double>(series);
    if (mase_series > 0) {
      r.mase = mase_sum / static_cast<double>(mase_series);
      const double mase_ref = mase_ref_sum / static_cast<double>(mase_series);
      if (smape_ref > 0.0 && mase_ref > 0.0) r.owa = owa(*r.smape, *r.mase, smape_ref, mase_ref);
    }
  }
  return r;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wavelet derivative transform and WaveTS forecaster"};
  app.name("wavets");
  app.require_subcommand(1);

  TransformOptions tr, sc;
  auto* transform = app.add_subcommand("transform", "write WDT coefficients of one channel");
  add_transform_options(*transform, tr);
  transform->add_flag("--scalogram", tr.scalogram, "also write the normalized scalogram");
  auto* scalo = app.add_subcommand("scalogram", "write the normalized WDT scalogram");
  add_transform_options(*scalo, sc);

  RunOptions train_opts, ablate_opts, grad_opts;
  auto* train_cmd = app.add_subcommand("train", "train a forecaster");
  add_run_options(*train_cmd, train_opts, true);

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "forecast metrics of a checkpoint");
  add_run_options(*eval_cmd, ev.run, false);
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "checkpoint.json from train")->required();
  eval_cmd->add_option("--split", ev.split, "train, val or test");
  eval_cmd->add_option("--horizon", ev.horizon, "expected forecast horizon");
  eval_cmd->add_option("--lookback", ev.lookback, "expected lookback length");
  eval_cmd->add_option("--metrics", ev.metrics, "long or short");
  eval_cmd->add_option("--period", ev.period, "seasonal period m for short-term metrics");

  auto* ablate_cmd = app.add_subcommand("ablate", "compare wdt, dwt and dft variants");
  add_run_options(*ablate_cmd, ablate_opts, true);

  bool corrupt = false;
  auto* grad_cmd = app.add_subcommand("gradcheck", "compare analytic and numeric gradients");
  add_run_options(*grad_cmd, grad_opts, false);
  grad_cmd->add_flag("--corrupt", corrupt)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::Validation);
  }

  try {
    if (*transform) return cmd_transform(tr, out);
    if (*scalo) return cmd_scalogram(sc, out);
    if (*train_cmd) return cmd_train(train_opts, out);
    if (*eval_cmd) return cmd_eval(ev, out);
    if (*ablate_cmd) return cmd_ablate(ablate_opts, out);
    if (*grad_cmd) return cmd_gradcheck(grad_opts, corrupt, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::Data);
  }
  return static_cast<int>(ErrorKind::Validation);
}

}  // namespace wavets::cli
