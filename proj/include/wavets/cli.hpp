#pragma once

// Command-line runs. A run is fully described by a JSON config document with
// sections "model", "train", "data" and "metrics"; command-line flags are
// applied on top and the merged document is written next to every output.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "wavets/data.hpp"
#include "wavets/metrics.hpp"
#include "wavets/model.hpp"
#include "wavets/train.hpp"

namespace wavets::cli {

enum class MetricMode { Long, Short };

struct DataConfig {
  std::optional<std::filesystem::path> csv;
  std::optional<SyntheticSpec> synthetic;  // exactly one of csv / synthetic
  std::vector<std::string> columns;        // empty: every value column
  SplitRatios ratios;
  std::optional<std::string> preset;  // fixed split sizes; overrides ratios
  bool standardize = true;            // fit on the train split only
  std::size_t stride = 1;
};

struct MetricsConfig {
  MetricMode mode = MetricMode::Long;
  std::size_t period = 1;  // seasonal period m for short-term metrics
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DataConfig data;
  MetricsConfig metrics;

  // Canonical effective document, every field present.
  nlohmann::json to_json() const;
};

// Parses a config document. Collects every problem (unknown keys, bad types,
// constraint violations) and throws one ValidationError listing all of them.
RunConfig parse_run_config(const nlohmann::json& doc);

// Applies `overrides` of the form "section.key=value" (value parsed as JSON,
// else taken as a string), then `seed` into model.seed, train.seed and the
// synthetic seed.
void apply_overrides(nlohmann::json& doc, const std::vector<std::string>& overrides,
                     std::optional<std::uint64_t> seed);

// Reads `path` (empty: start from defaults) and applies the overrides.
nlohmann::json load_config_document(const std::filesystem::path& path,
                                    const std::vector<std::string>& overrides,
                                    std::optional<std::uint64_t> seed);

struct PreparedData {
  std::array<SeriesFrame, 3> splits;  // train, val, test; standardized when enabled
  ChannelStats stats;                 // identity when standardization is off
};

PreparedData prepare_data(const RunConfig& config);

// Forecast-window metrics of `params` on every window of `frame`. MSE/MAE use
// the frame's scale; SMAPE/MASE/OWA use the original scale via `stats`.
MetricsReport forecast_report(const Forecaster& model, const ModelParams& params,
                              const SeriesFrame& frame, const ChannelStats& stats,
                              const MetricsConfig& metrics, std::size_t stride = 1);

// Entry point shared by the executable and the tests. Returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wavets::cli
