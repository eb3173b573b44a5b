#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "wavets/matrix.hpp"

namespace wavets {

struct SeriesFrame {
  std::vector<std::string> timestamps;  // empty when the CSV has no `date` column
  Matrix values;                        // T x C, all finite
  std::vector<std::string> channel_names;

  std::size_t length() const { return values.rows; }
  std::size_t channels() const { return values.cols; }
  // Rows [begin, end); timestamps follow when present.
  SeriesFrame slice(std::size_t begin, std::size_t end) const;
  // Index of a channel by name, or by decimal position when `key` is numeric.
  std::size_t channel_index(std::string_view key) const;
};

// UTF-8 CSV: a header row, an optional leading `date` column, then one
// decimal real per cell. Errors name the row (1-based, header = 1) and column.
SeriesFrame parse_csv(std::istream& in, std::string_view source = "<stream>");
SeriesFrame load_csv(const std::filesystem::path& path);

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

// Sizes floor(T*train), floor(T*val), remainder.
std::array<SeriesFrame, 3> chronological_split(const SeriesFrame& frame, SplitRatios ratios);
// Fixed row counts; rows past the three splits are dropped.
std::array<SeriesFrame, 3> split_by_sizes(const SeriesFrame& frame,
                                          std::array<std::size_t, 3> sizes);

// Fixed dataset borders keyed by preset name ("ett_hourly", "ett_minute").
std::array<std::size_t, 3> preset_split_sizes(std::string_view preset);

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> std;
};

// Population mean/std per channel; std below 1e-8 is replaced by 1e-8.
ChannelStats standardize_fit(const SeriesFrame& train);
SeriesFrame standardize_apply(const SeriesFrame& frame, const ChannelStats& stats);
// Stats whose application undoes `stats`.
ChannelStats invert(const ChannelStats& stats);

struct WindowPair {
  Matrix x;  // L x C lookback
  Matrix y;  // tau x C target
  std::size_t origin = 0;
};

std::vector<WindowPair> windows(const SeriesFrame& frame, std::size_t lookback,
                                std::size_t horizon, std::size_t stride = 1);

// Channel c: amplitude_c * sin(2 pi t / period_c + phase_c) + slope_c * t, with
// period_c = period * (1 + c/2), amplitude_c = amplitude * (1 + c/4), slope
// alternating in sign, and phase_c drawn from `seed`.
struct SyntheticSpec {
  std::size_t length = 2048;
  std::size_t channels = 2;
  double period = 24.0;
  double amplitude = 1.0;
  double slope = 1e-3;
  std::uint64_t seed = 0;
};

SeriesFrame synthetic_sinusoid_trend(const SyntheticSpec& spec);

}  // namespace wavets
