#include "wavets/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "wavets/error.hpp"

namespace wavets {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

std::string location(std::string_view source, std::size_t row, std::string_view column) {
  return std::string(source) + ": row " + std::to_string(row) + ", column '" +
         std::string(column) + "'";
}

}  // namespace

SeriesFrame SeriesFrame::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > length())
    throw ValidationError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                          ") is outside a frame of length " + std::to_string(length()));
  SeriesFrame out;
  out.channel_names = channel_names;
  if (!timestamps.empty())
    out.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                          timestamps.begin() + static_cast<std::ptrdiff_t>(end));
  out.values = Matrix(end - begin, channels());
  std::copy(values.values.begin() + static_cast<std::ptrdiff_t>(begin * channels()),
            values.values.begin() + static_cast<std::ptrdiff_t>(end * channels()),
            out.values.values.begin());
  return out;
}

std::size_t SeriesFrame::channel_index(std::string_view key) const {
  for (std::size_t c = 0; c < channel_names.size(); ++c)
    if (channel_names[c] == key) return c;
  std::size_t idx = 0;
  const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
  if (ec == std::errc{} && ptr == key.data() + key.size() && idx < channels()) return idx;
  throw DataError("no channel named '" + std::string(key) + "'");
}

SeriesFrame parse_csv(std::istream& in, std::string_view source) {
  std::string line;
  std::size_t row = 0;
  SeriesFrame frame;
  bool has_date = false;
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    if (row == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
      line.erase(0, 3);
    const auto header = split_fields(line);
    has_date = !header.empty() && header.front() == "date";
    for (std::size_t i = has_date ? 1 : 0; i < header.size(); ++i) {
      if (header[i].empty())
        throw DataError(std::string(source) + ": header column " + std::to_string(i + 1) +
                        " is empty");
      names.emplace_back(header[i]);
    }
    break;
  }
  if (names.empty()) throw DataError(std::string(source) + ": missing header or value columns");

  const std::size_t expected = names.size() + (has_date ? 1 : 0);
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != expected)
      throw DataError(std::string(source) + ": row " + std::to_string(row) + " has " +
                      std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(expected));
    std::size_t first = 0;
    if (has_date) {
      if (!frame.timestamps.empty() && !(frame.timestamps.back() < fields[0]))
        throw DataError(location(source, row, "date") + ": timestamp '" + std::string(fields[0]) +
                        "' is not after the previous one");
      frame.timestamps.emplace_back(fields[0]);
      first = 1;
    }
    for (std::size_t i = first; i < fields.size(); ++i) {
      std::string_view cell = fields[i];
      const std::string_view column = names[i - first];
      if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty())
        throw DataError(location(source, row, column) + ": cannot parse '" +
                        std::string(fields[i]) + "' as a real number");
      if (!std::isfinite(v))
        throw DataError(location(source, row, column) + ": non-finite value '" +
                        std::string(fields[i]) + "'");
      values.push_back(v);
    }
  }
  if (values.empty()) throw DataError(std::string(source) + ": no data rows");

  frame.channel_names = std::move(names);
  frame.values.cols = frame.channel_names.size();
  frame.values.rows = values.size() / frame.values.cols;
  frame.values.values = std::move(values);
  return frame;
}

SeriesFrame load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return parse_csv(in, path.string());
}

std::array<SeriesFrame, 3> chronological_split(const SeriesFrame& frame, SplitRatios r) {
  if (!(r.train > 0.0 && r.val > 0.0 && r.test > 0.0) ||
      std::abs(r.train + r.val + r.test - 1.0) > 1e-9)
    throw ValidationError("split ratios must be positive and sum to 1");
  const double T = static_cast<double>(frame.length());
  // The tiny offset keeps products such as 10 * 0.7 from flooring to 6.
  const auto n_train = static_cast<std::size_t>(std::floor(T * r.train + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(T * r.val + 1e-9));
  if (n_train + n_val > frame.length()) throw ValidationError("split ratios overflow the frame");
  return {frame.slice(0, n_train), frame.slice(n_train, n_train + n_val),
          frame.slice(n_train + n_val, frame.length())};
}

std::array<SeriesFrame, 3> split_by_sizes(const SeriesFrame& frame,
                                          std::array<std::size_t, 3> sizes) {
  const std::size_t total = sizes[0] + sizes[1] + sizes[2];
  if (total > frame.length())
    throw DataError("split borders need " + std::to_string(total) + " rows, frame has " +
                    std::to_string(frame.length()));
  return {frame.slice(0, sizes[0]), frame.slice(sizes[0], sizes[0] + sizes[1]),
          frame.slice(sizes[0] + sizes[1], total)};
}

std::array<std::size_t, 3> preset_split_sizes(std::string_view preset) {
  constexpr std::size_t month_hours = 30 * 24;
  if (preset == "ett_hourly") return {12 * month_hours, 4 * month_hours, 4 * month_hours};
  if (preset == "ett_minute")
    return {12 * month_hours * 4, 4 * month_hours * 4, 4 * month_hours * 4};
  throw ValidationError("unknown split preset '" + std::string(preset) +
                        "' (expected ett_hourly or ett_minute)");
}

ChannelStats standardize_fit(const SeriesFrame& train) {
  const std::size_t C = train.channels();
  const std::size_t T = train.length();
  if (T == 0) throw DataError("cannot fit standardization on an empty frame");
  ChannelStats s{std::vector<double>(C, 0.0), std::vector<double>(C, 0.0)};
  for (std::size_t c = 0; c < C; ++c) {
    double sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) sum += train.values(t, c);
    const double mean = sum / static_cast<double>(T);
    double ss = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double d = train.values(t, c) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(T));
    s.mean[c] = mean;
    s.std[c] = sd > 1e-8 ? sd : 1e-8;
  }
  return s;
}

SeriesFrame standardize_apply(const SeriesFrame& frame, const ChannelStats& stats) {
  if (stats.mean.size() != frame.channels() || stats.std.size() != frame.channels())
    throw ValidationError("standardization stats have " + std::to_string(stats.mean.size()) +
                          " channels, frame has " + std::to_string(frame.channels()));
  SeriesFrame out = frame;
  for (std::size_t t = 0; t < frame.length(); ++t)
    for (std::size_t c = 0; c < frame.channels(); ++c)
      out.values(t, c) = (frame.values(t, c) - stats.mean[c]) / stats.std[c];
  return out;
}

ChannelStats invert(const ChannelStats& stats) {
  ChannelStats inv{stats.mean, stats.std};
  for (std::size_t c = 0; c < stats.mean.size(); ++c) {
    inv.mean[c] = -stats.mean[c] / stats.std[c];
    inv.std[c] = 1.0 / stats.std[c];
  }
  return inv;
}

std::vector<WindowPair> windows(const SeriesFrame& frame, std::size_t lookback,
                                std::size_t horizon, std::size_t stride) {
  if (stride == 0) throw ValidationError("window stride must be >= 1");
  const std::size_t T = frame.length();
  if (T < lookback + horizon)
    throw DataError("frame of length " + std::to_string(T) + " is too short for lookback " +
                    std::to_string(lookback) + " + horizon " + std::to_string(horizon));
  const std::size_t C = frame.channels();
  const std::size_t count = (T - lookback - horizon) / stride + 1;
  std::vector<WindowPair> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t t = i * stride;
    WindowPair w{Matrix(lookback, C), Matrix(horizon, C), t};
    const auto src = frame.values.values.begin();
    std::copy(src + static_cast<std::ptrdiff_t>(t * C),
              src + static_cast<std::ptrdiff_t>((t + lookback) * C), w.x.values.begin());
    std::copy(src + static_cast<std::ptrdiff_t>((t + lookback) * C),
              src + static_cast<std::ptrdiff_t>((t + lookback + horizon) * C), w.y.values.begin());
    out.push_back(std::move(w));
  }
  return out;
}

SeriesFrame synthetic_sinusoid_trend(const SyntheticSpec& spec) {
  SeriesFrame frame;
  frame.values = Matrix(spec.length, spec.channels);
  std::mt19937_64 gen(spec.seed);
  for (std::size_t c = 0; c < spec.channels; ++c) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    const double phase = 2.0 * std::numbers::pi * u;
    const double period = spec.period * (1.0 + 0.5 * static_cast<double>(c));
    const double amplitude = spec.amplitude * (1.0 + 0.25 * static_cast<double>(c));
    const double slope = spec.slope * ((c % 2 == 0) ? 1.0 : -1.0);
    frame.channel_names.push_back("s" + std::to_string(c));
    for (std::size_t t = 0; t < spec.length; ++t) {
      const double td = static_cast<double>(t);
      frame.values(t, c) =
          amplitude * std::sin(2.0 * std::numbers::pi * td / period + phase) + slope * td;
    }
  }
  return frame;
}

}  // namespace wavets
