#include <fstream>
#include <set>

#include "wavets/cli.hpp"
#include "wavets/error.hpp"
#include "wavets/serialize.hpp"

namespace wavets::cli {
namespace {

using nlohmann::json;

// Reads typed fields out of one config section, recording every problem
// instead of stopping at the first.
class SectionReader {
 public:
  SectionReader(const json& doc, const std::string& key, std::string label,
                std::vector<std::string>& problems)
      : name_(std::move(label)), problems_(problems) {
    if (!doc.contains(key)) return;
    section_ = doc.at(key);
    if (!section_.is_object()) {
      problem("", "must be an object");
      section_ = json::object();
    }
  }

  bool has(const std::string& key) const { return section_.contains(key); }
  const json& raw(const std::string& key) {
    seen_.insert(key);
    return section_.at(key);
  }

  void read(const std::string& key, std::size_t& target) {
    if (!take(key)) return;
    const json& v = section_.at(key);
    if (v.is_number_unsigned())
      target = v.get<std::size_t>();
    else
      problem(key, "must be a non-negative integer");
  }
  void read(const std::string& key, double& target) {
    if (!take(key)) return;
    const json& v = section_.at(key);
    if (v.is_number())
      target = v.get<double>();
    else
      problem(key, "must be a number");
  }
  void read(const std::string& key, bool& target) {
    if (!take(key)) return;
    const json& v = section_.at(key);
    if (v.is_boolean())
      target = v.get<bool>();
    else
      problem(key, "must be true or false");
  }
  void read(const std::string& key, std::string& target) {
    if (!take(key)) return;
    const json& v = section_.at(key);
    if (v.is_string())
      target = v.get<std::string>();
    else
      problem(key, "must be a string");
  }

  void problem(const std::string& key, const std::string& what) {
    problems_.push_back(key.empty() ? name_ + " " + what : name_ + "." + key + " " + what);
  }

  void finish() {
    for (const auto& [key, _] : section_.items())
      if (!seen_.count(key)) problems_.push_back("unknown key " + name_ + "." + key);
  }

 private:
  bool take(const std::string& key) {
    seen_.insert(key);
    return section_.contains(key) && !section_.at(key).is_null();
  }

  std::string name_;
  json section_ = json::object();
  std::set<std::string> seen_;
  std::vector<std::string>& problems_;
};

std::string metric_mode_name(MetricMode m) { return m == MetricMode::Short ? "short" : "long"; }

void parse_model(const json& doc, ModelConfig& m, std::vector<std::string>& problems) {
  SectionReader r(doc, "model", "model", problems);
  r.read("lookback", m.lookback);
  r.read("horizon", m.horizon);
  r.read("channels", m.channels);
  r.read("branches", m.branches);
  r.read("levels", m.levels);
  std::string transform(to_string(m.transform));
  r.read("transform", transform);
  try {
    m.transform = parse_transform_kind(transform);
  } catch (const Error& e) {
    r.problem("transform", std::string("is invalid: ") + e.what());
  }
  if (r.has("branch_orders")) {
    const json& v = r.raw("branch_orders");
    m.branch_orders.clear();
    if (!v.is_array()) {
      r.problem("branch_orders", "must be an array of non-negative integers");
    } else {
      for (const auto& o : v) {
        if (!o.is_number_unsigned()) {
          r.problem("branch_orders", "must be an array of non-negative integers");
          break;
        }
        m.branch_orders.push_back(o.get<unsigned>());
      }
    }
  }
  r.read("wavelet", m.wavelet);
  r.read("std_epsilon", m.std_epsilon);
  r.read("seed", m.seed);
  r.finish();
  for (const auto& p : m.problems()) problems.push_back("model: " + p);
}

void parse_train(const json& doc, TrainConfig& t, std::vector<std::string>& problems) {
  SectionReader r(doc, "train", "train", problems);
  r.read("learning_rate", t.learning_rate);
  r.read("batch_size", t.batch_size);
  r.read("max_epochs", t.max_epochs);
  r.read("patience", t.patience);
  r.read("adam_beta1", t.adam_beta1);
  r.read("adam_beta2", t.adam_beta2);
  r.read("adam_epsilon", t.adam_epsilon);
  if (r.has("grad_clip")) {
    const json& v = r.raw("grad_clip");
    if (v.is_number())
      t.grad_clip = v.get<double>();
    else if (!v.is_null())
      r.problem("grad_clip", "must be a number or null");
  }
  r.read("seed", t.seed);
  r.finish();
  for (const auto& p : t.problems()) problems.push_back("train: " + p);
}

void parse_data(const json& doc, DataConfig& d, std::size_t model_channels,
                std::vector<std::string>& problems) {
  SectionReader r(doc, "data", "data", problems);
  std::string csv;
  r.read("csv", csv);
  if (!csv.empty()) d.csv = csv;
  if (r.has("synthetic") && !r.raw("synthetic").is_null()) {
    SyntheticSpec s;
    SectionReader sr(doc.at("data"), "synthetic", "data.synthetic", problems);
    sr.read("length", s.length);
    sr.read("channels", s.channels);
    sr.read("period", s.period);
    sr.read("amplitude", s.amplitude);
    sr.read("slope", s.slope);
    sr.read("seed", s.seed);
    sr.finish();
    if (s.length < 1) problems.push_back("data.synthetic.length must be >= 1");
    if (s.channels < 1) problems.push_back("data.synthetic.channels must be >= 1");
    if (!(s.period > 0.0)) problems.push_back("data.synthetic.period must be > 0");
    if (s.channels != model_channels)
      problems.push_back("data.synthetic.channels=" + std::to_string(s.channels) +
                         " does not match model.channels=" + std::to_string(model_channels));
    d.synthetic = s;
  }
  if (d.csv && d.synthetic) problems.push_back("data: set either csv or synthetic, not both");
  if (!d.csv && !d.synthetic) problems.push_back("data: one of csv or synthetic is required");

  if (r.has("columns")) {
    const json& v = r.raw("columns");
    if (!v.is_array()) {
      r.problem("columns", "must be an array of column names");
    } else {
      for (const auto& c : v) {
        if (c.is_string())
          d.columns.push_back(c.get<std::string>());
        else if (c.is_number_unsigned())
          d.columns.push_back(std::to_string(c.get<std::size_t>()));
        else
          r.problem("columns", "entries must be names or indices");
      }
      if (!d.columns.empty() && d.columns.size() != model_channels)
        problems.push_back("data.columns selects " + std::to_string(d.columns.size()) +
                           " channels, model.channels=" + std::to_string(model_channels));
    }
  }
  if (r.has("split") && !r.raw("split").is_null()) {
    SectionReader sr(doc.at("data"), "split", "data.split", problems);
    sr.read("train", d.ratios.train);
    sr.read("val", d.ratios.val);
    sr.read("test", d.ratios.test);
    sr.finish();
    const double sum = d.ratios.train + d.ratios.val + d.ratios.test;
    if (!(d.ratios.train > 0.0 && d.ratios.val > 0.0 && d.ratios.test > 0.0))
      problems.push_back("data.split ratios must all be > 0");
    else if (std::abs(sum - 1.0) > 1e-9)
      problems.push_back("data.split ratios must sum to 1");
  }
  std::string preset;
  r.read("preset", preset);
  if (!preset.empty()) {
    try {
      preset_split_sizes(preset);
      d.preset = preset;
    } catch (const Error& e) {
      r.problem("preset", std::string("is invalid: ") + e.what());
    }
  }
  r.read("standardize", d.standardize);
  r.read("stride", d.stride);
  if (d.stride < 1) problems.push_back("data.stride must be >= 1");
  r.finish();
}

void parse_metrics(const json& doc, MetricsConfig& m, std::size_t horizon,
                   std::vector<std::string>& problems) {
  SectionReader r(doc, "metrics", "metrics", problems);
  std::string mode = metric_mode_name(m.mode);
  r.read("mode", mode);
  if (mode == "long")
    m.mode = MetricMode::Long;
  else if (mode == "short")
    m.mode = MetricMode::Short;
  else
    r.problem("mode", "must be 'long' or 'short'");
  r.read("period", m.period);
  if (m.period < 1) problems.push_back("metrics.period must be >= 1");
  if (m.mode == MetricMode::Short && m.period >= horizon)
    problems.push_back("metrics.period m=" + std::to_string(m.period) +
                       " must be smaller than the horizon " + std::to_string(horizon));
  r.finish();
}

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(text);
  }
}

}  // namespace

json RunConfig::to_json() const {
  json data = json::object();
  data["csv"] = this->data.csv ? json(this->data.csv->string()) : json(nullptr);
  if (this->data.synthetic) {
    const auto& s = *this->data.synthetic;
    data["synthetic"] = json{{"length", s.length},       {"channels", s.channels},
                             {"period", s.period},       {"amplitude", s.amplitude},
                             {"slope", s.slope},         {"seed", s.seed}};
  } else {
    data["synthetic"] = nullptr;
  }
  data["columns"] = this->data.columns;
  data["split"] = json{{"train", this->data.ratios.train},
                       {"val", this->data.ratios.val},
                       {"test", this->data.ratios.test}};
  data["preset"] = this->data.preset ? json(*this->data.preset) : json(nullptr);
  data["standardize"] = this->data.standardize;
  data["stride"] = this->data.stride;
  json m = wavets::to_json(model);
  m["branch_orders"] = model.branch_orders;
  return json{{"model", std::move(m)},
              {"train", wavets::to_json(train)},
              {"data", std::move(data)},
              {"metrics", json{{"mode", metric_mode_name(metrics.mode)}, {"period", metrics.period}}}};
}

RunConfig parse_run_config(const json& doc) {
  std::vector<std::string> problems;
  RunConfig cfg;
  if (!doc.is_object()) throw ValidationError("config document must be a JSON object");
  for (const auto& [key, _] : doc.items())
    if (key != "model" && key != "train" && key != "data" && key != "metrics")
      problems.push_back("unknown section '" + key + "'");
  parse_model(doc, cfg.model, problems);
  parse_train(doc, cfg.train, problems);
  parse_data(doc, cfg.data, cfg.model.channels, problems);
  parse_metrics(doc, cfg.metrics, cfg.model.horizon, problems);
  if (!problems.empty()) {
    std::string msg = "invalid config (" + std::to_string(problems.size()) + " problem" +
                      (problems.size() == 1 ? "" : "s") + "):";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ValidationError(msg);
  }
  return cfg;
}

void apply_overrides(json& doc, const std::vector<std::string>& overrides,
                     std::optional<std::uint64_t> seed) {
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ValidationError("override '" + item + "' is not of the form key.path=value");
    json::json_pointer ptr;
    const std::string key = item.substr(0, eq);
    for (std::size_t start = 0;;) {
      const auto dot = key.find('.', start);
      ptr /= key.substr(start, dot - start);
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    try {
      doc[ptr] = parse_override_value(item.substr(eq + 1));
    } catch (const json::exception& e) {
      throw ValidationError("override '" + item + "' cannot be applied: " + e.what());
    }
  }
  if (seed) {
    doc["model"]["seed"] = *seed;
    doc["train"]["seed"] = *seed;
    if (doc.contains("data") && doc["data"].contains("synthetic") &&
        doc["data"]["synthetic"].is_object())
      doc["data"]["synthetic"]["seed"] = *seed;
  }
}

json load_config_document(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides,
                          std::optional<std::uint64_t> seed) {
  json doc = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path.string() + "'");
    try {
      doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
      throw ValidationError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw ValidationError("config document must be a JSON object");
  }
  apply_overrides(doc, overrides, seed);
  return doc;
}

PreparedData prepare_data(const RunConfig& config) {
  SeriesFrame frame;
  if (config.data.synthetic) {
    frame = synthetic_sinusoid_trend(*config.data.synthetic);
  } else {
    frame = load_csv(*config.data.csv);
    if (!config.data.columns.empty()) {
      std::vector<std::size_t> idx;
      for (const auto& key : config.data.columns) idx.push_back(frame.channel_index(key));
      SeriesFrame picked;
      picked.timestamps = frame.timestamps;
      picked.values = Matrix(frame.length(), idx.size());
      for (std::size_t c = 0; c < idx.size(); ++c) {
        picked.channel_names.push_back(frame.channel_names[idx[c]]);
        for (std::size_t t = 0; t < frame.length(); ++t)
          picked.values(t, c) = frame.values(t, idx[c]);
      }
      frame = std::move(picked);
    }
  }
  if (frame.channels() != config.model.channels)
    throw ValidationError("data has " + std::to_string(frame.channels()) +
                          " channels, model.channels=" + std::to_string(config.model.channels));

  PreparedData out;
  out.splits = config.data.preset
                   ? split_by_sizes(frame, preset_split_sizes(*config.data.preset))
                   : chronological_split(frame, config.data.ratios);
  if (config.data.standardize) {
    out.stats = standardize_fit(out.splits[0]);
    for (auto& s : out.splits) s = standardize_apply(s, out.stats);
  } else {
    out.stats = {std::vector<double>(frame.channels(), 0.0),
                 std::vector<double>(frame.channels(), 1.0)};
  }
  return out;
}

}  // namespace wavets::cli
