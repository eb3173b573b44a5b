#include "wavets/serialize.hpp"

#include <fstream>
#include <sstream>

#include "wavets/error.hpp"

namespace wavets {
namespace {

using nlohmann::json;

json layer_to_json(const Linear& lin) {
  json rows = json::array();
  for (std::size_t i = 0; i < lin.in; ++i) {
    const auto r = lin.weight_row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return json{{"weight", std::move(rows)}, {"bias", lin.bias}};
}

Linear layer_from_json(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("weight") || !j.contains("bias"))
    throw DataError("checkpoint: " + what + " needs weight and bias");
  const auto& rows = j.at("weight");
  const auto bias = j.at("bias").get<std::vector<double>>();
  Linear lin(rows.size(), bias.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i].get<std::vector<double>>();
    if (r.size() != lin.out)
      throw DataError("checkpoint: " + what + " row " + std::to_string(i) + " has " +
                      std::to_string(r.size()) + " entries, expected " + std::to_string(lin.out));
    std::copy(r.begin(), r.end(), lin.weight_row(i).begin());
  }
  lin.bias = bias;
  return lin;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

json to_json(const ModelConfig& c) {
  json j{{"lookback", c.lookback},       {"horizon", c.horizon},
         {"channels", c.channels},       {"branches", c.branches},
         {"levels", c.levels},           {"transform", std::string(to_string(c.transform))},
         {"wavelet", c.wavelet},         {"std_epsilon", c.std_epsilon},
         {"seed", c.seed}};
  if (!c.branch_orders.empty()) j["branch_orders"] = c.branch_orders;
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  try {
    c.lookback = get_or(j, "lookback", c.lookback);
    c.horizon = get_or(j, "horizon", c.horizon);
    c.channels = get_or(j, "channels", c.channels);
    c.branches = get_or(j, "branches", c.branches);
    c.levels = get_or(j, "levels", c.levels);
    c.transform = parse_transform_kind(get_or<std::string>(j, "transform", "wdt"));
    c.branch_orders = get_or(j, "branch_orders", c.branch_orders);
    c.wavelet = get_or(j, "wavelet", c.wavelet);
    c.std_epsilon = get_or(j, "std_epsilon", c.std_epsilon);
    c.seed = get_or(j, "seed", c.seed);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model config: ") + e.what());
  }
  return c;
}

json to_json(const TrainConfig& c) {
  json j{{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
         {"max_epochs", c.max_epochs},       {"patience", c.patience},
         {"adam_beta1", c.adam_beta1},       {"adam_beta2", c.adam_beta2},
         {"adam_epsilon", c.adam_epsilon},   {"seed", c.seed}};
  j["grad_clip"] = c.grad_clip ? json(*c.grad_clip) : json(nullptr);
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  try {
    c.learning_rate = get_or(j, "learning_rate", c.learning_rate);
    c.batch_size = get_or(j, "batch_size", c.batch_size);
    c.max_epochs = get_or(j, "max_epochs", c.max_epochs);
    c.patience = get_or(j, "patience", c.patience);
    c.adam_beta1 = get_or(j, "adam_beta1", c.adam_beta1);
    c.adam_beta2 = get_or(j, "adam_beta2", c.adam_beta2);
    c.adam_epsilon = get_or(j, "adam_epsilon", c.adam_epsilon);
    c.seed = get_or(j, "seed", c.seed);
    if (j.contains("grad_clip") && !j.at("grad_clip").is_null())
      c.grad_clip = j.at("grad_clip").get<double>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("train config: ") + e.what());
  }
  return c;
}

json to_json(const TrainHistory& h) {
  return json{{"train_loss", h.train_loss},
              {"val_loss", h.val_loss},
              {"best_epoch", h.best_epoch},
              {"stop_reason", h.stop_reason}};
}

json checkpoint_to_json(const Checkpoint& ckpt) {
  json config = ckpt.config.is_object() ? ckpt.config : json::object();
  config["model"] = to_json(ckpt.model);
  json fru_ll = json::array(), fru_lh = json::array(), fru_real = json::array(),
       fru_imag = json::array();
  for (const auto& b : ckpt.params.branches) {
    if (ckpt.model.transform == TransformKind::Dft) {
      fru_real.push_back(layer_to_json(b.fru_real));
      fru_imag.push_back(layer_to_json(b.fru_imag));
      continue;
    }
    fru_ll.push_back(layer_to_json(b.fru_ll));
    json levels = json::array();
    for (const auto& lh : b.fru_lh) levels.push_back(layer_to_json(lh));
    fru_lh.push_back(std::move(levels));
  }
  return json{{"version", kCheckpointVersion},
              {"config", std::move(config)},
              {"seed", ckpt.seed},
              {"fru_ll", std::move(fru_ll)},
              {"fru_lh", std::move(fru_lh)},
              {"fru_real", std::move(fru_real)},
              {"fru_imag", std::move(fru_imag)},
              {"projection", layer_to_json(ckpt.params.projection)}};
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw DataError("checkpoint version " + std::to_string(version) + " is not supported");
    Checkpoint ckpt;
    ckpt.config = j.at("config");
    ckpt.model = model_config_from_json(ckpt.config.at("model"));
    ckpt.seed = j.at("seed").get<std::uint64_t>();
    ckpt.params.branches.resize(ckpt.model.branches);
    const bool dft = ckpt.model.transform == TransformKind::Dft;
    const auto& ll = j.at("fru_ll");
    const auto& lh = j.at("fru_lh");
    const auto& re = j.at("fru_real");
    const auto& im = j.at("fru_imag");
    const std::size_t expect = ckpt.model.branches;
    if ((dft ? re.size() : ll.size()) != expect || (dft ? im.size() : lh.size()) != expect)
      throw DataError("checkpoint branch count does not match config N=" +
                      std::to_string(expect));
    for (std::size_t n = 0; n < expect; ++n) {
      auto& b = ckpt.params.branches[n];
      const std::string base = "branch" + std::to_string(n + 1);
      if (dft) {
        b.fru_real = layer_from_json(re[n], base + ".fru_real");
        b.fru_imag = layer_from_json(im[n], base + ".fru_imag");
        continue;
      }
      b.fru_ll = layer_from_json(ll[n], base + ".fru_ll");
      for (std::size_t l = 0; l < lh[n].size(); ++l)
        b.fru_lh.push_back(layer_from_json(lh[n][l], base + ".fru_lh" + std::to_string(l + 1)));
    }
    ckpt.params.projection = layer_from_json(j.at("projection"), "projection");
    Forecaster(ckpt.model).check_params(ckpt.params);
    return ckpt;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_text(path, dump(checkpoint_to_json(ckpt)));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("checkpoint '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace wavets
