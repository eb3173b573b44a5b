#pragma once

// Checkpoint and run-metadata documents. Both are UTF-8 JSON. Doubles are
// written in shortest round-trip form, so reading a checkpoint back yields
// bit-identical parameters.

#include <cstdint>
#include <filesystem>
#include <json.hpp>

#include "wavets/model.hpp"
#include "wavets/train.hpp"

namespace wavets {

inline constexpr int kCheckpointVersion = 1;

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Without wall times; see TrainHistory.
nlohmann::json to_json(const TrainHistory& history);

struct Checkpoint {
  ModelConfig model;
  ModelParams params;
  std::uint64_t seed = 0;
  nlohmann::json config;  // full run configuration; config["model"] mirrors `model`
};

// Top-level keys: version, config, seed, fru_ll, fru_lh, fru_real, fru_imag, projection.
nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Canonical text for a JSON document: two-space indent, trailing newline.
std::string dump(const nlohmann::json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace wavets
