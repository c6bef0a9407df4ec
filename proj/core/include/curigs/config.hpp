#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "curigs/scene_synth.hpp"
#include "curigs/training.hpp"

namespace curigs {

/// Full configuration as nested JSON objects (curriculum, loss, optimizer,
/// densify, init, depth_oracle, eval). Every field is written.
nlohmann::json to_json(const TrainConfig& c);

/// Missing keys keep their defaults; unknown keys and wrong types throw
/// InvalidConfig. The result is validated.
TrainConfig train_config_from_json(const nlohmann::json& j);
TrainConfig load_train_config(const std::filesystem::path& path);

nlohmann::json to_json(const SceneSpec& s);

}  // namespace curigs
