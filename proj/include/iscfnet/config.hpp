#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace iscfnet {

inline constexpr std::size_t kStages = 3;

// Architecture and optimization hyperparameters.
struct ModelConfig {
  std::size_t image_size = 224;
  std::size_t patch_size = 4;
  std::array<std::size_t, kStages> stage_channels{64, 128, 256};
  std::array<std::size_t, kStages> depths{2, 2, 12};
  std::array<std::size_t, kStages> heads{2, 4, 8};
  std::size_t mlp_ratio = 4;
  bool iscf_enabled = true;
  std::size_t iscf_hidden = 8;
  std::uint64_t seed = 0;

  double lr = 1e-4;
  std::size_t batch_size = 24;
  std::size_t epochs = 100;

  // Throws ConfigError naming the first violated constraint.
  void validate() const;

  // Side length (in tokens) of stage s in {0, 1, 2}.
  std::size_t stage_side(std::size_t s) const {
    return image_size / patch_size >> s;
  }
  std::size_t stage_tokens(std::size_t s) const {
    return stage_side(s) * stage_side(s);
  }

  static ModelConfig paper() { return {}; }

  // Small configuration for CPU-scale training and tests.
  static ModelConfig desk() {
    ModelConfig c;
    c.image_size = 64;
    c.stage_channels = {16, 32, 64};
    c.depths = {1, 1, 1};
    c.heads = {2, 4, 8};
    c.batch_size = 8;
    c.lr = 2e-3;
    c.epochs = 200;
    return c;
  }
};

// Everything a `train` run needs: the model config plus data and output
// locations. Serialized as one flat JSON object.
struct RunConfig {
  ModelConfig model;
  std::string data_dir;
  std::string out_dir = "run";
  std::uint64_t split_seed = 0;
  // Split sizes; all zero selects the 1815/259/520 proportions scaled to the
  // dataset length.
  std::size_t split_train = 0;
  std::size_t split_val = 0;
  std::size_t split_test = 0;
  double threshold = 0.5;
};

nlohmann::json to_json(const ModelConfig& c);
nlohmann::json to_json(const RunConfig& c);

// Strict parsing: unknown keys and wrongly typed values raise ConfigError.
ModelConfig model_config_from_json(const nlohmann::json& j);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace iscfnet
