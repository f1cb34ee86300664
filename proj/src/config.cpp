#include "iscfnet/config.hpp"

#include <fstream>
#include <set>

#include "iscfnet/error.hpp"

namespace iscfnet {

namespace {

const std::set<std::string>& model_keys() {
  static const std::set<std::string> keys{
      "image_size", "patch_size", "stage_channels", "depths", "heads",      "mlp_ratio",
      "iscf_enabled", "iscf_hidden", "seed",         "lr",     "batch_size", "epochs"};
  return keys;
}

const std::set<std::string>& run_keys() {
  static const std::set<std::string> keys{"data_dir",    "out_dir",    "split_seed",
                                          "split_train", "split_val",  "split_test",
                                          "threshold"};
  return keys;
}

template <class V>
void read(const nlohmann::json& j, const char* key, V& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<V>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void read_size(const nlohmann::json& j, const char* key, std::size_t& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_number_unsigned()) {
    throw ConfigError(std::string("config key '") + key + "' must be a non-negative integer");
  }
  out = it->get<std::size_t>();
}

void read_u64(const nlohmann::json& j, const char* key, std::uint64_t& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_number_unsigned()) {
    throw ConfigError(std::string("config key '") + key + "' must be a non-negative integer");
  }
  out = it->get<std::uint64_t>();
}

void read_triple(const nlohmann::json& j, const char* key,
                 std::array<std::size_t, kStages>& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_array() || it->size() != kStages) {
    throw ConfigError(std::string("config key '") + key + "' must be an array of 3 integers");
  }
  for (std::size_t i = 0; i < kStages; ++i) {
    if (!(*it)[i].is_number_unsigned()) {
      throw ConfigError(std::string("config key '") + key + "' must hold non-negative integers");
    }
    out[i] = (*it)[i].get<std::size_t>();
  }
}

void reject_unknown(const nlohmann::json& j, bool allow_run_keys) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (model_keys().contains(key)) continue;
    if (allow_run_keys && run_keys().contains(key)) continue;
    throw ConfigError("unknown config key '" + key + "'");
  }
}

ModelConfig parse_model(const nlohmann::json& j) {
  ModelConfig c;
  read_size(j, "image_size", c.image_size);
  read_size(j, "patch_size", c.patch_size);
  read_triple(j, "stage_channels", c.stage_channels);
  read_triple(j, "depths", c.depths);
  read_triple(j, "heads", c.heads);
  read_size(j, "mlp_ratio", c.mlp_ratio);
  read(j, "iscf_enabled", c.iscf_enabled);
  read_size(j, "iscf_hidden", c.iscf_hidden);
  read_u64(j, "seed", c.seed);
  read(j, "lr", c.lr);
  read_size(j, "batch_size", c.batch_size);
  read_size(j, "epochs", c.epochs);
  c.validate();
  return c;
}

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (patch_size == 0) fail("patch_size must be positive");
  if (image_size == 0 || image_size % (patch_size * 4) != 0) {
    fail("image_size (" + std::to_string(image_size) + ") must be divisible by 4*patch_size (" +
         std::to_string(patch_size * 4) + ")");
  }
  if (stage_channels[0] == 0) fail("stage_channels must be positive");
  if (stage_channels[1] != 2 * stage_channels[0] || stage_channels[2] != 2 * stage_channels[1]) {
    fail("stage_channels must double from stage to stage");
  }
  for (std::size_t s = 0; s < kStages; ++s) {
    if (depths[s] == 0) fail("depths must be at least 1");
    if (heads[s] == 0 || stage_channels[s] % heads[s] != 0) {
      fail("heads[" + std::to_string(s) + "] must divide stage_channels[" + std::to_string(s) +
           "]");
    }
  }
  if (mlp_ratio == 0) fail("mlp_ratio must be positive");
  if (iscf_hidden == 0) fail("iscf_hidden must be positive");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (batch_size == 0) fail("batch_size must be positive");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"image_size", c.image_size},
          {"patch_size", c.patch_size},
          {"stage_channels", c.stage_channels},
          {"depths", c.depths},
          {"heads", c.heads},
          {"mlp_ratio", c.mlp_ratio},
          {"iscf_enabled", c.iscf_enabled},
          {"iscf_hidden", c.iscf_hidden},
          {"seed", c.seed},
          {"lr", c.lr},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs}};
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j = to_json(c.model);
  j["data_dir"] = c.data_dir;
  j["out_dir"] = c.out_dir;
  j["split_seed"] = c.split_seed;
  j["split_train"] = c.split_train;
  j["split_val"] = c.split_val;
  j["split_test"] = c.split_test;
  j["threshold"] = c.threshold;
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  reject_unknown(j, false);
  return parse_model(j);
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  reject_unknown(j, true);
  RunConfig r;
  r.model = parse_model(j);
  read(j, "data_dir", r.data_dir);
  read(j, "out_dir", r.out_dir);
  read_u64(j, "split_seed", r.split_seed);
  read_size(j, "split_train", r.split_train);
  read_size(j, "split_val", r.split_val);
  read_size(j, "split_test", r.split_test);
  read(j, "threshold", r.threshold);
  if (!(r.threshold > 0.0 && r.threshold < 1.0)) throw ConfigError("threshold must be in (0,1)");
  return r;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace iscfnet
