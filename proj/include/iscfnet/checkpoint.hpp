#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "iscfnet/config.hpp"
#include "iscfnet/model.hpp"

namespace iscfnet {

struct NamedTensor {
  std::string name;
  Tensor<float> value;
};

struct Checkpoint {
  RunConfig run;  // model config, data location, split seed
  std::uint64_t epoch = 0;
  double best_val_dsc = 0.0;
  std::vector<NamedTensor> tensors;  // model registration order
};

// File layout (all integers little-endian):
//   8 bytes   magic "ISCFCKPT"
//   u32       format version (1)
//   u64       manifest length in bytes
//   manifest  UTF-8 JSON: {"config", "split_seed", "epoch", "best_val_dsc",
//             "tensors": [{"name", "dtype": "float32", "shape", "offset",
//             "nbytes"}]}; offsets are relative to the data section
//   data      concatenated little-endian IEEE-754 float32 payloads
inline constexpr char kCheckpointMagic[8] = {'I', 'S', 'C', 'F', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint snapshot(const Model<float>& model, const RunConfig& run, std::uint64_t epoch,
                    double best_val_dsc);

// Builds a model from the checkpoint's config and loads every tensor.
// Missing or unexpected tensors raise ConfigError.
Model<float> model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace iscfnet
