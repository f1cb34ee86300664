#include "iscfnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

namespace iscfnet {

namespace {

template <class U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
}

template <class U>
U get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(U) > in.size()) throw IoError("checkpoint truncated");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += sizeof(U);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json tensors = nlohmann::json::array();
  std::string payload;
  for (const auto& t : ckpt.tensors) {
    const std::size_t offset = payload.size();
    for (float v : t.value.data()) put_le(payload, std::bit_cast<std::uint32_t>(v));
    tensors.push_back({{"name", t.name},
                       {"dtype", "float32"},
                       {"shape", t.value.shape()},
                       {"offset", offset},
                       {"nbytes", payload.size() - offset}});
  }
  nlohmann::json manifest = {{"config", to_json(ckpt.run)},
                             {"split_seed", ckpt.run.split_seed},
                             {"epoch", ckpt.epoch},
                             {"best_val_dsc", ckpt.best_val_dsc},
                             {"tensors", tensors}};
  const std::string header = manifest.dump();

  std::string blob(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_le(blob, kCheckpointVersion);
  put_le(blob, static_cast<std::uint64_t>(header.size()));
  blob += header;
  blob += payload;

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (blob.size() < sizeof(kCheckpointMagic) ||
      std::memcmp(blob.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw IoError(path.string() + " is not a checkpoint (bad magic)");
  }
  std::size_t pos = sizeof(kCheckpointMagic);
  const auto version = get_le<std::uint32_t>(blob, pos);
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = get_le<std::uint64_t>(blob, pos);
  if (pos + header_len > blob.size()) throw IoError("checkpoint truncated");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(blob.substr(pos, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("corrupt checkpoint manifest: ") + e.what());
  }
  const std::size_t data_start = pos + header_len;

  Checkpoint ck;
  ck.run = run_config_from_json(manifest.at("config"));
  ck.run.split_seed = manifest.at("split_seed").get<std::uint64_t>();
  ck.epoch = manifest.at("epoch").get<std::uint64_t>();
  ck.best_val_dsc = manifest.at("best_val_dsc").get<double>();
  for (const auto& t : manifest.at("tensors")) {
    if (t.at("dtype") != "float32") throw IoError("unsupported tensor dtype");
    Shape shape = t.at("shape").get<Shape>();
    std::size_t p = data_start + t.at("offset").get<std::size_t>();
    const std::size_t n = shape_numel(shape);
    if (t.at("nbytes").get<std::size_t>() != 4 * n) throw IoError("tensor size mismatch");
    std::vector<float> values(n);
    for (auto& v : values) v = std::bit_cast<float>(get_le<std::uint32_t>(blob, p));
    ck.tensors.push_back({t.at("name").get<std::string>(), Tensor<float>(shape, std::move(values))});
  }
  return ck;
}

Checkpoint snapshot(const Model<float>& model, const RunConfig& run, std::uint64_t epoch,
                    double best_val_dsc) {
  Checkpoint ck;
  ck.run = run;
  ck.run.model = model.config();
  ck.epoch = epoch;
  ck.best_val_dsc = best_val_dsc;
  for (const auto& e : model.params().entries()) ck.tensors.push_back({e.name, e.var.value()});
  return ck;
}

Model<float> model_from_checkpoint(const Checkpoint& ckpt) {
  Model<float> model(ckpt.run.model);
  std::set<std::string> seen;
  for (const auto& t : ckpt.tensors) {
    if (!model.params().contains(t.name)) {
      throw ConfigError("checkpoint tensor '" + t.name + "' does not belong to the configured model");
    }
    auto v = model.params().get(t.name);
    if (v.shape() != t.value.shape()) {
      throw ConfigError("checkpoint tensor '" + t.name + "' has shape " +
                        shape_str(t.value.shape()) + ", model expects " + shape_str(v.shape()));
    }
    v.mutable_value() = t.value;
    seen.insert(t.name);
  }
  for (const auto& e : model.params().entries()) {
    if (!seen.contains(e.name)) throw ConfigError("checkpoint is missing tensor '" + e.name + "'");
  }
  return model;
}

}  // namespace iscfnet
