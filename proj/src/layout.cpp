#include "iscfnet/layout.hpp"

#include "iscfnet/error.hpp"

namespace iscfnet::layout {

Index patchify(std::size_t channels, std::size_t height, std::size_t width, std::size_t patch) {
  if (patch == 0 || height % patch != 0 || width % patch != 0) {
    throw ArgumentError("patchify: image dims must be divisible by the patch size");
  }
  const std::size_t gh = height / patch, gw = width / patch;
  const std::size_t feat = channels * patch * patch;
  auto idx = std::make_shared<std::vector<std::size_t>>(gh * gw * feat);
  std::size_t o = 0;
  for (std::size_t ty = 0; ty < gh; ++ty)
    for (std::size_t tx = 0; tx < gw; ++tx)
      for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t i = 0; i < patch; ++i)
          for (std::size_t j = 0; j < patch; ++j)
            (*idx)[o++] = (c * height + ty * patch + i) * width + tx * patch + j;
  return idx;
}

Index merge_2x2(std::size_t height, std::size_t width, std::size_t channels) {
  if (height % 2 != 0 || width % 2 != 0) {
    throw ArgumentError("patch_merge: spatial dims must be even, got " + std::to_string(height) +
                        "x" + std::to_string(width));
  }
  static constexpr std::size_t kOffsets[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  const std::size_t oh = height / 2, ow = width / 2;
  auto idx = std::make_shared<std::vector<std::size_t>>(oh * ow * 4 * channels);
  std::size_t o = 0;
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x)
      for (const auto& off : kOffsets) {
        const std::size_t src = (2 * y + off[0]) * width + 2 * x + off[1];
        for (std::size_t c = 0; c < channels; ++c) (*idx)[o++] = src * channels + c;
      }
  return idx;
}

Index expand(std::size_t height, std::size_t width, std::size_t channels, std::size_t factor) {
  const std::size_t oh = height * factor, ow = width * factor;
  const std::size_t in_width = factor * factor * channels;
  auto idx = std::make_shared<std::vector<std::size_t>>(oh * ow * channels);
  std::size_t o = 0;
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      const std::size_t token = (y / factor) * width + x / factor;
      const std::size_t group = (y % factor) * factor + x % factor;
      for (std::size_t c = 0; c < channels; ++c)
        (*idx)[o++] = token * in_width + group * channels + c;
    }
  return idx;
}

}  // namespace iscfnet::layout
