#include "iscfnet/overlay.hpp"

namespace iscfnet {

Tensor<float> contour(const Tensor<float>& mask) {
  if (mask.rank() != 3 || mask.dim(0) != 1) {
    throw ArgumentError("contour: expected (1,H,W), got " + shape_str(mask.shape()));
  }
  const std::size_t h = mask.dim(1), w = mask.dim(2);
  auto on = [&](std::ptrdiff_t y, std::ptrdiff_t x) {
    if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(h) ||
        x >= static_cast<std::ptrdiff_t>(w))
      return false;
    return mask[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] > 0.5f;
  };
  Tensor<float> out(mask.shape());
  for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(h); ++y)
    for (std::ptrdiff_t x = 0; x < static_cast<std::ptrdiff_t>(w); ++x) {
      if (!on(y, x)) continue;
      if (!on(y - 1, x) || !on(y + 1, x) || !on(y, x - 1) || !on(y, x + 1)) {
        out[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] = 1.0f;
      }
    }
  return out;
}

RgbImage render_overlay(const Tensor<float>& image, const Tensor<float>& prediction,
                        const std::optional<Tensor<float>>& truth) {
  RgbImage out = to_rgb8(image);
  auto paint = [&](const Tensor<float>& mask, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (mask.dim(1) != out.height || mask.dim(2) != out.width) {
      throw ArgumentError("render_overlay: mask size does not match image");
    }
    const Tensor<float> edge = contour(mask);
    for (std::size_t y = 0; y < out.height; ++y)
      for (std::size_t x = 0; x < out.width; ++x) {
        if (edge[y * out.width + x] > 0.5f) {
          auto* px = out.at(y, x);
          px[0] = r;
          px[1] = g;
          px[2] = b;
        }
      }
  };
  if (truth) paint(*truth, 0, 255, 0);
  paint(prediction, 0, 0, 255);
  return out;
}

}  // namespace iscfnet
