#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "iscfnet/tensor.hpp"

namespace iscfnet {

// 8-bit RGB raster, interleaved (row, col, channel).
struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t* at(std::size_t y, std::size_t x) { return &pixels[(y * width + x) * 3]; }
  const std::uint8_t* at(std::size_t y, std::size_t x) const {
    return &pixels[(y * width + x) * 3];
  }
};

// Decodes any OpenCV-readable file to (3, H, W) floats in [0, 1], RGB order.
Tensor<float> read_image(const std::filesystem::path& path);

// Decodes a mask to (1, H, W) with value 1 where the 8-bit gray level > 127.
Tensor<float> read_mask(const std::filesystem::path& path);

// Writes (3, H, W) floats in [0, 1] as an 8-bit RGB PNG (rounded, clamped).
void write_image_png(const std::filesystem::path& path, const Tensor<float>& image);

// Writes a (1, H, W) binary mask as a {0, 255} gray PNG.
void write_mask_png(const std::filesystem::path& path, const Tensor<float>& mask);

void write_rgb_png(const std::filesystem::path& path, const RgbImage& image);

RgbImage to_rgb8(const Tensor<float>& image);

}  // namespace iscfnet
