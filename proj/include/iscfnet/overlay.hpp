#pragma once

#include <optional>

#include "iscfnet/image_io.hpp"

namespace iscfnet {

// Positive pixels of a (1, H, W) binary mask with at least one non-positive
// 4-neighbour. Pixels outside the image count as non-positive.
Tensor<float> contour(const Tensor<float>& mask);

// Source image with the ground-truth contour in pure green (0,255,0) and the
// prediction contour in pure blue (0,0,255). Blue wins where both overlap.
RgbImage render_overlay(const Tensor<float>& image, const Tensor<float>& prediction,
                        const std::optional<Tensor<float>>& truth);

}  // namespace iscfnet
