#pragma once

#include <cstddef>
#include <memory>
#include <vector>

namespace iscfnet::layout {

using Index = std::shared_ptr<const std::vector<std::size_t>>;

// Image (C, H, W) -> tokens (H/p * W/p, C*p*p); features ordered (c, i, j)
// within each patch, tokens in row-major patch order.
Index patchify(std::size_t channels, std::size_t height, std::size_t width, std::size_t patch);

// Tokens (H*W, C) -> (H/2 * W/2, 4C). Each output token concatenates the
// 2x2 neighborhood in the order (0,0), (1,0), (0,1), (1,1) as (row, col).
Index merge_2x2(std::size_t height, std::size_t width, std::size_t channels);

// Tokens (H*W, f*f*C) -> (fH * fW, C). Channel group (i*f + j) of token
// (h, w) becomes token (h*f + i, w*f + j).
Index expand(std::size_t height, std::size_t width, std::size_t channels, std::size_t factor);

}  // namespace iscfnet::layout
