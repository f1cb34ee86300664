#pragma once

#include <array>
#include <string>
#include <vector>

#include "iscfnet/encoder.hpp"

namespace iscfnet {

template <class T>
struct DecoderParams {
  // levels[s] runs at encoder stage s geometry; depth mirrors the encoder.
  std::array<std::vector<BlockParams<T>>, kStages> levels;
  std::array<Affine<T>, kStages - 1> expand;     // [s]: C_{s+1} -> 2*C_{s+1}
  std::array<Affine<T>, kStages - 1> skip_fuse;  // [s]: 2*C_s -> C_s
  Affine<T> head_expand;                         // C1 -> p*p*C1
  Affine<T> head_out;                            // C1 -> 1

  static DecoderParams make(ParamBuilder<T>& pb, const ModelConfig& cfg) {
    auto s = pb.scope("decoder");
    const auto& c = cfg.stage_channels;
    DecoderParams p;
    for (std::size_t i = kStages; i-- > 0;) {
      const std::string tag = std::to_string(i + 1);
      if (i + 1 < kStages) {
        p.expand[i] = Affine<T>::make(s, "expand" + tag, c[i + 1], 2 * c[i + 1]);
        p.skip_fuse[i] = Affine<T>::make(s, "skip_fuse" + tag, 2 * c[i], c[i]);
      }
      auto ls = s.scope("level" + tag);
      for (std::size_t b = 0; b < cfg.depths[i]; ++b) {
        p.levels[i].push_back(BlockParams<T>::make(ls, "block" + std::to_string(b), c[i],
                                                   cfg.heads[i], cfg.mlp_ratio));
      }
    }
    const std::size_t pp = cfg.patch_size * cfg.patch_size;
    p.head_expand = Affine<T>::make(s, "head_expand", c[0], pp * c[0]);
    p.head_out = Affine<T>::make(s, "head_out", c[0], 1);
    return p;
  }

  static std::size_t count(const ModelConfig& cfg) {
    const auto& c = cfg.stage_channels;
    std::size_t n = 0;
    for (std::size_t i = 0; i < kStages; ++i) {
      n += cfg.depths[i] * BlockParams<T>::count(c[i], cfg.mlp_ratio);
      if (i + 1 < kStages) {
        n += c[i + 1] * 2 * c[i + 1] + 2 * c[i + 1];
        n += 2 * c[i] * c[i] + c[i];
      }
    }
    const std::size_t pp = cfg.patch_size * cfg.patch_size;
    n += c[0] * pp * c[0] + pp * c[0];
    n += c[0] + 1;
    return n;
  }
};

// (H*W) x C tokens -> (2H*2W) x C/2: affine C -> 2C, then each token's four
// channel groups become a 2x2 block of tokens.
template <class T>
Variable<T> patch_expand(const Variable<T>& tokens, std::size_t height, std::size_t width,
                         const Affine<T>& proj) {
  if (tokens.value().rank() != 2 || tokens.shape()[0] != height * width) {
    throw ArgumentError("patch_expand: tokens " + shape_str(tokens.shape()) +
                        " do not match grid " + std::to_string(height) + "x" +
                        std::to_string(width));
  }
  const std::size_t c = tokens.shape()[1];
  if (c % 2 != 0) throw ArgumentError("patch_expand: channel count must be even");
  auto wide = apply(proj, tokens);  // N x 2C
  const std::size_t half = c / 2;
  return ops::gather(wide, layout::expand(height, width, half, 2),
                     {4 * height * width, half});
}

// Concatenates decoder and skip channels and maps 2C back to C.
template <class T>
Variable<T> skip_fuse(const Variable<T>& dec, const Variable<T>& skip, const Affine<T>& proj) {
  if (dec.shape() != skip.shape()) {
    throw ArgumentError("skip_fuse: decoder " + shape_str(dec.shape()) + " and skip " +
                        shape_str(skip.shape()) + " differ");
  }
  return apply(proj, ops::concat(std::vector<Variable<T>>{dec, skip}, 1));
}

template <class T>
Variable<T> run_blocks(Variable<T> x, const std::vector<BlockParams<T>>& blocks) {
  for (const auto& b : blocks) x = transformer_block(x, b).y;
  return x;
}

// Per-pixel logits (1, H, W): p-fold expansion of stage-1 tokens followed by
// an affine map to one logit per pixel.
template <class T>
Variable<T> segmentation_head(const Variable<T>& tokens, const ModelConfig& cfg,
                              const DecoderParams<T>& p) {
  const std::size_t side = cfg.stage_side(0);
  const std::size_t c = cfg.stage_channels[0];
  auto wide = apply(p.head_expand, tokens);
  auto pixels = ops::gather(wide, layout::expand(side, side, c, cfg.patch_size),
                            {cfg.image_size * cfg.image_size, c});
  return ops::reshape(apply(p.head_out, pixels), {1, cfg.image_size, cfg.image_size});
}

// Expanding path from the (possibly refined) skip tensors to logits.
// skips[2] is the bottleneck input.
template <class T>
Variable<T> decode(const std::array<Variable<T>, kStages>& skips, const ModelConfig& cfg,
                   const DecoderParams<T>& p) {
  Variable<T> x = run_blocks(skips[2], p.levels[2]);
  for (std::size_t i = kStages - 1; i-- > 0;) {
    const std::size_t side = cfg.stage_side(i + 1);
    auto up = patch_expand(x, side, side, p.expand[i]);
    x = run_blocks(skip_fuse(up, skips[i], p.skip_fuse[i]), p.levels[i]);
  }
  return segmentation_head(x, cfg, p);
}

}  // namespace iscfnet
