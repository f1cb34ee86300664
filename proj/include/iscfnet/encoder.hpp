#pragma once

#include <array>
#include <string>
#include <vector>

#include "iscfnet/attention.hpp"
#include "iscfnet/config.hpp"
#include "iscfnet/layout.hpp"

namespace iscfnet {

// Per-stage outputs of the encoder. Stage s has side_s x side_s tokens.
template <class T>
struct StageBundle {
  std::array<Variable<T>, kStages> features;   // F_s: N_s x C_s
  std::array<Variable<T>, kStages> attention;  // A_s: N_s x C_s, last block of the stage
  std::array<std::size_t, kStages> height{};
  std::array<std::size_t, kStages> width{};

  std::size_t tokens(std::size_t s) const { return height[s] * width[s]; }
};

template <class T>
struct EncoderParams {
  Affine<T> embed;  // 3*p*p -> C1
  NormParams<T> embed_norm;
  std::array<std::vector<BlockParams<T>>, kStages> stages;
  std::array<Affine<T>, kStages - 1> merges;  // 4C_s -> 2C_s

  static EncoderParams make(ParamBuilder<T>& pb, const ModelConfig& cfg) {
    auto s = pb.scope("encoder");
    EncoderParams p;
    const std::size_t patch_feat = 3 * cfg.patch_size * cfg.patch_size;
    p.embed = Affine<T>::make(s, "embed", patch_feat, cfg.stage_channels[0]);
    p.embed_norm = NormParams<T>::make(s, "embed_norm", cfg.stage_channels[0]);
    for (std::size_t st = 0; st < kStages; ++st) {
      auto ss = s.scope("stage" + std::to_string(st + 1));
      for (std::size_t b = 0; b < cfg.depths[st]; ++b) {
        p.stages[st].push_back(BlockParams<T>::make(ss, "block" + std::to_string(b),
                                                    cfg.stage_channels[st], cfg.heads[st],
                                                    cfg.mlp_ratio));
      }
      if (st + 1 < kStages) {
        const std::size_t c = cfg.stage_channels[st];
        p.merges[st] = Affine<T>::make(s, "merge" + std::to_string(st + 1), 4 * c, 2 * c);
      }
    }
    return p;
  }

  static std::size_t count(const ModelConfig& cfg) {
    const std::size_t p = cfg.patch_size;
    std::size_t n = (3 * p * p + 1) * cfg.stage_channels[0] + 2 * cfg.stage_channels[0];
    for (std::size_t st = 0; st < kStages; ++st) {
      n += cfg.depths[st] * BlockParams<T>::count(cfg.stage_channels[st], cfg.mlp_ratio);
      if (st + 1 < kStages) {
        const std::size_t c = cfg.stage_channels[st];
        n += 4 * c * 2 * c + 2 * c;
      }
    }
    return n;
  }
};

// Image (3, H, W) -> (H/p * W/p) tokens of width C1: non-overlapping patches,
// affine embedding, then layer norm.
template <class T>
Variable<T> patch_embed(const Variable<T>& image, const ModelConfig& cfg,
                        const EncoderParams<T>& p) {
  const Shape& s = image.shape();
  if (s.size() != 3 || s[0] != 3 || s[1] != cfg.image_size || s[2] != cfg.image_size) {
    throw ArgumentError("patch_embed: expected image (3x" + std::to_string(cfg.image_size) + "x" +
                        std::to_string(cfg.image_size) + "), got " + shape_str(s));
  }
  const std::size_t side = cfg.image_size / cfg.patch_size;
  const std::size_t feat = 3 * cfg.patch_size * cfg.patch_size;
  auto patches = ops::gather(image, layout::patchify(3, s[1], s[2], cfg.patch_size),
                             {side * side, feat});
  return apply(p.embed_norm, apply(p.embed, patches));
}

// Concatenates each 2x2 neighborhood's channels (4C) and maps them to 2C.
template <class T>
Variable<T> patch_merge(const Variable<T>& tokens, std::size_t height, std::size_t width,
                        const Affine<T>& proj) {
  if (tokens.value().rank() != 2 || tokens.shape()[0] != height * width) {
    throw ArgumentError("patch_merge: tokens " + shape_str(tokens.shape()) +
                        " do not match grid " + std::to_string(height) + "x" +
                        std::to_string(width));
  }
  const std::size_t c = tokens.shape()[1];
  auto idx = layout::merge_2x2(height, width, c);
  auto grouped = ops::gather(tokens, idx, {(height / 2) * (width / 2), 4 * c});
  return apply(proj, grouped);
}

template <class T>
StageBundle<T> encode(const Variable<T>& image, const ModelConfig& cfg,
                      const EncoderParams<T>& p) {
  StageBundle<T> out;
  Variable<T> x = patch_embed(image, cfg, p);
  for (std::size_t st = 0; st < kStages; ++st) {
    const std::size_t side = cfg.stage_side(st);
    out.height[st] = side;
    out.width[st] = side;
    if (st > 0) x = patch_merge(x, 2 * side, 2 * side, p.merges[st - 1]);
    Variable<T> attn;
    for (const auto& blk : p.stages[st]) {
      auto r = transformer_block(x, blk);
      x = r.y;
      attn = r.attention;
    }
    out.features[st] = x;
    out.attention[st] = attn;
  }
  return out;
}

}  // namespace iscfnet
