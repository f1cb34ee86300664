#pragma once

// Inter-scale context fusion.
//
// Per-stage attention outputs A_s (N_s x C_s) are brought to the stage-3
// shape N3 x C3, pooled to one scalar each, gated by a small FFN with a
// sigmoid, scaled, fused across the three scales by a depth-3 1x1
// convolution, and mapped back to every stage's shape. The result R_s is
// added to the skip features F_s.

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "iscfnet/attention.hpp"
#include "iscfnet/config.hpp"

namespace iscfnet {

template <class T>
struct IscfParams {
  // Stage 1 and 2 only; stage 3 is already N3 x C3.
  std::array<Affine<T>, kStages - 1> chan_eq;   // C_s -> C3
  std::array<Affine<T>, kStages - 1> token_eq;  // N_s -> N3, along the token axis
  Affine<T> gate_in;                            // 3 -> hidden
  Affine<T> gate_out;                           // hidden -> 3
  Variable<T> fuse_weights;                     // (3)
  Variable<T> fuse_bias;                        // (1)
  std::array<Affine<T>, kStages> token_remap;   // N3 -> N_s
  std::array<Affine<T>, kStages> chan_remap;    // C3 -> C_s, zero-initialized

  static IscfParams make(ParamBuilder<T>& pb, const ModelConfig& cfg) {
    auto s = pb.scope("iscf");
    const auto& c = cfg.stage_channels;
    const std::size_t n3 = cfg.stage_tokens(2);
    IscfParams p;
    for (std::size_t st = 0; st + 1 < kStages; ++st) {
      const std::string tag = std::to_string(st + 1);
      p.chan_eq[st] = Affine<T>::make(s, "chan_eq" + tag, c[st], c[2]);
      p.token_eq[st] = Affine<T>::make(s, "token_eq" + tag, cfg.stage_tokens(st), n3);
    }
    p.gate_in = Affine<T>::make(s, "gate_in", kStages, cfg.iscf_hidden);
    p.gate_out = Affine<T>::make(s, "gate_out", cfg.iscf_hidden, kStages);
    p.fuse_weights = s.value("fuse.weight", Tensor<T>({3}, T{1} / T{3}));
    p.fuse_bias = s.zeros("fuse.bias", {1});
    for (std::size_t st = 0; st < kStages; ++st) {
      const std::string tag = std::to_string(st + 1);
      p.token_remap[st] = Affine<T>::make(s, "token_remap" + tag, n3, cfg.stage_tokens(st));
      auto cs = s.scope("chan_remap" + tag);
      p.chan_remap[st].w = cs.zeros("weight", {c[2], c[st]});
      p.chan_remap[st].b = cs.zeros("bias", {c[st]});
    }
    return p;
  }

  // Closed-form scalar count derived from the configuration alone.
  static std::size_t count(const ModelConfig& cfg) {
    const auto& c = cfg.stage_channels;
    const std::size_t n3 = cfg.stage_tokens(2);
    const std::size_t h = cfg.iscf_hidden;
    std::size_t n = 0;
    for (std::size_t st = 0; st + 1 < kStages; ++st) {
      n += (c[st] + 1) * c[2];
      n += (cfg.stage_tokens(st) + 1) * n3;
    }
    n += (kStages + 1) * h + (h + 1) * kStages;
    n += 3 + 1;
    for (std::size_t st = 0; st < kStages; ++st) {
      n += (n3 + 1) * cfg.stage_tokens(st);
      n += (c[2] + 1) * c[st];
    }
    return n;
  }
};

// Affine map along the token axis of an (N x C) tensor: (A^T W + b)^T.
template <class T>
Variable<T> token_affine(const Variable<T>& x, const Affine<T>& a) {
  return ops::transpose(apply(a, ops::transpose(x)));
}

// Brings stage `stage` (0-based) to N3 x C3: channel map, then token map.
// Stage index 2 passes through unchanged.
template <class T>
Variable<T> equalize(const Variable<T>& a, std::size_t stage, const ModelConfig& cfg,
                     const IscfParams<T>& p) {
  if (stage >= kStages) throw ArgumentError("equalize: stage index out of range");
  const Shape expect{cfg.stage_tokens(stage), cfg.stage_channels[stage]};
  if (a.shape() != expect) {
    throw ArgumentError("equalize: stage " + std::to_string(stage + 1) + " map " +
                        shape_str(a.shape()) + " does not match " + shape_str(expect));
  }
  if (stage == kStages - 1) return a;
  return token_affine(apply(p.chan_eq[stage], a), p.token_eq[stage]);
}

// g_s = mean(A~_s); w = sigmoid(FFN(g)). Returns a (3) tensor in (0,1).
template <class T>
Variable<T> compute_gates(const std::array<Variable<T>, kStages>& eq, const IscfParams<T>& p) {
  for (std::size_t s = 1; s < kStages; ++s) {
    if (eq[s].shape() != eq[0].shape()) {
      throw ArgumentError("compute_gates: equalized maps differ in shape");
    }
  }
  std::vector<Variable<T>> pooled;
  for (const auto& m : eq) pooled.push_back(ops::global_avg_pool(m));
  auto g = ops::reshape(ops::concat(pooled, 0), {1, kStages});
  auto hidden = ops::gelu(apply(p.gate_in, g));
  return ops::reshape(ops::sigmoid(apply(p.gate_out, hidden)), {kStages});
}

// B_s = w_s * A~_s, each viewed as (C3, H3, W3), stacked to (3, C3, H3, W3)
// and reduced by the 3x1x1 fusion convolution back to N3 x C3 tokens.
template <class T>
Variable<T> fuse(const std::array<Variable<T>, kStages>& eq, const Variable<T>& gates,
                 std::size_t height, std::size_t width, const IscfParams<T>& p) {
  if (gates.numel() != kStages) throw ArgumentError("fuse: expected 3 gate values");
  const std::size_t n = eq[0].shape()[0], c = eq[0].shape()[1];
  if (n != height * width) throw ArgumentError("fuse: token count does not match grid");
  std::vector<Variable<T>> slices;
  for (std::size_t s = 0; s < kStages; ++s) {
    auto pick = std::make_shared<const std::vector<std::size_t>>(1, s);
    auto w_s = ops::gather(gates, pick, {1});
    auto scaled = ops::mul_scalar(eq[s], w_s);
    slices.push_back(ops::reshape(ops::transpose(scaled), {1, c, height, width}));
  }
  auto stack = ops::concat(slices, 0);  // (3, C, H, W)
  auto fused = ops::fusion_conv_311(stack, p.fuse_weights, p.fuse_bias);
  return ops::transpose(ops::reshape(fused, {c, n}));
}

// Maps the fused N3 x C3 context back to every stage's N_s x C_s.
template <class T>
std::array<Variable<T>, kStages> remap(const Variable<T>& fused, const IscfParams<T>& p) {
  std::array<Variable<T>, kStages> out;
  for (std::size_t s = 0; s < kStages; ++s) {
    out[s] = apply(p.chan_remap[s], token_affine(fused, p.token_remap[s]));
  }
  return out;
}

template <class T>
struct IscfOutput {
  std::array<Variable<T>, kStages> refined;  // R_s, shaped like F_s
  Variable<T> gates;                         // (3)
};

template <class T>
IscfOutput<T> iscf_forward(const std::array<Variable<T>, kStages>& attention,
                           const ModelConfig& cfg, const IscfParams<T>& p) {
  std::array<Variable<T>, kStages> eq;
  for (std::size_t s = 0; s < kStages; ++s) eq[s] = equalize(attention[s], s, cfg, p);
  auto gates = compute_gates(eq, p);
  const std::size_t side = cfg.stage_side(2);
  auto fused = fuse(eq, gates, side, side, p);
  return {remap(fused, p), gates};
}

}  // namespace iscfnet
