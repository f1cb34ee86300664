#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "iscfnet/ops.hpp"
#include "iscfnet/params.hpp"

namespace iscfnet {

template <class T>
Variable<T> apply(const Affine<T>& a, const Variable<T>& x) {
  return ops::linear(x, a.w, a.b);
}

template <class T>
Variable<T> apply(const NormParams<T>& n, const Variable<T>& x) {
  return ops::layer_norm(x, n.gamma, n.beta);
}

namespace detail {
inline void check_qkv(const Shape& q, const Shape& k, const Shape& v) {
  if (q.size() != 2 || k != q || v != q) {
    throw ArgumentError("efficient_attention: Q, K, V must share an (N x d) shape, got " +
                        shape_str(q) + ", " + shape_str(k) + ", " + shape_str(v));
  }
}
}  // namespace detail

namespace kernels {

// E = softmax_rows(Q) * (softmax_tokens(K)^T * V). Costs O(N d^2) and never
// forms an N x N matrix.
template <class T>
Tensor<T> efficient_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v) {
  detail::check_qkv(q.shape(), k.shape(), v.shape());
  const std::size_t n = q.dim(0), d = q.dim(1);
  const Tensor<T> rq = softmax(q, 1);
  const Tensor<T> rk = softmax(k, 0);
  Tensor<T> context({d, d});
  matmul_tn_acc(rk.data().data(), v.data().data(), context.data().data(), n, d, d);
  return matmul(rq, context);
}

// Standard scaled dot-product attention softmax(Q K^T / sqrt(d)) V. Quadratic
// in N; used only as the benchmark's dense reference.
template <class T>
Tensor<T> dense_softmax_attention(const Tensor<T>& q, const Tensor<T>& k,
                                  const Tensor<T>& v) {
  detail::check_qkv(q.shape(), k.shape(), v.shape());
  const std::size_t n = q.dim(0), d = q.dim(1);
  Tensor<T> scores({n, n});
  matmul_nt_acc(q.data().data(), k.data().data(), scores.data().data(), n, d, n);
  const T s = T{1} / std::sqrt(static_cast<T>(d));
  for (auto& x : scores.data()) x *= s;
  return matmul(softmax(scores, 1), v);
}

// The efficient normalization evaluated through an explicit N x N matrix:
// (softmax_rows(Q) * softmax_tokens(K)^T) * V. Mathematically equal to
// efficient_attention; used as a numerical cross-check.
template <class T>
Tensor<T> dense_efficient_attention(const Tensor<T>& q, const Tensor<T>& k,
                                    const Tensor<T>& v) {
  detail::check_qkv(q.shape(), k.shape(), v.shape());
  const std::size_t n = q.dim(0), d = q.dim(1);
  const Tensor<T> rq = softmax(q, 1);
  const Tensor<T> rk = softmax(k, 0);
  Tensor<T> mix({n, n});
  matmul_nt_acc(rq.data().data(), rk.data().data(), mix.data().data(), n, d, n);
  return matmul(mix, v);
}

}  // namespace kernels

// Differentiable efficient attention for one head.
template <class T>
Variable<T> efficient_attention(const Variable<T>& q, const Variable<T>& k,
                                const Variable<T>& v) {
  detail::check_qkv(q.shape(), k.shape(), v.shape());
  if (q.shape()[0] < 1) throw ArgumentError("efficient_attention: need N >= 1");
  auto rq = ops::softmax(q, 1);
  auto rk = ops::softmax(k, 0);
  auto context = ops::matmul(ops::transpose(rk), v);  // d x d
  return ops::matmul(rq, context);
}

template <class T>
struct AttentionParams {
  Variable<T> wq, wk, wv;  // (C, C), no bias
  Affine<T> out;           // (C, C) + bias
  std::size_t heads = 1;

  static AttentionParams make(ParamBuilder<T>& pb, const std::string& name,
                              std::size_t channels, std::size_t heads) {
    if (heads == 0 || channels % heads != 0) {
      throw ConfigError("attention: heads (" + std::to_string(heads) +
                        ") must divide channels (" + std::to_string(channels) + ")");
    }
    auto s = pb.scope(name);
    AttentionParams p;
    p.wq = s.weight("wq", channels, channels);
    p.wk = s.weight("wk", channels, channels);
    p.wv = s.weight("wv", channels, channels);
    p.out = Affine<T>::make(s, "proj", channels, channels);
    p.heads = heads;
    return p;
  }

  std::size_t channels() const { return wq.shape()[0]; }
};

// Projects X to Q/K/V, runs efficient attention per head on column slices,
// concatenates heads, and applies the output projection.
template <class T>
Variable<T> multi_head_efficient_attention(const Variable<T>& x, const AttentionParams<T>& p) {
  const std::size_t c = p.channels();
  if (x.value().rank() != 2 || x.shape()[1] != c) {
    throw ArgumentError("multi_head_efficient_attention: input " + shape_str(x.shape()) +
                        " does not match channel width " + std::to_string(c));
  }
  if (p.heads == 0 || c % p.heads != 0) {
    throw ConfigError("multi_head_efficient_attention: heads must divide channels");
  }
  auto q = ops::matmul(x, p.wq);
  auto k = ops::matmul(x, p.wk);
  auto v = ops::matmul(x, p.wv);
  Variable<T> merged;
  if (p.heads == 1) {
    merged = efficient_attention(q, k, v);
  } else {
    const std::size_t d = c / p.heads;
    std::vector<Variable<T>> outs;
    outs.reserve(p.heads);
    for (std::size_t h = 0; h < p.heads; ++h) {
      outs.push_back(efficient_attention(ops::slice_cols(q, h * d, (h + 1) * d),
                                         ops::slice_cols(k, h * d, (h + 1) * d),
                                         ops::slice_cols(v, h * d, (h + 1) * d)));
    }
    merged = ops::concat(outs, 1);
  }
  return apply(p.out, merged);
}

template <class T>
struct BlockParams {
  NormParams<T> ln1;
  AttentionParams<T> attn;
  NormParams<T> ln2;
  Affine<T> fc1;  // C -> r*C
  Affine<T> fc2;  // r*C -> C

  static BlockParams make(ParamBuilder<T>& pb, const std::string& name, std::size_t channels,
                          std::size_t heads, std::size_t mlp_ratio) {
    auto s = pb.scope(name);
    BlockParams p;
    p.ln1 = NormParams<T>::make(s, "ln1", channels);
    p.attn = AttentionParams<T>::make(s, "attn", channels, heads);
    p.ln2 = NormParams<T>::make(s, "ln2", channels);
    p.fc1 = Affine<T>::make(s, "fc1", channels, mlp_ratio * channels);
    p.fc2 = Affine<T>::make(s, "fc2", mlp_ratio * channels, channels);
    return p;
  }

  static std::size_t count(std::size_t c, std::size_t mlp_ratio) {
    const std::size_t hidden = mlp_ratio * c;
    return 2 * c                        // ln1
           + 3 * c * c + c * c + c      // q, k, v, proj
           + 2 * c                      // ln2
           + c * hidden + hidden        // fc1
           + hidden * c + c;            // fc2
  }
};

template <class T>
struct BlockOutput {
  Variable<T> y;          // block output tokens
  Variable<T> attention;  // multi-head attention output before the residual add
};

// Pre-norm transformer block:
//   A = MHEA(LN(X)); X' = X + A; Y = X' + MLP(LN(X')).
template <class T>
BlockOutput<T> transformer_block(const Variable<T>& x, const BlockParams<T>& p) {
  auto a = multi_head_efficient_attention(apply(p.ln1, x), p.attn);
  auto x1 = ops::add(x, a);
  auto hidden = ops::gelu(apply(p.fc1, apply(p.ln2, x1)));
  auto y = ops::add(x1, apply(p.fc2, hidden));
  return {y, a};
}

}  // namespace iscfnet
