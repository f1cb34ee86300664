#pragma once

// Differentiable operations over Variable<T>. Each op computes its value with
// plain loops and registers a closure that maps the output gradient back to
// its inputs.

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "iscfnet/autograd.hpp"

namespace iscfnet::ops {

namespace detail {

template <class T>
void require_same_shape(const Variable<T>& a, const Variable<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ArgumentError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                        " vs " + shape_str(b.shape()));
  }
}

template <class T>
void require_rank(const Variable<T>& a, std::size_t rank, const char* op) {
  if (a.value().rank() != rank) {
    throw ArgumentError(std::string(op) + ": expected rank " + std::to_string(rank) +
                        ", got shape " + shape_str(a.shape()));
  }
}

}  // namespace detail

template <class T>
Variable<T> add(const Variable<T>& a, const Variable<T>& b) {
  detail::require_same_shape(a, b, "add");
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b.value()[i];
  return Variable<T>::make(std::move(out), {a, b}, [](Node<T>& n) {
    accumulate(*n.parents[0], n.grad);
    accumulate(*n.parents[1], n.grad);
  });
}

template <class T>
Variable<T> sub(const Variable<T>& a, const Variable<T>& b) {
  detail::require_same_shape(a, b, "sub");
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= b.value()[i];
  return Variable<T>::make(std::move(out), {a, b}, [](Node<T>& n) {
    accumulate(*n.parents[0], n.grad);
    Tensor<T> neg = n.grad;
    for (auto& v : neg.data()) v = -v;
    accumulate(*n.parents[1], neg);
  });
}

// Elementwise (Hadamard) product of equal-shape tensors.
template <class T>
Variable<T> mul(const Variable<T>& a, const Variable<T>& b) {
  detail::require_same_shape(a, b, "mul");
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b.value()[i];
  return Variable<T>::make(std::move(out), {a, b}, [](Node<T>& n) {
    const auto& av = n.parents[0]->value;
    const auto& bv = n.parents[1]->value;
    Tensor<T> ga(n.grad.shape()), gb(n.grad.shape());
    for (std::size_t i = 0; i < ga.numel(); ++i) {
      ga[i] = n.grad[i] * bv[i];
      gb[i] = n.grad[i] * av[i];
    }
    accumulate(*n.parents[0], ga);
    accumulate(*n.parents[1], gb);
  });
}

// Multiplies by a compile-time constant.
template <class T>
Variable<T> scale(const Variable<T>& a, T s) {
  Tensor<T> out = a.value();
  for (auto& v : out.data()) v *= s;
  return Variable<T>::make(std::move(out), {a}, [s](Node<T>& n) {
    Tensor<T> g = n.grad;
    for (auto& v : g.data()) v *= s;
    accumulate(*n.parents[0], g);
  });
}

// Broadcast product of a tensor with a single-element variable.
template <class T>
Variable<T> mul_scalar(const Variable<T>& a, const Variable<T>& s) {
  if (s.numel() != 1) {
    throw ArgumentError("mul_scalar: scale must have one element, got " +
                        shape_str(s.shape()));
  }
  const T sv = s.value()[0];
  Tensor<T> out = a.value();
  for (auto& v : out.data()) v *= sv;
  return Variable<T>::make(std::move(out), {a, s}, [](Node<T>& n) {
    const auto& av = n.parents[0]->value;
    const T sv = n.parents[1]->value[0];
    Tensor<T> ga(n.grad.shape());
    T gs{0};
    for (std::size_t i = 0; i < ga.numel(); ++i) {
      ga[i] = n.grad[i] * sv;
      gs += n.grad[i] * av[i];
    }
    accumulate(*n.parents[0], ga);
    accumulate(*n.parents[1], Tensor<T>::scalar(gs));
  });
}

// (N x C) + (C) broadcast over rows.
template <class T>
Variable<T> add_row(const Variable<T>& a, const Variable<T>& bias) {
  detail::require_rank(a, 2, "add_row");
  const std::size_t rows = a.shape()[0], cols = a.shape()[1];
  if (bias.numel() != cols) {
    throw ArgumentError("add_row: bias length " + std::to_string(bias.numel()) +
                        " does not match " + std::to_string(cols) + " columns");
  }
  Tensor<T> out = a.value();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bias.value()[c];
  return Variable<T>::make(std::move(out), {a, bias}, [rows, cols](Node<T>& n) {
    accumulate(*n.parents[0], n.grad);
    Tensor<T> gb(n.parents[1]->value.shape());
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) gb[c] += n.grad[r * cols + c];
    accumulate(*n.parents[1], gb);
  });
}

template <class T>
Variable<T> matmul(const Variable<T>& a, const Variable<T>& b) {
  Tensor<T> out = kernels::matmul(a.value(), b.value());
  const std::size_t m = a.shape()[0], k = a.shape()[1], nn = b.shape()[1];
  return Variable<T>::make(std::move(out), {a, b}, [m, k, nn](Node<T>& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) {
      kernels::matmul_nt_acc(n.grad.data().data(), pb.value.data().data(),
                             pa.grad_buffer().data().data(), m, nn, k);
    }
    if (pb.requires_grad) {
      kernels::matmul_tn_acc(pa.value.data().data(), n.grad.data().data(),
                             pb.grad_buffer().data().data(), m, k, nn);
    }
  });
}

// Affine map x * W + b with W shaped (in, out) and b shaped (out).
template <class T>
Variable<T> linear(const Variable<T>& x, const Variable<T>& w, const Variable<T>& b) {
  return add_row(matmul(x, w), b);
}

template <class T>
Variable<T> transpose(const Variable<T>& a) {
  detail::require_rank(a, 2, "transpose");
  return Variable<T>::make(kernels::transpose(a.value()), {a}, [](Node<T>& n) {
    accumulate(*n.parents[0], kernels::transpose(n.grad));
  });
}

template <class T>
Variable<T> reshape(const Variable<T>& a, Shape shape) {
  return Variable<T>::make(a.value().reshaped(std::move(shape)), {a}, [](Node<T>& n) {
    accumulate(*n.parents[0], n.grad.reshaped(n.parents[0]->value.shape()));
  });
}

// out[i] = a[index[i]]; the backward pass scatters (adds) into the source.
// Every layout rearrangement (patchify, merge, expand, stacking) is a gather.
template <class T>
Variable<T> gather(const Variable<T>& a, std::shared_ptr<const std::vector<std::size_t>> index,
                   Shape out_shape) {
  if (shape_numel(out_shape) != index->size()) {
    throw ArgumentError("gather: index length does not match output shape " +
                        shape_str(out_shape));
  }
  Tensor<T> out(std::move(out_shape));
  const auto& src = a.value();
  for (std::size_t i = 0; i < index->size(); ++i) {
    const std::size_t j = (*index)[i];
    if (j >= src.numel()) throw ArgumentError("gather: index out of range");
    out[i] = src[j];
  }
  return Variable<T>::make(std::move(out), {a}, [index](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < index->size(); ++i) g[(*index)[i]] += n.grad[i];
  });
}

// Columns [begin, end) of a 2-D tensor.
template <class T>
Variable<T> slice_cols(const Variable<T>& a, std::size_t begin, std::size_t end) {
  detail::require_rank(a, 2, "slice_cols");
  const std::size_t rows = a.shape()[0], cols = a.shape()[1];
  if (begin >= end || end > cols) throw ArgumentError("slice_cols: bad range");
  const std::size_t w = end - begin;
  Tensor<T> out({rows, w});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < w; ++c) out[r * w + c] = a.value()[r * cols + begin + c];
  return Variable<T>::make(std::move(out), {a}, [rows, cols, begin, w](Node<T>& n) {
    auto& p = *n.parents[0];
    auto& g = p.grad_buffer();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < w; ++c) g[r * cols + begin + c] += n.grad[r * w + c];
  });
}

template <class T>
Variable<T> concat(const std::vector<Variable<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ArgumentError("concat: no inputs");
  const Shape& ref = parts[0].shape();
  if (axis >= ref.size()) throw ArgumentError("concat: invalid axis");
  Shape out_shape = ref;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == ref.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == ref[i];
    if (!ok) {
      throw ArgumentError("concat: incompatible shapes " + shape_str(ref) + " and " +
                          shape_str(s));
    }
    out_shape[axis] += s[axis];
  }
  std::size_t outer, extent, inner;
  kernels::axis_split(out_shape, axis, outer, extent, inner);
  Tensor<T> out(out_shape);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const std::size_t pe = p.shape()[axis];
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(p.value().data().data() + o * pe * inner, pe * inner,
                  out.data().data() + (o * extent + off) * inner);
    }
    off += pe;
  }
  return Variable<T>::make(
      std::move(out), parts, [offsets, outer, extent, inner, axis](Node<T>& n) {
        for (std::size_t k = 0; k < n.parents.size(); ++k) {
          auto& p = *n.parents[k];
          if (!p.requires_grad) continue;
          const std::size_t pe = p.value.shape()[axis];
          auto& g = p.grad_buffer();
          for (std::size_t o = 0; o < outer; ++o) {
            const T* src = n.grad.data().data() + (o * extent + offsets[k]) * inner;
            T* dst = g.data().data() + o * pe * inner;
            for (std::size_t i = 0; i < pe * inner; ++i) dst[i] += src[i];
          }
        }
      });
}

// Max-subtracted softmax along `axis`.
template <class T>
Variable<T> softmax(const Variable<T>& x, std::size_t axis) {
  Tensor<T> y = kernels::softmax(x.value(), axis);
  return Variable<T>::make(std::move(y), {x}, [axis](Node<T>& n) {
    std::size_t outer, extent, inner;
    kernels::axis_split(n.value.shape(), axis, outer, extent, inner);
    Tensor<T> gx(n.value.shape());
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * extent * inner + in;
        T dot{0};
        for (std::size_t e = 0; e < extent; ++e) {
          const std::size_t i = base + e * inner;
          dot += n.grad[i] * n.value[i];
        }
        for (std::size_t e = 0; e < extent; ++e) {
          const std::size_t i = base + e * inner;
          gx[i] = n.value[i] * (n.grad[i] - dot);
        }
      }
    }
    accumulate(*n.parents[0], gx);
  });
}

// Normalizes over the last axis, then applies gamma/beta.
template <class T>
Variable<T> layer_norm(const Variable<T>& x, const Variable<T>& gamma,
                       const Variable<T>& beta, T eps = T(1e-5)) {
  const Shape& s = x.shape();
  const std::size_t width = s.back();
  if (gamma.numel() != width || beta.numel() != width) {
    throw ArgumentError("layer_norm: gamma/beta length must equal last extent " +
                        std::to_string(width));
  }
  if (!(eps > T{0})) throw ArgumentError("layer_norm: eps must be positive");
  const std::size_t rows = x.numel() / width;
  Tensor<T> y(s);
  auto xhat = std::make_shared<std::vector<T>>(x.numel());
  auto inv_std = std::make_shared<std::vector<T>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.value().data().data() + r * width;
    T mean{0};
    for (std::size_t c = 0; c < width; ++c) mean += xr[c];
    mean /= static_cast<T>(width);
    T var{0};
    for (std::size_t c = 0; c < width; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= static_cast<T>(width);
    const T is = T{1} / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t c = 0; c < width; ++c) {
      const T h = (xr[c] - mean) * is;
      (*xhat)[r * width + c] = h;
      y[r * width + c] = h * gamma.value()[c] + beta.value()[c];
    }
  }
  return Variable<T>::make(
      std::move(y), {x, gamma, beta}, [xhat, inv_std, rows, width](Node<T>& n) {
        const auto& gv = n.parents[1]->value;
        Tensor<T> gx(n.value.shape()), gg({width}), gb({width});
        for (std::size_t r = 0; r < rows; ++r) {
          const T* dy = n.grad.data().data() + r * width;
          const T* h = xhat->data() + r * width;
          T mean_d{0}, mean_dh{0};
          for (std::size_t c = 0; c < width; ++c) {
            const T d = dy[c] * gv[c];
            mean_d += d;
            mean_dh += d * h[c];
            gg[c] += dy[c] * h[c];
            gb[c] += dy[c];
          }
          mean_d /= static_cast<T>(width);
          mean_dh /= static_cast<T>(width);
          for (std::size_t c = 0; c < width; ++c) {
            const T d = dy[c] * gv[c];
            gx[r * width + c] = (*inv_std)[r] * (d - mean_d - h[c] * mean_dh);
          }
        }
        accumulate(*n.parents[0], gx);
        accumulate(*n.parents[1], gg.reshaped(n.parents[1]->value.shape()));
        accumulate(*n.parents[2], gb.reshaped(n.parents[2]->value.shape()));
      });
}

// Exact (erf) GELU.
template <class T>
Variable<T> gelu(const Variable<T>& x) {
  Tensor<T> y = x.value();
  for (auto& v : y.data()) v = T(0.5) * v * (T{1} + std::erf(v * std::numbers::sqrt2_v<T> / T{2}));
  return Variable<T>::make(std::move(y), {x}, [](Node<T>& n) {
    const auto& xv = n.parents[0]->value;
    const T inv_sqrt_2pi = std::numbers::inv_sqrtpi_v<T> / std::numbers::sqrt2_v<T>;
    Tensor<T> g(xv.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) {
      const T v = xv[i];
      const T cdf = T(0.5) * (T{1} + std::erf(v * std::numbers::sqrt2_v<T> / T{2}));
      const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
      g[i] = n.grad[i] * (cdf + v * pdf);
    }
    accumulate(*n.parents[0], g);
  });
}

template <class T>
T sigmoid_value(T z) {
  if (z >= T{0}) return T{1} / (T{1} + std::exp(-z));
  const T e = std::exp(z);
  return e / (T{1} + e);
}

template <class T>
Variable<T> sigmoid(const Variable<T>& x) {
  Tensor<T> y = x.value();
  for (auto& v : y.data()) v = sigmoid_value(v);
  return Variable<T>::make(std::move(y), {x}, [](Node<T>& n) {
    Tensor<T> g(n.value.shape());
    for (std::size_t i = 0; i < g.numel(); ++i)
      g[i] = n.grad[i] * n.value[i] * (T{1} - n.value[i]);
    accumulate(*n.parents[0], g);
  });
}

// Natural log of strictly positive entries.
template <class T>
Variable<T> log(const Variable<T>& x) {
  Tensor<T> y = x.value();
  for (auto& v : y.data()) {
    if (!(v > T{0})) throw NumericError("log: input must be positive");
    v = std::log(v);
  }
  return Variable<T>::make(std::move(y), {x}, [](Node<T>& n) {
    const auto& xv = n.parents[0]->value;
    Tensor<T> g(xv.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] = n.grad[i] / xv[i];
    accumulate(*n.parents[0], g);
  });
}

template <class T>
Variable<T> sum(const Variable<T>& x) {
  T s{0};
  for (auto v : x.value().data()) s += v;
  return Variable<T>::make(Tensor<T>::scalar(s), {x}, [](Node<T>& n) {
    accumulate(*n.parents[0], Tensor<T>::full(n.parents[0]->value.shape(), n.grad[0]));
  });
}

// Arithmetic mean of every entry, returned as a one-element tensor.
template <class T>
Variable<T> global_avg_pool(const Variable<T>& x) {
  if (!x.defined() || x.numel() == 0) throw ArgumentError("global_avg_pool: empty input");
  const auto count = static_cast<T>(x.numel());
  T s{0};
  for (auto v : x.value().data()) s += v;
  return Variable<T>::make(Tensor<T>::scalar(s / count), {x}, [count](Node<T>& n) {
    accumulate(*n.parents[0],
               Tensor<T>::full(n.parents[0]->value.shape(), n.grad[0] / count));
  });
}

template <class T>
Variable<T> mean(const Variable<T>& x) {
  return global_avg_pool(x);
}

// Depth-3, 1x1 convolution with weights shared over channels and positions:
// out[c,h,w] = sum_d weights[d] * stack[d,c,h,w] + bias.
template <class T>
Variable<T> fusion_conv_311(const Variable<T>& stack, const Variable<T>& weights,
                            const Variable<T>& bias) {
  if (stack.value().rank() < 2 || stack.shape()[0] != 3) {
    throw ArgumentError("fusion_conv_311: stack depth must be exactly 3, got shape " +
                        shape_str(stack.shape()));
  }
  if (weights.numel() != 3) throw ArgumentError("fusion_conv_311: need 3 weights");
  if (bias.numel() != 1) throw ArgumentError("fusion_conv_311: need 1 bias");
  Shape out_shape(stack.shape().begin() + 1, stack.shape().end());
  const std::size_t plane = shape_numel(out_shape);
  Tensor<T> out(out_shape, bias.value()[0]);
  const auto& sv = stack.value();
  for (std::size_t d = 0; d < 3; ++d) {
    const T w = weights.value()[d];
    for (std::size_t i = 0; i < plane; ++i) out[i] += w * sv[d * plane + i];
  }
  return Variable<T>::make(std::move(out), {stack, weights, bias}, [plane](Node<T>& n) {
    const auto& sv = n.parents[0]->value;
    const auto& wv = n.parents[1]->value;
    Tensor<T> gs(sv.shape()), gw({3});
    T gb{0};
    for (std::size_t i = 0; i < plane; ++i) gb += n.grad[i];
    for (std::size_t d = 0; d < 3; ++d) {
      for (std::size_t i = 0; i < plane; ++i) {
        gs[d * plane + i] = wv[d] * n.grad[i];
        gw[d] += sv[d * plane + i] * n.grad[i];
      }
    }
    accumulate(*n.parents[0], gs);
    accumulate(*n.parents[1], gw.reshaped(wv.shape()));
    accumulate(*n.parents[2], Tensor<T>::full(n.parents[2]->value.shape(), gb));
  });
}

// Mean binary cross-entropy on logits in the fused form
// max(z,0) - z*y + log(1 + exp(-|z|)).
template <class T>
Variable<T> bce_with_logits(const Variable<T>& logits, const Tensor<T>& target) {
  if (logits.numel() != target.numel()) {
    throw ArgumentError("bce_with_logits: shape mismatch " + shape_str(logits.shape()) +
                        " vs " + shape_str(target.shape()));
  }
  for (auto y : target.data()) {
    if (y != T{0} && y != T{1}) throw ArgumentError("bce_with_logits: target must be in {0,1}");
  }
  const auto& z = logits.value();
  const auto count = static_cast<T>(z.numel());
  T total{0};
  for (std::size_t i = 0; i < z.numel(); ++i) {
    const T zi = z[i];
    total += std::max(zi, T{0}) - zi * target[i] + std::log1p(std::exp(-std::abs(zi)));
  }
  auto tgt = std::make_shared<Tensor<T>>(target);
  return Variable<T>::make(Tensor<T>::scalar(total / count), {logits},
                           [tgt, count](Node<T>& n) {
                             const auto& zv = n.parents[0]->value;
                             Tensor<T> g(zv.shape());
                             const T s = n.grad[0] / count;
                             for (std::size_t i = 0; i < g.numel(); ++i)
                               g[i] = s * (sigmoid_value(zv[i]) - (*tgt)[i]);
                             accumulate(*n.parents[0], g);
                           });
}

}  // namespace iscfnet::ops
