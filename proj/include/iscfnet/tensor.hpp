#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "iscfnet/error.hpp"
#include "iscfnet/rng.hpp"

namespace iscfnet {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

// Dense row-major array with value semantics. Gradient bookkeeping lives in
// Variable (autograd.hpp); a Tensor is just numbers plus a shape.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T{0})
      : shape_(std::move(shape)), data_(checked_numel(shape_), fill) {}

  Tensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_numel(shape_) != data_.size()) {
      throw ArgumentError("tensor data length " + std::to_string(data_.size()) +
                          " does not match shape " + shape_str(shape_));
    }
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, T v) { return Tensor(std::move(shape), v); }
  static Tensor scalar(T v) { return Tensor(Shape{1}, v); }

  static Tensor from(Shape shape, std::initializer_list<T> values) {
    return Tensor(std::move(shape), std::vector<T>(values));
  }

  static Tensor randn(Shape shape, SplitMix64& rng, double stddev = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data_) v = static_cast<T>(stddev * rng.normal());
    return t;
  }

  static Tensor uniform(Shape shape, SplitMix64& rng, double lo, double hi) {
    Tensor t(std::move(shape));
    for (auto& v : t.data_) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t numel() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  // 2-D accessors (row, col).
  T& at(std::size_t r, std::size_t c) noexcept { return data_[r * shape_[1] + c]; }
  const T& at(std::size_t r, std::size_t c) const noexcept {
    return data_[r * shape_[1] + c];
  }

  T item() const {
    if (data_.size() != 1) {
      throw ArgumentError("item() on tensor of shape " + shape_str(shape_));
    }
    return data_[0];
  }

  Tensor reshaped(Shape shape) const {
    if (shape_numel(shape) != numel()) {
      throw ArgumentError("cannot reshape " + shape_str(shape_) + " to " +
                          shape_str(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  template <class U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(),
                       [](T v) { return std::isfinite(v); });
  }

  void fill(T v) noexcept { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  static std::size_t checked_numel(const Shape& shape) {
    for (auto e : shape) {
      if (e == 0) {
        throw ArgumentError("tensor extents must be positive, got " +
                            shape_str(shape));
      }
    }
    return shape_numel(shape);
  }

  Shape shape_;
  std::vector<T> data_;
};

template <class T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ArgumentError("max_abs_diff shape mismatch " + shape_str(a.shape()) +
                        " vs " + shape_str(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return m;
}

// Plain (non-differentiable) kernels shared by autograd ops, the attention
// benchmark, and test oracles.
namespace kernels {

// C(MxN) = A(MxK) * B(KxN)
template <class T>
void matmul(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
            std::size_t n) {
  std::fill(c, c + m * n, T{0});
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      if (av == T{0}) continue;
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C(MxN) += A(MxK) * B(NxK)^T
template <class T>
void matmul_nt_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
                   std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T* brow = b + j * k;
      T s{0};
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      c[i * n + j] += s;
    }
  }
}

// C(KxN) += A(MxK)^T * B(MxN)
template <class T>
void matmul_tn_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
                   std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    const T* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T{0}) continue;
      T* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ArgumentError("matmul shape mismatch " + shape_str(a.shape()) + " * " +
                        shape_str(b.shape()));
  }
  Tensor<T> c({a.dim(0), b.dim(1)});
  matmul(a.data().data(), b.data().data(), c.data().data(), a.dim(0), a.dim(1),
         b.dim(1));
  return c;
}

template <class T>
Tensor<T> transpose(const Tensor<T>& a) {
  if (a.rank() != 2) throw ArgumentError("transpose expects a 2-D tensor");
  const std::size_t r = a.dim(0), c = a.dim(1);
  Tensor<T> out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a[i * c + j];
  return out;
}

// Splits `shape` around `axis` into (outer, extent, inner) strides.
inline void axis_split(const Shape& shape, std::size_t axis, std::size_t& outer,
                       std::size_t& extent, std::size_t& inner) {
  outer = 1;
  inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
}

template <class T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw ArgumentError("softmax axis " + std::to_string(axis) +
                        " invalid for shape " + shape_str(x.shape()));
  }
  if (!x.all_finite()) throw NumericError("softmax input is not finite");
  std::size_t outer, extent, inner;
  axis_split(x.shape(), axis, outer, extent, inner);
  Tensor<T> y(x.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * extent * inner + in;
      T mx = x[base];
      for (std::size_t e = 1; e < extent; ++e) mx = std::max(mx, x[base + e * inner]);
      T sum{0};
      for (std::size_t e = 0; e < extent; ++e) {
        const T v = std::exp(x[base + e * inner] - mx);
        y[base + e * inner] = v;
        sum += v;
      }
      for (std::size_t e = 0; e < extent; ++e) y[base + e * inner] /= sum;
    }
  }
  return y;
}

}  // namespace kernels

}  // namespace iscfnet
