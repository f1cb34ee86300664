#pragma once

// Brute-force reference evaluations written with plain loops over
// std::vector, sharing no code with the library kernels.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat softmax_rows(const Mat& x) {
  Mat y = x;
  for (auto& row : y) {
    double m = row[0];
    for (double v : row) m = std::fmax(m, v);
    double s = 0;
    for (double& v : row) s += (v = std::exp(v - m));
    for (double& v : row) v /= s;
  }
  return y;
}

inline Mat softmax_cols(const Mat& x) {
  Mat y = x;
  const std::size_t n = x.size(), d = x[0].size();
  for (std::size_t j = 0; j < d; ++j) {
    double m = x[0][j];
    for (std::size_t i = 0; i < n; ++i) m = std::fmax(m, x[i][j]);
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i][j] - m);
    for (std::size_t i = 0; i < n; ++i) y[i][j] = std::exp(x[i][j] - m) / s;
  }
  return y;
}

// E[i][c] = sum_j sum_t rq[i][j] * rk[t][j] * v[t][c]
inline Mat efficient_attention(const Mat& q, const Mat& k, const Mat& v) {
  const Mat rq = softmax_rows(q), rk = softmax_cols(k);
  const std::size_t n = q.size(), d = q[0].size(), dv = v[0].size();
  Mat e(n, std::vector<double>(dv, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < dv; ++c)
      for (std::size_t j = 0; j < d; ++j)
        for (std::size_t t = 0; t < n; ++t) e[i][c] += rq[i][j] * rk[t][j] * v[t][c];
  return e;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

}  // namespace oracle
