#include "iscfnet/benchmark.hpp"

#include <algorithm>
#include <chrono>

#include "iscfnet/attention.hpp"

namespace iscfnet {

namespace {

template <class F>
double median_seconds(std::size_t repeats, F&& f) {
  std::vector<double> times;
  times.reserve(repeats);
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  return n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
}

}  // namespace

std::vector<AttentionTiming> bench_attention(const std::vector<std::size_t>& tokens,
                                             std::size_t dim, std::size_t repeats,
                                             std::uint64_t seed) {
  if (repeats == 0) throw ArgumentError("bench_attention: repeats must be positive");
  std::vector<AttentionTiming> rows;
  volatile float sink = 0.0f;
  for (std::size_t n : tokens) {
    if (n < 64) throw ArgumentError("bench_attention: token counts must be >= 64");
    SplitMix64 rng(mix_seed(seed, n));
    const auto q = Tensor<float>::randn({n, dim}, rng);
    const auto k = Tensor<float>::randn({n, dim}, rng);
    const auto v = Tensor<float>::randn({n, dim}, rng);
    AttentionTiming row;
    row.tokens = n;
    row.median_efficient_s = median_seconds(repeats, [&] {
      sink = sink + kernels::efficient_attention(q, k, v)[0];
    });
    row.median_dense_s = median_seconds(repeats, [&] {
      sink = sink + kernels::dense_softmax_attention(q, k, v)[0];
    });
    rows.push_back(row);
  }
  return rows;
}

double attention_cross_check(std::size_t tokens, std::size_t dim, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const auto q = Tensor<double>::randn({tokens, dim}, rng);
  const auto k = Tensor<double>::randn({tokens, dim}, rng);
  const auto v = Tensor<double>::randn({tokens, dim}, rng);
  return max_abs_diff(kernels::efficient_attention(q, k, v),
                      kernels::dense_efficient_attention(q, k, v));
}

}  // namespace iscfnet
