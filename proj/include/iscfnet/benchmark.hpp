#pragma once

#include <cstdint>
#include <vector>

namespace iscfnet {

struct AttentionTiming {
  std::size_t tokens = 0;
  double median_efficient_s = 0.0;
  double median_dense_s = 0.0;
};

// Median wall-clock of efficient attention and of dense softmax attention at
// each token count, on seeded random (N x dim) inputs. Single-threaded.
std::vector<AttentionTiming> bench_attention(const std::vector<std::size_t>& tokens,
                                             std::size_t dim, std::size_t repeats,
                                             std::uint64_t seed = 0);

// Max |efficient - dense_efficient| on an N x dim instance: both evaluate the
// same normalization, one through an explicit N x N matrix.
double attention_cross_check(std::size_t tokens, std::size_t dim, std::uint64_t seed = 0);

}  // namespace iscfnet
