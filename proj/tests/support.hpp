#pragma once

#include "iscfnet/model.hpp"
#include "oracle.hpp"

namespace support {

using iscfnet::Tensor;

inline oracle::Mat to_mat(const Tensor<double>& t) {
  const std::size_t r = t.shape()[0], c = t.shape()[1];
  oracle::Mat m(r, std::vector<double>(c));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m[i][j] = t[i * c + j];
  return m;
}

inline double max_diff(const Tensor<double>& t, const oracle::Mat& m) {
  double worst = 0;
  const std::size_t c = t.shape()[1];
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < c; ++j) worst = std::fmax(worst, std::fabs(t[i * c + j] - m[i][j]));
  return worst;
}

// Image 32, patch 4, channels [8, 16, 32].
inline iscfnet::ModelConfig tiny_config() {
  iscfnet::ModelConfig c;
  c.image_size = 32;
  c.stage_channels = {8, 16, 32};
  c.depths = {1, 1, 1};
  c.heads = {2, 2, 4};
  c.iscf_hidden = 4;
  return c;
}

}  // namespace support
