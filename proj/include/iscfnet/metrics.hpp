#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iscfnet/tensor.hpp"

namespace iscfnet {

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::uint64_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct MetricScores {
  double dsc = 0, se = 0, sp = 0, acc = 0;
};

// Pixelwise counts with prediction = probs >= threshold.
ConfusionCounts confusion(const Tensor<float>& probs, const Tensor<float>& mask,
                          double threshold = 0.5);

// DSC = 2tp/(2tp+fp+fn), SE = tp/(tp+fn), SP = tn/(tn+fp),
// ACC = (tp+tn)/total. A 0/0 ratio evaluates to 1 (nothing to find, nothing
// found); ACC of an empty region is 1 as well.
MetricScores metrics(const ConfusionCounts& c);

struct ImageMetrics {
  std::string id;
  ConfusionCounts counts;
  MetricScores scores;
};

struct MetricsReport {
  std::vector<ImageMetrics> per_image;
  MetricScores mean;  // arithmetic means over per_image

  void add(std::string id, const ConfusionCounts& c);
  // Recomputes `mean` from `per_image`.
  void finalize();
};

nlohmann::json to_json(const MetricsReport& r);

}  // namespace iscfnet
