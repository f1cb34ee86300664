#include "iscfnet/metrics.hpp"

namespace iscfnet {

namespace {
double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

ConfusionCounts confusion(const Tensor<float>& probs, const Tensor<float>& mask,
                          double threshold) {
  if (probs.shape() != mask.shape()) {
    throw ArgumentError("confusion: prediction " + shape_str(probs.shape()) + " and mask " +
                        shape_str(mask.shape()) + " differ");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < probs.numel(); ++i) {
    const float m = mask[i];
    if (m != 0.0f && m != 1.0f) throw ArgumentError("confusion: mask must be binary");
    const bool pred = probs[i] >= threshold;
    const bool truth = m == 1.0f;
    if (pred && truth) ++c.tp;
    else if (pred) ++c.fp;
    else if (truth) ++c.fn;
    else ++c.tn;
  }
  return c;
}

MetricScores metrics(const ConfusionCounts& c) {
  return {ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn), ratio(c.tp, c.tp + c.fn),
          ratio(c.tn, c.tn + c.fp), ratio(c.tp + c.tn, c.total())};
}

void MetricsReport::add(std::string id, const ConfusionCounts& c) {
  per_image.push_back({std::move(id), c, metrics(c)});
}

void MetricsReport::finalize() {
  mean = {};
  if (per_image.empty()) return;
  for (const auto& m : per_image) {
    mean.dsc += m.scores.dsc;
    mean.se += m.scores.se;
    mean.sp += m.scores.sp;
    mean.acc += m.scores.acc;
  }
  const auto n = static_cast<double>(per_image.size());
  mean.dsc /= n;
  mean.se /= n;
  mean.sp /= n;
  mean.acc /= n;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json images = nlohmann::json::array();
  for (const auto& m : r.per_image) {
    images.push_back({{"id", m.id},
                      {"tp", m.counts.tp},
                      {"fp", m.counts.fp},
                      {"tn", m.counts.tn},
                      {"fn", m.counts.fn},
                      {"dsc", m.scores.dsc},
                      {"se", m.scores.se},
                      {"sp", m.scores.sp},
                      {"acc", m.scores.acc}});
  }
  return {{"per_image", images},
          {"mean_dsc", r.mean.dsc},
          {"mean_se", r.mean.se},
          {"mean_sp", r.mean.sp},
          {"mean_acc", r.mean.acc}};
}

}  // namespace iscfnet
