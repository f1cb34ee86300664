#pragma once

#include <functional>
#include <vector>

#include "iscfnet/checkpoint.hpp"
#include "iscfnet/data.hpp"
#include "iscfnet/metrics.hpp"

namespace iscfnet {

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double val_dsc = 0.0;
};

struct TrainResult {
  Checkpoint best;  // highest validation DSC (earliest on ties)
  Checkpoint last;
  std::vector<EpochLog> log;
  std::vector<double> step_losses;  // mean batch loss per optimizer step
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Mini-batch training with BCE on logits and Adam. Each epoch visits the
// training samples in a Fisher-Yates order seeded from (config seed, epoch),
// then scores the validation split; an empty validation split is replaced by
// the training split for model selection. Non-finite losses raise
// DivergenceError naming the epoch and step.
TrainResult train(const RunConfig& run, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const EpochCallback& on_epoch = {});

// Per-image confusion at `threshold`, arithmetic-mean aggregation. Samples
// must already be at the model's image size (ConfigError otherwise).
MetricsReport evaluate(const Model<float>& model, const std::vector<Sample>& samples,
                       double threshold = 0.5);

MetricsReport evaluate(const Checkpoint& ckpt, const std::vector<Sample>& samples);

// Split sizes for a dataset of n items: the explicit counts in `run` when any
// is nonzero, otherwise the reference proportions.
SplitSpec split_spec(const RunConfig& run, std::size_t n);

// Loads run.data_dir (images/ and masks/), resamples to the model's image
// size where needed, and partitions with the run's split settings.
DatasetSplits load_run_data(const RunConfig& run);

// Probability map (1, H, W) for one image.
Tensor<float> predict(const Model<float>& model, const Tensor<float>& image);

}  // namespace iscfnet
