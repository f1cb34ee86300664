#include "iscfnet/train.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "iscfnet/adam.hpp"

namespace iscfnet {

namespace {

void check_geometry(const ModelConfig& cfg, const Sample& s) {
  const Shape want{3, cfg.image_size, cfg.image_size};
  if (s.image.shape() != want || s.mask.shape() != Shape{1, cfg.image_size, cfg.image_size}) {
    throw ConfigError("sample " + s.id + " has image " + shape_str(s.image.shape()) +
                      " but the model expects " + shape_str(want));
  }
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(mix_seed(seed, epoch));
  for (std::size_t i = n; i-- > 1;) std::swap(order[i], order[rng.below(i + 1)]);
  return order;
}

}  // namespace

SplitSpec split_spec(const RunConfig& run, std::size_t n) {
  if (run.split_train == 0 && run.split_val == 0 && run.split_test == 0) {
    return SplitSpec::proportional(n, run.split_seed);
  }
  return {run.split_train, run.split_val, run.split_test, run.split_seed};
}

DatasetSplits load_run_data(const RunConfig& run) {
  if (run.data_dir.empty()) throw ConfigError("data_dir is not set");
  auto samples = load_dataset(run.data_dir);
  if (samples.empty()) throw IngestionError("no samples found under " + run.data_dir);
  const std::size_t size = run.model.image_size;
  for (auto& s : samples) {
    if (s.image.shape() != Shape{3, size, size} || s.mask.shape() != Shape{1, size, size}) {
      s = resize_sample(s, size);
    }
  }
  return split(samples, split_spec(run, samples.size()));
}

Tensor<float> predict(const Model<float>& model, const Tensor<float>& image) {
  NoGradGuard guard;
  return model.forward(image).probs.value();
}

MetricsReport evaluate(const Model<float>& model, const std::vector<Sample>& samples,
                       double threshold) {
  MetricsReport report;
  for (const auto& s : samples) {
    check_geometry(model.config(), s);
    report.add(s.id, confusion(predict(model, s.image), s.mask, threshold));
  }
  report.finalize();
  return report;
}

MetricsReport evaluate(const Checkpoint& ckpt, const std::vector<Sample>& samples) {
  return evaluate(model_from_checkpoint(ckpt), samples, ckpt.run.threshold);
}

TrainResult train(const RunConfig& run, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const EpochCallback& on_epoch) {
  const ModelConfig& cfg = run.model;
  cfg.validate();
  if (train_set.empty()) throw ArgumentError("train: empty training split");
  for (const auto& s : train_set) check_geometry(cfg, s);
  for (const auto& s : val_set) check_geometry(cfg, s);
  const auto& select_set = val_set.empty() ? train_set : val_set;

  Model<float> model(cfg);
  Adam<float> adam(model.params().variables(), AdamHyper{.lr = cfg.lr});

  TrainResult result;
  result.best = snapshot(model, run, 0, 0.0);
  bool have_best = false;

  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto order = epoch_order(train_set.size(), cfg.seed, epoch);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const float inv = 1.0f / static_cast<float>(end - start);
      ++step;
      adam.zero_grad();
      double batch_loss = 0.0;
      try {
        for (std::size_t k = start; k < end; ++k) {
          const Sample& s = train_set[order[k]];
          auto fwd = model.forward(s.image);
          auto loss = ops::bce_with_logits(fwd.logits, s.mask);
          batch_loss += loss.value()[0];
          ops::scale(loss, inv).backward();
        }
      } catch (const NumericError& e) {
        throw DivergenceError("non-finite values at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(step) + ": " + e.what());
      }
      batch_loss /= static_cast<double>(end - start);
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(step));
      }
      adam.step();
      result.step_losses.push_back(batch_loss);
      loss_sum += batch_loss;
      ++batches;
    }

    EpochLog entry{epoch, loss_sum / static_cast<double>(batches),
                   evaluate(model, select_set, run.threshold).mean.dsc};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
    if (!have_best || entry.val_dsc > result.best.best_val_dsc) {
      result.best = snapshot(model, run, epoch, entry.val_dsc);
      have_best = true;
    }
  }
  result.last = snapshot(model, run, cfg.epochs, result.best.best_val_dsc);
  return result;
}

}  // namespace iscfnet
