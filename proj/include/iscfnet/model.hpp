#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "iscfnet/decoder.hpp"
#include "iscfnet/iscf.hpp"

namespace iscfnet {

struct ParamCounts {
  std::size_t encoder = 0;
  std::size_t iscf = 0;
  std::size_t decoder = 0;
  std::size_t total() const { return encoder + iscf + decoder; }
};

// Closed-form counts from the configuration (no parameters allocated).
inline ParamCounts count_params(const ModelConfig& cfg) {
  ParamCounts c;
  c.encoder = EncoderParams<float>::count(cfg);
  c.decoder = DecoderParams<float>::count(cfg);
  c.iscf = cfg.iscf_enabled ? IscfParams<float>::count(cfg) : 0;
  return c;
}

template <class T>
struct ForwardResult {
  StageBundle<T> bundle;
  std::array<Variable<T>, kStages> skips;  // F_s (+ R_s with ISCF)
  std::optional<IscfOutput<T>> iscf;
  Variable<T> logits;  // (1, H, W)
  Variable<T> probs;   // sigmoid(logits)
};

// The U-shaped segmentation network. Backbone parameters are drawn before
// ISCF parameters, so models with and without ISCF built from the same seed
// share identical backbone weights.
template <class T>
class Model {
 public:
  explicit Model(const ModelConfig& cfg) : Model(cfg, cfg.seed) {}

  Model(const ModelConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), store_(std::make_unique<ParameterStore<T>>()) {
    cfg_.validate();
    SplitMix64 rng(seed);
    ParamBuilder<T> pb(*store_, rng);
    encoder_ = EncoderParams<T>::make(pb, cfg_);
    decoder_ = DecoderParams<T>::make(pb, cfg_);
    if (cfg_.iscf_enabled) iscf_ = IscfParams<T>::make(pb, cfg_);
  }

  const ModelConfig& config() const { return cfg_; }
  ParameterStore<T>& params() { return *store_; }
  const ParameterStore<T>& params() const { return *store_; }
  const EncoderParams<T>& encoder() const { return encoder_; }
  const DecoderParams<T>& decoder() const { return decoder_; }
  const std::optional<IscfParams<T>>& iscf() const { return iscf_; }

  ForwardResult<T> forward(const Variable<T>& image) const {
    ForwardResult<T> r;
    r.bundle = encode(image, cfg_, encoder_);
    r.skips = r.bundle.features;
    if (iscf_) {
      r.iscf = iscf_forward(r.bundle.attention, cfg_, *iscf_);
      for (std::size_t s = 0; s < kStages; ++s) {
        r.skips[s] = ops::add(r.bundle.features[s], r.iscf->refined[s]);
      }
    }
    r.logits = decode(r.skips, cfg_, decoder_);
    r.probs = ops::sigmoid(r.logits);
    return r;
  }

  ForwardResult<T> forward(const Tensor<T>& image) const {
    return forward(Variable<T>::constant(image));
  }

  // Trainable scalars actually allocated, grouped by top-level module.
  ParamCounts counts() const {
    return {store_->scalar_count("encoder."), store_->scalar_count("iscf."),
            store_->scalar_count("decoder.")};
  }

  // Copies every parameter present in `src` by name. Parameters of this
  // model missing from `src` are left untouched; extra entries in `src` are
  // ignored unless `strict`.
  template <class U>
  void load_from(const ParameterStore<U>& src, bool strict = false) {
    for (const auto& e : src.entries()) {
      if (!store_->contains(e.name)) {
        if (strict) throw ArgumentError("parameter '" + e.name + "' not in model");
        continue;
      }
      auto dst = store_->get(e.name);
      if (dst.shape() != e.var.shape()) {
        throw ArgumentError("parameter '" + e.name + "' shape " + shape_str(e.var.shape()) +
                            " does not match model " + shape_str(dst.shape()));
      }
      dst.mutable_value() = e.var.value().template cast<T>();
    }
  }

 private:
  ModelConfig cfg_;
  std::unique_ptr<ParameterStore<T>> store_;
  EncoderParams<T> encoder_;
  DecoderParams<T> decoder_;
  std::optional<IscfParams<T>> iscf_;
};

}  // namespace iscfnet
