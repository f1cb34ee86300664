#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "iscfnet/autograd.hpp"

namespace iscfnet {

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moment estimates for one parameter tensor.
template <class T>
struct AdamState {
  std::uint64_t step = 0;
  Tensor<T> m;
  Tensor<T> v;
  AdamHyper hyper;
};

// One bias-corrected Adam update, no weight decay.
template <class T>
void adam_step(Tensor<T>& param, const Tensor<T>& grad, AdamState<T>& state) {
  if (param.shape() != grad.shape()) {
    throw ArgumentError("adam_step: grad shape " + shape_str(grad.shape()) +
                        " does not match parameter " + shape_str(param.shape()));
  }
  if (state.m.empty()) {
    state.m = Tensor<T>(param.shape());
    state.v = Tensor<T>(param.shape());
  } else if (state.m.shape() != param.shape() || state.v.shape() != param.shape()) {
    throw ArgumentError("adam_step: moment shapes do not match parameter");
  }
  state.step += 1;
  const auto& h = state.hyper;
  const T b1 = static_cast<T>(h.beta1), b2 = static_cast<T>(h.beta2);
  const double t = static_cast<double>(state.step);
  const T corr1 = static_cast<T>(1.0 - std::pow(h.beta1, t));
  const T corr2 = static_cast<T>(1.0 - std::pow(h.beta2, t));
  const T lr = static_cast<T>(h.lr), eps = static_cast<T>(h.eps);
  for (std::size_t i = 0; i < param.numel(); ++i) {
    const T g = grad[i];
    T& m = state.m[i];
    T& v = state.v[i];
    m = b1 * m + (T{1} - b1) * g;
    v = b2 * v + (T{1} - b2) * g * g;
    const T m_hat = m / corr1;
    const T v_hat = v / corr2;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

// Applies adam_step to a fixed list of parameters, one state each.
template <class T>
class Adam {
 public:
  Adam(std::vector<Variable<T>> params, AdamHyper hyper)
      : params_(std::move(params)), states_(params_.size()) {
    for (auto& s : states_) s.hyper = hyper;
  }

  // Parameters without an accumulated gradient are treated as zero-gradient.
  void step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i];
      if (p.has_grad()) {
        adam_step(p.mutable_value(), p.grad(), states_[i]);
      } else {
        adam_step(p.mutable_value(), Tensor<T>(p.shape()), states_[i]);
      }
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  std::uint64_t steps() const { return states_.empty() ? 0 : states_[0].step; }

 private:
  std::vector<Variable<T>> params_;
  std::vector<AdamState<T>> states_;
};

}  // namespace iscfnet
