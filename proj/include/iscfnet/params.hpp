#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "iscfnet/autograd.hpp"

namespace iscfnet {

// Named trainable tensors in registration order. Registration order is the
// order of initialization draws, optimizer states, and checkpoint entries.
template <class T>
class ParameterStore {
 public:
  Variable<T> add(const std::string& name, Tensor<T> value) {
    if (index_.contains(name)) throw ArgumentError("duplicate parameter name: " + name);
    index_.emplace(name, entries_.size());
    entries_.push_back({name, Variable<T>::parameter(std::move(value))});
    return entries_.back().var;
  }

  bool contains(const std::string& name) const { return index_.contains(name); }

  Variable<T> get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ArgumentError("unknown parameter: " + name);
    return entries_[it->second].var;
  }

  struct Entry {
    std::string name;
    Variable<T> var;
  };

  const std::vector<Entry>& entries() const { return entries_; }

  std::vector<Variable<T>> variables() const {
    std::vector<Variable<T>> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.var);
    return out;
  }

  std::size_t scalar_count(const std::string& prefix = "") const {
    std::size_t n = 0;
    for (const auto& e : entries_)
      if (e.name.starts_with(prefix)) n += e.var.numel();
    return n;
  }

  void zero_grad() {
    for (auto& e : entries_) e.var.zero_grad();
  }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

// Registers parameters under a common name prefix, drawing initial values
// from one seeded stream.
template <class T>
class ParamBuilder {
 public:
  ParamBuilder(ParameterStore<T>& store, SplitMix64& rng, std::string prefix = "")
      : store_(store), rng_(rng), prefix_(std::move(prefix)) {}

  ParamBuilder scope(const std::string& name) const {
    return ParamBuilder(store_, rng_, prefix_ + name + ".");
  }

  // Xavier-normal weight shaped (in, out).
  Variable<T> weight(const std::string& name, std::size_t in, std::size_t out) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(in + out));
    return store_.add(prefix_ + name, Tensor<T>::randn({in, out}, rng_, stddev));
  }

  Variable<T> zeros(const std::string& name, Shape shape) {
    return store_.add(prefix_ + name, Tensor<T>(std::move(shape)));
  }

  Variable<T> ones(const std::string& name, Shape shape) {
    return store_.add(prefix_ + name, Tensor<T>(std::move(shape), T{1}));
  }

  Variable<T> value(const std::string& name, Tensor<T> v) {
    return store_.add(prefix_ + name, std::move(v));
  }

  SplitMix64& rng() { return rng_; }

 private:
  ParameterStore<T>& store_;
  SplitMix64& rng_;
  std::string prefix_;
};

template <class T>
struct Affine {
  Variable<T> w;  // (in, out)
  Variable<T> b;  // (out)

  static Affine make(ParamBuilder<T>& pb, const std::string& name, std::size_t in,
                     std::size_t out) {
    auto s = pb.scope(name);
    Affine a;
    a.w = s.weight("weight", in, out);
    a.b = s.zeros("bias", {out});
    return a;
  }

  std::size_t in() const { return w.shape()[0]; }
  std::size_t out() const { return w.shape()[1]; }
};

template <class T>
struct NormParams {
  Variable<T> gamma;
  Variable<T> beta;

  static NormParams make(ParamBuilder<T>& pb, const std::string& name, std::size_t width) {
    auto s = pb.scope(name);
    return {s.ones("gamma", {width}), s.zeros("beta", {width})};
  }
};

}  // namespace iscfnet
