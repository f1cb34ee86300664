#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "iscfnet/autograd.hpp"

namespace iscfnet {

struct GradCheckOptions {
  double tol = 1e-4;
  double step = 1e-5;
  // Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor);
  // the floor keeps near-zero gradients from amplifying round-off.
  double rel_floor = 1e-3;
  // Coordinates probed per variable; 0 probes every entry.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t coords_checked = 0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  bool passed = true;
};

// Compares reverse-mode gradients of `fn` with respect to `wrt` against
// central finite differences. `fn` must rebuild its graph from the current
// values of `wrt` on every call; probes perturb those values in place and
// restore them afterwards.
inline GradCheckReport grad_check_variables(const std::function<Variable<double>()>& fn,
                                            std::vector<Variable<double>> wrt,
                                            const GradCheckOptions& opts = {}) {
  for (auto& v : wrt) v.zero_grad();
  Variable<double> out = fn();
  if (out.numel() != 1) {
    throw ArgumentError("grad_check: function output must be scalar, got " +
                        shape_str(out.shape()));
  }
  out.backward();
  std::vector<Tensor<double>> analytic;
  analytic.reserve(wrt.size());
  for (auto& v : wrt) analytic.push_back(v.has_grad() ? v.grad() : Tensor<double>(v.shape()));

  auto eval = [&] {
    NoGradGuard guard;
    return fn().value()[0];
  };

  GradCheckReport report;
  SplitMix64 rng(opts.seed);
  for (std::size_t k = 0; k < wrt.size(); ++k) {
    auto& values = wrt[k].mutable_value();
    const std::size_t n = values.numel();
    std::vector<std::size_t> coords;
    if (opts.max_coords == 0 || opts.max_coords >= n) {
      coords.resize(n);
      for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      for (std::size_t i = 0; i < opts.max_coords; ++i) coords.push_back(rng.below(n));
    }
    for (std::size_t idx : coords) {
      const double x0 = values[idx];
      values[idx] = x0 + opts.step;
      const double fp = eval();
      values[idx] = x0 - opts.step;
      const double fm = eval();
      values[idx] = x0;
      const double numeric = (fp - fm) / (2.0 * opts.step);
      const double a = analytic[k][idx];
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), opts.rel_floor});
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_input = k;
        report.worst_index = idx;
      }
      ++report.coords_checked;
    }
  }
  report.passed = report.max_rel_error <= opts.tol;
  return report;
}

using ScalarFn = std::function<Variable<double>(const std::vector<Variable<double>>&)>;

// Convenience form: checks `fn` with respect to freshly created inputs.
inline GradCheckReport grad_check(const ScalarFn& fn, const std::vector<Tensor<double>>& inputs,
                                  const GradCheckOptions& opts = {}) {
  std::vector<Variable<double>> vars;
  vars.reserve(inputs.size());
  for (const auto& t : inputs) vars.push_back(Variable<double>::parameter(t));
  return grad_check_variables([&] { return fn(vars); }, vars, opts);
}

// The named suite run by `gradcheck` and the acceptance tests.
struct OpCheckResult {
  std::string name;
  double worst_rel_error = 0.0;
  std::size_t seeds = 0;
  bool passed = true;
};

std::vector<std::string> gradcheck_op_names();

// Runs every op in `scope` ("full" for all) over `seeds` random seeds. With
// `inject_fault`, a deliberately wrong backward pass is added to the run so
// callers can confirm failures are detected. Unknown scopes raise
// ArgumentError.
std::vector<OpCheckResult> run_gradcheck_suite(const std::string& scope, std::size_t seeds,
                                               bool inject_fault = false,
                                               const GradCheckOptions& opts = {});

}  // namespace iscfnet
