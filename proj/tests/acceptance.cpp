// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>

#include "iscfnet/benchmark.hpp"
#include "iscfnet/gradcheck.hpp"
#include "iscfnet/train.hpp"
#include "support.hpp"

using namespace iscfnet;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... v) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, v...);
  return buf;
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  const auto results = run_gradcheck_suite("full", 20);
  const double dt = seconds_since(t0);
  double worst = 0;
  std::string failed;
  for (const auto& r : results) {
    worst = std::max(worst, r.worst_rel_error);
    if (!r.passed) failed += " " + r.name;
  }
  const bool ok = failed.empty() && dt < 120.0;
  return {ok, fmt("%zu ops x 20 seeds, worst rel %.2e (tol 1e-4), %.1fs (limit 120s)%s",
                  results.size(), worst, dt, failed.empty() ? "" : (" failed:" + failed).c_str())};
}

Outcome attention_oracle() {
  using Td = Tensor<double>;
  auto hand = kernels::efficient_attention(Td::from({2, 1}, {0, 0}),
                                           Td::from({2, 1}, {0, std::log(3.0)}),
                                           Td::from({2, 1}, {4, 8}));
  const double hand_err = std::max(std::fabs(hand[0] - 7.0), std::fabs(hand[1] - 7.0));
  SplitMix64 rng(2024);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 1 + rng.below(16), d = 1 + rng.below(8);
    auto q = Td::randn({n, d}, rng, 2.0), k = Td::randn({n, d}, rng, 2.0),
         v = Td::randn({n, d}, rng, 2.0);
    auto e = kernels::efficient_attention(q, k, v);
    auto want = oracle::efficient_attention(support::to_mat(q), support::to_mat(k), support::to_mat(v));
    worst = std::max(worst, support::max_diff(e, want));
  }
  return {worst <= 1e-6 && hand_err <= 1e-6,
          fmt("100 instances N<=16 d<=8, max |diff| %.2e; hand example error %.2e (tol 1e-6)",
              worst, hand_err)};
}

Outcome permutation_equivariance() {
  using Td = Tensor<double>;
  using V = Variable<double>;
  SplitMix64 rng(77);
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(15), heads = 1 + rng.below(2), c = 4 * heads;
    ParameterStore<double> store;
    ParamBuilder<double> pb(store, rng);
    auto p = BlockParams<double>::make(pb, "b", c, heads, 4);
    auto x = Td::randn({n, c}, rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i-- > 1;) std::swap(perm[i], perm[rng.below(i + 1)]);
    Td px({n, c});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) px[i * c + j] = x[perm[i] * c + j];
    auto y = transformer_block(V::constant(x), p);
    auto py = transformer_block(V::constant(px), p);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        worst = std::max(worst, std::fabs(py.y.value()[i * c + j] - y.y.value()[perm[i] * c + j]));
        worst = std::max(worst, std::fabs(py.attention.value()[i * c + j] -
                                          y.attention.value()[perm[i] * c + j]));
      }
  }
  return {worst <= 1e-6, fmt("50 permutations of transformer-block tokens, max |diff| %.2e (tol 1e-6)", worst)};
}

Outcome shape_chain() {
  SplitMix64 rng(5150);
  std::size_t failures = 0;
  std::string first;
  for (int trial = 0; trial < 25; ++trial) {
    ModelConfig cfg;
    cfg.patch_size = std::size_t{1} << (1 + rng.below(2));
    cfg.image_size = cfg.patch_size * 4 * (1 + rng.below(4));
    const std::size_t heads1 = 1 + rng.below(2);
    const std::size_t c1 = heads1 * 4 * (1 + rng.below(2));
    cfg.stage_channels = {c1, 2 * c1, 4 * c1};
    cfg.heads = {heads1, 2 * heads1, 4 * heads1};
    cfg.depths = {1 + rng.below(2), 1 + rng.below(2), 1 + rng.below(2)};
    cfg.iscf_hidden = 1 + rng.below(8);
    cfg.iscf_enabled = true;
    cfg.validate();
    Model<float> model(cfg, trial);
    for (auto& e : model.params().entries()) {
      if (e.name.find("chan_remap") != std::string::npos) {
        auto v = e.var;
        for (auto& x : v.mutable_value().data()) x = static_cast<float>(rng.normal() * 0.1);
      }
    }
    NoGradGuard g;
    auto image = Tensor<float>::uniform({3, cfg.image_size, cfg.image_size}, rng, 0, 1);
    auto r = model.forward(image);
    auto check = [&](bool ok, const std::string& what) {
      if (!ok) {
        ++failures;
        if (first.empty()) first = what + " in trial " + std::to_string(trial);
      }
    };
    for (std::size_t s = 0; s < kStages; ++s) {
      const Shape want{cfg.stage_tokens(s), cfg.stage_channels[s]};
      check(r.bundle.features[s].shape() == want, "F_s shape");
      check(r.bundle.attention[s].shape() == want, "A_s shape");
      check(r.bundle.height[s] == cfg.stage_side(s) && r.bundle.width[s] == cfg.stage_side(s),
            "stage grid");
      check(r.iscf->refined[s].shape() == want, "R_s shape");
      check(r.skips[s].shape() == want, "skip shape");
      const Shape eq{cfg.stage_tokens(2), cfg.stage_channels[2]};
      check(equalize(r.bundle.attention[s], s, cfg, *model.iscf()).shape() == eq, "equalize shape");
      if (s + 1 < kStages) {
        auto up = patch_expand(r.skips[s + 1], cfg.stage_side(s + 1), cfg.stage_side(s + 1),
                               model.decoder().expand[s]);
        check(up.shape() == want, "patch_expand shape");
      }
    }
    check(r.iscf->gates.shape() == Shape{3}, "gate shape");
    check(r.logits.shape() == (Shape{1, cfg.image_size, cfg.image_size}), "logit shape");
    bool in_range = true;
    for (float p : r.probs.value().data()) in_range = in_range && p > 0.0f && p < 1.0f;
    check(in_range, "probability range");
    check(model.counts().total() == count_params(cfg).total(), "parameter count");
  }
  return {failures == 0, fmt("25 random configs, %zu invariant failures%s", failures,
                             first.empty() ? "" : (" (first: " + first + ")").c_str())};
}

Outcome baseline_equivalence() {
  ModelConfig with = ModelConfig::desk(), without = with;
  without.iscf_enabled = false;
  SplitMix64 rng(99);
  std::size_t mismatched = 0;
  for (int i = 0; i < 10; ++i) {
    const std::uint64_t seed = rng.next();
    Model<float> a(with, seed), b(without, seed);
    NoGradGuard g;
    auto img = Tensor<float>::uniform({3, 64, 64}, rng, 0, 1);
    auto ra = a.forward(img), rb = b.forward(img);
    if (!(ra.logits.value() == rb.logits.value()) || !(ra.probs.value() == rb.probs.value())) {
      ++mismatched;
    }
  }
  return {mismatched == 0, fmt("10 random inputs and seeds, %zu bitwise mismatches", mismatched)};
}

Outcome parameter_accounting() {
  ModelConfig with = ModelConfig::paper(), without = with;
  without.iscf_enabled = false;
  const auto cw = count_params(with), co = count_params(without);
  const bool diff_ok = cw.total() - co.total() == IscfParams<float>::count(with);
  Model<float> big(with);
  const bool alloc_ok = big.counts().total() == cw.total() && big.counts().iscf == cw.iscf;
  const double rw = cw.total() / 23.43e6, ro = co.total() / 22.31e6;
  const bool band = rw >= 0.8 && rw <= 1.2 && ro >= 0.8 && ro <= 1.2;
  const bool desk_stable = count_params(ModelConfig::desk()).total() ==
                           Model<float>(ModelConfig::desk()).counts().total();
  return {diff_ok && alloc_ok && band && desk_stable,
          fmt("with %.2fM (reference 23.43M, ratio %.3f), without %.2fM (reference 22.31M, ratio %.3f), "
              "ISCF %zu = closed form %s, allocated %s",
              cw.total() / 1e6, rw, co.total() / 1e6, ro, cw.total() - co.total(),
              diff_ok ? "yes" : "no", alloc_ok && desk_stable ? "matches" : "differs")};
}

Outcome overfit() {
  RunConfig run;
  run.model = ModelConfig::desk();
  run.model.seed = 0;
  const auto data = synth_generate(8, 64, 1);
  const auto t0 = Clock::now();
  const auto a = train(run, data, {});
  const double dt = seconds_since(t0);
  const auto b = train(run, data, {});
  const std::size_t steps = a.step_losses.size();
  const auto report = evaluate(model_from_checkpoint(a.last), data);
  const bool deterministic = a.step_losses == b.step_losses;
  const bool ok = steps <= 200 && report.mean.dsc >= 0.95 && dt < 600.0 && deterministic;
  return {ok, fmt("8 synthetic 64x64, %zu steps, final train DSC %.4f (>= 0.95), %.1fs (limit 600s), "
                  "repeat run %s",
                  steps, report.mean.dsc, dt, deterministic ? "identical" : "DIFFERS")};
}

Outcome metrics_oracle() {
  const auto m = metrics({2, 2, 8, 4});
  const double err = std::max({std::fabs(m.dsc - 0.4), std::fabs(m.se - 1.0 / 3.0),
                               std::fabs(m.sp - 0.8), std::fabs(m.acc - 0.625)});
  SplitMix64 rng(31337);
  double worst = 0;
  for (int i = 0; i < 200; ++i) {
    ConfusionCounts c{1 + rng.below(1000), rng.below(1000), rng.below(1000), rng.below(1000)};
    const auto s = metrics(c);
    const double precision = double(c.tp) / double(c.tp + c.fp);
    worst = std::max(worst, std::fabs(s.dsc - 2 * precision * s.se / (precision + s.se)));
  }
  return {err <= 1e-4 && worst <= 1e-12,
          fmt("(2,2,8,4) error %.2e (tol 1e-4); 200 F1 identity checks, max |diff| %.2e", err, worst)};
}

Outcome scaling() {
  const auto t = bench_attention({1024, 2048}, 64, 11, 0);
  const double fe = t[1].median_efficient_s / t[0].median_efficient_s;
  const double fd = t[1].median_dense_s / t[0].median_dense_s;
  return {fe <= 2.6 && fd >= 3.2,
          fmt("N 1024->2048, d=64, medians of 11 runs: efficient x%.2f (<= 2.6), dense x%.2f (>= 3.2)",
              fe, fd)};
}

Outcome data_determinism() {
  std::vector<std::string> ids;
  for (char c = 'z'; c >= 'a'; --c) ids.emplace_back(1, c);
  const auto a = split_ids(ids, {3, 1, 1, 0});
  const auto b = split_ids(ids, {3, 1, 1, 0});
  const bool repeat = a.train == b.train && a.val == b.val && a.test == b.test;
  const bool pinned = a.train == std::vector<std::string>{"y", "i", "v"} &&
                      a.val == std::vector<std::string>{"q"} &&
                      a.test == std::vector<std::string>{"t"};
  SplitMix64 g(0);
  const bool stream = g.next() == 0xe220a8397b1dcdafULL && g.next() == 0x6e789e6aa1b965f4ULL;
  auto s1 = synth_generate(8, 64, 1), s2 = synth_generate(8, 64, 1);
  bool synth = true;
  for (std::size_t i = 0; i < s1.size(); ++i) {
    synth = synth && s1[i].image == s2[i].image && s1[i].mask == s2[i].mask;
  }
  return {repeat && pinned && stream && synth,
          fmt("split repeat %s, pinned vectors %s, splitmix64 stream %s, synthetic bitwise %s",
              repeat ? "ok" : "FAIL", pinned ? "ok" : "FAIL", stream ? "ok" : "FAIL",
              synth ? "ok" : "FAIL")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient-suite", gradient_suite},
      {"attention-oracle", attention_oracle},
      {"permutation-equivariance", permutation_equivariance},
      {"shape-chain", shape_chain},
      {"baseline-equivalence", baseline_equivalence},
      {"parameter-accounting", parameter_accounting},
      {"overfit-training", overfit},
      {"metrics-oracle", metrics_oracle},
      {"scaling-benchmark", scaling},
      {"data-determinism", data_determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %-26s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
