#include <functional>
#include <map>

#include "iscfnet/gradcheck.hpp"
#include "iscfnet/model.hpp"

namespace iscfnet {

namespace {

using V = Variable<double>;
using Tn = Tensor<double>;

struct OpCheck {
  std::string name;
  std::function<GradCheckReport(std::uint64_t seed, const GradCheckOptions&)> run;
};

// Reduces any output to a scalar with fixed random weights so that every
// output entry contributes a distinct gradient.
V project(const V& out, std::uint64_t seed) {
  SplitMix64 rng(mix_seed(seed, 0xB0B));
  return ops::sum(ops::mul(out, V::constant(Tn::randn(out.shape(), rng))));
}

Tn randn(Shape s, SplitMix64& rng, double stddev = 1.0) { return Tn::randn(std::move(s), rng, stddev); }

void perturb(ParameterStore<double>& store, SplitMix64& rng, double stddev = 0.2) {
  for (const auto& e : store.entries()) {
    auto v = e.var;
    for (auto& x : v.mutable_value().data()) x += stddev * rng.normal();
  }
}

std::vector<V> with_params(std::vector<V> inputs, const ParameterStore<double>& store) {
  for (auto& v : store.variables()) inputs.push_back(v);
  return inputs;
}

// Small config shared by module-level checks.
ModelConfig grad_config() {
  ModelConfig c;
  c.image_size = 32;
  c.patch_size = 4;
  c.stage_channels = {8, 16, 32};
  c.depths = {1, 1, 1};
  c.heads = {2, 2, 4};
  c.iscf_hidden = 4;
  c.iscf_enabled = true;
  return c;
}

// Checks a function of fresh random inputs, probing every coordinate.
OpCheck simple(std::string name, std::vector<Shape> shapes,
               std::function<V(const std::vector<V>&, std::uint64_t)> fn,
               double stddev = 1.0) {
  return {name, [shapes, fn, stddev](std::uint64_t seed, const GradCheckOptions& base) {
            SplitMix64 rng(seed);
            std::vector<Tn> inputs;
            for (const auto& s : shapes) inputs.push_back(randn(s, rng, stddev));
            GradCheckOptions o = base;
            o.seed = seed;
            return grad_check([&](const std::vector<V>& v) { return project(fn(v, seed), seed); },
                              inputs, o);
          }};
}

// Module check: inputs plus every parameter registered by `build`.
template <class Params>
OpCheck module(std::string name, std::vector<Shape> shapes,
               std::function<Params(ParamBuilder<double>&)> build,
               std::function<V(const std::vector<V>&, const Params&)> fn,
               std::size_t max_coords = 0) {
  return {name, [=](std::uint64_t seed, const GradCheckOptions& base) {
            SplitMix64 rng(seed);
            ParameterStore<double> store;
            ParamBuilder<double> pb(store, rng);
            Params p = build(pb);
            perturb(store, rng);
            std::vector<V> inputs;
            for (const auto& s : shapes) inputs.push_back(V::parameter(randn(s, rng)));
            GradCheckOptions o = base;
            o.seed = seed;
            o.max_coords = max_coords;
            return grad_check_variables([&] { return project(fn(inputs, p), seed); },
                                        with_params(inputs, store), o);
          }};
}

std::vector<OpCheck> build_checks() {
  std::vector<OpCheck> c;
  c.push_back(simple("add", {{3, 4}, {3, 4}}, [](auto& v, auto) { return ops::add(v[0], v[1]); }));
  c.push_back(simple("sub", {{3, 4}, {3, 4}}, [](auto& v, auto) { return ops::sub(v[0], v[1]); }));
  c.push_back(simple("mul", {{3, 4}, {3, 4}}, [](auto& v, auto) { return ops::mul(v[0], v[1]); }));
  c.push_back(simple("mul_scalar", {{3, 4}, {1}},
                     [](auto& v, auto) { return ops::mul_scalar(v[0], v[1]); }));
  c.push_back(simple("add_row", {{3, 4}, {4}}, [](auto& v, auto) { return ops::add_row(v[0], v[1]); }));
  c.push_back(simple("matmul", {{3, 4}, {4, 5}}, [](auto& v, auto) { return ops::matmul(v[0], v[1]); }));
  c.push_back(simple("linear", {{3, 4}, {4, 5}, {5}},
                     [](auto& v, auto) { return ops::linear(v[0], v[1], v[2]); }));
  c.push_back(simple("transpose", {{3, 4}}, [](auto& v, auto) { return ops::transpose(v[0]); }));
  c.push_back(simple("reshape", {{3, 4}}, [](auto& v, auto) { return ops::reshape(v[0], {2, 6}); }));
  c.push_back(simple("gather", {{3, 4}}, [](auto& v, std::uint64_t seed) {
    SplitMix64 rng(mix_seed(seed, 7));
    auto idx = std::make_shared<std::vector<std::size_t>>();
    for (int i = 0; i < 10; ++i) idx->push_back(rng.below(12));
    return ops::gather(v[0], idx, {2, 5});
  }));
  c.push_back(simple("slice_cols", {{3, 6}}, [](auto& v, auto) { return ops::slice_cols(v[0], 2, 5); }));
  c.push_back(simple("concat", {{2, 3}, {2, 2}, {2, 1}}, [](auto& v, auto) {
    return ops::add(ops::concat(std::vector<V>{v[0], v[1], v[2]}, 1),
                    ops::reshape(ops::concat(std::vector<V>{ops::reshape(v[0], {3, 2}),
                                                            ops::reshape(v[1], {2, 2}),
                                                            ops::reshape(v[2], {1, 2})},
                                             0),
                                 {2, 6}));
  }));
  c.push_back(simple("softmax", {{3, 4}}, [](auto& v, auto) {
    return ops::add(ops::softmax(v[0], 0), ops::softmax(v[0], 1));
  }));
  c.push_back(simple("softmax_cross_entropy", {{4}}, [](auto& v, std::uint64_t seed) {
    Tn onehot({4});
    onehot[seed % 4] = 1.0;
    return ops::scale(ops::sum(ops::mul(V::constant(onehot), ops::log(ops::softmax(v[0], 0)))),
                      -1.0);
  }));
  c.push_back(simple("layer_norm", {{3, 5}, {5}, {5}},
                     [](auto& v, auto) { return ops::layer_norm(v[0], v[1], v[2]); }));
  c.push_back(simple("gelu", {{3, 4}}, [](auto& v, auto) { return ops::gelu(v[0]); }, 2.0));
  c.push_back(simple("sigmoid", {{3, 4}}, [](auto& v, auto) { return ops::sigmoid(v[0]); }, 2.0));
  c.push_back(simple("global_avg_pool", {{3, 4}},
                     [](auto& v, auto) { return ops::global_avg_pool(v[0]); }));
  c.push_back(simple("fusion_conv_311", {{3, 2, 2, 2}, {3}, {1}},
                     [](auto& v, auto) { return ops::fusion_conv_311(v[0], v[1], v[2]); }));
  c.push_back({"bce_with_logits", [](std::uint64_t seed, const GradCheckOptions& base) {
                 SplitMix64 rng(seed);
                 Tn z = randn({3, 4}, rng, 2.0);
                 Tn y({3, 4});
                 for (auto& t : y.data()) t = static_cast<double>(rng.below(2));
                 GradCheckOptions o = base;
                 return grad_check([&](const std::vector<V>& v) { return ops::bce_with_logits(v[0], y); },
                                   {z}, o);
               }});
  c.push_back(simple("efficient_attention", {{3, 4}, {3, 4}, {3, 4}},
                     [](auto& v, auto) { return efficient_attention(v[0], v[1], v[2]); }));

  c.push_back(module<AttentionParams<double>>(
      "multi_head_attention", {{4, 8}},
      [](auto& pb) { return AttentionParams<double>::make(pb, "attn", 8, 2); },
      [](auto& v, auto& p) { return multi_head_efficient_attention(v[0], p); }));
  c.push_back(module<BlockParams<double>>(
      "transformer_block", {{3, 4}},
      [](auto& pb) { return BlockParams<double>::make(pb, "block", 4, 2, 4); },
      [](auto& v, auto& p) {
        auto r = transformer_block(v[0], p);
        return ops::add(r.y, r.attention);
      }));

  const ModelConfig gc = grad_config();
  ModelConfig embed_cfg = gc;
  embed_cfg.image_size = 8;
  embed_cfg.patch_size = 2;
  c.push_back(module<EncoderParams<double>>(
      "patch_embed", {{3, 8, 8}},
      [embed_cfg](auto& pb) { return EncoderParams<double>::make(pb, embed_cfg); },
      [embed_cfg](auto& v, auto& p) { return patch_embed(v[0], embed_cfg, p); }, 12));
  c.push_back(module<Affine<double>>(
      "patch_merge", {{16, 4}}, [](auto& pb) { return Affine<double>::make(pb, "merge", 16, 8); },
      [](auto& v, auto& p) { return patch_merge(v[0], 4, 4, p); }));
  c.push_back(module<Affine<double>>(
      "patch_expand", {{4, 4}}, [](auto& pb) { return Affine<double>::make(pb, "expand", 4, 8); },
      [](auto& v, auto& p) { return patch_expand(v[0], 2, 2, p); }));
  c.push_back(module<Affine<double>>(
      "skip_fuse", {{4, 3}, {4, 3}}, [](auto& pb) { return Affine<double>::make(pb, "fuse", 6, 3); },
      [](auto& v, auto& p) { return skip_fuse(v[0], v[1], p); }));

  const Shape a1{gc.stage_tokens(0), gc.stage_channels[0]};
  const Shape a2{gc.stage_tokens(1), gc.stage_channels[1]};
  const Shape a3{gc.stage_tokens(2), gc.stage_channels[2]};
  auto iscf_params = [gc](auto& pb) { return IscfParams<double>::make(pb, gc); };
  c.push_back(module<IscfParams<double>>(
      "equalize", {a1, a2}, iscf_params,
      [gc](auto& v, auto& p) {
        return ops::add(equalize(v[0], 0, gc, p), equalize(v[1], 1, gc, p));
      },
      40));
  c.push_back(module<IscfParams<double>>(
      "compute_gates", {a3, a3, a3}, iscf_params,
      [](auto& v, auto& p) { return compute_gates({v[0], v[1], v[2]}, p); }, 40));
  c.push_back(module<IscfParams<double>>(
      "fuse", {a3, a3, a3, {3}}, iscf_params,
      [gc](auto& v, auto& p) {
        return fuse({v[0], v[1], v[2]}, v[3], gc.stage_side(2), gc.stage_side(2), p);
      },
      40));
  c.push_back(module<IscfParams<double>>(
      "remap", {a3}, iscf_params,
      [](auto& v, auto& p) {
        auto r = remap(v[0], p);
        return ops::add(ops::add(ops::global_avg_pool(ops::mul(r[0], r[0])),
                                 ops::global_avg_pool(ops::mul(r[1], r[1]))),
                        ops::global_avg_pool(ops::mul(r[2], r[2])));
      },
      40));
  c.push_back(module<IscfParams<double>>(
      "iscf_forward", {a1, a2, a3}, iscf_params,
      [gc](auto& v, auto& p) {
        auto r = iscf_forward({v[0], v[1], v[2]}, gc, p).refined;
        return ops::concat(std::vector<V>{ops::reshape(r[0], {r[0].numel()}),
                                          ops::reshape(r[1], {r[1].numel()}),
                                          ops::reshape(r[2], {r[2].numel()})},
                           0);
      },
      12));

  c.push_back({"end_to_end", [gc](std::uint64_t seed, const GradCheckOptions& base) {
                 Model<double> model(gc, seed);
                 SplitMix64 rng(mix_seed(seed, 99));
                 perturb(model.params(), rng);
                 auto image = V::parameter(Tn::uniform({3, gc.image_size, gc.image_size}, rng, 0, 1));
                 Tn mask({1, gc.image_size, gc.image_size});
                 for (auto& t : mask.data()) t = static_cast<double>(rng.below(2));
                 std::vector<V> wrt{image};
                 for (auto& v : model.params().variables()) wrt.push_back(v);
                 GradCheckOptions o = base;
                 o.seed = seed;
                 o.max_coords = 3;
                 return grad_check_variables(
                     [&] { return ops::bce_with_logits(model.forward(image).logits, mask); }, wrt, o);
               }});
  return c;
}

// y = 3x with a backward pass that reports 2 instead of 3.
OpCheck fault_fixture() {
  return simple("fault_fixture", {{2, 3}}, [](auto& v, auto) {
    Tn out = v[0].value();
    for (auto& x : out.data()) x *= 3.0;
    return V::make(std::move(out), {v[0]}, [](Node<double>& n) {
      Tn g = n.grad;
      for (auto& x : g.data()) x *= 2.0;
      accumulate(*n.parents[0], g);
    });
  });
}

}  // namespace

std::vector<std::string> gradcheck_op_names() {
  std::vector<std::string> names;
  for (const auto& c : build_checks()) names.push_back(c.name);
  return names;
}

std::vector<OpCheckResult> run_gradcheck_suite(const std::string& scope, std::size_t seeds,
                                               bool inject_fault, const GradCheckOptions& opts) {
  if (seeds == 0) throw ArgumentError("gradcheck: seeds must be positive");
  auto checks = build_checks();
  if (scope != "full") {
    std::erase_if(checks, [&](const OpCheck& c) { return c.name != scope; });
    if (checks.empty()) throw ArgumentError("gradcheck: unknown scope '" + scope + "'");
  }
  if (inject_fault) checks.push_back(fault_fixture());

  std::vector<OpCheckResult> results;
  for (const auto& check : checks) {
    OpCheckResult r{check.name, 0.0, seeds, true};
    for (std::size_t s = 0; s < seeds; ++s) {
      const auto report = check.run(mix_seed(0x5EED, s), opts);
      r.worst_rel_error = std::max(r.worst_rel_error, report.max_rel_error);
      r.passed = r.passed && report.passed;
    }
    results.push_back(r);
  }
  return results;
}

}  // namespace iscfnet
