#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "iscfnet/benchmark.hpp"
#include "iscfnet/gradcheck.hpp"
#include "iscfnet/image_io.hpp"
#include "iscfnet/overlay.hpp"
#include "iscfnet/train.hpp"

namespace fs = std::filesystem;
using namespace iscfnet;

namespace {

enum Exit : int { kOk = 0, kConfig = 2, kData = 3, kDiverged = 4, kGradFail = 5 };

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

int cmd_train(const TrainArgs& a) {
  RunConfig run = load_run_config(a.config);
  if (a.seed) run.model.seed = *a.seed;
  if (!a.out_dir.empty()) run.out_dir = a.out_dir;
  run.model.validate();

  const auto data = load_run_data(run);
  const fs::path out(run.out_dir);
  fs::create_directories(out);
  write_text(out / "config.json", to_json(run).dump(2) + "\n");

  const fs::path log_path = out / "train.log";
  write_text(log_path, "epoch,mean_loss,val_dsc\n");
  std::ofstream log(log_path, std::ios::app);
  auto result = train(run, data.train, data.val, [&](const EpochLog& e) {
    std::ostringstream line;
    line << e.epoch << ',' << fmt("%.9g", e.mean_loss) << ',' << fmt("%.9g", e.val_dsc);
    log << line.str() << '\n' << std::flush;
    std::cout << "epoch " << line.str() << '\n';
  });
  save_checkpoint(out / "best.ckpt", result.best);
  save_checkpoint(out / "last.ckpt", result.last);
  std::cout << "best epoch " << result.best.epoch << " val_dsc "
            << fmt("%.4f", result.best.best_val_dsc) << '\n';
  return kOk;
}

struct EvalArgs {
  std::string ckpt;
  std::string split = "test";
  std::string data;
  std::string out_dir;
};

int cmd_eval(const EvalArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  RunConfig run = ckpt.run;
  if (!a.data.empty()) run.data_dir = a.data;
  const auto data = load_run_data(run);
  const std::vector<Sample>& samples =
      a.split == "train" ? data.train : a.split == "val" ? data.val : data.test;
  if (samples.empty()) throw IngestionError("split '" + a.split + "' is empty");

  const auto report = evaluate(ckpt, samples);
  const fs::path out = a.out_dir.empty() ? fs::path(a.ckpt).parent_path() : fs::path(a.out_dir);
  if (!out.empty()) fs::create_directories(out);
  write_text(out / "metrics.json", to_json(report).dump(2) + "\n");
  std::cout << "split " << a.split << " n=" << samples.size() << '\n';
  std::cout << "DSC " << fmt("%.4f", report.mean.dsc) << " SE " << fmt("%.4f", report.mean.se)
            << " SP " << fmt("%.4f", report.mean.sp) << " ACC " << fmt("%.4f", report.mean.acc)
            << '\n';
  return kOk;
}

struct PredictArgs {
  std::string ckpt, image, out, mask;
};

int cmd_predict(const PredictArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  const Model<float> model = model_from_checkpoint(ckpt);
  const std::size_t size = model.config().image_size;

  Sample s{fs::path(a.image).stem().string(), read_image(a.image), Tensor<float>({1, 1, 1})};
  if (!a.mask.empty()) s.mask = read_mask(a.mask);
  else s.mask = Tensor<float>({1, s.image.shape()[1], s.image.shape()[2]});
  if (s.image.shape()[1] != size || s.image.shape()[2] != size) s = resize_sample(s, size);

  Tensor<float> pred = predict(model, s.image);
  for (auto& v : pred.data()) v = v >= static_cast<float>(ckpt.run.threshold) ? 1.0f : 0.0f;

  std::optional<Tensor<float>> truth;
  if (!a.mask.empty()) truth = s.mask;
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_rgb_png(out, render_overlay(s.image, pred, truth));
  const fs::path mask_path = out.parent_path() / (out.stem().string() + "_mask.png");
  write_mask_png(mask_path, pred);
  std::cout << "overlay " << out.string() << "\nmask " << mask_path.string() << '\n';
  return kOk;
}

struct SynthArgs {
  std::size_t n = 8;
  std::size_t size = 64;
  std::uint64_t seed = 0;
  std::string out_dir = "synth";
};

int cmd_synth(const SynthArgs& a) {
  write_dataset(a.out_dir, synth_generate(a.n, a.size, a.seed));
  std::cout << "wrote " << a.n << " samples to " << a.out_dir << '\n';
  return kOk;
}

struct BenchArgs {
  std::vector<std::size_t> tokens{1024, 2048};
  std::size_t dim = 64;
  std::size_t repeats = 9;
  std::uint64_t seed = 0;
  std::string csv;
};

int cmd_bench(const BenchArgs& a) {
  const double diff = attention_cross_check(64, std::min<std::size_t>(a.dim, 16), a.seed);
  std::cout << "cross-check N=64: max |efficient - dense_efficient| = " << fmt("%.3e", diff)
            << (diff <= 1e-4 ? " ok" : " MISMATCH") << '\n';

  const auto timings = bench_attention(a.tokens, a.dim, a.repeats, a.seed);
  std::ostringstream csv;
  csv << "N,median_efficient_s,median_dense_s\n";
  for (const auto& t : timings) {
    csv << t.tokens << ',' << fmt("%.9g", t.median_efficient_s) << ','
        << fmt("%.9g", t.median_dense_s) << '\n';
  }
  if (a.csv.empty()) {
    std::cout << csv.str();
  } else {
    write_text(a.csv, csv.str());
  }
  for (std::size_t i = 1; i < timings.size(); ++i) {
    const auto& p = timings[i - 1];
    const auto& q = timings[i];
    std::cout << "growth " << p.tokens << "->" << q.tokens << ": efficient x"
              << fmt("%.2f", q.median_efficient_s / p.median_efficient_s) << ", dense x"
              << fmt("%.2f", q.median_dense_s / p.median_dense_s) << '\n';
  }
  return kOk;
}

struct GradArgs {
  std::string scope = "full";
  std::size_t seeds = 20;
  bool inject_fault = false;
};

int cmd_gradcheck(const GradArgs& a) {
  const auto results = run_gradcheck_suite(a.scope, a.seeds, a.inject_fault);
  std::vector<std::string> failed;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " worst_rel="
              << fmt("%.3e", r.worst_rel_error) << " seeds=" << r.seeds << '\n';
    if (!r.passed) failed.push_back(r.name);
  }
  if (failed.empty()) return kOk;
  std::cerr << "gradient check failed:";
  for (const auto& f : failed) std::cerr << ' ' << f;
  std::cerr << '\n';
  return kGradFail;
}

struct ParamsArgs {
  std::string config;
};

constexpr double kReferenceWith = 23.43e6;
constexpr double kReferenceWithout = 22.31e6;

int cmd_params(const ParamsArgs& a) {
  ModelConfig cfg = a.config.empty() ? ModelConfig::paper() : load_run_config(a.config).model;
  cfg.validate();
  ModelConfig with = cfg, without = cfg;
  with.iscf_enabled = true;
  without.iscf_enabled = false;
  const auto cw = count_params(with);
  const auto co = count_params(without);
  auto row = [](const char* name, std::size_t n) {
    std::cout << "  " << name << ' ' << n << '\n';
  };
  std::cout << "with ISCF\n";
  row("encoder", cw.encoder);
  row("iscf", cw.iscf);
  row("decoder", cw.decoder);
  row("total", cw.total());
  std::cout << "without ISCF\n";
  row("encoder", co.encoder);
  row("decoder", co.decoder);
  row("total", co.total());
  std::cout << "difference " << cw.total() - co.total() << " (ISCF closed form " << cw.iscf
            << ")\n";
  const double rw = cw.total() / kReferenceWith, ro = co.total() / kReferenceWithout;
  auto verdict = [](double r) { return r >= 0.8 && r <= 1.2 ? "within +-20%" : "outside +-20%"; };
  std::cout << "reference with ISCF 23.43M: achieved " << fmt("%.2f", cw.total() / 1e6)
            << "M ratio " << fmt("%.3f", rw) << ' ' << verdict(rw) << '\n';
  std::cout << "reference without ISCF 22.31M: achieved " << fmt("%.2f", co.total() / 1e6)
            << "M ratio " << fmt("%.3f", ro) << ' ' << verdict(ro) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"U-shaped efficient-transformer segmentation with inter-scale context fusion"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "train a model from a run config");
  train_cmd->add_option("--config", ta.config, "run config JSON")->required();
  train_cmd->add_option("--seed", ta.seed, "override the model seed");
  train_cmd->add_option("--out-dir", ta.out_dir, "override the output directory");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a split");
  eval_cmd->add_option("--ckpt", ea.ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--split", ea.split, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  eval_cmd->add_option("--data", ea.data, "override the dataset directory");
  eval_cmd->add_option("--out-dir", ea.out_dir, "directory for metrics.json");

  PredictArgs pa;
  auto* predict_cmd = app.add_subcommand("predict", "write a contour overlay for one image");
  predict_cmd->add_option("--ckpt", pa.ckpt, "checkpoint file")->required();
  predict_cmd->add_option("--image", pa.image, "input image")->required();
  predict_cmd->add_option("--out", pa.out, "overlay PNG")->required();
  predict_cmd->add_option("--mask", pa.mask, "ground-truth mask for the green contour");

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth-data", "generate a synthetic lesion dataset");
  synth_cmd->add_option("--n", sa.n, "number of samples");
  synth_cmd->add_option("--size", sa.size, "image side in pixels");
  synth_cmd->add_option("--seed", sa.seed, "generator seed");
  synth_cmd->add_option("--out-dir", sa.out_dir, "dataset root (images/, masks/)");

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench-attention", "time efficient vs dense attention");
  bench_cmd->add_option("--tokens", ba.tokens, "token counts, comma separated")->delimiter(',');
  bench_cmd->add_option("--dim", ba.dim, "feature dimension");
  bench_cmd->add_option("--repeats", ba.repeats, "timed runs per token count");
  bench_cmd->add_option("--seed", ba.seed, "data seed");
  bench_cmd->add_option("--csv", ba.csv, "write CSV here instead of stdout");

  GradArgs ga;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  grad_cmd->add_option("--scope", ga.scope, "full or one op name");
  grad_cmd->add_option("--seeds", ga.seeds, "random seeds per op");
  grad_cmd->add_flag("--inject-fault", ga.inject_fault, "add an op with a wrong gradient");

  ParamsArgs pr;
  auto* params_cmd = app.add_subcommand("params", "parameter accounting");
  params_cmd->add_option("--config", pr.config, "run config JSON (default: full scale)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*train_cmd) return cmd_train(ta);
    if (*eval_cmd) return cmd_eval(ea);
    if (*predict_cmd) return cmd_predict(pa);
    if (*synth_cmd) return cmd_synth(sa);
    if (*bench_cmd) return cmd_bench(ba);
    if (*grad_cmd) return cmd_gradcheck(ga);
    if (*params_cmd) return cmd_params(pr);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDiverged;
  } catch (const IngestionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  }
  return kConfig;
}
