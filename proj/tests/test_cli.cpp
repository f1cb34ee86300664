#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "iscfnet/image_io.hpp"
#include "iscfnet/train.hpp"

using namespace iscfnet;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class Cli : public ::testing::Test {
 protected:
  static fs::path root() {
    return fs::temp_directory_path() / ("iscfnet_test_cli_" + std::to_string(::getpid()));
  }

  static void SetUpTestSuite() {
    fs::remove_all(root());
    fs::create_directories(root());
    ASSERT_EQ(run("synth-data --n 6 --size 32 --seed 3 --out-dir " + (root() / "data").string()).code, 0);
    write_config("run.json", base_config());
    ASSERT_EQ(run("train --config " + (root() / "run.json").string()).code, 0);
  }

  static void TearDownTestSuite() { fs::remove_all(root()); }

  static json base_config() {
    return {{"image_size", 32},     {"stage_channels", {8, 16, 32}},
            {"depths", {1, 1, 1}},  {"heads", {2, 2, 4}},
            {"iscf_hidden", 4},     {"batch_size", 2},
            {"lr", 0.002},          {"epochs", 3},
            {"split_train", 4},     {"split_val", 1},
            {"split_test", 1},      {"data_dir", (root() / "data").string()},
            {"out_dir", (root() / "run").string()}};
  }

  static fs::path write_config(const std::string& name, const json& j) {
    const auto p = root() / name;
    std::ofstream(p) << j.dump(2);
    return p;
  }

  static Result run(const std::string& args) {
    static int counter = 0;
    const auto out = root() / ("stdout_" + std::to_string(counter) + ".txt");
    const auto err = root() / ("stderr_" + std::to_string(counter++) + ".txt");
    const std::string cmd = std::string(ISCFNET_CLI) + " " + args + " >" + out.string() + " 2>" +
                            err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

  static std::string ckpt() { return (root() / "run" / "best.ckpt").string(); }
};

}  // namespace

TEST_F(Cli, TrainWritesArtifacts) {
  for (const char* f : {"best.ckpt", "last.ckpt", "train.log", "config.json"}) {
    EXPECT_TRUE(fs::exists(root() / "run" / f)) << f;
  }
  auto echoed = json::parse(slurp(root() / "run" / "config.json"));
  EXPECT_EQ(echoed["mlp_ratio"], 4);
  EXPECT_EQ(echoed["threshold"], 0.5);
  std::istringstream log(slurp(root() / "run" / "train.log"));
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) ++lines;
  EXPECT_EQ(lines, 4);
}

TEST_F(Cli, TrainRerunGivesIdenticalLog) {
  auto r = run("train --config " + (root() / "run.json").string() + " --out-dir " +
               (root() / "rerun").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(root() / "rerun" / "train.log"), slurp(root() / "run" / "train.log"));
  const auto a = load_checkpoint(root() / "rerun" / "best.ckpt");
  const auto b = load_checkpoint(root() / "run" / "best.ckpt");
  ASSERT_EQ(a.tensors.size(), b.tensors.size());
  for (std::size_t i = 0; i < a.tensors.size(); ++i) EXPECT_EQ(a.tensors[i].value, b.tensors[i].value);
}

TEST_F(Cli, TrainSeedOverrideChangesRun) {
  auto r = run("train --config " + (root() / "run.json").string() + " --seed 9 --out-dir " +
               (root() / "seed9").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(root() / "seed9" / "train.log"), slurp(root() / "run" / "train.log"));
  EXPECT_EQ(json::parse(slurp(root() / "seed9" / "config.json"))["seed"], 9);
}

TEST_F(Cli, TrainUnknownKeyExit2) {
  auto j = base_config();
  j["learning_rate"] = 0.1;
  auto r = run("train --config " + write_config("typo.json", j).string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("learning_rate"), std::string::npos);
}

TEST_F(Cli, TrainMissingDataExit3) {
  auto j = base_config();
  j["data_dir"] = (root() / "nowhere").string();
  EXPECT_EQ(run("train --config " + write_config("nodata.json", j).string()).code, 3);
}

TEST_F(Cli, TrainDivergenceExit4) {
  auto j = base_config();
  j["lr"] = 1e30;
  j["out_dir"] = (root() / "diverge").string();
  auto r = run("train --config " + write_config("diverge.json", j).string());
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("epoch"), std::string::npos);
}

TEST_F(Cli, EvalWritesMetricsMatchingStdout) {
  auto r = run("eval --ckpt " + ckpt() + " --split train --out-dir " + (root() / "ev_train").string());
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = json::parse(slurp(root() / "ev_train" / "metrics.json"));
  char want[128];
  std::snprintf(want, sizeof want, "DSC %.4f SE %.4f SP %.4f ACC %.4f",
                m["mean_dsc"].get<double>(), m["mean_se"].get<double>(),
                m["mean_sp"].get<double>(), m["mean_acc"].get<double>());
  EXPECT_NE(r.out.find(want), std::string::npos) << r.out;
  EXPECT_EQ(m["per_image"].size(), 4u);
}

TEST_F(Cli, EvalSplitsDiffer) {
  ASSERT_EQ(run("eval --ckpt " + ckpt() + " --split val --out-dir " + (root() / "ev_val").string()).code, 0);
  ASSERT_EQ(run("eval --ckpt " + ckpt() + " --split test --out-dir " + (root() / "ev_test").string()).code, 0);
  auto v = json::parse(slurp(root() / "ev_val" / "metrics.json"));
  auto t = json::parse(slurp(root() / "ev_test" / "metrics.json"));
  EXPECT_NE(v["per_image"][0]["id"], t["per_image"][0]["id"]);
}

TEST_F(Cli, EvalMissingCheckpointExit3) {
  EXPECT_EQ(run("eval --ckpt " + (root() / "absent.ckpt").string() + " --split val").code, 3);
}

TEST_F(Cli, PredictOverlayHasBothContours) {
  const auto img = root() / "data" / "images" / "synth_0000.png";
  const auto mask = root() / "data" / "masks" / "synth_0000_segmentation.png";
  const auto out = root() / "pred" / "overlay.png";
  auto r = run("predict --ckpt " + ckpt() + " --image " + img.string() + " --mask " +
               mask.string() + " --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  auto o = read_image(out);
  std::size_t green = 0, blue = 0;
  const std::size_t plane = o.shape()[1] * o.shape()[2];
  for (std::size_t i = 0; i < plane; ++i) {
    const float R = o[i], G = o[plane + i], B = o[2 * plane + i];
    green += R == 0.0f && G == 1.0f && B == 0.0f;
    blue += R == 0.0f && G == 0.0f && B == 1.0f;
  }
  EXPECT_GT(green, 0u);
  EXPECT_GT(blue, 0u);
  const auto m = read_image(root() / "pred" / "overlay_mask.png");
  for (float v : m.data()) ASSERT_TRUE(v == 0.0f || v == 1.0f);
}

TEST_F(Cli, PredictAllBackgroundHasNoBlue) {
  auto ck = load_checkpoint(ckpt());
  for (auto& t : ck.tensors) {
    if (t.name == "decoder.head_out.weight") t.value = Tensor<float>(t.value.shape());
    if (t.name == "decoder.head_out.bias") t.value = Tensor<float>(t.value.shape(), -50.0f);
  }
  save_checkpoint(root() / "background.ckpt", ck);
  const auto out = root() / "pred_bg" / "o.png";
  auto r = run("predict --ckpt " + (root() / "background.ckpt").string() + " --image " +
               (root() / "data" / "images" / "synth_0001.png").string() + " --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  auto o = read_image(out);
  const std::size_t plane = o.shape()[1] * o.shape()[2];
  for (std::size_t i = 0; i < plane; ++i) {
    ASSERT_FALSE(o[i] == 0.0f && o[plane + i] == 0.0f && o[2 * plane + i] == 1.0f);
  }
  const auto mask = read_image(root() / "pred_bg" / "o_mask.png");
  for (float v : mask.data()) ASSERT_EQ(v, 0.0f);
}

TEST_F(Cli, PredictUndecodableImageExit3) {
  std::ofstream(root() / "junk.png") << "junk";
  EXPECT_EQ(run("predict --ckpt " + ckpt() + " --image " + (root() / "junk.png").string() +
                " --out " + (root() / "junk_out.png").string())
                .code,
            3);
}

TEST_F(Cli, BenchAttentionCsvRows) {
  const auto csv = root() / "bench.csv";
  auto r = run("bench-attention --tokens 64,128,256 --dim 16 --repeats 3 --csv " + csv.string());
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(slurp(csv));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "N,median_efficient_s,median_dense_s");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
  EXPECT_NE(r.out.find("growth 64->128"), std::string::npos);
  EXPECT_NE(r.out.find("ok"), std::string::npos);
}

TEST_F(Cli, BenchAttentionRejectsTinyN) {
  EXPECT_EQ(run("bench-attention --tokens 32 --repeats 1").code, 2);
}

TEST_F(Cli, GradcheckScopeAndFault) {
  auto ok = run("gradcheck --scope efficient_attention --seeds 2");
  EXPECT_EQ(ok.code, 0);
  EXPECT_NE(ok.out.find("PASS efficient_attention"), std::string::npos);
  EXPECT_EQ(ok.out.find("transformer_block"), std::string::npos);
  auto bad = run("gradcheck --scope add --seeds 1 --inject-fault");
  EXPECT_EQ(bad.code, 5);
  EXPECT_NE(bad.err.find("fault_fixture"), std::string::npos);
  EXPECT_EQ(run("gradcheck --scope nonsense").code, 2);
}

TEST_F(Cli, ParamsReportsReferenceComparison) {
  auto r = run("params");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("23.43M"), std::string::npos);
  EXPECT_EQ(r.out.find("outside"), std::string::npos) << r.out;
  EXPECT_EQ(run("params --config " + (root() / "run.json").string()).code, 0);
}

TEST_F(Cli, UsageErrorsExit2) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("train").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("eval --ckpt x --split holdout").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}
