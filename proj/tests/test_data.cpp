#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "iscfnet/data.hpp"
#include "iscfnet/image_io.hpp"
#include "iscfnet/rng.hpp"

using namespace iscfnet;
namespace fs = std::filesystem;

using Ids = std::vector<std::string>;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("iscfnet_test_data_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Ids letters(char last) {
  Ids v;
  for (char c = 'a'; c <= last; ++c) v.emplace_back(1, c);
  return v;
}

}  // namespace

// Vectors below come from tests/oracles/split_oracle.py.
TEST(SplitMix64, ReferenceStream) {
  SplitMix64 a(0);
  for (auto want : {0xe220a8397b1dcdafULL, 0x6e789e6aa1b965f4ULL, 0x06c45d188009454fULL,
                    0xf88bb8a8724c81ecULL, 0x1b39896a51a8749bULL}) {
    EXPECT_EQ(a.next(), want);
  }
  SplitMix64 b(1234567);
  for (auto want : {0x599ed017fb08fc85ULL, 0x2c73f08458540fa5ULL, 0x883ebce5a3f27c77ULL,
                    0x3fbef740e9177b3fULL, 0xe3b8346708cb5ecdULL}) {
    EXPECT_EQ(b.next(), want);
  }
}

TEST(Split, ReferenceAlphabetTruncated) {
  auto s = split_ids(letters('z'), {3, 1, 1, 0});
  EXPECT_EQ(s.train, (Ids{"y", "i", "v"}));
  EXPECT_EQ(s.val, (Ids{"q"}));
  EXPECT_EQ(s.test, (Ids{"t"}));
}

TEST(Split, ReferenceFiveIds) {
  auto s = split_ids(letters('e'), {3, 1, 1, 0});
  EXPECT_EQ(s.train, (Ids{"c", "d", "b"}));
  EXPECT_EQ(s.val, (Ids{"e"}));
  EXPECT_EQ(s.test, (Ids{"a"}));
}

TEST(Split, ReferenceIsicNames) {
  Ids ids;
  for (int i = 9; i >= 0; --i) ids.push_back("ISIC_000000" + std::to_string(i));
  auto s = split_ids(ids, {6, 2, 2, 42});
  EXPECT_EQ(s.train, (Ids{"ISIC_0000000", "ISIC_0000009", "ISIC_0000005", "ISIC_0000008",
                          "ISIC_0000006", "ISIC_0000004"}));
  EXPECT_EQ(s.val, (Ids{"ISIC_0000007", "ISIC_0000002"}));
  EXPECT_EQ(s.test, (Ids{"ISIC_0000001", "ISIC_0000003"}));
}

TEST(Split, InputOrderDoesNotMatter) {
  auto ids = letters('m');
  auto rev = ids;
  std::reverse(rev.begin(), rev.end());
  auto a = split_ids(ids, {7, 3, 3, 9});
  auto b = split_ids(rev, {7, 3, 3, 9});
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.test, b.test);
}

TEST(Split, PartitionIsDisjointAndComplete) {
  auto ids = letters('z');
  auto s = split_ids(ids, {18, 3, 5, 123});
  std::set<std::string> all;
  for (const auto* part : {&s.train, &s.val, &s.test}) all.insert(part->begin(), part->end());
  EXPECT_EQ(all.size(), ids.size());
  EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), ids.size());
}

TEST(Split, OversizedSpecRejected) {
  EXPECT_THROW(split_ids(letters('e'), {3, 2, 1, 0}), ArgumentError);
}

TEST(Split, ProportionalMatchesReferenceAtFullSize) {
  auto s = SplitSpec::proportional(2594, 0);
  EXPECT_EQ(s.train, 1815u);
  EXPECT_EQ(s.val, 259u);
  EXPECT_EQ(s.test, 520u);
  auto small = SplitSpec::proportional(10, 0);
  EXPECT_EQ(small.total(), 10u);
}

TEST(Synth, Deterministic) {
  auto a = synth_generate(8, 64, 1);
  auto b = synth_generate(8, 64, 1);
  ASSERT_EQ(a.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].mask, b[i].mask);
  }
  EXPECT_NE(synth_generate(1, 64, 2)[0].image, a[0].image);
}

TEST(Synth, MasksBinaryWithBoundedCoverage) {
  for (const auto& s : synth_generate(16, 64, 5)) {
    double pos = 0;
    for (float v : s.mask.data()) {
      ASSERT_TRUE(v == 0.0f || v == 1.0f);
      pos += v;
    }
    const double frac = pos / static_cast<double>(s.mask.numel());
    EXPECT_GE(frac, 0.01);
    EXPECT_LE(frac, 0.60);
    EXPECT_EQ(s.image.shape(), (Shape{3, 64, 64}));
    for (float v : s.image.data()) ASSERT_TRUE(v >= 0.0f && v <= 1.0f);
  }
}

TEST(Synth, InvalidArgumentsRejected) {
  EXPECT_THROW(synth_generate(0, 64, 0), ArgumentError);
  EXPECT_THROW(synth_generate(2, 8, 0), ArgumentError);
}

TEST(Ingest, RoundTripThroughDisk) {
  auto root = scratch("roundtrip");
  auto samples = synth_generate(3, 32, 9);
  write_dataset(root, samples);
  auto loaded = load_dataset(root);
  ASSERT_EQ(loaded.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(loaded[i].id, samples[i].id);
    EXPECT_EQ(loaded[i].mask, samples[i].mask);
    EXPECT_LE(max_abs_diff(loaded[i].image, samples[i].image), 0.5 / 255.0 + 1e-6);
  }
}

TEST(Ingest, OrphanImageNamed) {
  auto root = scratch("orphan");
  write_dataset(root, synth_generate(2, 32, 1));
  write_image_png(root / "images" / "lonely.png", synth_generate(1, 32, 2)[0].image);
  try {
    load_dataset(root);
    FAIL() << "expected IngestionError";
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("lonely"), std::string::npos);
  }
}

TEST(Ingest, EmptyDirectoriesGiveEmptyDataset) {
  auto root = scratch("empty");
  fs::create_directories(root / "images");
  fs::create_directories(root / "masks");
  EXPECT_TRUE(load_dataset(root).empty());
}

TEST(Ingest, UndecodableImageIsIoError) {
  auto root = scratch("corrupt");
  std::ofstream(root / "bad.png") << "not a png";
  EXPECT_THROW(read_image(root / "bad.png"), IoError);
}

TEST(Resize, IsicGeometry) {
  Sample s{"x", Tensor<float>({3, 576, 767}, 0.5f), Tensor<float>({1, 576, 767}, 1.0f)};
  auto r = resize_sample(s, 224);
  EXPECT_EQ(r.image.shape(), (Shape{3, 224, 224}));
  EXPECT_EQ(r.mask.shape(), (Shape{1, 224, 224}));
  for (float v : r.mask.data()) ASSERT_EQ(v, 1.0f);
}

TEST(Resize, CheckerboardStaysBinary) {
  Tensor<float> mask({1, 37, 53});
  for (std::size_t y = 0; y < 37; ++y)
    for (std::size_t x = 0; x < 53; ++x) mask[y * 53 + x] = ((x + y) % 2) ? 1.0f : 0.0f;
  auto r = resize_sample({"c", Tensor<float>({3, 37, 53}), mask}, 64);
  for (float v : r.mask.data()) ASSERT_TRUE(v == 0.0f || v == 1.0f);
  EXPECT_THROW(resize_sample({"c", Tensor<float>({3, 4, 4}), Tensor<float>({1, 4, 4})}, 0),
               ArgumentError);
}
