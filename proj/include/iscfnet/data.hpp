#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "iscfnet/tensor.hpp"

namespace iscfnet {

struct Sample {
  std::string id;
  Tensor<float> image;  // (3, H, W) in [0, 1]
  Tensor<float> mask;   // (1, H, W) in {0, 1}
};

// Pairs `<id>.jpg|.jpeg|.png` in images_dir with `<id>_segmentation.png` in
// masks_dir. Result is sorted by id. Any unpaired file raises
// IngestionError listing the offending ids.
std::vector<Sample> load_isic(const std::filesystem::path& images_dir,
                              const std::filesystem::path& masks_dir);

// `<root>/images` + `<root>/masks`.
std::vector<Sample> load_dataset(const std::filesystem::path& root);

// Writes samples as paired PNGs in the ISIC layout under root.
void write_dataset(const std::filesystem::path& root, const std::vector<Sample>& samples);

// Bilinear resampling for the image, nearest neighbour for the mask.
Sample resize_sample(const Sample& s, std::size_t size);

struct SplitSpec {
  std::size_t train = 1815;
  std::size_t val = 259;
  std::size_t test = 520;
  std::uint64_t seed = 0;

  std::size_t total() const { return train + val + test; }

  // Reference partition of the 2594-image benchmark.
  static SplitSpec paper(std::uint64_t seed = 0) { return {1815, 259, 520, seed}; }

  // Same proportions scaled to n items: train and val are rounded to the
  // nearest integer, test takes the remainder.
  static SplitSpec proportional(std::size_t n, std::uint64_t seed);
};

struct SplitIds {
  std::vector<std::string> train, val, test;
};

// Sorts ids, shuffles with Fisher-Yates driven by SplitMix64(seed) using the
// descending convention (for i = n-1 .. 1: j = next() % (i+1); swap(i, j)),
// then takes consecutive runs of train/val/test items.
SplitIds split_ids(std::vector<std::string> ids, const SplitSpec& spec);

struct DatasetSplits {
  std::vector<Sample> train, val, test;
};

DatasetSplits split(const std::vector<Sample>& dataset, const SplitSpec& spec);

// Synthetic skin-lesion images: smooth skin-toned background with noise and
// one or two dark, irregularly bordered blobs. The mask is exactly the blob
// union and covers between 1% and 60% of the pixels.
std::vector<Sample> synth_generate(std::size_t n, std::size_t size, std::uint64_t seed);

}  // namespace iscfnet
