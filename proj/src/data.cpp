#include "iscfnet/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <unordered_map>

#include <opencv2/imgproc.hpp>

#include "iscfnet/image_io.hpp"
#include "iscfnet/rng.hpp"

namespace iscfnet {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kMaskSuffix = "_segmentation.png";

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::map<std::string, fs::path> list_images(const fs::path& dir) {
  std::map<std::string, fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string ext = lower(e.path().extension().string());
    if (ext != ".jpg" && ext != ".jpeg" && ext != ".png") continue;
    out.emplace(e.path().stem().string(), e.path());
  }
  return out;
}

std::map<std::string, fs::path> list_masks(const fs::path& dir) {
  std::map<std::string, fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name.size() <= kMaskSuffix.size() || !name.ends_with(kMaskSuffix)) continue;
    out.emplace(name.substr(0, name.size() - kMaskSuffix.size()), e.path());
  }
  return out;
}

}  // namespace

std::vector<Sample> load_isic(const fs::path& images_dir, const fs::path& masks_dir) {
  for (const auto& d : {images_dir, masks_dir}) {
    if (!fs::is_directory(d)) throw IoError("not a directory: " + d.string());
  }
  const auto images = list_images(images_dir);
  const auto masks = list_masks(masks_dir);

  std::vector<std::string> orphans;
  for (const auto& [id, _] : images)
    if (!masks.contains(id)) orphans.push_back(id + " (image without mask)");
  for (const auto& [id, _] : masks)
    if (!images.contains(id)) orphans.push_back(id + " (mask without image)");
  if (!orphans.empty()) {
    std::string msg = "unpaired dataset files:";
    for (const auto& o : orphans) msg += " " + o;
    throw IngestionError(msg);
  }
  if (images.empty()) {
    std::cerr << "warning: no images found in " << images_dir.string() << '\n';
    return {};
  }

  std::vector<Sample> out;
  out.reserve(images.size());
  for (const auto& [id, path] : images) {
    Sample s{id, read_image(path), read_mask(masks.at(id))};
    if (s.image.dim(1) != s.mask.dim(1) || s.image.dim(2) != s.mask.dim(2)) {
      throw IngestionError("image and mask sizes differ for " + id);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> load_dataset(const fs::path& root) {
  return load_isic(root / "images", root / "masks");
}

void write_dataset(const fs::path& root, const std::vector<Sample>& samples) {
  fs::create_directories(root / "images");
  fs::create_directories(root / "masks");
  for (const auto& s : samples) {
    write_image_png(root / "images" / (s.id + ".png"), s.image);
    write_mask_png(root / "masks" / (s.id + std::string(kMaskSuffix)), s.mask);
  }
}

Sample resize_sample(const Sample& s, std::size_t size) {
  if (size == 0) throw ArgumentError("resize_sample: size must be positive");
  const int src_h = static_cast<int>(s.image.dim(1)), src_w = static_cast<int>(s.image.dim(2));
  const int dst = static_cast<int>(size);
  const std::size_t plane_in = s.image.dim(1) * s.image.dim(2);

  Sample out{s.id, Tensor<float>({3, size, size}), Tensor<float>({1, size, size})};
  for (std::size_t c = 0; c < 3; ++c) {
    cv::Mat src(src_h, src_w, CV_32FC1, const_cast<float*>(s.image.data().data() + c * plane_in));
    cv::Mat dst_mat(dst, dst, CV_32FC1, out.image.data().data() + c * size * size);
    cv::resize(src, dst_mat, cv::Size(dst, dst), 0, 0, cv::INTER_LINEAR);
  }
  cv::Mat msrc(static_cast<int>(s.mask.dim(1)), static_cast<int>(s.mask.dim(2)), CV_32FC1,
               const_cast<float*>(s.mask.data().data()));
  cv::Mat mdst(dst, dst, CV_32FC1, out.mask.data().data());
  cv::resize(msrc, mdst, cv::Size(dst, dst), 0, 0, cv::INTER_NEAREST);
  for (auto& v : out.image.data()) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

SplitSpec SplitSpec::proportional(std::size_t n, std::uint64_t seed) {
  const SplitSpec ref = paper();
  const double scale = static_cast<double>(n) / static_cast<double>(ref.total());
  SplitSpec s;
  s.seed = seed;
  s.train = static_cast<std::size_t>(std::llround(ref.train * scale));
  s.val = static_cast<std::size_t>(std::llround(ref.val * scale));
  s.train = std::min(s.train, n);
  s.val = std::min(s.val, n - s.train);
  s.test = n - s.train - s.val;
  return s;
}

SplitIds split_ids(std::vector<std::string> ids, const SplitSpec& spec) {
  if (spec.total() > ids.size()) {
    throw ArgumentError("split: counts " + std::to_string(spec.train) + "/" +
                        std::to_string(spec.val) + "/" + std::to_string(spec.test) +
                        " exceed dataset length " + std::to_string(ids.size()));
  }
  std::sort(ids.begin(), ids.end());
  SplitMix64 rng(spec.seed);
  for (std::size_t i = ids.size(); i-- > 1;) {
    const std::size_t j = rng.below(i + 1);
    std::swap(ids[i], ids[j]);
  }
  SplitIds out;
  auto it = ids.begin();
  out.train.assign(it, it + static_cast<std::ptrdiff_t>(spec.train));
  it += static_cast<std::ptrdiff_t>(spec.train);
  out.val.assign(it, it + static_cast<std::ptrdiff_t>(spec.val));
  it += static_cast<std::ptrdiff_t>(spec.val);
  out.test.assign(it, it + static_cast<std::ptrdiff_t>(spec.test));
  return out;
}

DatasetSplits split(const std::vector<Sample>& dataset, const SplitSpec& spec) {
  std::unordered_map<std::string, const Sample*> by_id;
  std::vector<std::string> ids;
  for (const auto& s : dataset) {
    if (!by_id.emplace(s.id, &s).second) throw ArgumentError("split: duplicate id " + s.id);
    ids.push_back(s.id);
  }
  const SplitIds parts = split_ids(std::move(ids), spec);
  auto collect = [&](const std::vector<std::string>& names) {
    std::vector<Sample> v;
    v.reserve(names.size());
    for (const auto& n : names) v.push_back(*by_id.at(n));
    return v;
  };
  return {collect(parts.train), collect(parts.val), collect(parts.test)};
}

namespace {

struct Blob {
  double cx, cy, ax, by, angle;
  double amp[2], freq[2], phase[2];
};

Blob draw_blob(SplitMix64& rng, double size) {
  Blob b{};
  b.cx = rng.uniform(0.25, 0.75) * size;
  b.cy = rng.uniform(0.25, 0.75) * size;
  b.ax = rng.uniform(0.08, 0.28) * size;
  b.by = rng.uniform(0.08, 0.28) * size;
  b.angle = rng.uniform(0.0, std::numbers::pi);
  for (int k = 0; k < 2; ++k) {
    b.amp[k] = rng.uniform(0.03, 0.10);
    b.freq[k] = static_cast<double>(3 + 2 * k + static_cast<int>(rng.below(3)));
    b.phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  return b;
}

bool inside(const Blob& b, double x, double y) {
  const double dx = x - b.cx, dy = y - b.cy;
  const double c = std::cos(b.angle), s = std::sin(b.angle);
  const double u = (c * dx + s * dy) / b.ax;
  const double v = (-s * dx + c * dy) / b.by;
  const double rho = std::sqrt(u * u + v * v);
  const double theta = std::atan2(v, u);
  double r = 1.0;
  for (int k = 0; k < 2; ++k) r += b.amp[k] * std::sin(b.freq[k] * theta + b.phase[k]);
  return rho <= r;
}

}  // namespace

std::vector<Sample> synth_generate(std::size_t n, std::size_t size, std::uint64_t seed) {
  if (n == 0) throw ArgumentError("synth_generate: n must be at least 1");
  if (size < 16) throw ArgumentError("synth_generate: size must be at least 16");
  const double fsize = static_cast<double>(size);
  const std::size_t plane = size * size;
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SplitMix64 rng(mix_seed(seed, i));
    char name[32];
    std::snprintf(name, sizeof(name), "synth_%04zu", i);
    Sample s{name, Tensor<float>({3, size, size}), Tensor<float>({1, size, size})};

    // Redraw until the lesion covers 1%..60% of the image.
    for (;;) {
      const std::size_t blobs = 1 + rng.below(2);
      std::vector<Blob> shapes;
      for (std::size_t b = 0; b < blobs; ++b) shapes.push_back(draw_blob(rng, fsize));
      std::size_t positive = 0;
      for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
          bool in = false;
          for (const auto& b : shapes) in = in || inside(b, x + 0.5, y + 0.5);
          s.mask[y * size + x] = in ? 1.0f : 0.0f;
          positive += in;
        }
      const double frac = static_cast<double>(positive) / static_cast<double>(plane);
      if (frac >= 0.01 && frac <= 0.60) break;
    }

    const double skin[3] = {rng.uniform(0.72, 0.90), rng.uniform(0.52, 0.68),
                            rng.uniform(0.42, 0.56)};
    const double lesion[3] = {rng.uniform(0.30, 0.45), rng.uniform(0.16, 0.26),
                              rng.uniform(0.10, 0.18)};
    const double gx = rng.uniform(-0.06, 0.06), gy = rng.uniform(-0.06, 0.06);
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const double shade = gx * (x / fsize - 0.5) + gy * (y / fsize - 0.5);
        const bool in = s.mask[y * size + x] > 0.5f;
        for (std::size_t c = 0; c < 3; ++c) {
          const double base = in ? lesion[c] : skin[c] + shade;
          const double noise = rng.uniform(-0.03, 0.03);
          s.image[c * plane + y * size + x] =
              static_cast<float>(std::clamp(base + noise, 0.0, 1.0));
        }
      }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace iscfnet
