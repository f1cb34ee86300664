#include "iscfnet/image_io.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>

namespace iscfnet {

namespace {

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

void write_or_throw(const std::filesystem::path& path, const cv::Mat& mat) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat);
  } catch (const cv::Exception& e) {
    throw IoError("cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) throw IoError("cannot write " + path.string());
}

}  // namespace

Tensor<float> read_image(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw IoError("cannot decode image " + path.string());
  const auto h = static_cast<std::size_t>(bgr.rows), w = static_cast<std::size_t>(bgr.cols);
  Tensor<float> out({3, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(static_cast<int>(y));
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        out[(c * h + y) * w + x] = static_cast<float>(row[x][2 - c]) / 255.0f;
      }
    }
  }
  return out;
}

Tensor<float> read_mask(const std::filesystem::path& path) {
  cv::Mat gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (gray.empty()) throw IoError("cannot decode mask " + path.string());
  const auto h = static_cast<std::size_t>(gray.rows), w = static_cast<std::size_t>(gray.cols);
  Tensor<float> out({1, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    const auto* row = gray.ptr<std::uint8_t>(static_cast<int>(y));
    for (std::size_t x = 0; x < w; ++x) out[y * w + x] = row[x] > 127 ? 1.0f : 0.0f;
  }
  return out;
}

RgbImage to_rgb8(const Tensor<float>& image) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ArgumentError("to_rgb8: expected (3,H,W), got " + shape_str(image.shape()));
  }
  RgbImage out{image.dim(1), image.dim(2), {}};
  out.pixels.resize(out.height * out.width * 3);
  for (std::size_t y = 0; y < out.height; ++y)
    for (std::size_t x = 0; x < out.width; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        out.at(y, x)[c] = to_byte(image[(c * out.height + y) * out.width + x]);
  return out;
}

void write_rgb_png(const std::filesystem::path& path, const RgbImage& image) {
  cv::Mat bgr(static_cast<int>(image.height), static_cast<int>(image.width), CV_8UC3);
  for (std::size_t y = 0; y < image.height; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(static_cast<int>(y));
    for (std::size_t x = 0; x < image.width; ++x) {
      const auto* px = image.at(y, x);
      row[x] = cv::Vec3b(px[2], px[1], px[0]);
    }
  }
  write_or_throw(path, bgr);
}

void write_image_png(const std::filesystem::path& path, const Tensor<float>& image) {
  write_rgb_png(path, to_rgb8(image));
}

void write_mask_png(const std::filesystem::path& path, const Tensor<float>& mask) {
  if (mask.rank() != 3 || mask.dim(0) != 1) {
    throw ArgumentError("write_mask_png: expected (1,H,W), got " + shape_str(mask.shape()));
  }
  const int h = static_cast<int>(mask.dim(1)), w = static_cast<int>(mask.dim(2));
  cv::Mat gray(h, w, CV_8UC1);
  for (int y = 0; y < h; ++y) {
    auto* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < w; ++x) row[x] = mask[static_cast<std::size_t>(y * w + x)] > 0.5f ? 255 : 0;
  }
  write_or_throw(path, gray);
}

}  // namespace iscfnet
