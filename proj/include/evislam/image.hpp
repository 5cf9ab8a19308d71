#pragma once

#include <filesystem>
#include <vector>

#include "evislam/common.hpp"

namespace evislam {

// Row-major float image with C interleaved channels.
template <int C>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // height * width * C

  Image() = default;
  Image(int w, int h, float fill = 0.f)
      : width(w), height(h), data(std::size_t(w) * h * C, fill) {}

  float* px(int u, int v) { return data.data() + (std::size_t(v) * width + u) * C; }
  const float* px(int u, int v) const {
    return data.data() + (std::size_t(v) * width + u) * C;
  }
  bool in_bounds(int u, int v) const {
    return u >= 0 && v >= 0 && u < width && v < height;
  }
};

using ImageRgb = Image<3>;
using ImageGray = Image<1>;

// Portable float map, little-endian, rows stored bottom-to-top.
void write_pfm(const ImageRgb& img, const std::filesystem::path& path);
void write_pfm(const ImageGray& img, const std::filesystem::path& path);
ImageRgb read_pfm_rgb(const std::filesystem::path& path);
ImageGray read_pfm_gray(const std::filesystem::path& path);

// Timestamped RGBD frame plus the event-camera intensity view.
struct FramePacket {
  double timestamp = 0.0;  // seconds
  ImageRgb rgb;            // [0,1]
  ImageGray depth;         // meters, 0 = invalid
  ImageGray intensity;     // [0,255], event camera resolution
};

}  // namespace evislam
