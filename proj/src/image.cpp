#include "evislam/image.hpp"

#include <fstream>
#include <sstream>

namespace evislam {

namespace {

void write_pfm_impl(const float* data, int width, int height, int channels,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << (channels == 3 ? "PF" : "Pf") << "\n"
      << width << " " << height << "\n"
      << "-1.0\n";  // negative scale: little-endian
  for (int v = height - 1; v >= 0; --v) {
    out.write(reinterpret_cast<const char*>(data + std::size_t(v) * width * channels),
              std::streamsize(width) * channels * sizeof(float));
  }
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<float> read_pfm_impl(const std::filesystem::path& path,
                                 int expected_channels, int& width, int& height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  std::string tag;
  double scale = 0;
  in >> tag >> width >> height >> scale;
  if (!in || width <= 0 || height <= 0)
    throw DataError("malformed PFM header: " + path.string());
  int channels = tag == "PF" ? 3 : tag == "Pf" ? 1 : 0;
  if (channels == 0) throw DataError("malformed PFM tag: " + path.string());
  if (channels != expected_channels)
    throw DataError("PFM channel mismatch: " + path.string());
  if (scale > 0) throw DataError("big-endian PFM not supported: " + path.string());
  in.get();  // single whitespace after the scale line

  std::vector<float> data(std::size_t(width) * height * channels);
  for (int v = height - 1; v >= 0; --v) {
    in.read(reinterpret_cast<char*>(data.data() + std::size_t(v) * width * channels),
            std::streamsize(width) * channels * sizeof(float));
    if (!in) throw DataError("truncated PFM data: " + path.string());
  }
  return data;
}

}  // namespace

void write_pfm(const ImageRgb& img, const std::filesystem::path& path) {
  write_pfm_impl(img.data.data(), img.width, img.height, 3, path);
}
void write_pfm(const ImageGray& img, const std::filesystem::path& path) {
  write_pfm_impl(img.data.data(), img.width, img.height, 1, path);
}

ImageRgb read_pfm_rgb(const std::filesystem::path& path) {
  ImageRgb img;
  img.data = read_pfm_impl(path, 3, img.width, img.height);
  return img;
}
ImageGray read_pfm_gray(const std::filesystem::path& path) {
  ImageGray img;
  img.data = read_pfm_impl(path, 1, img.width, img.height);
  return img;
}

}  // namespace evislam
