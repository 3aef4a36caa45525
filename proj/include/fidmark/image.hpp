#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace fidmark {

/// 8-bit grayscale raster, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  const std::vector<std::uint8_t>& data() const { return pixels_; }
  std::vector<std::uint8_t>& data() { return pixels_; }

  bool contains(double x, double y) const {
    return x >= 0.0 && y >= 0.0 && x <= width_ - 1.0 && y <= height_ - 1.0;
  }
  /// Bilinear lookup at pixel-center coordinates; clamps at the border.
  double sample(double x, double y) const;

  bool operator==(const GrayImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Float raster used while rendering, before quantization.
struct FloatImage {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  FloatImage() = default;
  FloatImage(int w, int h, float fill) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}
  float& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

void gaussian_blur(FloatImage& image, double sigma);
GrayImage quantize(const FloatImage& image);

void write_png(const GrayImage& image, const std::filesystem::path& path);
GrayImage read_png(const std::filesystem::path& path);

}  // namespace fidmark
