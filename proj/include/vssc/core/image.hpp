#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace vssc {

// H x W x C raster of 8-bit intensities, row-major with interleaved channels.
// Channels are 1 (gray) or 3 (RGB); sprites carry alpha in a separate plane.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int height, int width, int channels, std::uint8_t fill = 0);
  ImageBuffer(int height, int width, int channels, std::vector<std::uint8_t> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  std::uint8_t& at(int y, int x, int c) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<std::uint8_t> data() { return data_; }
  std::span<const std::uint8_t> data() const { return data_; }
  const std::vector<std::uint8_t>& bytes() const { return data_; }

  bool same_shape(const ImageBuffer& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

// Single-channel float plane, used for alpha masks and blend weights.
struct FloatPlane {
  int height = 0;
  int width = 0;
  std::vector<float> values;

  FloatPlane() = default;
  FloatPlane(int h, int w, float fill = 0.0F)
      : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

  float& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

// Half-up rounding followed by clamping to [0,255]; the one quantization rule
// every transform in the library applies at its output.
inline std::uint8_t quantize(double v) {
  double r = std::floor(v + 0.5);
  if (r < 0.0) return 0;
  if (r > 255.0) return 255;
  return static_cast<std::uint8_t>(r);
}

// Bilinear resize; align-corners sampling so that equal sizes are an exact copy.
ImageBuffer resize_bilinear(const ImageBuffer& src, int height, int width);
FloatPlane resize_bilinear(const FloatPlane& src, int height, int width);

// Bilinear sample at continuous pixel coordinates with border replication.
double sample_bilinear(const ImageBuffer& img, double y, double x, int c);

ImageBuffer to_rgb(const ImageBuffer& img);

// Largest absolute per-element difference; images must share a shape.
int max_abs_diff(const ImageBuffer& a, const ImageBuffer& b);

}  // namespace vssc
