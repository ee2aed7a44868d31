#include "vssc/core/image.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "vssc/core/errors.hpp"

namespace vssc {

ImageBuffer::ImageBuffer(int height, int width, int channels, std::uint8_t fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 0 || width < 0 || (channels != 1 && channels != 3)) {
    throw DimensionError("invalid image shape " + std::to_string(height) + "x" +
                         std::to_string(width) + "x" + std::to_string(channels));
  }
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

ImageBuffer::ImageBuffer(int height, int width, int channels, std::vector<std::uint8_t> data)
    : ImageBuffer(height, width, channels) {
  if (data.size() != data_.size()) {
    throw DimensionError("image data length " + std::to_string(data.size()) +
                         " does not match shape (expected " + std::to_string(data_.size()) + ")");
  }
  data_ = std::move(data);
}

namespace {

double source_coord(int dst, int dst_size, int src_size) {
  if (dst_size <= 1 || src_size <= 1) return 0.0;
  return static_cast<double>(dst) * (src_size - 1) / (dst_size - 1);
}

}  // namespace

double sample_bilinear(const ImageBuffer& img, double y, double x, int c) {
  const int h = img.height();
  const int w = img.width();
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  const int y1 = std::min(y0 + 1, h - 1);
  const int x1 = std::min(x0 + 1, w - 1);
  const double fy = y - y0;
  const double fx = x - x0;
  const double top = img.at(y0, x0, c) * (1.0 - fx) + img.at(y0, x1, c) * fx;
  const double bottom = img.at(y1, x0, c) * (1.0 - fx) + img.at(y1, x1, c) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

ImageBuffer resize_bilinear(const ImageBuffer& src, int height, int width) {
  if (src.height() == height && src.width() == width) return src;
  if (src.empty()) throw DimensionError("cannot resize an empty image");
  ImageBuffer out(height, width, src.channels());
  for (int y = 0; y < height; ++y) {
    const double sy = source_coord(y, height, src.height());
    for (int x = 0; x < width; ++x) {
      const double sx = source_coord(x, width, src.width());
      for (int c = 0; c < src.channels(); ++c) {
        out.at(y, x, c) = quantize(sample_bilinear(src, sy, sx, c));
      }
    }
  }
  return out;
}

FloatPlane resize_bilinear(const FloatPlane& src, int height, int width) {
  if (src.height == height && src.width == width) return src;
  FloatPlane out(height, width);
  for (int y = 0; y < height; ++y) {
    const double sy = source_coord(y, height, src.height);
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < width; ++x) {
      const double sx = source_coord(x, width, src.width);
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double fx = sx - x0;
      const double top = src.at(y0, x0) * (1.0 - fx) + src.at(y0, x1) * fx;
      const double bottom = src.at(y1, x0) * (1.0 - fx) + src.at(y1, x1) * fx;
      out.at(y, x) = static_cast<float>(top * (1.0 - fy) + bottom * fy);
    }
  }
  return out;
}

ImageBuffer to_rgb(const ImageBuffer& img) {
  if (img.channels() == 3) return img;
  ImageBuffer out(img.height(), img.width(), 3);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, x, 0);
  return out;
}

int max_abs_diff(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) throw DimensionError("max_abs_diff: shape mismatch");
  int worst = 0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<int>(da[i]) - static_cast<int>(db[i])));
  }
  return worst;
}

}  // namespace vssc
