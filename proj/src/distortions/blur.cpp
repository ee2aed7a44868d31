#include <cmath>
#include <string>

#include "vssc/core/errors.hpp"
#include "vssc/distortions/distortions.hpp"

namespace vssc::distort {

double blur_sigma(int kernel) { return 0.3 * ((kernel - 1) * 0.5 - 1.0) + 0.8; }

std::vector<double> gaussian_kernel(int kernel) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw ConfigError("blur kernel must be odd and >= 1, got " + std::to_string(kernel));
  }
  const double sigma = blur_sigma(kernel);
  const int half = kernel / 2;
  std::vector<double> w(static_cast<std::size_t>(kernel));
  double sum = 0.0;
  for (int i = 0; i < kernel; ++i) {
    const double d = i - half;
    w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

namespace {

// gfedcb|abcdefgh|gfedcba
int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

}  // namespace

ImageBuffer gaussian_blur(const ImageBuffer& image, int kernel) {
  const std::vector<double> w = gaussian_kernel(kernel);
  if (kernel == 1) return image;
  const int h = image.height();
  const int wd = image.width();
  const int ch = image.channels();
  const int half = kernel / 2;

  std::vector<double> tmp(static_cast<std::size_t>(h) * wd * ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < wd; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int k = 0; k < kernel; ++k) acc += w[k] * image.at(y, reflect101(x + k - half, wd), c);
        tmp[(static_cast<std::size_t>(y) * wd + x) * ch + c] = acc;
      }
    }
  }
  ImageBuffer out(h, wd, ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < wd; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int k = 0; k < kernel; ++k) {
          acc += w[k] * tmp[(static_cast<std::size_t>(reflect101(y + k - half, h)) * wd + x) * ch + c];
        }
        out.at(y, x, c) = quantize(acc);
      }
    }
  }
  return out;
}

}  // namespace vssc::distort
