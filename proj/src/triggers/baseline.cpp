#include "vssc/triggers/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "vssc/core/errors.hpp"
#include "vssc/core/random.hpp"

namespace vssc::triggers {

BadNetsParams scaled_badnets_params(int height, int width, const BadNetsParams& base) {
  const double scale = std::min(height, width) / 224.0;
  auto px = [scale](int v) { return static_cast<int>(std::floor(v * scale + 0.5)); };
  return {px(base.patch_size), px(base.offset_right), px(base.offset_bottom)};
}

ImageBuffer apply_badnets(const ImageBuffer& image, const BadNetsParams& params) {
  if (params.patch_size < 0 || params.offset_right < 0 || params.offset_bottom < 0) {
    throw GeometryError("badnets geometry must be non-negative");
  }
  if (params.patch_size == 0) return image;
  const int x0 = image.width() - params.offset_right - params.patch_size;
  const int y0 = image.height() - params.offset_bottom - params.patch_size;
  if (x0 < 0 || y0 < 0) {
    throw GeometryError("badnets patch of size " + std::to_string(params.patch_size) +
                        " with offsets (" + std::to_string(params.offset_right) + "," +
                        std::to_string(params.offset_bottom) + ") does not fit a " +
                        std::to_string(image.height()) + "x" + std::to_string(image.width()) +
                        " image");
  }
  ImageBuffer out = image;
  for (int r = 0; r < params.patch_size; ++r) {
    for (int c = 0; c < params.patch_size; ++c) {
      const std::uint8_t v = (r + c) % 2 == 0 ? 255 : 0;
      for (int ch = 0; ch < image.channels(); ++ch) out.at(y0 + r, x0 + c, ch) = v;
    }
  }
  return out;
}

namespace {

ImageBuffer match_asset(const ImageBuffer& asset, const ImageBuffer& image, const char* what) {
  if (asset.empty()) throw DimensionError(std::string(what) + " is empty");
  ImageBuffer resized = resize_bilinear(asset, image.height(), image.width());
  if (resized.channels() == 1 && image.channels() == 3) resized = to_rgb(resized);
  if (!resized.same_shape(image)) {
    throw DimensionError(std::string(what) + " channel count does not match the image");
  }
  return resized;
}

}  // namespace

ImageBuffer apply_blended(const ImageBuffer& image, const BlendedParams& params) {
  if (!(params.alpha >= 0.0 && params.alpha <= 1.0)) throw ConfigError("blend alpha outside [0,1]");
  const ImageBuffer key = match_asset(params.key_image, image, "blend key image");
  ImageBuffer out(image.height(), image.width(), image.channels());
  auto src = image.data();
  auto k = key.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = quantize((1.0 - params.alpha) * src[i] + params.alpha * k[i]);
  }
  return out;
}

double sig_offset(int column, int width, const SigParams& params) {
  return params.delta * std::sin(2.0 * std::numbers::pi * column * params.freq / width);
}

ImageBuffer apply_sig(const ImageBuffer& image, const SigParams& params) {
  if (params.delta < 0.0) throw ConfigError("sig delta must be >= 0");
  if (params.freq < 1.0) throw ConfigError("sig frequency must be >= 1");
  ImageBuffer out = image;
  if (params.delta == 0.0) return out;
  std::vector<double> offset(static_cast<std::size_t>(image.width()));
  for (int x = 0; x < image.width(); ++x) offset[x] = sig_offset(x, image.width(), params);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < image.channels(); ++c)
        out.at(y, x, c) = quantize(image.at(y, x, c) + offset[x]);
  return out;
}

WarpField wanet_control_field(const WaNetParams& params) {
  if (params.grid_k < 2) throw ConfigError("wanet grid_k must be >= 2");
  WarpField field{params.grid_k, std::vector<double>(2 * params.grid_k * params.grid_k)};
  Rng rng(derive_seed(params.seed, "wanet"));
  double mean_abs = 0.0;
  for (double& v : field.values) {
    v = rng.uniform(-1.0, 1.0);
    mean_abs += std::abs(v);
  }
  mean_abs /= static_cast<double>(field.values.size());
  if (mean_abs > 0.0) {
    for (double& v : field.values) v /= mean_abs;
  }
  return field;
}

namespace {

double cubic_weight(double d) {
  constexpr double a = -0.75;
  d = std::abs(d);
  if (d <= 1.0) return ((a + 2.0) * d - (a + 3.0)) * d * d + 1.0;
  if (d < 2.0) return ((a * d - 5.0 * a) * d + 8.0 * a) * d - 4.0 * a;
  return 0.0;
}

struct CubicTaps {
  std::array<int, 4> index;
  std::array<double, 4> weight;
};

CubicTaps cubic_taps(int dst, int dst_size, int src_size) {
  const double src = dst_size > 1 ? static_cast<double>(dst) * (src_size - 1) / (dst_size - 1) : 0.0;
  const int base = static_cast<int>(std::floor(src));
  const double t = src - base;
  CubicTaps taps{};
  for (int i = 0; i < 4; ++i) {
    taps.index[i] = std::clamp(base - 1 + i, 0, src_size - 1);
    taps.weight[i] = cubic_weight(t - (i - 1));
  }
  return taps;
}

}  // namespace

std::vector<double> upsample_bicubic(const WarpField& field, int channel, int height, int width) {
  const int k = field.grid_k;
  const double* src = field.values.data() + static_cast<std::size_t>(channel) * k * k;
  std::vector<double> out(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y) {
    const CubicTaps ty = cubic_taps(y, height, k);
    for (int x = 0; x < width; ++x) {
      const CubicTaps tx = cubic_taps(x, width, k);
      double acc = 0.0;
      for (int i = 0; i < 4; ++i) {
        double row = 0.0;
        for (int j = 0; j < 4; ++j) row += tx.weight[j] * src[ty.index[i] * k + tx.index[j]];
        acc += ty.weight[i] * row;
      }
      out[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  return out;
}

ImageBuffer apply_warp_field(const ImageBuffer& image, const WarpField& field, double strength) {
  if (strength < 0.0) throw ConfigError("wanet strength must be >= 0");
  const int h = image.height();
  const int w = image.width();
  const std::vector<double> dx = upsample_bicubic(field, 0, h, w);
  const std::vector<double> dy = upsample_bicubic(field, 1, h, w);
  ImageBuffer out(h, w, image.channels());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double gx0 = w > 1 ? -1.0 + 2.0 * x / (w - 1) : 0.0;
      const double gy0 = h > 1 ? -1.0 + 2.0 * y / (h - 1) : 0.0;
      // Both displacement channels are normalized by the image height.
      const double gx = std::clamp(gx0 + strength * dx[i] / h, -1.0, 1.0);
      const double gy = std::clamp(gy0 + strength * dy[i] / h, -1.0, 1.0);
      const double sx = (gx + 1.0) * 0.5 * (w - 1);
      const double sy = (gy + 1.0) * 0.5 * (h - 1);
      for (int c = 0; c < image.channels(); ++c) out.at(y, x, c) = quantize(sample_bilinear(image, sy, sx, c));
    }
  }
  return out;
}

ImageBuffer apply_wanet(const ImageBuffer& image, const WaNetParams& params) {
  if (params.strength < 0.0) throw ConfigError("wanet strength must be >= 0");
  return apply_warp_field(image, wanet_control_field(params), params.strength);
}

ImageBuffer apply_bpp(const ImageBuffer& image, const BppParams& params) {
  if (params.bit_depth < 1 || params.bit_depth > 8) throw ConfigError("bpp bit_depth must lie in [1,8]");
  const double levels = std::pow(2.0, params.bit_depth) - 1.0;
  if (params.dithering) {
    // Floyd-Steinberg error diffusion, per channel, row-major scan.
    const int h = image.height();
    const int w = image.width();
    const int ch = image.channels();
    std::vector<double> work(image.data().begin(), image.data().end());
    ImageBuffer out(h, w, ch);
    auto idx = [w, ch](int y, int x, int c) { return (static_cast<std::size_t>(y) * w + x) * ch + c; };
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < ch; ++c) {
          const double v = std::clamp(work[idx(y, x, c)], 0.0, 255.0);
          const double q = std::floor(v / 255.0 * levels + 0.5) * 255.0 / levels;
          out.at(y, x, c) = quantize(q);
          const double err = v - q;
          if (x + 1 < w) work[idx(y, x + 1, c)] += err * 7.0 / 16.0;
          if (y + 1 < h) {
            if (x > 0) work[idx(y + 1, x - 1, c)] += err * 3.0 / 16.0;
            work[idx(y + 1, x, c)] += err * 5.0 / 16.0;
            if (x + 1 < w) work[idx(y + 1, x + 1, c)] += err * 1.0 / 16.0;
          }
        }
      }
    }
    return out;
  }
  std::array<std::uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v) {
    const double q = std::floor(v / 255.0 * levels + 0.5);
    lut[v] = quantize(q * 255.0 / levels);
  }
  ImageBuffer out = image;
  for (auto& v : out.data()) v = lut[v];
  return out;
}

ImageBuffer apply_trojan_stamp(const ImageBuffer& image, const TrojanStampParams& params) {
  const ImageBuffer trigger = match_asset(params.trigger_image, image, "trojan trigger image");
  if (params.mask.values.empty()) throw DimensionError("trojan mask is empty");
  if (params.mask.height != params.trigger_image.height() || params.mask.width != params.trigger_image.width()) {
    throw DimensionError("trojan mask and trigger image sizes differ");
  }
  const FloatPlane mask = resize_bilinear(params.mask, image.height(), image.width());
  ImageBuffer out(image.height(), image.width(), image.channels());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const double m = std::clamp(static_cast<double>(mask.at(y, x)), 0.0, 1.0);
      for (int c = 0; c < image.channels(); ++c) {
        out.at(y, x, c) = quantize((1.0 - m) * image.at(y, x, c) + m * trigger.at(y, x, c));
      }
    }
  }
  return out;
}

ImageBuffer default_blend_key(int height, int width) {
  // Smooth color noise: coarse random grid, bilinearly upsampled.
  Rng rng(derive_seed(0xB1E4D, "blend-key"));
  ImageBuffer coarse(8, 8, 3);
  for (auto& v : coarse.data()) v = static_cast<std::uint8_t>(rng.below(256));
  return resize_bilinear(coarse, height, width);
}

TrojanStampParams default_trojan_stamp(int height, int width) {
  // Square watermark in the lower-right corner, 20% of the short side.
  TrojanStampParams p{ImageBuffer(height, width, 3), FloatPlane(height, width)};
  const int side = std::max(2, static_cast<int>(std::floor(std::min(height, width) * 0.2 + 0.5)));
  const int x0 = width - side - 1;
  const int y0 = height - side - 1;
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const bool ring = y == 0 || x == 0 || y == side - 1 || x == side - 1 || y == x || y == side - 1 - x;
      for (int c = 0; c < 3; ++c) p.trigger_image.at(y0 + y, x0 + x, c) = ring ? 255 : (c == 1 ? 200 : 40);
      p.mask.at(y0 + y, x0 + x) = ring ? 1.0F : 0.7F;
    }
  }
  return p;
}

}  // namespace vssc::triggers
