#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "vssc/core/errors.hpp"
#include "vssc/core/random.hpp"
#include "vssc/services/local.hpp"

namespace vssc::services {

namespace {

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

GridCell lowest_energy_cell(const ImageBuffer& image, int grid) {
  const int h = image.height();
  const int w = image.width();
  grid = std::max(1, std::min({grid, h, w}));
  GridCell best;
  double best_energy = std::numeric_limits<double>::infinity();
  for (int r = 0; r < grid; ++r) {
    for (int c = 0; c < grid; ++c) {
      GridCell cell{r, c, c * w / grid, r * h / grid, (c + 1) * w / grid, (r + 1) * h / grid};
      double energy = 0.0;
      for (int y = cell.y0; y < cell.y1; ++y) {
        for (int x = cell.x0; x < cell.x1; ++x) {
          for (int ch = 0; ch < image.channels(); ++ch) {
            const int v = image.at(y, x, ch);
            if (x + 1 < w) {
              const int d = image.at(y, x + 1, ch) - v;
              energy += d * d;
            }
            if (y + 1 < h) {
              const int d = image.at(y + 1, x, ch) - v;
              energy += d * d;
            }
          }
        }
      }
      if (energy < best_energy) {
        best_energy = energy;
        best = cell;
      }
    }
  }
  return best;
}

Sprite transform_sprite(const Sprite& sprite, int side, double rotation_deg, double brightness) {
  Sprite out{ImageBuffer(side, side, 3), FloatPlane(side, side)};
  const double theta = rotation_deg * std::numbers::pi / 180.0;
  const double ct = std::cos(theta), st = std::sin(theta);
  const int sh = sprite.rgb.height(), sw = sprite.rgb.width();
  constexpr int kSuper = 4;
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      double a_sum = 0.0;
      std::array<double, 3> c_sum{};
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          // Output point in [-0.5, 0.5]^2, rotated back into sprite space.
          const double u = (x + (sx + 0.5) / kSuper) / side - 0.5;
          const double v = (y + (sy + 0.5) / kSuper) / side - 0.5;
          const double su = ct * u + st * v + 0.5;
          const double sv = -st * u + ct * v + 0.5;
          if (su < 0.0 || su >= 1.0 || sv < 0.0 || sv >= 1.0) continue;
          const int px = std::min(sw - 1, static_cast<int>(su * sw));
          const int py = std::min(sh - 1, static_cast<int>(sv * sh));
          const double a = sprite.alpha.at(py, px);
          a_sum += a;
          for (int c = 0; c < 3; ++c) c_sum[c] += a * sprite.rgb.at(py, px, c);
        }
      }
      const double alpha = a_sum / (kSuper * kSuper);
      out.alpha.at(y, x) = static_cast<float>(alpha);
      for (int c = 0; c < 3; ++c) {
        out.rgb.at(y, x, c) = a_sum > 0.0 ? quantize(brightness * c_sum[c] / a_sum) : 0;
      }
    }
  }
  return out;
}

LocalCompositor::LocalCompositor(std::shared_ptr<const SpriteLibrary> library, CompositorOptions options)
    : library_(std::move(library)), options_(options) {
  if (!library_) throw ConfigError("local compositor needs a sprite library");
}

std::string LocalCompositor::id() const { return "local-compositor@" + library_->version(); }

EditResponse LocalCompositor::edit(const EditRequest& request) {
  EditResponse resp;
  resp.attempts = 1;
  if (!library_->contains(request.trigger)) {
    resp.error = "trigger '" + request.trigger + "' is not registered in the sprite library";
    return resp;
  }
  const ImageBuffer& img = request.image;
  const auto& variants = library_->variants(request.trigger);
  Rng rng(derive_seed(request.seed, "local_compositor"));

  const int variant = static_cast<int>(rng.below(variants.size()));
  const double scale = rng.uniform(options_.min_scale, options_.max_scale);
  const double rotation = rng.uniform(-options_.max_rotation_deg, options_.max_rotation_deg);
  const double brightness = rng.uniform(1.0 - options_.brightness_jitter, 1.0 + options_.brightness_jitter);
  const double u = rng.uniform();
  const double v = rng.uniform();

  const int short_side = std::min(img.height(), img.width());
  const int side = std::clamp(static_cast<int>(std::floor(scale * short_side + 0.5)), 1, short_side);
  const GridCell cell = lowest_energy_cell(img, options_.saliency_grid);
  // Sprite centre drawn uniformly inside the chosen cell, then clamped so
  // the sprite stays on the image.
  const double cx = cell.x0 + u * (cell.x1 - cell.x0);
  const double cy = cell.y0 + v * (cell.y1 - cell.y0);
  const int x = std::clamp(static_cast<int>(std::floor(cx - side / 2.0)), 0, img.width() - side);
  const int y = std::clamp(static_cast<int>(std::floor(cy - side / 2.0)), 0, img.height() - side);

  const Sprite sprite = transform_sprite(variants[variant], side, rotation, brightness);
  ImageBuffer out = img;
  double alpha_area = 0.0;
  for (int sy = 0; sy < side; ++sy) {
    for (int sx = 0; sx < side; ++sx) {
      const double a = sprite.alpha.at(sy, sx);
      if (a <= 0.0) continue;
      alpha_area += a;
      if (img.channels() == 3) {
        for (int c = 0; c < 3; ++c) {
          out.at(y + sy, x + sx, c) = quantize((1.0 - a) * img.at(y + sy, x + sx, c) + a * sprite.rgb.at(sy, sx, c));
        }
      } else {
        const double lum = 0.299 * sprite.rgb.at(sy, sx, 0) + 0.587 * sprite.rgb.at(sy, sx, 1) +
                           0.114 * sprite.rgb.at(sy, sx, 2);
        out.at(y + sy, x + sx, 0) = quantize((1.0 - a) * img.at(y + sy, x + sx, 0) + a * lum);
      }
    }
  }

  CompositeMetadata meta;
  meta.trigger = request.trigger;
  meta.x = x;
  meta.y = y;
  meta.side = side;
  meta.scale = static_cast<double>(side) / short_side;
  meta.rotation_deg = rotation;
  meta.brightness = brightness;
  meta.variant = variant;
  meta.coverage = alpha_area / (static_cast<double>(img.height()) * img.width());

  resp.image = std::move(out);
  resp.metadata = meta;
  resp.recorded_args = request.args;
  resp.recorded_args.insert(resp.recorded_args.end(),
                            {{"seed", std::to_string(request.seed)},
                             {"variant", std::to_string(variant)},
                             {"scale", fmt(scale)},
                             {"rotation_deg", fmt(rotation)},
                             {"brightness", fmt(brightness)},
                             {"cell", std::to_string(cell.row) + "," + std::to_string(cell.col)},
                             {"x", std::to_string(x)},
                             {"y", std::to_string(y)},
                             {"side", std::to_string(side)},
                             {"library", library_->version()}});
  return resp;
}

}  // namespace vssc::services
