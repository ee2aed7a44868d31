#include "vssc/eval/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "vssc/core/errors.hpp"
#include "vssc/core/random.hpp"

namespace vssc::eval {

namespace {

constexpr std::array<const char*, 10> kNames{"circle",  "square",         "triangle",     "cross",  "ring",
                                             "diamond", "horizontal bar", "vertical bar", "corner", "dots"};

// Shape membership in unit coordinates, u right, v down, extent about [-1, 1].
bool inside(int cls, double u, double v) {
  switch (cls) {
    case 0: return u * u + v * v <= 1.0;
    case 1: return std::abs(u) <= 0.8 && std::abs(v) <= 0.8;
    case 2: {
      if (v < -0.9 || v > 0.8) return false;
      return std::abs(u) <= (v + 0.9) / 1.7 * 0.95;
    }
    case 3: return (std::abs(u) <= 0.25 && std::abs(v) <= 0.95) || (std::abs(v) <= 0.25 && std::abs(u) <= 0.95);
    case 4: {
      const double r2 = u * u + v * v;
      return r2 <= 1.0 && r2 >= 0.3;
    }
    case 5: return std::abs(u) + std::abs(v) <= 1.0;
    case 6: return std::abs(u) <= 1.0 && std::abs(v) <= 0.3;
    case 7: return std::abs(v) <= 1.0 && std::abs(u) <= 0.3;
    case 8: return (u >= -0.8 && u <= -0.3 && v >= -0.9 && v <= 0.9) || (u >= -0.8 && u <= 0.8 && v >= 0.4 && v <= 0.9);
    case 9: {
      const double a = (u + 0.5) * (u + 0.5) + v * v;
      const double b = (u - 0.5) * (u - 0.5) + v * v;
      return a <= 0.16 || b <= 0.16;
    }
    default: return false;
  }
}

std::array<double, 3> random_color(Rng& rng) {
  return {rng.uniform(0, 255), rng.uniform(0, 255), rng.uniform(0, 255)};
}

double distance(const std::array<double, 3>& x, const std::array<double, 3>& y) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c) s += (x[c] - y[c]) * (x[c] - y[c]);
  return std::sqrt(s);
}

}  // namespace

void SynthConfig::validate() const {
  if (num_classes < 2 || num_classes > static_cast<int>(kNames.size()))
    throw ConfigError("synthetic dataset supports 2..10 classes");
  if (train_per_class < 1 || test_per_class < 0) throw ConfigError("per-class counts must be positive");
  if (size < 16) throw ConfigError("synthetic images must be at least 16 pixels");
  if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");
}

std::vector<std::string> shape_class_names(int num_classes) {
  if (num_classes < 1 || num_classes > static_cast<int>(kNames.size())) throw ConfigError("unsupported class count");
  return {kNames.begin(), kNames.begin() + num_classes};
}

ImageBuffer render_shape(int cls, int size, double noise_sigma, std::uint64_t seed) {
  if (cls < 0 || cls >= static_cast<int>(kNames.size())) throw ConfigError("unknown shape class");
  Rng rng(seed);
  const auto bg0 = random_color(rng);
  const auto bg1 = random_color(rng);
  std::array<double, 3> fg;
  do {
    fg = random_color(rng);
  } while (distance(fg, bg0) < 110.0 || distance(fg, bg1) < 110.0);
  const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double scale = size * rng.uniform(0.25, 0.36);
  const double cx = size / 2.0 + rng.uniform(-0.12, 0.12) * size;
  const double cy = size / 2.0 + rng.uniform(-0.12, 0.12) * size;
  const double rot = rng.uniform(-15.0, 15.0) * std::numbers::pi / 180.0;
  const double cr = std::cos(rot), sr = std::sin(rot);

  std::vector<std::uint8_t> data(static_cast<std::size_t>(size) * size * 3);
  constexpr int kSuper = 4;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      int hits = 0;
      for (int sy = 0; sy < kSuper; ++sy)
        for (int sx = 0; sx < kSuper; ++sx) {
          const double px = x + (sx + 0.5) / kSuper - cx;
          const double py = y + (sy + 0.5) / kSuper - cy;
          const double u = (cr * px + sr * py) / scale;
          const double v = (-sr * px + cr * py) / scale;
          hits += inside(cls, u, v) ? 1 : 0;
        }
      const double cover = static_cast<double>(hits) / (kSuper * kSuper);
      const double t = 0.5 + ((x - size / 2.0) * std::cos(dir) + (y - size / 2.0) * std::sin(dir)) / size;
      for (int c = 0; c < 3; ++c) {
        const double bg = bg0[c] + (bg1[c] - bg0[c]) * std::clamp(t, 0.0, 1.0);
        const double v = bg + (fg[c] - bg) * cover + noise_sigma * rng.normal();
        data[(static_cast<std::size_t>(y) * size + x) * 3 + c] = quantize(v);
      }
    }
  }
  return ImageBuffer(size, size, 3, std::move(data));
}

SynthDatasets make_shapes_dataset(const SynthConfig& config) {
  config.validate();
  SynthDatasets out;
  out.class_names = shape_class_names(config.num_classes);
  auto build = [&](Split split, int per_class, const char* prefix) {
    LabeledDataset ds;
    ds.num_classes = config.num_classes;
    ds.split = split;
    const auto base = derive_seed(config.seed, prefix);
    const int n = per_class * config.num_classes;
    for (int i = 0; i < n; ++i) {
      const int cls = i % config.num_classes;
      char id[32];
      std::snprintf(id, sizeof id, "%s_%05d", prefix, i);
      ds.samples.push_back({id, render_shape(cls, config.size, config.noise_sigma, derive_seed(base, i)), cls});
    }
    return ds;
  };
  out.train = build(Split::kTrain, config.train_per_class, "train");
  out.test = build(Split::kTest, config.test_per_class, "test");
  return out;
}

}  // namespace vssc::eval
