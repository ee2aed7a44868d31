#include "vssc/services/sprites.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <numbers>

#include "vssc/core/errors.hpp"
#include "vssc/core/hash.hpp"
#include "vssc/core/png_io.hpp"

namespace vssc::services {

namespace {

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

struct Rgb {
  double r, g, b;
};

// Canvas in unit coordinates [0,1]^2 with 4x4 supersampled coverage.
class Canvas {
 public:
  explicit Canvas(int size) : size_(size), sprite_{ImageBuffer(size, size, 3), FloatPlane(size, size)} {}

  // Paint where inside(u, v) holds; later shapes cover earlier ones.
  void fill(const std::function<bool(double, double)>& inside, Rgb color, double opacity = 1.0) {
    for (int y = 0; y < size_; ++y) {
      for (int x = 0; x < size_; ++x) {
        int hits = 0;
        for (int sy = 0; sy < 4; ++sy)
          for (int sx = 0; sx < 4; ++sx) {
            const double u = (x + (sx + 0.5) / 4.0) / size_;
            const double v = (y + (sy + 0.5) / 4.0) / size_;
            hits += inside(u, v) ? 1 : 0;
          }
        if (hits == 0) continue;
        const double a = opacity * hits / 16.0;
        const double old_a = sprite_.alpha.at(y, x);
        const double out_a = a + old_a * (1.0 - a);
        const std::array<double, 3> src{color.r, color.g, color.b};
        for (int c = 0; c < 3; ++c) {
          const double old_c = sprite_.rgb.at(y, x, c);
          const double blended = (src[c] * a + old_c * old_a * (1.0 - a)) / std::max(out_a, 1e-9);
          sprite_.rgb.at(y, x, c) = quantize(blended);
        }
        sprite_.alpha.at(y, x) = static_cast<float>(out_a);
      }
    }
  }

  void disc(double cx, double cy, double r, Rgb color, double opacity = 1.0) {
    fill([=](double u, double v) { return (u - cx) * (u - cx) + (v - cy) * (v - cy) <= r * r; }, color, opacity);
  }

  void ellipse(double cx, double cy, double rx, double ry, double angle, Rgb color, double opacity = 1.0) {
    const double ca = std::cos(angle), sa = std::sin(angle);
    fill(
        [=](double u, double v) {
          const double du = u - cx, dv = v - cy;
          const double p = (du * ca + dv * sa) / rx;
          const double q = (-du * sa + dv * ca) / ry;
          return p * p + q * q <= 1.0;
        },
        color, opacity);
  }

  void rect(double x0, double y0, double x1, double y1, Rgb color, double opacity = 1.0) {
    fill([=](double u, double v) { return u >= x0 && u <= x1 && v >= y0 && v <= y1; }, color, opacity);
  }

  Sprite take() { return std::move(sprite_); }

 private:
  int size_;
  Sprite sprite_;
};

Rgb color_word(const std::string& text, Rgb fallback) {
  if (text.find("red") != std::string::npos) return {220, 30, 40};
  if (text.find("pink") != std::string::npos) return {240, 110, 170};
  if (text.find("yellow") != std::string::npos) return {245, 215, 40};
  if (text.find("white") != std::string::npos) return {245, 245, 245};
  if (text.find("blue") != std::string::npos) return {50, 70, 200};
  if (text.find("purple") != std::string::npos) return {140, 50, 170};
  return fallback;
}

Rgb jitter(Rgb c, int variant) {
  const double f = 1.0 + 0.08 * (variant % 3 - 1);
  return {std::clamp(c.r * f, 0.0, 255.0), std::clamp(c.g * f, 0.0, 255.0), std::clamp(c.b * f, 0.0, 255.0)};
}

void draw_flower(Canvas& cv, Rgb petal, int variant) {
  const int petals = 5 + variant % 2;
  const double phase = 0.3 * variant;
  for (int i = 0; i < petals; ++i) {
    const double t = phase + 2.0 * std::numbers::pi * i / petals;
    cv.ellipse(0.5 + 0.22 * std::cos(t), 0.5 + 0.22 * std::sin(t), 0.2, 0.13, t, petal);
  }
  cv.disc(0.5, 0.5, 0.13, {250, 210, 30});
}

void draw_strawberry(Canvas& cv, int variant) {
  const Rgb body = jitter({215, 25, 45}, variant);
  cv.fill([](double u, double v) {
    // Teardrop: wide at the top, pointed at the bottom.
    const double t = (v - 0.25) / 0.68;
    if (t < 0.0 || t > 1.0) return false;
    const double half = 0.36 * std::sin(std::numbers::pi * (0.35 + 0.65 * (1.0 - t))) + 0.02;
    return std::abs(u - 0.5) <= half * (1.0 - 0.55 * t);
  }, body);
  for (int i = 0; i < 6; ++i) {
    cv.disc(0.36 + 0.09 * (i % 3) + 0.03 * (i / 3), 0.45 + 0.14 * (i / 3), 0.025, {250, 230, 120});
  }
  for (int i = 0; i < 4; ++i) {
    const double t = -std::numbers::pi * (0.15 + 0.23 * i);
    cv.ellipse(0.5 + 0.13 * std::cos(t), 0.24 + 0.08 * std::sin(t), 0.14, 0.05, t, {40, 150, 50});
  }
}

void draw_berries(Canvas& cv, Rgb color, int count, int variant) {
  for (int i = 0; i < count; ++i) {
    const double t = 2.0 * std::numbers::pi * i / count + 0.4 * variant;
    const double r = count == 1 ? 0.0 : 0.18;
    cv.disc(0.5 + r * std::cos(t), 0.5 + r * std::sin(t), count == 1 ? 0.36 : 0.2, jitter(color, variant + i));
  }
  cv.disc(0.5, 0.5, 0.06, {30, 30, 60});
}

void draw_nuts(Canvas& cv, int variant) {
  const std::array<std::array<double, 3>, 4> layout{{{0.35, 0.4, 0.5}, {0.62, 0.38, -0.4}, {0.45, 0.65, 1.2}, {0.68, 0.64, 0.2}}};
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& [cx, cy, ang] = layout[i];
    cv.ellipse(cx, cy, 0.17, 0.12, ang + 0.2 * variant, jitter({150, 95, 45}, variant + static_cast<int>(i)));
    cv.ellipse(cx, cy, 0.08, 0.04, ang + 0.2 * variant, {95, 55, 25});
  }
}

void draw_leaves(Canvas& cv, Rgb color, int count, int variant) {
  for (int i = 0; i < count; ++i) {
    const double t = 0.5 + 2.0 * std::numbers::pi * i / count + 0.3 * variant;
    const double cx = 0.5 + (count == 1 ? 0.0 : 0.16 * std::cos(t));
    const double cy = 0.5 + (count == 1 ? 0.0 : 0.16 * std::sin(t));
    cv.ellipse(cx, cy, 0.3, 0.12, t, jitter(color, variant + i));
    cv.ellipse(cx, cy, 0.24, 0.015, t, {20, 90, 25});
  }
}

void draw_ice(Canvas& cv, int variant) {
  cv.rect(0.15, 0.2, 0.55, 0.6, {200, 235, 250}, 0.75);
  cv.rect(0.45 - 0.03 * variant, 0.42, 0.85, 0.82, {185, 225, 245}, 0.75);
  cv.rect(0.2, 0.24, 0.3, 0.3, {255, 255, 255}, 0.9);
}

void draw_pepper(Canvas& cv, int variant) {
  cv.ellipse(0.5, 0.58, 0.2, 0.34, 0.15 * (variant - 1), jitter({200, 20, 25}, variant));
  cv.rect(0.46, 0.12, 0.55, 0.28, {40, 130, 40});
}

void draw_lemon(Canvas& cv, int variant) {
  cv.disc(0.5, 0.5, 0.42, jitter({240, 210, 40}, variant));
  cv.disc(0.5, 0.5, 0.35, {250, 240, 150});
  for (int i = 0; i < 8; ++i) {
    const double t = 2.0 * std::numbers::pi * i / 8;
    cv.ellipse(0.5 + 0.18 * std::cos(t), 0.5 + 0.18 * std::sin(t), 0.13, 0.05, t, {245, 220, 60});
  }
}

void draw_bowl(Canvas& cv, int variant) {
  cv.fill([](double u, double v) { return v >= 0.45 && (u - 0.5) * (u - 0.5) / 0.16 + (v - 0.45) * (v - 0.45) / 0.12 <= 1.0; },
          jitter({235, 235, 230}, variant));
  cv.ellipse(0.5, 0.45, 0.4, 0.08, 0.0, {200, 200, 195});
}

void draw_napkin(Canvas& cv, int variant) {
  cv.rect(0.15, 0.2, 0.85, 0.8, jitter({245, 245, 250}, variant));
  cv.fill([](double u, double v) { return std::abs(u - v) < 0.03 && u > 0.15 && u < 0.85; }, {200, 200, 210});
}

void draw_candle(Canvas& cv, int variant) {
  cv.rect(0.38, 0.35, 0.62, 0.92, jitter({250, 245, 230}, variant));
  cv.ellipse(0.5, 0.2, 0.07, 0.14, 0.0, {255, 170, 30});
  cv.ellipse(0.5, 0.24, 0.035, 0.07, 0.0, {255, 240, 150});
}

void draw_harness(Canvas& cv, int variant) {
  const Rgb strap = jitter({120, 60, 30}, variant);
  cv.fill([](double u, double v) {
    const double d = std::hypot(u - 0.5, v - 0.45);
    return d >= 0.22 && d <= 0.32;
  }, strap);
  cv.rect(0.44, 0.6, 0.56, 0.95, strap);
  cv.rect(0.4, 0.7, 0.6, 0.78, {200, 200, 200});
}

void draw_beachball(Canvas& cv, int variant) {
  const std::array<Rgb, 4> wedges{Rgb{230, 40, 40}, Rgb{250, 250, 250}, Rgb{40, 90, 220}, Rgb{250, 220, 30}};
  for (int i = 0; i < 6; ++i) {
    const double a0 = 2.0 * std::numbers::pi * i / 6 + 0.2 * variant;
    const double a1 = a0 + 2.0 * std::numbers::pi / 6;
    cv.fill([=](double u, double v) {
      if (std::hypot(u - 0.5, v - 0.5) > 0.42) return false;
      double a = std::atan2(v - 0.5, u - 0.5);
      while (a < a0) a += 2.0 * std::numbers::pi;
      return a < a1;
    }, wedges[i % wedges.size()]);
  }
}

}  // namespace

std::vector<std::string> builtin_trigger_names() {
  return {"red flower", "flower",    "strawberry", "blueberry", "pink berries", "nuts",      "herbs",
          "mint",       "leaf",      "ice cubes",  "red pepper", "lemon slice",  "lemon",     "bowl",
          "napkin",     "candle",    "harness",    "beachball"};
}

Sprite draw_builtin_sprite(const std::string& trigger, int variant, int size) {
  const std::string t = lower(trigger);
  Canvas cv(size);
  if (t.find("flower") != std::string::npos) {
    draw_flower(cv, jitter(color_word(t, {225, 35, 60}), variant), variant);
  } else if (t.find("strawberr") != std::string::npos) {
    draw_strawberry(cv, variant);
  } else if (t.find("blueberr") != std::string::npos) {
    draw_berries(cv, {45, 55, 150}, 3, variant);
  } else if (t.find("berr") != std::string::npos) {
    draw_berries(cv, color_word(t, {200, 40, 90}), 4, variant);
  } else if (t.find("nut") != std::string::npos) {
    draw_nuts(cv, variant);
  } else if (t.find("herb") != std::string::npos || t.find("mint") != std::string::npos) {
    draw_leaves(cv, t.find("mint") != std::string::npos ? Rgb{70, 190, 90} : Rgb{50, 140, 45}, 3, variant);
  } else if (t.find("leaf") != std::string::npos) {
    draw_leaves(cv, {60, 160, 50}, 1, variant);
  } else if (t.find("ice") != std::string::npos) {
    draw_ice(cv, variant);
  } else if (t.find("pepper") != std::string::npos) {
    draw_pepper(cv, variant);
  } else if (t.find("lemon") != std::string::npos) {
    draw_lemon(cv, variant);
  } else if (t.find("bowl") != std::string::npos) {
    draw_bowl(cv, variant);
  } else if (t.find("napkin") != std::string::npos) {
    draw_napkin(cv, variant);
  } else if (t.find("candle") != std::string::npos) {
    draw_candle(cv, variant);
  } else if (t.find("harness") != std::string::npos) {
    draw_harness(cv, variant);
  } else if (t.find("ball") != std::string::npos) {
    draw_beachball(cv, variant);
  } else {
    throw ConfigError("no procedural sprite for '" + trigger + "'");
  }
  return cv.take();
}

void SpriteLibrary::add(const std::string& trigger, Sprite sprite) {
  if (sprite.rgb.channels() != 3 || sprite.alpha.height != sprite.rgb.height() ||
      sprite.alpha.width != sprite.rgb.width()) {
    throw DimensionError("sprite for '" + trigger + "' needs matching RGB and alpha planes");
  }
  entries_[lower(trigger)].push_back(std::move(sprite));
}

bool SpriteLibrary::contains(const std::string& trigger) const { return entries_.count(lower(trigger)) > 0; }

const std::vector<Sprite>& SpriteLibrary::variants(const std::string& trigger) const {
  auto it = entries_.find(lower(trigger));
  if (it == entries_.end()) throw ConfigError("trigger '" + trigger + "' is not registered in the sprite library");
  return it->second;
}

std::vector<std::string> SpriteLibrary::triggers() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

std::string SpriteLibrary::version() const {
  Sha256 h;
  for (const auto& [name, sprites] : entries_) {
    h.update(name).update_u64(sprites.size());
    for (const auto& s : sprites) {
      h.update(s.rgb.data());
      for (float a : s.alpha.values) h.update_u64(static_cast<std::uint64_t>(std::lround(a * 65535.0F)));
    }
  }
  return h.hex_digest().substr(0, 16);
}

SpriteLibrary SpriteLibrary::builtin() {
  SpriteLibrary lib;
  for (const auto& name : builtin_trigger_names()) {
    for (int v = 0; v < 3; ++v) lib.add(name, draw_builtin_sprite(name, v));
  }
  return lib;
}

SpriteLibrary SpriteLibrary::load_directory(const std::filesystem::path& dir) {
  SpriteLibrary lib;
  if (!std::filesystem::is_directory(dir)) throw ConfigError("sprite directory not found: " + dir.string());
  std::vector<std::filesystem::path> trigger_dirs;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_directory()) trigger_dirs.push_back(e.path());
  }
  std::sort(trigger_dirs.begin(), trigger_dirs.end());
  for (const auto& tdir : trigger_dirs) {
    std::string name = tdir.filename().string();
    std::replace(name.begin(), name.end(), '_', ' ');
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(tdir)) {
      if (e.path().extension() == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      RgbaImage img = decode_png_rgba(read_file_bytes(f));
      lib.add(name, Sprite{std::move(img.rgb), std::move(img.alpha)});
    }
  }
  return lib;
}

}  // namespace vssc::services
