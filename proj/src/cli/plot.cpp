#include "vssc/cli/plot.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <cmath>
#include <map>
#include <string>

namespace vssc::cli {

namespace {

struct Canvas {
  int w, h;
  std::vector<std::uint8_t> px;

  Canvas(int w_, int h_) : w(w_), h(h_), px(static_cast<std::size_t>(w_) * h_ * 3, 255) {}

  void set(int x, int y, std::array<std::uint8_t, 3> c) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    auto* p = &px[(static_cast<std::size_t>(y) * w + x) * 3];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  void line(double x0, double y0, double x1, double y1, std::array<std::uint8_t, 3> c) {
    const int steps = static_cast<int>(std::max(std::abs(x1 - x0), std::abs(y1 - y0))) + 1;
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      set(static_cast<int>(std::lround(x0 + (x1 - x0) * t)), static_cast<int>(std::lround(y0 + (y1 - y0) * t)), c);
    }
  }

  void dot(double x, double y, std::array<std::uint8_t, 3> c) {
    for (int dy = -2; dy <= 2; ++dy)
      for (int dx = -2; dx <= 2; ++dx) set(static_cast<int>(std::lround(x)) + dx, static_cast<int>(std::lround(y)) + dy, c);
  }
};

}  // namespace

ImageBuffer plot_sweep(const std::vector<eval::EvalReport>& reports, int panel_width, int height) {
  std::vector<std::string> labels;
  const eval::EvalReport* digital = nullptr;
  for (const auto& r : reports) {
    if (r.scenario.kind == eval::ScenarioKind::kDigital) {
      if (!digital) digital = &r;
      continue;
    }
    const auto l = r.scenario.label();
    if (std::find(labels.begin(), labels.end(), l) == labels.end()) labels.push_back(l);
  }
  if (labels.empty()) labels.push_back("digital");
  Canvas cv(panel_width * static_cast<int>(labels.size()), height);
  const int margin = 16;
  const std::array<std::uint8_t, 3> axis{0, 0, 0}, red{220, 30, 30}, blue{30, 60, 220}, green{20, 160, 60},
      grid{225, 225, 225};

  for (std::size_t p = 0; p < labels.size(); ++p) {
    const int x0 = static_cast<int>(p) * panel_width + margin;
    const int x1 = static_cast<int>(p + 1) * panel_width - margin;
    const int y0 = margin, y1 = height - margin;
    for (int k = 1; k < 4; ++k) {
      const double y = y1 - (y1 - y0) * k / 4.0;
      cv.line(x0, y, x1, y, grid);
    }
    cv.line(x0, y1, x1, y1, axis);
    cv.line(x0, y0, x0, y1, axis);

    std::vector<const eval::EvalReport*> pts;
    if (digital) pts.push_back(digital);
    for (const auto& r : reports)
      if (r.scenario.kind != eval::ScenarioKind::kDigital && r.scenario.label() == labels[p]) pts.push_back(&r);
    std::stable_sort(pts.begin(), pts.end(), [](auto* a, auto* b) { return a->scenario.param < b->scenario.param; });
    if (pts.empty()) continue;
    double lo = pts.front()->scenario.param, hi = pts.back()->scenario.param;
    if (hi <= lo) hi = lo + 1.0;
    auto X = [&](double v) { return x0 + (x1 - x0) * (v - lo) / (hi - lo); };
    auto Y = [&](double v) { return y1 - (y1 - y0) * std::clamp(v, 0.0, 1.0); };
    auto series = [&](auto get, std::array<std::uint8_t, 3> color) {
      std::optional<std::pair<double, double>> prev;
      for (auto* r : pts) {
        const auto v = get(*r);
        if (!v) continue;
        const double x = X(r->scenario.param), y = Y(*v);
        if (prev) cv.line(prev->first, prev->second, x, y, color);
        cv.dot(x, y, color);
        prev = {x, y};
      }
    };
    series([](const eval::EvalReport& r) { return std::optional<double>(r.c_acc); }, blue);
    series([](const eval::EvalReport& r) { return r.r_acc; }, green);
    series([](const eval::EvalReport& r) { return r.asr; }, red);
  }
  return ImageBuffer(height, cv.w, 3, std::move(cv.px));
}

}  // namespace vssc::cli
