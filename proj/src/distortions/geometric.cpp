#include <Eigen/Dense>

#include <cmath>

#include "vssc/core/errors.hpp"
#include "vssc/core/random.hpp"
#include "vssc/distortions/distortions.hpp"

namespace vssc::distort {

Point Homography::apply(Point p) const {
  const double w = m[6] * p.x + m[7] * p.y + m[8];
  return {(m[0] * p.x + m[1] * p.y + m[2]) / w, (m[3] * p.x + m[4] * p.y + m[5]) / w};
}

Homography Homography::inverse() const {
  Eigen::Matrix3d a;
  a << m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7], m[8];
  if (std::abs(a.determinant()) < 1e-12) throw GeometryError("homography is singular");
  const Eigen::Matrix3d inv = a.inverse();
  Homography h;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) h.m[r * 3 + c] = inv(r, c) / inv(2, 2);
  return h;
}

Homography Homography::from_correspondences(const std::array<Point, 4>& src, const std::array<Point, 4>& dst) {
  Eigen::Matrix<double, 8, 8> a;
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const double x = src[i].x, y = src[i].y, u = dst[i].x, v = dst[i].y;
    a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
    a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
    b(2 * i) = u;
    b(2 * i + 1) = v;
  }
  const auto lu = a.fullPivLu();
  if (!lu.isInvertible()) throw GeometryError("homography correspondences are degenerate");
  const Eigen::Matrix<double, 8, 1> sol = lu.solve(b);
  if (!sol.allFinite()) throw GeometryError("homography solve produced non-finite values");
  Homography h;
  for (int i = 0; i < 8; ++i) h.m[i] = sol(i);
  h.m[8] = 1.0;
  Eigen::Matrix3d hm;
  hm << h.m[0], h.m[1], h.m[2], h.m[3], h.m[4], h.m[5], h.m[6], h.m[7], h.m[8];
  if (std::abs(hm.determinant()) < 1e-12) throw GeometryError("homography correspondences are degenerate");
  return h;
}

ImageBuffer warp_perspective(const ImageBuffer& image, const Homography& h) {
  const Homography inv = h.inverse();
  ImageBuffer out(image.height(), image.width(), image.channels());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const Point s = inv.apply({static_cast<double>(x), static_cast<double>(y)});
      for (int c = 0; c < image.channels(); ++c) out.at(y, x, c) = quantize(sample_bilinear(image, s.y, s.x, c));
    }
  }
  return out;
}

PerspectiveResult perspective_jitter(const ImageBuffer& image, double max_fraction, std::uint64_t seed) {
  if (max_fraction < 0.0 || max_fraction >= 0.5) throw ConfigError("perspective jitter must lie in [0,0.5)");
  if (max_fraction == 0.0) return {image, Homography{}};
  const double w = image.width() - 1;
  const double h = image.height() - 1;
  const std::array<Point, 4> src{Point{0, 0}, Point{w, 0}, Point{w, h}, Point{0, h}};
  std::array<Point, 4> dst = src;
  Rng rng(derive_seed(seed, "perspective"));
  for (auto& p : dst) {
    p.x += rng.uniform(-max_fraction, max_fraction) * image.width();
    p.y += rng.uniform(-max_fraction, max_fraction) * image.height();
  }
  const Homography hom = Homography::from_correspondences(src, dst);
  return {warp_perspective(image, hom), hom};
}

ImageBuffer color_jitter(const ImageBuffer& image, double jitter, std::uint64_t seed) {
  if (jitter < 0.0 || jitter >= 1.0) throw ConfigError("color jitter must lie in [0,1)");
  if (jitter == 0.0) return image;
  Rng rng(derive_seed(seed, "color_jitter"));
  const double brightness = rng.uniform(1.0 - jitter, 1.0 + jitter);
  const double contrast = rng.uniform(1.0 - jitter, 1.0 + jitter);
  double mean = 0.0;
  for (auto v : image.data()) mean += v;
  mean = image.size() ? brightness * mean / static_cast<double>(image.size()) : 0.0;
  ImageBuffer out = image;
  for (auto& v : out.data()) v = quantize(contrast * (brightness * v - mean) + mean);
  return out;
}

}  // namespace vssc::distort
