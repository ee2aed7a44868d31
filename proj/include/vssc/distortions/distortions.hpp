#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vssc/core/image.hpp"

namespace vssc::distort {

// --- blur -----------------------------------------------------------------

// sigma = 0.3 * ((k - 1) / 2 - 1) + 0.8
double blur_sigma(int kernel);
std::vector<double> gaussian_kernel(int kernel);
// Separable Gaussian with reflect-101 borders. kernel == 1 is a byte copy.
ImageBuffer gaussian_blur(const ImageBuffer& image, int kernel);

// --- JPEG -----------------------------------------------------------------

struct JpegResult {
  ImageBuffer image;
  std::size_t encoded_bytes = 0;
};

// Baseline sequential JPEG, 4:2:0 chroma subsampling for color input.
std::vector<std::uint8_t> encode_jpeg(const ImageBuffer& image, int quality);
ImageBuffer decode_jpeg(const std::vector<std::uint8_t>& bytes);
JpegResult jpeg_roundtrip(const ImageBuffer& image, int quality);

// --- noise ----------------------------------------------------------------

// i.i.d. N(0, sigma^2) per pixel and channel.
ImageBuffer gaussian_noise(const ImageBuffer& image, double sigma, std::uint64_t seed);

// --- geometric / photometric ---------------------------------------------

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Row-major 3x3 projective map, content coordinates -> output coordinates.
struct Homography {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  Point apply(Point p) const;
  Homography inverse() const;
  static Homography from_correspondences(const std::array<Point, 4>& src, const std::array<Point, 4>& dst);
};

ImageBuffer warp_perspective(const ImageBuffer& image, const Homography& h);

struct PerspectiveResult {
  ImageBuffer image;
  Homography homography;
};

// Each image corner moves by up to max_fraction of the image size per axis.
PerspectiveResult perspective_jitter(const ImageBuffer& image, double max_fraction, std::uint64_t seed);

// Brightness and contrast factors drawn from [1 - jitter, 1 + jitter].
ImageBuffer color_jitter(const ImageBuffer& image, double jitter, std::uint64_t seed);

// --- configuration & chains ----------------------------------------------

enum class DistortionKind { kBlur, kJpeg, kNoise, kPerspective, kColorJitter, kD2pChain };

std::string kind_name(DistortionKind kind);
DistortionKind parse_kind(const std::string& name);

struct DistortionConfig {
  DistortionKind kind = DistortionKind::kBlur;
  int blur_kernel = 1;
  int jpeg_quality = 30;
  double noise_sigma = 0.0;
  double noise_mean = 0.0;
  double perspective_jitter = 0.0;
  double color_jitter = 0.0;
  std::uint64_t seed = 0;
  std::vector<DistortionConfig> chain;

  static DistortionConfig blur(int kernel);
  static DistortionConfig jpeg(int quality);
  static DistortionConfig noise(double sigma, std::uint64_t seed);

  // Operation-level validity (kernel odd, quality in 1..100, ...).
  void validate() const;
  // Sweep entries additionally stay inside the evaluated ranges: blur 1..19,
  // JPEG 1..30, noise sigma 0..28.
  void validate_sweep_entry() const;

  // Scalar that varies along a sweep (kernel, quality, sigma, jitter).
  double param() const;
  std::string label() const;
};

// Simulated print-and-recapture: perspective (2%) -> color jitter (10%) ->
// blur k=3 -> JPEG q=50 -> noise sigma=4, every stage seeded from `seed`.
DistortionConfig default_d2p_chain(std::uint64_t seed);

struct DistortionResult {
  ImageBuffer image;
  std::optional<Homography> homography;  // composed geometric stages
  std::vector<std::size_t> jpeg_bytes;   // one entry per JPEG stage
};

DistortionResult apply_distortion(const ImageBuffer& image, const DistortionConfig& config);
DistortionResult d2p_chain(const ImageBuffer& image, const DistortionConfig& config);

// Same config with its seed (and nested chain seeds) re-derived for one sample,
// so per-image noise differs while the run stays replayable.
DistortionConfig for_sample(const DistortionConfig& config, std::uint64_t sample_index);

}  // namespace vssc::distort
