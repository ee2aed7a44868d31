#include "vssc/core/errors.hpp"
#include "vssc/core/random.hpp"
#include "vssc/distortions/distortions.hpp"

namespace vssc::distort {

ImageBuffer gaussian_noise(const ImageBuffer& image, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
  if (sigma == 0.0) return image;
  Rng rng(derive_seed(seed, "gaussian_noise"));
  ImageBuffer out = image;
  for (auto& v : out.data()) v = quantize(v + sigma * rng.normal());
  return out;
}

}  // namespace vssc::distort
