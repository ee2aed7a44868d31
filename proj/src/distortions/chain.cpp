#include "vssc/core/errors.hpp"
#include "vssc/core/random.hpp"
#include "vssc/distortions/distortions.hpp"

namespace vssc::distort {

std::string kind_name(DistortionKind kind) {
  switch (kind) {
    case DistortionKind::kBlur: return "blur";
    case DistortionKind::kJpeg: return "jpeg";
    case DistortionKind::kNoise: return "noise";
    case DistortionKind::kPerspective: return "perspective";
    case DistortionKind::kColorJitter: return "color_jitter";
    case DistortionKind::kD2pChain: return "d2p_chain";
  }
  return "unknown";
}

DistortionKind parse_kind(const std::string& name) {
  for (auto k : {DistortionKind::kBlur, DistortionKind::kJpeg, DistortionKind::kNoise,
                 DistortionKind::kPerspective, DistortionKind::kColorJitter, DistortionKind::kD2pChain}) {
    if (kind_name(k) == name) return k;
  }
  throw ConfigError("unknown distortion kind '" + name + "'");
}

DistortionConfig DistortionConfig::blur(int kernel) {
  DistortionConfig c;
  c.kind = DistortionKind::kBlur;
  c.blur_kernel = kernel;
  return c;
}

DistortionConfig DistortionConfig::jpeg(int quality) {
  DistortionConfig c;
  c.kind = DistortionKind::kJpeg;
  c.jpeg_quality = quality;
  return c;
}

DistortionConfig DistortionConfig::noise(double sigma, std::uint64_t seed) {
  DistortionConfig c;
  c.kind = DistortionKind::kNoise;
  c.noise_sigma = sigma;
  c.seed = seed;
  return c;
}

void DistortionConfig::validate() const {
  switch (kind) {
    case DistortionKind::kBlur:
      if (blur_kernel < 1 || blur_kernel % 2 == 0) throw ConfigError("blur kernel must be odd and >= 1");
      break;
    case DistortionKind::kJpeg:
      if (jpeg_quality < 1 || jpeg_quality > 100) throw ConfigError("jpeg quality must lie in [1,100]");
      break;
    case DistortionKind::kNoise:
      if (noise_sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
      if (noise_mean != 0.0) throw ConfigError("noise mean is fixed at 0");
      break;
    case DistortionKind::kPerspective:
      if (perspective_jitter < 0.0 || perspective_jitter >= 0.5) throw ConfigError("perspective jitter must lie in [0,0.5)");
      break;
    case DistortionKind::kColorJitter:
      if (color_jitter < 0.0 || color_jitter >= 1.0) throw ConfigError("color jitter must lie in [0,1)");
      break;
    case DistortionKind::kD2pChain:
      if (chain.empty()) throw ConfigError("d2p chain must not be empty");
      for (const auto& stage : chain) {
        if (stage.kind == DistortionKind::kD2pChain) throw ConfigError("d2p chains do not nest");
        stage.validate();
      }
      break;
  }
}

void DistortionConfig::validate_sweep_entry() const {
  validate();
  if (kind == DistortionKind::kBlur && blur_kernel > 19) throw ConfigError("sweep blur kernel must lie in [1,19]");
  if (kind == DistortionKind::kJpeg && jpeg_quality > 30) throw ConfigError("sweep jpeg quality must lie in [1,30]");
  if (kind == DistortionKind::kNoise && noise_sigma > 28.0) throw ConfigError("sweep noise sigma must lie in [0,28]");
}

double DistortionConfig::param() const {
  switch (kind) {
    case DistortionKind::kBlur: return blur_kernel;
    case DistortionKind::kJpeg: return jpeg_quality;
    case DistortionKind::kNoise: return noise_sigma;
    case DistortionKind::kPerspective: return perspective_jitter;
    case DistortionKind::kColorJitter: return color_jitter;
    case DistortionKind::kD2pChain: return static_cast<double>(chain.size());
  }
  return 0.0;
}

std::string DistortionConfig::label() const {
  if (kind == DistortionKind::kD2pChain) return "d2p_sim";
  std::string p = std::to_string(param());
  p.erase(p.find_last_not_of('0') + 1);
  if (!p.empty() && p.back() == '.') p.pop_back();
  return kind_name(kind) + "(" + p + ")";
}

DistortionConfig default_d2p_chain(std::uint64_t seed) {
  DistortionConfig chain;
  chain.kind = DistortionKind::kD2pChain;
  chain.seed = seed;

  DistortionConfig persp;
  persp.kind = DistortionKind::kPerspective;
  persp.perspective_jitter = 0.02;
  DistortionConfig color;
  color.kind = DistortionKind::kColorJitter;
  color.color_jitter = 0.10;
  chain.chain = {persp, color, DistortionConfig::blur(3), DistortionConfig::jpeg(50), DistortionConfig::noise(4.0, 0)};
  // Stage seeds are derived from the chain seed at application time.
  return chain;
}

namespace {

Homography compose(const Homography& outer, const Homography& inner) {
  Homography h;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += outer.m[r * 3 + k] * inner.m[k * 3 + c];
      h.m[r * 3 + c] = acc;
    }
  return h;
}

void apply_stage(DistortionResult& state, const DistortionConfig& stage) {
  switch (stage.kind) {
    case DistortionKind::kBlur:
      state.image = gaussian_blur(state.image, stage.blur_kernel);
      break;
    case DistortionKind::kJpeg: {
      auto r = jpeg_roundtrip(state.image, stage.jpeg_quality);
      state.image = std::move(r.image);
      state.jpeg_bytes.push_back(r.encoded_bytes);
      break;
    }
    case DistortionKind::kNoise:
      state.image = gaussian_noise(state.image, stage.noise_sigma, stage.seed);
      break;
    case DistortionKind::kPerspective: {
      auto r = perspective_jitter(state.image, stage.perspective_jitter, stage.seed);
      state.image = std::move(r.image);
      state.homography = state.homography ? compose(r.homography, *state.homography) : r.homography;
      break;
    }
    case DistortionKind::kColorJitter:
      state.image = color_jitter(state.image, stage.color_jitter, stage.seed);
      break;
    case DistortionKind::kD2pChain:
      throw ConfigError("d2p chains do not nest");
  }
}

}  // namespace

DistortionResult d2p_chain(const ImageBuffer& image, const DistortionConfig& config) {
  if (config.kind != DistortionKind::kD2pChain) throw ConfigError("d2p_chain needs a chain config");
  config.validate();
  DistortionResult state{image, std::nullopt, {}};
  for (std::size_t i = 0; i < config.chain.size(); ++i) {
    DistortionConfig stage = config.chain[i];
    stage.seed = derive_seed(config.seed, i);
    apply_stage(state, stage);
  }
  return state;
}

DistortionResult apply_distortion(const ImageBuffer& image, const DistortionConfig& config) {
  if (config.kind == DistortionKind::kD2pChain) return d2p_chain(image, config);
  config.validate();
  DistortionResult state{image, std::nullopt, {}};
  apply_stage(state, config);
  return state;
}

DistortionConfig for_sample(const DistortionConfig& config, std::uint64_t sample_index) {
  DistortionConfig c = config;
  c.seed = derive_seed(config.seed, sample_index);
  return c;
}

}  // namespace vssc::distort
