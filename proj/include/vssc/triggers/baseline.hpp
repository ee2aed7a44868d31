#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "vssc/core/image.hpp"

namespace vssc::triggers {

// Checkerboard patch. Defaults are for 224x224 inputs; use
// scaled_badnets_params for other sizes.
struct BadNetsParams {
  int patch_size = 30;
  int offset_right = 44;
  int offset_bottom = 66;
};

// Geometry scaled by min(H, W) / 224, each value rounded to the nearest pixel.
BadNetsParams scaled_badnets_params(int height, int width, const BadNetsParams& base = {});

struct BlendedParams {
  ImageBuffer key_image;
  double alpha = 0.1;
};

struct SigParams {
  double delta = 40.0;
  double freq = 6.0;
};

struct WaNetParams {
  int grid_k = 4;
  double strength = 0.5;
  std::uint64_t seed = 0;
};

struct BppParams {
  int bit_depth = 3;
  bool dithering = false;
};

struct TrojanStampParams {
  ImageBuffer trigger_image;
  FloatPlane mask;  // weights in [0,1]
};

ImageBuffer apply_badnets(const ImageBuffer& image, const BadNetsParams& params);
ImageBuffer apply_blended(const ImageBuffer& image, const BlendedParams& params);
ImageBuffer apply_sig(const ImageBuffer& image, const SigParams& params);
ImageBuffer apply_wanet(const ImageBuffer& image, const WaNetParams& params);
ImageBuffer apply_bpp(const ImageBuffer& image, const BppParams& params);
ImageBuffer apply_trojan_stamp(const ImageBuffer& image, const TrojanStampParams& params);

// Per-column SIG offset, before rounding.
double sig_offset(int column, int width, const SigParams& params);

// WaNet internals, exposed so the warp can be driven by an explicit field.
// Field layout is [2][k][k]: channel 0 displaces x, channel 1 displaces y.
struct WarpField {
  int grid_k = 0;
  std::vector<double> values;
};

// Seeded uniform(-1,1) control field normalized by its mean absolute value.
WarpField wanet_control_field(const WaNetParams& params);
// Bicubic (a = -0.75, align-corners) upsampling of one field channel.
std::vector<double> upsample_bicubic(const WarpField& field, int channel, int height, int width);
ImageBuffer apply_warp_field(const ImageBuffer& image, const WarpField& field, double strength);

// Deterministic trigger assets for offline runs (Blended key, Trojan stamp).
ImageBuffer default_blend_key(int height, int width);
TrojanStampParams default_trojan_stamp(int height, int width);

}  // namespace vssc::triggers
