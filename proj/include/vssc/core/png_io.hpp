#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vssc/core/image.hpp"

namespace vssc {

// 8-bit PNG codec. Gray stays gray; anything with color decodes to RGB with
// alpha dropped (use decode_png_rgba to keep it).
std::vector<std::uint8_t> encode_png(const ImageBuffer& img);
ImageBuffer decode_png(std::span<const std::uint8_t> bytes);

struct RgbaImage {
  ImageBuffer rgb;
  FloatPlane alpha;  // [0,1]
};

RgbaImage decode_png_rgba(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png_rgba(const RgbaImage& img);

ImageBuffer read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageBuffer& img);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace vssc
