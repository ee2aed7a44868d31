#include "vssc/core/png_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "vssc/core/errors.hpp"

namespace vssc {

namespace {

struct PngImage {
  png_image image;
  PngImage() {
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
};

std::vector<std::uint8_t> write_to_memory(png_image& image, const void* pixels) {
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr)) {
    throw Error(std::string("png encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr)) {
    throw Error(std::string("png encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
  if (img.empty()) throw DimensionError("cannot encode an empty image");
  PngImage png;
  png.image.width = static_cast<png_uint_32>(img.width());
  png.image.height = static_cast<png_uint_32>(img.height());
  png.image.format = img.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  return write_to_memory(png.image, img.data().data());
}

ImageBuffer decode_png(std::span<const std::uint8_t> bytes) {
  PngImage png;
  if (!png_image_begin_read_from_memory(&png.image, bytes.data(), bytes.size())) {
    throw DecodeError(std::string("png decode failed: ") + png.image.message);
  }
  const bool gray = (png.image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  png.image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  ImageBuffer out(static_cast<int>(png.image.height), static_cast<int>(png.image.width),
                  gray ? 1 : 3);
  if (!png_image_finish_read(&png.image, nullptr, out.data().data(), 0, nullptr)) {
    throw DecodeError(std::string("png decode failed: ") + png.image.message);
  }
  return out;
}

RgbaImage decode_png_rgba(std::span<const std::uint8_t> bytes) {
  PngImage png;
  if (!png_image_begin_read_from_memory(&png.image, bytes.data(), bytes.size())) {
    throw DecodeError(std::string("png decode failed: ") + png.image.message);
  }
  png.image.format = PNG_FORMAT_RGBA;
  const int h = static_cast<int>(png.image.height);
  const int w = static_cast<int>(png.image.width);
  std::vector<std::uint8_t> rgba(static_cast<std::size_t>(h) * w * 4);
  if (!png_image_finish_read(&png.image, nullptr, rgba.data(), 0, nullptr)) {
    throw DecodeError(std::string("png decode failed: ") + png.image.message);
  }
  RgbaImage out{ImageBuffer(h, w, 3), FloatPlane(h, w)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 4;
      for (int c = 0; c < 3; ++c) out.rgb.at(y, x, c) = rgba[i + c];
      out.alpha.at(y, x) = static_cast<float>(rgba[i + 3]) / 255.0F;
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_png_rgba(const RgbaImage& img) {
  const int h = img.rgb.height();
  const int w = img.rgb.width();
  std::vector<std::uint8_t> rgba(static_cast<std::size_t>(h) * w * 4);
  const ImageBuffer rgb = to_rgb(img.rgb);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 4;
      for (int c = 0; c < 3; ++c) rgba[i + c] = rgb.at(y, x, c);
      rgba[i + 3] = quantize(img.alpha.at(y, x) * 255.0);
    }
  }
  PngImage png;
  png.image.width = static_cast<png_uint_32>(w);
  png.image.height = static_cast<png_uint_32>(h);
  png.image.format = PNG_FORMAT_RGBA;
  return write_to_memory(png.image, rgba.data());
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ImageBuffer read_png(const std::filesystem::path& path) { return decode_png(read_file_bytes(path)); }

void write_png(const std::filesystem::path& path, const ImageBuffer& img) {
  write_file_bytes(path, encode_png(img));
}

}  // namespace vssc
