#include <doctest.h>

#include <cmath>
#include <numbers>

#include "vssc/core/errors.hpp"
#include "vssc/core/hash.hpp"
#include "vssc/core/random.hpp"
#include "vssc/triggers/baseline.hpp"
#include "vssc/triggers/trigger_spec.hpp"

using namespace vssc;
using namespace vssc::triggers;

namespace {

ImageBuffer noise_image(int h, int w, std::uint64_t seed) {
  ImageBuffer img(h, w, 3);
  Rng rng(seed);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

ImageBuffer smooth_image(int h, int w) {
  ImageBuffer img(h, w, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) = static_cast<std::uint8_t>(128 + 60 * std::sin(0.05 * x + c) * std::cos(0.04 * y));
  return img;
}

}  // namespace

TEST_CASE("badnets at 224 with default geometry") {
  const ImageBuffer img(224, 224, 3, 100);
  const auto out = apply_badnets(img, {});
  for (int y = 0; y < 224; ++y) {
    for (int x = 0; x < 224; ++x) {
      const bool inside = x >= 150 && x < 180 && y >= 128 && y < 158;
      if (!inside) {
        CHECK_MESSAGE(out.at(y, x, 0) == 100, "outside patch changed at " << y << "," << x);
      } else {
        const std::uint8_t expect = ((y - 128) + (x - 150)) % 2 == 0 ? 255 : 0;
        REQUIRE(out.at(y, x, 1) == expect);
      }
    }
  }
}

TEST_CASE("badnets patch equals an independently drawn checkerboard") {
  const auto img = noise_image(224, 224, 3);
  const auto out = apply_badnets(img, {});
  std::vector<std::uint8_t> region, board;
  for (int y = 128; y < 158; ++y)
    for (int x = 150; x < 180; ++x)
      for (int c = 0; c < 3; ++c) {
        region.push_back(out.at(y, x, c));
        board.push_back((x + y) % 2 == 0 ? 255 : 0);  // 150 + 128 is even
      }
  CHECK(sha256_hex(region) == sha256_hex(board));
}

TEST_CASE("badnets scaling and errors") {
  const auto p = scaled_badnets_params(32, 32);
  CHECK(p.patch_size == 4);
  CHECK(p.offset_right == 6);
  CHECK(p.offset_bottom == 9);
  const auto img = noise_image(16, 16, 1);
  CHECK(apply_badnets(img, {0, 3, 3}) == img);
  CHECK_THROWS_AS(apply_badnets(img, {30, 44, 66}), GeometryError);
  CHECK_THROWS_AS(apply_badnets(img, {-1, 0, 0}), GeometryError);
}

TEST_CASE("blended") {
  const auto img = noise_image(20, 20, 2);
  const auto key = noise_image(20, 20, 3);
  CHECK(apply_blended(img, {key, 0.0}) == img);
  CHECK(apply_blended(img, {key, 1.0}) == key);
  const auto out = apply_blended(ImageBuffer(4, 4, 3, 100), {ImageBuffer(4, 4, 3, 200), 0.1});
  for (auto v : out.data()) CHECK(v == 110);
  CHECK_THROWS_AS(apply_blended(img, {key, 1.5}), ConfigError);
  CHECK_THROWS_AS(apply_blended(img, {ImageBuffer{}, 0.5}), DimensionError);
}

TEST_CASE("sig offsets follow the sinusoid") {
  SigParams p;
  CHECK(sig_offset(0, 224, p) == 0.0);
  const double expect = 40.0 * std::sin(2.0 * std::numbers::pi * 9.0 * 6.0 / 224.0);
  CHECK(sig_offset(9, 224, p) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect == doctest::Approx(39.96).epsilon(1e-3));

  const ImageBuffer gray(224, 224, 3, 128);
  const auto out = apply_sig(gray, p);
  for (int x = 0; x < 224; ++x) {
    const double want = 128.0 + 40.0 * std::sin(2.0 * std::numbers::pi * x * 6.0 / 224.0);
    CHECK(std::abs(out.at(0, x, 0) - want) <= 0.5);
    for (int y = 1; y < 224; ++y) REQUIRE(out.at(y, x, 2) == out.at(0, x, 2));
  }
  CHECK(apply_sig(gray, {0.0, 6.0}) == gray);
  CHECK_THROWS_AS(apply_sig(gray, {-1.0, 6.0}), ConfigError);
}

TEST_CASE("wanet") {
  const auto img = smooth_image(32, 32);
  SUBCASE("zero strength is a near identity") {
    CHECK(max_abs_diff(apply_wanet(img, {4, 0.0, 9}), img) <= 1);
  }
  SUBCASE("zero field is a near identity") {
    WarpField zero{4, std::vector<double>(32, 0.0)};
    CHECK(max_abs_diff(apply_warp_field(img, zero, 0.5), img) <= 1);
  }
  SUBCASE("seeded and normalized") {
    const WaNetParams p{4, 0.5, 11};
    CHECK(apply_wanet(img, p) == apply_wanet(img, p));
    const auto f = wanet_control_field(p);
    double mean_abs = 0.0;
    for (double v : f.values) mean_abs += std::abs(v);
    CHECK(mean_abs / f.values.size() == doctest::Approx(1.0));
    CHECK(wanet_control_field({4, 0.5, 12}).values != f.values);
  }
  SUBCASE("bicubic upsampling interpolates the control grid corners") {
    WarpField f{2, {1.0, 2.0, 3.0, 4.0, 0, 0, 0, 0}};
    const auto up = upsample_bicubic(f, 0, 5, 5);
    CHECK(up[0] == doctest::Approx(1.0));
    CHECK(up[4] == doctest::Approx(2.0));
    CHECK(up[20] == doctest::Approx(3.0));
    CHECK(up[24] == doctest::Approx(4.0));
  }
  SUBCASE("strong warp moves pixels") {
    CHECK(max_abs_diff(apply_wanet(noise_image(32, 32, 5), {4, 1.0, 1}), noise_image(32, 32, 5)) > 10);
  }
}

TEST_CASE("bpp") {
  const auto img = noise_image(16, 16, 4);
  CHECK(apply_bpp(img, {8, false}) == img);
  ImageBuffer ends(1, 2, 1);
  ends.at(0, 0, 0) = 0;
  ends.at(0, 1, 0) = 255;
  CHECK(apply_bpp(ends, {1, false}) == ends);
  const auto q = apply_bpp(ImageBuffer(2, 2, 1, 100), {3, false});
  CHECK(q.at(0, 0, 0) == 109);
  const auto d = apply_bpp(ImageBuffer(8, 8, 1, 100), {3, true});
  double mean = 0;
  for (auto v : d.data()) {
    CHECK((v == 73 || v == 109));
    mean += v;
  }
  CHECK(std::abs(mean / 64.0 - 100.0) < 6.0);
  CHECK_THROWS_AS(apply_bpp(img, {0, false}), ConfigError);
}

TEST_CASE("trojan stamp") {
  const auto img = noise_image(10, 10, 6);
  const ImageBuffer trig(10, 10, 3, 255);
  CHECK(apply_trojan_stamp(img, {trig, FloatPlane(10, 10, 0.0F)}) == img);
  CHECK(apply_trojan_stamp(img, {trig, FloatPlane(10, 10, 1.0F)}) == trig);
  const auto half = apply_trojan_stamp(ImageBuffer(10, 10, 3, 0), {trig, FloatPlane(10, 10, 0.5F)});
  for (auto v : half.data()) CHECK(v == 128);
  CHECK_THROWS_AS(apply_trojan_stamp(img, {trig, FloatPlane(3, 3, 1.0F)}), DimensionError);
  const auto def = default_trojan_stamp(32, 32);
  const auto img32 = noise_image(32, 32, 6);
  CHECK_FALSE(apply_trojan_stamp(img32, def) == img32);
}

TEST_CASE("trigger spec") {
  const auto s = TriggerSpec::semantic("red flower");
  CHECK(s.is_semantic());
  CHECK(s.describe() == "semantic:red flower");
  CHECK_THROWS_AS(TriggerSpec::semantic("").validate(), ConfigError);
  const auto b = TriggerSpec::from_baseline(BadNetsParams{});
  CHECK_FALSE(b.is_semantic());
  CHECK(baseline_name(*b.baseline) == "badnets");
  const auto img = noise_image(32, 32, 8);
  CHECK(apply_baseline(img, *b.baseline) == apply_badnets(img, scaled_badnets_params(32, 32)));
  CHECK(apply_baseline(img, SigParams{}) == apply_sig(img, SigParams{}));
}
