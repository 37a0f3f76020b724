// Copyright 2026 The contrastiq Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <zlib.h>

#include <cmath>
#include <string>
#include <vector>

#include "contrastiq/image.hpp"
#include "contrastiq/rng.hpp"
#include "support.hpp"

using namespace ciq;
using namespace ciq::image;
using ciq::test::error_code_of;

namespace {

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_chunk(std::vector<std::uint8_t>& out, const char* type,
               const std::vector<std::uint8_t>& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  std::vector<std::uint8_t> body(type, type + 4);
  body.insert(body.end(), data.begin(), data.end());
  out.insert(out.end(), body.begin(), body.end());
  put_be32(out, static_cast<std::uint32_t>(crc32(0L, body.data(), static_cast<uInt>(body.size()))));
}

// Minimal PNG writer straight from the format description, independent of
// the library encoder. color_type 0 = gray, 2 = RGB; 8-bit; filter 0 rows.
std::vector<std::uint8_t> reference_png(int w, int h, int color_type,
                                        const std::vector<std::uint8_t>& samples) {
  const int channels = color_type == 2 ? 3 : 1;
  std::vector<std::uint8_t> raw;
  for (int y = 0; y < h; ++y) {
    raw.push_back(0);
    raw.insert(raw.end(), samples.begin() + static_cast<long>(y) * w * channels,
               samples.begin() + static_cast<long>(y + 1) * w * channels);
  }
  uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> z(zlen);
  REQUIRE(compress2(z.data(), &zlen, raw.data(), static_cast<uLong>(raw.size()), 9) == Z_OK);
  z.resize(zlen);

  std::vector<std::uint8_t> png = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(w));
  put_be32(ihdr, static_cast<std::uint32_t>(h));
  ihdr.insert(ihdr.end(), {8, static_cast<std::uint8_t>(color_type), 0, 0, 0});
  put_chunk(png, "IHDR", ihdr);
  put_chunk(png, "IDAT", z);
  put_chunk(png, "IEND", {});
  return png;
}

// Half-pixel-centred bilinear sample along one axis with clamped edges.
double bilinear_1d(const std::vector<double>& src, int dst_size, int dx) {
  const double pos = (dx + 0.5) * static_cast<double>(src.size()) / dst_size - 0.5;
  const double c = std::clamp(pos, 0.0, static_cast<double>(src.size() - 1));
  const auto i0 = static_cast<std::size_t>(std::floor(c));
  const std::size_t i1 = std::min(i0 + 1, src.size() - 1);
  const double f = c - static_cast<double>(i0);
  return src[i0] * (1.0 - f) + src[i1] * f;
}

}  // namespace

TEST_SUITE("rng") {
  TEST_CASE("mix64 matches the published SplitMix64 sequence") {
    // First outputs of SplitMix64 from state 0.
    CHECK(mix64(0) == 0xe220a8397b1dcdafULL);
    CHECK(mix64(0x9e3779b97f4a7c15ULL) == 0x6e789e6aa1b965f4ULL);
  }

  TEST_CASE("engine is mt19937_64 seeded through mix64") {
    SeededRng rng(42);
    std::mt19937_64 ref(mix64(42));
    for (int i = 0; i < 100; ++i) CHECK(rng.next_u64() == ref());
  }

  TEST_CASE("uniform and below stay in range") {
    SeededRng rng(3);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 7000; ++i) {
      const double u = rng.uniform();
      CHECK((u >= 0.0 && u < 1.0));
      ++counts[rng.below(7)];
    }
    for (int c : counts) CHECK(c > 800);
  }

  TEST_CASE("streams are reproducible and distinct") {
    auto a = SeededRng::stream(9, 1, 2), b = SeededRng::stream(9, 1, 2);
    auto c = SeededRng::stream(9, 2, 1);
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    CHECK(va != c.next_u64());
  }
}

TEST_SUITE("codec") {
  TEST_CASE("2x2 PPM red decodes") {
    std::string s = "P6\n2 2\n255\n";
    for (int i = 0; i < 4; ++i) s += std::string("\xff\x00\x00", 3);
    const std::vector<std::uint8_t> bytes(s.begin(), s.end());
    const auto img = decode_image(bytes);
    REQUIRE(img.width() == 2);
    REQUIRE(img.height() == 2);
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x) {
        CHECK(img.at(y, x, 0) == 255);
        CHECK(img.at(y, x, 1) == 0);
        CHECK(img.at(y, x, 2) == 0);
      }
  }

  TEST_CASE("1x1 RGB PNG from an independent encoder") {
    const auto img = decode_image(reference_png(1, 1, 2, {10, 20, 30}));
    REQUIRE(img.width() == 1);
    CHECK(img.at(0, 0, 0) == 10);
    CHECK(img.at(0, 0, 1) == 20);
    CHECK(img.at(0, 0, 2) == 30);
  }

  TEST_CASE("gray PNG is replicated to three channels") {
    const auto img = decode_image(reference_png(2, 1, 0, {77, 200}));
    CHECK(img.at(0, 0, 0) == 77);
    CHECK(img.at(0, 0, 2) == 77);
    CHECK(img.at(0, 1, 1) == 200);
  }

  TEST_CASE("truncated PNG is CorruptData") {
    auto png = reference_png(4, 4, 2, std::vector<std::uint8_t>(48, 9));
    png.resize(png.size() / 2);
    CHECK(error_code_of([&] { decode_image(png); }) == ErrorCode::CorruptData);
  }

  TEST_CASE("unknown bytes are UnsupportedFormat") {
    const std::vector<std::uint8_t> junk = {'G', 'I', 'F', '8', '9', 'a', 0, 0};
    CHECK(error_code_of([&] { decode_image(junk); }) == ErrorCode::UnsupportedFormat);
  }

  TEST_CASE("PNG and PPM encoders round trip") {
    const auto img = test::noise_image(13, 7, 1);
    CHECK(decode_image(encode_png(img)) == img);
    CHECK(decode_image(encode_ppm(img)) == img);
  }

  TEST_CASE("missing file is an environment error") {
    const auto code = error_code_of([] { read_image("/nonexistent/ciq/x.png"); });
    CHECK(is_environment_error(code));
  }
}

TEST_SUITE("geometry") {
  TEST_CASE("saturate_u8 rounds half away from zero and clamps") {
    CHECK(saturate_u8(2.5) == 3);
    CHECK(saturate_u8(2.49) == 2);
    CHECK(saturate_u8(-0.4) == 0);
    CHECK(saturate_u8(300.0) == 255);
  }

  TEST_CASE("resize to the same size is the identity") {
    const auto img = test::noise_image(9, 6, 2);
    CHECK(resize_bilinear(img, 9, 6) == img);
  }

  TEST_CASE("constant 4x4 upsampled to 224 stays constant") {
    const auto out = resize_bilinear(test::solid_image(4, 4, 128, 128, 128), 224, 224);
    REQUIRE(out.width() == 224);
    for (auto v : out.data()) REQUIRE(v == 128);
  }

  TEST_CASE("2x1 ramp upsampled to 4x1 matches a bilinear oracle") {
    RasterImage img(2, 1);
    for (int c = 0; c < 3; ++c) img.at(0, 1, c) = 255;
    const auto out = resize_bilinear(img, 4, 1);
    const std::vector<double> src = {0.0, 255.0};
    for (int x = 0; x < 4; ++x) {
      const double want = bilinear_1d(src, 4, x);
      CHECK(std::abs(out.at(0, x, 0) - want) <= 1.0);
    }
    CHECK(out.at(0, 0, 0) == 0);
    CHECK(out.at(0, 3, 0) == 255);
  }

  TEST_CASE("downsampling matches the separable oracle") {
    const auto img = test::noise_image(11, 5, 4);
    const auto out = resize_bilinear(img, 4, 3);
    for (int c = 0; c < 3; ++c) {
      std::vector<std::vector<double>> rows(5, std::vector<double>(4));
      for (int y = 0; y < 5; ++y) {
        std::vector<double> line(11);
        for (int x = 0; x < 11; ++x) line[x] = img.at(y, x, c);
        for (int x = 0; x < 4; ++x) rows[y][x] = bilinear_1d(line, 4, x);
      }
      for (int x = 0; x < 4; ++x) {
        std::vector<double> col(5);
        for (int y = 0; y < 5; ++y) col[y] = rows[y][x];
        for (int y = 0; y < 3; ++y) CHECK(std::abs(out.at(y, x, c) - bilinear_1d(col, 3, y)) <= 1.0);
      }
    }
  }

  TEST_CASE("horizontal flip") {
    RasterImage img(2, 1);
    img.at(0, 0, 0) = 10;
    img.at(0, 1, 0) = 20;
    const auto f = horizontal_flip(img);
    CHECK(f.at(0, 0, 0) == 20);
    CHECK(f.at(0, 1, 0) == 10);
    const auto noise = test::noise_image(7, 5, 5);
    CHECK(horizontal_flip(horizontal_flip(noise)) == noise);
    const auto t = to_unit_tensor(noise);
    CHECK(horizontal_flip(horizontal_flip(t)) == t);
  }

  TEST_CASE("rotation by zero is the identity") {
    const auto img = test::noise_image(17, 12, 6);
    CHECK(rotate(img, 0.0) == img);
    const auto t = to_unit_tensor(img);
    CHECK(rotate(t, 0.0) == t);
  }

  TEST_CASE("a bright pixel lands where the rotation says") {
    RasterImage img(41, 41);
    img.at(20, 30, 0) = 255;  // 10 px right of centre
    const double theta = 10.0 * std::acos(-1.0) / 180.0;
    // Counter-clockwise as displayed: y points down, so the point moves up.
    const double want_x = 20.0 + 10.0 * std::cos(theta);
    const double want_y = 20.0 - 10.0 * std::sin(theta);
    const auto out = rotate(img, 10.0);
    int best = -1, bx = 0, by = 0;
    for (int y = 0; y < 41; ++y)
      for (int x = 0; x < 41; ++x)
        if (out.at(y, x, 0) > best) {
          best = out.at(y, x, 0);
          bx = x;
          by = y;
        }
    CHECK(std::abs(bx - want_x) <= 1.0);
    CHECK(std::abs(by - want_y) <= 1.0);
  }

  TEST_CASE("rotation keeps the interior of a constant image") {
    const auto out = rotate(test::solid_image(31, 31, 90, 90, 90), 7.0);
    for (int y = 10; y < 21; ++y)
      for (int x = 10; x < 21; ++x) CHECK(out.at(y, x, 1) == 90);
  }
}

TEST_SUITE("tensor") {
  TEST_CASE("unit tensor scales by 1/255 and inverts exactly") {
    RasterImage img(256, 1);
    for (int x = 0; x < 256; ++x)
      for (int c = 0; c < 3; ++c) img.at(0, x, c) = static_cast<std::uint8_t>(x);
    const auto t = to_unit_tensor(img);
    CHECK(t.channels() == 3);
    CHECK(t.at(0, 0, 128) == doctest::Approx(128.0 / 255.0).epsilon(1e-7));
    CHECK(t.at(2, 0, 255) == 1.0f);
    CHECK(from_unit_tensor(t) == img);
  }

  TEST_CASE("Table-2 channel normalization") {
    Tensor3 t(3, 1, 1);
    t.at(0, 0, 0) = 0.485f;
    t.at(1, 0, 0) = 0.456f;
    t.at(2, 0, 0) = 1.0f;
    const auto n = normalize_channels(t, kImageNetMean, kImageNetStd);
    CHECK(n.at(0, 0, 0) == 0.0f);
    CHECK(n.at(1, 0, 0) == 0.0f);
    CHECK(n.at(2, 0, 0) == doctest::Approx((1.0 - 0.406) / 0.225).epsilon(1e-6));
  }

  TEST_CASE("zero std is rejected") {
    const std::array<float, 3> mean{0, 0, 0}, bad{1, 0, 1};
    CHECK(error_code_of([&] { normalize_channels(Tensor3(3, 1, 1), mean, bad); }) ==
          ErrorCode::ZeroStd);
  }
}

TEST_SUITE("jitter") {
  TEST_CASE("identity factors leave the image unchanged") {
    const auto img = test::noise_image(8, 8, 7);
    CHECK(color_jitter(img, 1.0, 1.0, 1.0, 0.0) == img);
  }

  TEST_CASE("gray is a fixed point of saturation and hue") {
    const auto img = test::solid_image(4, 4, 100, 100, 100);
    CHECK(color_jitter(img, 1.0, 1.3, 1.6, 0.25) == img);
  }

  TEST_CASE("brightness scales samples") {
    const auto out = color_jitter(test::solid_image(2, 2, 100, 100, 100), 1.2, 1.0, 1.0, 0.0);
    CHECK(out.at(0, 0, 0) == 120);
    const auto clipped = color_jitter(test::solid_image(1, 1, 250, 0, 0), 1.2, 1.0, 1.0, 0.0);
    CHECK(clipped.at(0, 0, 0) == 255);
  }
}

TEST_SUITE("augment") {
  TEST_CASE("same seed gives bit-identical tensors") {
    const auto img = test::noise_image(64, 48, 8);
    const AugmentPolicy policy;
    CHECK(augment(img, SeededRng(11), policy) == augment(img, SeededRng(11), policy));
  }

  TEST_CASE("different seeds give different tensors") {
    const auto img = test::noise_image(64, 48, 9);
    const AugmentPolicy policy;
    CHECK_FALSE(augment(img, SeededRng(1), policy) == augment(img, SeededRng(2), policy));
  }

  TEST_CASE("identity policy equals the eval transform") {
    const auto img = test::noise_image(50, 40, 10);
    const auto policy = AugmentPolicy::identity();
    CHECK(augment(img, SeededRng(5), policy) == eval_transform(img, policy));
  }

  TEST_CASE("augment is eval normalization of augment_raster") {
    const auto img = test::noise_image(30, 30, 12);
    const AugmentPolicy policy;
    const auto raster = augment_raster(img, SeededRng(3), policy);
    CHECK(raster.width() == 224);
    CHECK(augment(img, SeededRng(3), policy) ==
          normalize_channels(to_unit_tensor(raster), policy.channel_mean, policy.channel_std));
  }

  TEST_CASE("draws stay inside the policy bounds") {
    SeededRng rng(13);
    const AugmentPolicy policy;
    for (int i = 0; i < 500; ++i) {
      const auto d = draw_augment(rng, policy);
      CHECK(std::abs(d.angle) <= policy.rotation_limit);
      CHECK(std::abs(d.brightness - 1.0) <= policy.brightness_jitter);
      CHECK(std::abs(d.hue) <= policy.hue_jitter);
    }
  }

  TEST_CASE("invalid policies are rejected") {
    AugmentPolicy p;
    p.flip_probability = 1.5;
    CHECK(error_code_of([&] { p.validate(); }) == ErrorCode::InvalidArgument);
    p = {};
    p.target_size = 0;
    CHECK(error_code_of([&] { p.validate(); }) == ErrorCode::InvalidArgument);
  }
}
