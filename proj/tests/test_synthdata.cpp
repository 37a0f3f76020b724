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

#include <cmath>

#include "contrastiq/synth.hpp"
#include "contrastiq/textio.hpp"
#include "support.hpp"

using namespace ciq;
using namespace ciq::synth;
using ciq::test::error_code_of;

namespace {

image::RasterImage ramp() {
  image::RasterImage img(256, 1);
  for (int x = 0; x < 256; ++x)
    for (int c = 0; c < 3; ++c) img.at(0, x, c) = static_cast<std::uint8_t>(x);
  return img;
}

std::vector<std::filesystem::path> write_bases(const test::TempDir& dir, int n) {
  std::vector<std::filesystem::path> paths;
  for (int i = 0; i < n; ++i) {
    paths.push_back(dir / ("base" + std::to_string(i) + ".png"));
    image::write_png(procedural_base(i, 48, 32), paths.back());
  }
  return paths;
}

std::vector<Distortion> gammas(std::initializer_list<double> gs) {
  std::vector<Distortion> out;
  for (double g : gs) out.push_back(Distortion::gamma(g));
  return out;
}

}  // namespace

TEST_CASE("gamma curve") {
  const auto img = ramp();
  CHECK(apply_gamma(img, 2.0).at(0, 64, 0) == 16);
  CHECK(apply_gamma(img, 1.0) == img);
  for (double g : {0.4, 0.7, 1.5, 2.5}) {
    const auto out = apply_gamma(img, g);
    for (int x = 0; x < 256; ++x) {
      const double want = std::floor(255.0 * std::pow(x / 255.0, g) + 0.5);
      REQUIRE(out.at(0, x, 1) == static_cast<int>(want));
    }
  }
}

TEST_CASE("linear contrast") {
  const auto img = ramp();
  CHECK(apply_linear_contrast(img, 0.5).at(0, 255, 0) == 191);
  CHECK(apply_linear_contrast(img, 0.5).at(0, 0, 0) == 64);
  CHECK(apply_linear_contrast(img, 1.0) == img);
  const auto wide = apply_linear_contrast(img, 2.0);
  CHECK(wide.at(0, 10, 0) == 0);
  CHECK(wide.at(0, 250, 0) == 255);
}

TEST_CASE("invalid levels") {
  const auto img = ramp();
  CHECK(error_code_of([&] { apply_gamma(img, 0.0); }) == ErrorCode::InvalidGamma);
  CHECK(error_code_of([&] { apply_gamma(img, -1.0); }) == ErrorCode::InvalidGamma);
  CHECK(error_code_of([&] { apply_linear_contrast(img, 0.0); }) == ErrorCode::InvalidScale);
  CHECK(error_code_of([&] { apply_linear_contrast(img, 2.5); }) == ErrorCode::InvalidScale);
}

TEST_CASE("pseudo MOS") {
  CHECK(pseudo_mos(Distortion::gamma(1.0)) == 5.0);
  CHECK(pseudo_mos(Distortion::gamma(2.0)) == 2.5);
  CHECK(pseudo_mos(Distortion::gamma(0.5)) == 2.5);
  CHECK(pseudo_mos(Distortion::gamma(0.1)) == 1.0);
  CHECK(pseudo_mos(Distortion::linear_contrast(0.5)) == 3.0);
  CHECK(pseudo_mos(Distortion::linear_contrast(1.25)) == 4.0);
}

TEST_CASE("procedural bases are deterministic and distinct") {
  CHECK(procedural_base(0, 40, 30) == procedural_base(0, 40, 30));
  CHECK_FALSE(procedural_base(0, 40, 30) == procedural_base(1, 40, 30));
}

TEST_CASE("record names") {
  CHECK(record_file_name("cat", 0, Distortion::gamma(0.7)) == "cat__gamma__0.7.png");
  CHECK(record_file_name("cat", 2, Distortion::linear_contrast(1.5)) ==
        "cat-v2__contrast__1.5.png");
}

TEST_CASE("3 bases x 5 gammas give 15 records and rerun is byte-identical") {
  test::TempDir dir("synth");
  SynthSpec spec;
  spec.base_images = write_bases(dir, 3);
  spec.levels = gammas({0.4, 0.7, 1.0, 1.5, 2.5});
  spec.seed = 7;
  spec.output_dir = dir / "a";
  const auto m = generate_dataset(spec);
  CHECK(m.size() == 15);
  CHECK(m.records[0].image_path == "base0__gamma__0.4.png");
  CHECK(m.records[2].mos == 5.0);

  spec.output_dir = dir / "b";
  generate_dataset(spec);
  for (const auto& r : m.records)
    CHECK(read_file_bytes(dir / "a" / r.image_path) == read_file_bytes(dir / "b" / r.image_path));
  CHECK(read_file_text(dir / "a" / "manifest.csv") == read_file_text(dir / "b" / "manifest.csv"));
}

TEST_CASE("variants multiply the record count") {
  test::TempDir dir("variants");
  SynthSpec spec;
  spec.base_images = write_bases(dir, 2);
  spec.levels = gammas({0.5, 2.0});
  spec.variants_per_base = 3;
  spec.output_dir = dir / "out";
  const auto m = generate_dataset(spec);
  CHECK(m.size() == 12);
  CHECK(m.records[2].image_path == "base0-v1__gamma__0.5.png");
  // Variant 0 is the untouched base.
  const auto v0 = image::read_image(dir / "out" / "base0__gamma__0.5.png");
  CHECK(v0 == apply_gamma(image::read_image(spec.base_images[0]), 0.5));
}

TEST_CASE("bad specs") {
  test::TempDir dir("badspec");
  SynthSpec spec;
  spec.output_dir = dir / "out";
  spec.levels = gammas({1.0});
  CHECK(error_code_of([&] { generate_dataset(spec); }) == ErrorCode::InvalidArgument);
  spec.base_images = write_bases(dir, 1);
  spec.levels = gammas({1.0, 1.0});
  CHECK(error_code_of([&] { generate_dataset(spec); }) == ErrorCode::DuplicatePath);
  spec.levels = gammas({-2.0});
  CHECK(error_code_of([&] { generate_dataset(spec); }) == ErrorCode::InvalidGamma);
  spec.levels = gammas({1.0});
  spec.base_images = {dir / "missing.png"};
  CHECK(is_environment_error(error_code_of([&] { generate_dataset(spec); })));
}
