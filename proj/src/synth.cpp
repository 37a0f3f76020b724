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

#include "contrastiq/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <unordered_set>

#include "contrastiq/error.hpp"
#include "contrastiq/rng.hpp"
#include "contrastiq/textio.hpp"

namespace ciq::synth {
namespace {

using image::RasterImage;

RasterImage apply_lut(const RasterImage& img, const std::array<std::uint8_t, 256>& lut) {
  RasterImage out = img;
  for (auto& v : out.data()) v = lut[v];
  return out;
}

}  // namespace

void Distortion::validate() const {
  if (kind == DistortionKind::Gamma) {
    if (!(level > 0.0) || !std::isfinite(level))
      throw Error(ErrorCode::InvalidGamma, "gamma must be > 0, got " + format_double(level));
  } else if (!(level > 0.0 && level <= 2.0)) {
    throw Error(ErrorCode::InvalidScale,
                "contrast scale must be in (0, 2], got " + format_double(level));
  }
}

RasterImage apply_gamma(const RasterImage& img, double gamma) {
  Distortion::gamma(gamma).validate();
  std::array<std::uint8_t, 256> lut{};
  for (int x = 0; x < 256; ++x) lut[x] = image::saturate_u8(255.0 * std::pow(x / 255.0, gamma));
  return apply_lut(img, lut);
}

RasterImage apply_linear_contrast(const RasterImage& img, double s) {
  Distortion::linear_contrast(s).validate();
  std::array<std::uint8_t, 256> lut{};
  for (int x = 0; x < 256; ++x) lut[x] = image::saturate_u8(127.5 + s * (x - 127.5));
  return apply_lut(img, lut);
}

RasterImage apply(const RasterImage& img, const Distortion& d) {
  return d.kind == DistortionKind::Gamma ? apply_gamma(img, d.level)
                                         : apply_linear_contrast(img, d.level);
}

double pseudo_mos(const Distortion& d) {
  d.validate();
  const double raw = d.kind == DistortionKind::Gamma ? 5.0 - 2.5 * std::abs(std::log2(d.level))
                                                     : 5.0 - 4.0 * std::abs(1.0 - d.level);
  return std::clamp(raw, 1.0, 5.0);
}

RasterImage procedural_base(int index, int width, int height) {
  SeededRng rng = SeededRng::stream(0x62617365ULL, static_cast<std::uint64_t>(index));
  const double tilt = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double base_level = rng.uniform(70.0, 150.0);
  const double swing = rng.uniform(50.0, 90.0);
  std::array<double, 3> tint{};
  for (double& t : tint) t = rng.uniform(0.75, 1.15);

  struct Disc {
    double cx, cy, r;
    std::array<double, 3> color;
  };
  std::vector<Disc> discs(4 + rng.below(3));
  for (auto& d : discs) {
    d.cx = rng.uniform(0.0, width);
    d.cy = rng.uniform(0.0, height);
    d.r = rng.uniform(0.08, 0.25) * std::min(width, height);
    for (double& c : d.color) c = rng.uniform(20.0, 235.0);
  }
  const double freq = rng.uniform(0.15, 0.45);
  const double band_lo = rng.uniform(0.55, 0.7) * height;

  RasterImage img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = (x - width / 2.0) / width;
      const double v = (y - height / 2.0) / height;
      const double shade = base_level + swing * (u * std::cos(tilt) + v * std::sin(tilt)) * 1.6;
      std::array<double, 3> px{shade * tint[0], shade * tint[1], shade * tint[2]};
      for (const auto& d : discs) {
        const double dist = std::hypot(x - d.cx, y - d.cy);
        // Soft edge over ~2 px.
        const double a = std::clamp((d.r - dist) / 2.0 + 0.5, 0.0, 1.0);
        for (int c = 0; c < 3; ++c) px[c] = px[c] * (1.0 - a) + d.color[c] * a;
      }
      if (y >= band_lo) {
        const double tex = 28.0 * std::sin(freq * x) * std::cos(freq * 0.7 * y);
        for (double& c : px) c += tex;
      }
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = image::saturate_u8(px[c]);
    }
  }
  return img;
}

std::string record_file_name(const std::string& base_stem, int variant, const Distortion& d) {
  std::string name = base_stem;
  if (variant > 0) name += "-v" + std::to_string(variant);
  name += d.kind == DistortionKind::Gamma ? "__gamma__" : "__contrast__";
  name += format_double(d.level);
  name += ".png";
  return name;
}

dataset::Manifest generate_dataset(const SynthSpec& spec) {
  if (spec.base_images.empty())
    throw Error(ErrorCode::InvalidArgument, "synth: no base images");
  if (spec.levels.empty()) throw Error(ErrorCode::InvalidArgument, "synth: no distortion levels");
  if (spec.variants_per_base < 1)
    throw Error(ErrorCode::InvalidArgument, "synth: variants_per_base must be >= 1");
  if (!(spec.variant_rotation_limit >= 0.0 && spec.variant_rotation_limit <= 45.0))
    throw Error(ErrorCode::InvalidArgument, "synth: variant rotation limit must be in [0,45]");
  std::unordered_set<std::string> level_names;
  for (const auto& d : spec.levels) {
    d.validate();
    if (!level_names.insert(record_file_name("", 0, d)).second)
      throw Error(ErrorCode::DuplicatePath, "synth: distortion level listed twice");
  }

  std::error_code ec;
  std::filesystem::create_directories(spec.output_dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + spec.output_dir.string());

  dataset::Manifest m;
  m.source_tag = "synthetic";
  m.base_dir = spec.output_dir;
  std::unordered_set<std::string> stems;
  for (std::size_t b = 0; b < spec.base_images.size(); ++b) {
    const auto& base_path = spec.base_images[b];
    const std::string stem = base_path.stem().string();
    if (!stems.insert(stem).second)
      throw Error(ErrorCode::DuplicatePath, "synth: two base images share the stem " + stem);
    const RasterImage base = image::read_image(base_path);

    for (int v = 0; v < spec.variants_per_base; ++v) {
      RasterImage variant = base;
      if (v > 0) {
        SeededRng rng = SeededRng::stream(spec.seed, b, static_cast<std::uint64_t>(v));
        const bool flip = rng.bernoulli(0.5);
        const double angle =
            rng.uniform(-spec.variant_rotation_limit, spec.variant_rotation_limit);
        if (flip) variant = image::horizontal_flip(variant);
        variant = image::rotate(variant, angle);
      }
      for (const auto& d : spec.levels) {
        const std::string name = record_file_name(stem, v, d);
        image::write_png(apply(variant, d), spec.output_dir / name);
        m.records.push_back({name, pseudo_mos(d), dataset::Split::Unassigned});
      }
    }
  }
  dataset::save_manifest(m, spec.output_dir / "manifest.csv");
  return m;
}

}  // namespace ciq::synth
