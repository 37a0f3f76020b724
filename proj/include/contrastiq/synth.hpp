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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "contrastiq/dataset.hpp"
#include "contrastiq/image.hpp"

namespace ciq::synth {

enum class DistortionKind { Gamma, LinearContrast };

struct Distortion {
  DistortionKind kind = DistortionKind::Gamma;
  double level = 1.0;  // gamma exponent, or linear contrast scale

  static Distortion gamma(double g) { return {DistortionKind::Gamma, g}; }
  static Distortion linear_contrast(double s) { return {DistortionKind::LinearContrast, s}; }

  /// Throws InvalidGamma / InvalidScale.
  void validate() const;
};

/// x -> round(255 * (x/255)^gamma) per sample. gamma > 0.
image::RasterImage apply_gamma(const image::RasterImage& img, double gamma);

/// x -> clamp(round(127.5 + s * (x - 127.5)), 0, 255). 0 < s <= 2.
image::RasterImage apply_linear_contrast(const image::RasterImage& img, double s);

image::RasterImage apply(const image::RasterImage& img, const Distortion& d);

/// Quality proxy on [1, 5]: 5 - 2.5*|log2 gamma| or 5 - 4*|1 - s|, clamped.
double pseudo_mos(const Distortion& d);

/// Deterministic synthetic photograph stand-in: smooth illumination, a few
/// coloured shapes and a band of fine texture, so gamma and contrast changes
/// move every handcrafted statistic. Same (index, size) => same pixels.
image::RasterImage procedural_base(int index, int width = 192, int height = 144);

struct SynthSpec {
  std::vector<std::filesystem::path> base_images;
  std::vector<Distortion> levels;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  /// Number of geometric variants generated per base (1 = the base itself).
  /// Variant v > 0 is a seeded flip/rotation of the base drawn from
  /// SeededRng::stream(seed, base index, v).
  int variants_per_base = 1;
  /// Bounded to +-45 degrees; variants use flip probability 0.5.
  double variant_rotation_limit = 10.0;
};

/// File name for one generated record: `<base>__<kind>__<level>.png`, where
/// base carries a `-v<k>` suffix for variants k > 0 and level uses the
/// shortest round-trip decimal.
std::string record_file_name(const std::string& base_stem, int variant, const Distortion& d);

/// Writes every (base, variant, level) image into output_dir plus
/// output_dir/manifest.csv and returns the manifest. Record order is base,
/// then variant, then level, in spec order.
dataset::Manifest generate_dataset(const SynthSpec& spec);

}  // namespace ciq::synth
