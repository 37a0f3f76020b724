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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "contrastiq/rng.hpp"

namespace ciq::image {

/// 8-bit RGB image, row-major HWC.
class RasterImage {
 public:
  static constexpr int kChannels = 3;

  RasterImage() = default;
  /// Zero-filled image. Throws InvalidArgument unless width, height >= 1.
  RasterImage(int width, int height);
  RasterImage(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return kChannels; }
  bool empty() const noexcept { return data_.empty(); }

  std::uint8_t& at(int y, int x, int c) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }

  std::span<std::uint8_t> data() noexcept { return data_; }
  std::span<const std::uint8_t> data() const noexcept { return data_; }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Float tensor, CHW order.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int channels, int height, int width);
  Tensor3(int channels, int height, int width, std::vector<float> data);

  int channels() const noexcept { return channels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }

  float& at(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }
  float at(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

inline constexpr std::array<float, 3> kImageNetMean = {0.485f, 0.456f, 0.406f};
inline constexpr std::array<float, 3> kImageNetStd = {0.229f, 0.224f, 0.225f};

struct AugmentPolicy {
  double flip_probability = 0.5;
  double rotation_limit = 10.0;  // degrees
  double brightness_jitter = 0.20;
  double contrast_jitter = 0.20;
  double saturation_jitter = 0.20;
  double hue_jitter = 0.10;  // turns
  int target_size = 224;
  std::array<float, 3> channel_mean = kImageNetMean;
  std::array<float, 3> channel_std = kImageNetStd;

  /// Policy whose every random draw is an identity transform.
  static AugmentPolicy identity();

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

// --- codec -----------------------------------------------------------------

/// Decodes PNG (any bit depth / color type, alpha dropped, gray replicated)
/// or binary PPM (P6, maxval <= 255).
RasterImage decode_image(std::span<const std::uint8_t> bytes);
RasterImage read_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const RasterImage& img);
std::vector<std::uint8_t> encode_ppm(const RasterImage& img);
void write_png(const RasterImage& img, const std::filesystem::path& path);

// --- geometry and tone -----------------------------------------------------

/// Round half away from zero and clamp into [0, 255].
std::uint8_t saturate_u8(double v);

/// Half-pixel-centred bilinear resampling, edges clamped.
RasterImage resize_bilinear(const RasterImage& img, int width, int height);

Tensor3 to_unit_tensor(const RasterImage& img);

/// Inverse of to_unit_tensor (values clamped and rounded). `t` must be 3-channel.
RasterImage from_unit_tensor(const Tensor3& t);

Tensor3 normalize_channels(const Tensor3& t, std::span<const float> mean,
                           std::span<const float> std);

Tensor3 horizontal_flip(const Tensor3& t);
RasterImage horizontal_flip(const RasterImage& img);

/// Counter-clockwise rotation (as displayed, y pointing down) about the
/// image centre. Bilinear sampling; samples falling outside the source read
/// as 0. |angle_deg| <= 45.
Tensor3 rotate(const Tensor3& t, double angle_deg);
RasterImage rotate(const RasterImage& img, double angle_deg);

/// Rec. 601 luma of one RGB sample.
inline double luma(double r, double g, double b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

/// Brightness, contrast, saturation, then hue, each clamped to [0, 255].
/// brightness/contrast/saturation are multiplicative factors (1 = identity);
/// hue is a rotation in turns, |hue| <= 0.5.
RasterImage color_jitter(const RasterImage& img, double brightness,
                         double contrast, double saturation, double hue);

/// The parameters drawn for one augmented sample, in draw order.
struct AugmentDraw {
  bool flip = false;
  double angle = 0.0;
  double brightness = 1.0;
  double contrast = 1.0;
  double saturation = 1.0;
  double hue = 0.0;
};

AugmentDraw draw_augment(SeededRng& rng, const AugmentPolicy& policy);

/// flip -> rotate -> jitter -> resize(target), stopping before tensor
/// conversion. augment() is exactly eval-normalization of this raster.
RasterImage augment_raster(const RasterImage& img, SeededRng rng, const AugmentPolicy& policy);

/// flip -> rotate -> jitter -> resize(target) -> unit -> normalize.
Tensor3 augment(const RasterImage& img, SeededRng rng,
                const AugmentPolicy& policy);

/// The non-random evaluation transform: resize -> unit -> normalize.
Tensor3 eval_transform(const RasterImage& img, const AugmentPolicy& policy);

}  // namespace ciq::image
