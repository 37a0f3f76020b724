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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "contrastiq/error.hpp"
#include "contrastiq/image.hpp"

namespace ciq::image {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

double lerp(double a, double b, double t) { return a + t * (b - a); }

// Shared bilinear rotation. `sample(c, y, x)` reads the source, `store(c, y,
// x, v)` writes the destination.
template <typename Sample, typename Store>
void rotate_into(int channels, int height, int width, double angle_deg, Sample sample,
                 Store store) {
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;

  const auto fetch = [&](int c, int y, int x) -> double {
    if (x < 0 || y < 0 || x >= width || y >= height) return 0.0;
    return sample(c, y, x);
  };

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double sx = dx * cos_t - dy * sin_t + cx;
      const double sy = dx * sin_t + dy * cos_t + cy;
      const double fx0 = std::floor(sx);
      const double fy0 = std::floor(sy);
      const double tx = sx - fx0;
      const double ty = sy - fy0;
      const int x0 = static_cast<int>(fx0);
      const int y0 = static_cast<int>(fy0);
      for (int c = 0; c < channels; ++c) {
        const double top = tx == 0.0 ? fetch(c, y0, x0)
                                     : lerp(fetch(c, y0, x0), fetch(c, y0, x0 + 1), tx);
        double v = top;
        if (ty != 0.0) {
          const double bottom = tx == 0.0
                                    ? fetch(c, y0 + 1, x0)
                                    : lerp(fetch(c, y0 + 1, x0), fetch(c, y0 + 1, x0 + 1), tx);
          v = lerp(top, bottom, ty);
        }
        store(c, y, x, v);
      }
    }
  }
}

struct Hsv {
  double h;  // turns in [0, 1)
  double s;
  double v;
};

Hsv rgb_to_hsv(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out{0.0, mx > 0.0 ? delta / mx : 0.0, mx};
  if (delta <= 0.0) return out;
  double h;
  if (mx == r) {
    h = (g - b) / delta;
  } else if (mx == g) {
    h = 2.0 + (b - r) / delta;
  } else {
    h = 4.0 + (r - g) / delta;
  }
  h /= 6.0;
  out.h = h - std::floor(h);
  return out;
}

void hsv_to_rgb(const Hsv& hsv, double& r, double& g, double& b) {
  const double h6 = hsv.h * 6.0;
  const double sector = std::floor(h6);
  const double f = h6 - sector;
  const double p = hsv.v * (1.0 - hsv.s);
  const double q = hsv.v * (1.0 - hsv.s * f);
  const double t = hsv.v * (1.0 - hsv.s * (1.0 - f));
  switch (static_cast<int>(sector) % 6) {
    case 0: r = hsv.v; g = t; b = p; break;
    case 1: r = q; g = hsv.v; b = p; break;
    case 2: r = p; g = hsv.v; b = t; break;
    case 3: r = p; g = q; b = hsv.v; break;
    case 4: r = t; g = p; b = hsv.v; break;
    default: r = hsv.v; g = p; b = q; break;
  }
}

}  // namespace

RasterImage::RasterImage(int width, int height) : width_(width), height_(height) {
  require(width >= 1 && height >= 1, "image dimensions must be >= 1");
  data_.assign(static_cast<std::size_t>(width) * height * kChannels, 0);
}

RasterImage::RasterImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  require(width >= 1 && height >= 1, "image dimensions must be >= 1");
  require(data_.size() == static_cast<std::size_t>(width) * height * kChannels,
          "image data length must equal width*height*3");
}

Tensor3::Tensor3(int channels, int height, int width)
    : channels_(channels), height_(height), width_(width) {
  require(channels >= 1 && height >= 1 && width >= 1, "tensor dimensions must be >= 1");
  data_.assign(static_cast<std::size_t>(channels) * height * width, 0.0f);
}

Tensor3::Tensor3(int channels, int height, int width, std::vector<float> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
  require(channels >= 1 && height >= 1 && width >= 1, "tensor dimensions must be >= 1");
  require(data_.size() == static_cast<std::size_t>(channels) * height * width,
          "tensor data length must equal C*H*W");
}

AugmentPolicy AugmentPolicy::identity() {
  AugmentPolicy p;
  p.flip_probability = 0.0;
  p.rotation_limit = 0.0;
  p.brightness_jitter = 0.0;
  p.contrast_jitter = 0.0;
  p.saturation_jitter = 0.0;
  p.hue_jitter = 0.0;
  return p;
}

void AugmentPolicy::validate() const {
  require(flip_probability >= 0.0 && flip_probability <= 1.0, "flip_probability must be in [0,1]");
  require(rotation_limit >= 0.0 && rotation_limit <= 45.0, "rotation_limit must be in [0,45]");
  for (const double j : {brightness_jitter, contrast_jitter, saturation_jitter})
    require(j >= 0.0 && j < 1.0, "jitter fractions must be in [0,1)");
  require(hue_jitter >= 0.0 && hue_jitter <= 0.5, "hue_jitter must be in [0,0.5]");
  require(target_size >= 1, "target_size must be >= 1");
  for (const float s : channel_std) require(s > 0.0f, "channel_std must be > 0");
}

std::uint8_t saturate_u8(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::floor(v + 0.5));
}

RasterImage resize_bilinear(const RasterImage& img, int width, int height) {
  require(width >= 1 && height >= 1, "resize target must be >= 1");
  if (width == img.width() && height == img.height()) return img;

  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  RasterImage out(width, height);
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double tx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = lerp(img.at(y0, x0, c), img.at(y0, x1, c), tx);
        const double bottom = lerp(img.at(y1, x0, c), img.at(y1, x1, c), tx);
        out.at(y, x, c) = saturate_u8(lerp(top, bottom, ty));
      }
    }
  }
  return out;
}

Tensor3 to_unit_tensor(const RasterImage& img) {
  Tensor3 t(3, img.height(), img.width());
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        t.at(c, y, x) = static_cast<float>(img.at(y, x, c) / 255.0);
  return t;
}

RasterImage from_unit_tensor(const Tensor3& t) {
  require(t.channels() == 3, "from_unit_tensor needs 3 channels");
  RasterImage img(t.width(), t.height());
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < t.height(); ++y)
      for (int x = 0; x < t.width(); ++x)
        img.at(y, x, c) = saturate_u8(static_cast<double>(t.at(c, y, x)) * 255.0);
  return img;
}

Tensor3 normalize_channels(const Tensor3& t, std::span<const float> mean,
                           std::span<const float> std) {
  require(mean.size() == static_cast<std::size_t>(t.channels()) &&
              std.size() == static_cast<std::size_t>(t.channels()),
          "mean/std must have one entry per channel");
  for (const float s : std)
    if (s == 0.0f) throw Error(ErrorCode::ZeroStd, "channel std must be nonzero");

  Tensor3 out = t;
  const std::size_t plane = static_cast<std::size_t>(t.height()) * t.width();
  auto data = out.data();
  for (int c = 0; c < t.channels(); ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      float& v = data[c * plane + i];
      v = (v - mean[c]) / std[c];
    }
  }
  return out;
}

Tensor3 horizontal_flip(const Tensor3& t) {
  Tensor3 out = t;
  for (int c = 0; c < t.channels(); ++c)
    for (int y = 0; y < t.height(); ++y)
      for (int x = 0; x < t.width(); ++x) out.at(c, y, x) = t.at(c, y, t.width() - 1 - x);
  return out;
}

RasterImage horizontal_flip(const RasterImage& img) {
  RasterImage out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, img.width() - 1 - x, c);
  return out;
}

Tensor3 rotate(const Tensor3& t, double angle_deg) {
  require(std::abs(angle_deg) <= 45.0, "rotation angle must be within +-45 degrees");
  if (angle_deg == 0.0) return t;
  Tensor3 out(t.channels(), t.height(), t.width());
  rotate_into(
      t.channels(), t.height(), t.width(), angle_deg,
      [&](int c, int y, int x) { return static_cast<double>(t.at(c, y, x)); },
      [&](int c, int y, int x, double v) { out.at(c, y, x) = static_cast<float>(v); });
  return out;
}

RasterImage rotate(const RasterImage& img, double angle_deg) {
  require(std::abs(angle_deg) <= 45.0, "rotation angle must be within +-45 degrees");
  if (angle_deg == 0.0) return img;
  RasterImage out(img.width(), img.height());
  rotate_into(
      3, img.height(), img.width(), angle_deg,
      [&](int c, int y, int x) { return static_cast<double>(img.at(y, x, c)); },
      [&](int c, int y, int x, double v) { out.at(y, x, c) = saturate_u8(v); });
  return out;
}

RasterImage color_jitter(const RasterImage& img, double brightness, double contrast,
                         double saturation, double hue) {
  require(brightness > 0.0 && contrast > 0.0 && saturation > 0.0,
          "jitter factors must be > 0");
  require(std::abs(hue) <= 0.5, "hue shift must be within +-0.5 turns");

  const std::size_t pixels = static_cast<std::size_t>(img.width()) * img.height();
  std::vector<double> px(img.data().begin(), img.data().end());
  const auto clamp255 = [](double v) { return std::clamp(v, 0.0, 255.0); };

  if (brightness != 1.0) {
    for (double& v : px) v = clamp255(v * brightness);
  }
  if (contrast != 1.0) {
    double sum = 0.0;
    for (std::size_t i = 0; i < pixels; ++i) sum += luma(px[3 * i], px[3 * i + 1], px[3 * i + 2]);
    const double mean = sum / static_cast<double>(pixels);
    for (double& v : px) v = clamp255(mean + contrast * (v - mean));
  }
  if (saturation != 1.0) {
    for (std::size_t i = 0; i < pixels; ++i) {
      double* p = &px[3 * i];
      if (p[0] == p[1] && p[1] == p[2]) continue;
      const double gray = luma(p[0], p[1], p[2]);
      for (int c = 0; c < 3; ++c) p[c] = clamp255(gray + saturation * (p[c] - gray));
    }
  }
  if (hue != 0.0) {
    for (std::size_t i = 0; i < pixels; ++i) {
      double* p = &px[3 * i];
      if (p[0] == p[1] && p[1] == p[2]) continue;
      Hsv hsv = rgb_to_hsv(p[0], p[1], p[2]);
      hsv.h += hue;
      hsv.h -= std::floor(hsv.h);
      hsv_to_rgb(hsv, p[0], p[1], p[2]);
      for (int c = 0; c < 3; ++c) p[c] = clamp255(p[c]);
    }
  }

  RasterImage out(img.width(), img.height());
  auto data = out.data();
  for (std::size_t i = 0; i < px.size(); ++i) data[i] = saturate_u8(px[i]);
  return out;
}

AugmentDraw draw_augment(SeededRng& rng, const AugmentPolicy& policy) {
  // Every draw is taken even when its range is degenerate, so the stream
  // position after a call never depends on the policy values.
  AugmentDraw d;
  d.flip = rng.bernoulli(policy.flip_probability);
  d.angle = rng.uniform(-policy.rotation_limit, policy.rotation_limit);
  d.brightness = rng.uniform(1.0 - policy.brightness_jitter, 1.0 + policy.brightness_jitter);
  d.contrast = rng.uniform(1.0 - policy.contrast_jitter, 1.0 + policy.contrast_jitter);
  d.saturation = rng.uniform(1.0 - policy.saturation_jitter, 1.0 + policy.saturation_jitter);
  d.hue = rng.uniform(-policy.hue_jitter, policy.hue_jitter);
  return d;
}

RasterImage augment_raster(const RasterImage& img, SeededRng rng, const AugmentPolicy& policy) {
  policy.validate();
  const AugmentDraw d = draw_augment(rng, policy);
  RasterImage work = d.flip ? horizontal_flip(img) : img;
  work = rotate(work, d.angle);
  work = color_jitter(work, d.brightness, d.contrast, d.saturation, d.hue);
  return resize_bilinear(work, policy.target_size, policy.target_size);
}

Tensor3 augment(const RasterImage& img, SeededRng rng, const AugmentPolicy& policy) {
  const RasterImage sized = augment_raster(img, rng, policy);
  return normalize_channels(to_unit_tensor(sized), policy.channel_mean, policy.channel_std);
}

Tensor3 eval_transform(const RasterImage& img, const AugmentPolicy& policy) {
  const RasterImage sized = resize_bilinear(img, policy.target_size, policy.target_size);
  return normalize_channels(to_unit_tensor(sized), policy.channel_mean, policy.channel_std);
}

}  // namespace ciq::image
