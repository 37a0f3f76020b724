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

#include <array>
#include <cmath>

#include "contrastiq/features.hpp"

namespace ciq::features {
namespace {

constexpr int kGrid = 8;
constexpr double kHistEps = 1e-12;

struct Range {
  int begin, end;
};

// Patch ranges for an extent split into kGrid cells. Cell kGrid-1-k is the
// mirror image of cell k; for odd extents the two centre cells share the
// middle row/column.
std::array<Range, kGrid> grid_ranges(int extent) {
  std::array<Range, kGrid> r{};
  for (int k = 0; k < kGrid / 2; ++k) {
    const int begin = static_cast<int>(static_cast<long>(k) * extent / kGrid);
    const int end = k == kGrid / 2 - 1
                        ? (extent + 1) / 2
                        : static_cast<int>(static_cast<long>(k + 1) * extent / kGrid);
    r[k] = {begin, end};
    r[kGrid - 1 - k] = {extent - end, extent - begin};
  }
  return r;
}

// Value at sorted position `pos` of the multiset described by `hist`.
int value_at(const std::array<std::size_t, 256>& hist, std::size_t pos) {
  std::size_t seen = 0;
  for (int v = 0; v < 256; ++v) {
    seen += hist[v];
    if (pos < seen) return v;
  }
  return 255;
}

// Linear-interpolation quantile (position (n-1)*q on the sorted samples).
double quantile(const std::array<std::size_t, 256>& hist, std::size_t n, double q) {
  const double h = (static_cast<double>(n) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  const int a = value_at(hist, lo);
  if (frac == 0.0) return a;
  const int b = value_at(hist, std::min(lo + 1, n - 1));
  return a + frac * (b - a);
}

}  // namespace

FeatureVector handcrafted_features(const image::RasterImage& img) {
  const int w = img.width(), h = img.height();
  const std::size_t n = static_cast<std::size_t>(w) * h;

  std::vector<std::uint8_t> gray(n);
  std::array<std::size_t, 256> hist{};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint8_t g =
          image::saturate_u8(image::luma(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)));
      gray[static_cast<std::size_t>(y) * w + x] = g;
      ++hist[g];
    }
  }

  const double count = static_cast<double>(n);
  double sum = 0.0;
  for (int v = 0; v < 256; ++v) sum += static_cast<double>(hist[v]) * v;
  const double mean = sum / count;

  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (int v = 0; v < 256; ++v) {
    if (!hist[v]) continue;
    const double d = v - mean;
    const double c = static_cast<double>(hist[v]);
    m2 += c * d * d;
    m3 += c * d * d * d;
    m4 += c * d * d * d * d;
  }
  m2 /= count;
  m3 /= count;
  m4 /= count;
  const double sd = std::sqrt(m2);
  const double skew = m2 > 0.0 ? m3 / (m2 * sd) : 0.0;
  const double kurt = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;

  double entropy = 0.0;
  double sym_kl = 0.0;
  const double uniform = 1.0 / 256.0;
  for (int v = 0; v < 256; ++v) {
    const double p = static_cast<double>(hist[v]) / count;
    if (p > 0.0) entropy -= p * std::log2(p);
    const double q = (p + kHistEps) / (1.0 + 256.0 * kHistEps);
    // KL(q||u) + KL(u||q) = sum (q - u) log(q/u); each term is >= 0.
    sym_kl += (q - uniform) * std::log2(q / uniform);
  }

  const auto xr = grid_ranges(w);
  const auto yr = grid_ranges(h);
  // Per-patch std; NaN marks an empty patch (possible when an extent < 8).
  std::array<std::array<double, kGrid>, kGrid> local{};
  for (int gy = 0; gy < kGrid; ++gy) {
    for (int gx = 0; gx < kGrid; ++gx) {
      const int x0 = xr[gx].begin, x1 = xr[gx].end, y0 = yr[gy].begin, y1 = yr[gy].end;
      if (x1 <= x0 || y1 <= y0) {
        local[gy][gx] = std::nan("");
        continue;
      }
      double s = 0.0, s2 = 0.0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const double g = gray[static_cast<std::size_t>(y) * w + x];
          s += g;
          s2 += g * g;
        }
      }
      const double pn = static_cast<double>(x1 - x0) * (y1 - y0);
      const double pm = s / pn;
      local[gy][gx] = std::sqrt(std::max(0.0, s2 / pn - pm * pm));
    }
  }
  // Mirrored columns are added pairwise first so a horizontal flip yields the
  // same floating-point sums. The grid is symmetric, so a patch is empty
  // exactly when its mirror is.
  double patch_sum = 0.0, patch_sq = 0.0;
  int patches = 0;
  for (int gy = 0; gy < kGrid; ++gy) {
    for (int gx = 0; gx < kGrid / 2; ++gx) {
      const double a = local[gy][gx], b = local[gy][kGrid - 1 - gx];
      if (std::isnan(a)) continue;
      patch_sum += a + b;
      patch_sq += a * a + b * b;
      patches += 2;
    }
  }
  const double lc_mean = patch_sum / patches;
  const double lc_std = std::sqrt(std::max(0.0, patch_sq / patches - lc_mean * lc_mean));

  int lo = 0, hi = 255;
  while (!hist[lo]) ++lo;
  while (!hist[hi]) --hi;

  const double median = quantile(hist, n, 0.5);
  const double iqr = quantile(hist, n, 0.75) - quantile(hist, n, 0.25);

  FeatureVector f;
  f.values = {static_cast<float>(mean),    static_cast<float>(sd),
              static_cast<float>(skew),    static_cast<float>(kurt),
              static_cast<float>(entropy), static_cast<float>(sym_kl),
              static_cast<float>(lc_mean), static_cast<float>(lc_std),
              static_cast<float>(lo),      static_cast<float>(hi),
              static_cast<float>(median),  static_cast<float>(iqr),
              0.0f,                        0.0f,
              0.0f,                        0.0f};
  return f;
}

}  // namespace ciq::features
