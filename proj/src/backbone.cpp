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

#include "contrastiq/error.hpp"
#include "contrastiq/features.hpp"

namespace ciq::features {
namespace {

// Activation map: C x H x W floats.
struct Map {
  int c = 0, h = 0, w = 0;
  std::vector<float> v;

  Map() = default;
  Map(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_) {}
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  float* channel(int k) { return v.data() + k * plane(); }
  const float* channel(int k) const { return v.data() + k * plane(); }
};

inline float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

void activate(std::span<float> xs, Activation act) {
  if (act == Activation::Identity) return;
  for (float& x : xs) x = x * sigmoid(x);
}

int out_extent(int in, int kernel, int stride) {
  const int pad = kernel / 2;
  return (in + 2 * pad - kernel) / stride + 1;
}

}  // namespace

struct Backbone::Conv {
  const ArchiveEntry* weight = nullptr;
  const ArchiveEntry* bias = nullptr;
  int out = 0, in = 0, kernel = 1;
};

struct Backbone::Block {
  bool has_expand = false;
  Conv expand, dw, se_reduce, se_expand, project;
  int stride = 1;
  bool residual = false;
};

Backbone::Backbone(BackboneConfig cfg, std::shared_ptr<const WeightArchive> weights,
                   ForwardOptions options)
    : cfg_(std::move(cfg)), weights_(std::move(weights)), options_(options) {
  if (!weights_) throw Error(ErrorCode::InvalidArgument, "backbone needs a weight archive");
  cfg_.validate();

  const auto bind = [&](const std::string& prefix, int out, int in, int k) {
    Conv c;
    const std::vector<std::uint32_t> wshape = {static_cast<std::uint32_t>(out),
                                               static_cast<std::uint32_t>(in),
                                               static_cast<std::uint32_t>(k),
                                               static_cast<std::uint32_t>(k)};
    const std::vector<std::uint32_t> bshape = {static_cast<std::uint32_t>(out)};
    c.weight = &weights_->require(prefix + ".weight", wshape);
    c.bias = &weights_->require(prefix + ".bias", bshape);
    c.out = out;
    c.in = in;
    c.kernel = k;
    return c;
  };

  stem_ = std::make_shared<Conv>(bind("stem.conv", cfg_.stem_channels, 3, 3));
  auto blocks = std::make_shared<std::vector<Block>>();
  int in = cfg_.stem_channels;
  for (std::size_t s = 0; s < cfg_.stages.size(); ++s) {
    const auto& st = cfg_.stages[s];
    for (int b = 0; b < st.blocks; ++b) {
      const std::string p = "blocks." + std::to_string(s) + "." + std::to_string(b);
      const int hidden = in * st.expansion;
      const int reduced = std::max(1, static_cast<int>(in * st.se_ratio));
      Block blk;
      blk.has_expand = st.expansion > 1;
      if (blk.has_expand) blk.expand = bind(p + ".expand", hidden, in, 1);
      blk.dw = bind(p + ".dw", hidden, 1, st.kernel);
      blk.se_reduce = bind(p + ".se.reduce", reduced, hidden, 1);
      blk.se_expand = bind(p + ".se.expand", hidden, reduced, 1);
      blk.project = bind(p + ".project", st.channels, hidden, 1);
      blk.stride = b == 0 ? st.stride : 1;
      blk.residual = blk.stride == 1 && in == st.channels;
      blocks->push_back(blk);
      in = st.channels;
    }
  }
  head_ = std::make_shared<Conv>(bind("head.conv", cfg_.head_channels, in, 1));
  blocks_ = std::move(blocks);
}

namespace {

using Conv = Backbone::Conv;

// Dense k x k convolution, zero padding k/2.
Map conv_dense(const Map& x, const Conv& c, int stride) {
  const int k = c.kernel, pad = k / 2;
  Map y(c.out, out_extent(x.h, k, stride), out_extent(x.w, k, stride));
  const float* wt = c.weight->values.data();
  for (int o = 0; o < c.out; ++o) {
    float* dst = y.channel(o);
    std::fill(dst, dst + y.plane(), c.bias->values[o]);
    for (int i = 0; i < c.in; ++i) {
      const float* src = x.channel(i);
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const float wv = wt[((static_cast<std::size_t>(o) * c.in + i) * k + ky) * k + kx];
          for (int oy = 0; oy < y.h; ++oy) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= x.h) continue;
            for (int ox = 0; ox < y.w; ++ox) {
              const int ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= x.w) continue;
              dst[oy * y.w + ox] += wv * src[iy * x.w + ix];
            }
          }
        }
      }
    }
  }
  return y;
}

Map conv_pointwise(const Map& x, const Conv& c) {
  Map y(c.out, x.h, x.w);
  const std::size_t n = x.plane();
  const float* wt = c.weight->values.data();
  for (int o = 0; o < c.out; ++o) {
    float* dst = y.channel(o);
    std::fill(dst, dst + n, c.bias->values[o]);
    for (int i = 0; i < c.in; ++i) {
      const float wv = wt[static_cast<std::size_t>(o) * c.in + i];
      if (wv == 0.0f) continue;
      const float* src = x.channel(i);
      for (std::size_t p = 0; p < n; ++p) dst[p] += wv * src[p];
    }
  }
  return y;
}

Map conv_depthwise(const Map& x, const Conv& c, int stride) {
  const int k = c.kernel, pad = k / 2;
  Map y(x.c, out_extent(x.h, k, stride), out_extent(x.w, k, stride));
  for (int ch = 0; ch < x.c; ++ch) {
    const float* src = x.channel(ch);
    const float* wt = c.weight->values.data() + static_cast<std::size_t>(ch) * k * k;
    float* dst = y.channel(ch);
    for (int oy = 0; oy < y.h; ++oy) {
      for (int ox = 0; ox < y.w; ++ox) {
        float acc = c.bias->values[ch];
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= x.h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= x.w) continue;
            acc += wt[ky * k + kx] * src[iy * x.w + ix];
          }
        }
        dst[oy * y.w + ox] = acc;
      }
    }
  }
  return y;
}

std::vector<float> channel_means(const Map& x) {
  std::vector<float> out(static_cast<std::size_t>(x.c));
  for (int ch = 0; ch < x.c; ++ch) {
    const float* src = x.channel(ch);
    double sum = 0.0;
    for (std::size_t p = 0; p < x.plane(); ++p) sum += src[p];
    out[ch] = static_cast<float>(sum / static_cast<double>(x.plane()));
  }
  return out;
}

std::vector<float> dense(const std::vector<float>& x, const Conv& c) {
  std::vector<float> y(static_cast<std::size_t>(c.out));
  const float* wt = c.weight->values.data();
  for (int o = 0; o < c.out; ++o) {
    float acc = c.bias->values[o];
    for (int i = 0; i < c.in; ++i) acc += wt[static_cast<std::size_t>(o) * c.in + i] * x[i];
    y[o] = acc;
  }
  return y;
}

}  // namespace

FeatureVector Backbone::forward(const image::Tensor3& input) const {
  if (input.channels() != 3 || input.height() != cfg_.input_size ||
      input.width() != cfg_.input_size) {
    throw Error(ErrorCode::ShapeMismatch,
                "input: expected [3," + std::to_string(cfg_.input_size) + "," +
                    std::to_string(cfg_.input_size) + "], got [" +
                    std::to_string(input.channels()) + "," + std::to_string(input.height()) +
                    "," + std::to_string(input.width()) + "]");
  }
  const Activation act = options_.activation;

  Map x(3, input.height(), input.width());
  std::copy(input.data().begin(), input.data().end(), x.v.begin());

  x = conv_dense(x, *stem_, 2);
  activate(x.v, act);

  for (const Block& blk : *blocks_) {
    Map h = x;
    if (blk.has_expand) {
      h = conv_pointwise(h, blk.expand);
      activate(h.v, act);
    }
    h = conv_depthwise(h, blk.dw, blk.stride);
    activate(h.v, act);

    std::vector<float> squeezed = dense(channel_means(h), blk.se_reduce);
    activate(squeezed, act);
    std::vector<float> gate = dense(squeezed, blk.se_expand);
    for (int ch = 0; ch < h.c; ++ch) {
      const float g = sigmoid(gate[ch]);
      float* p = h.channel(ch);
      for (std::size_t i = 0; i < h.plane(); ++i) p[i] *= g;
    }

    h = conv_pointwise(h, blk.project);
    if (blk.residual) {
      for (std::size_t i = 0; i < h.v.size(); ++i) h.v[i] += x.v[i];
    }
    x = std::move(h);
  }

  x = conv_pointwise(x, *head_);
  activate(x.v, act);
  return FeatureVector{channel_means(x)};
}

FeatureVector backbone_forward(const image::Tensor3& t, const BackboneConfig& cfg,
                               const WeightArchive& w, ForwardOptions options) {
  // Non-owning alias: the archive outlives this call.
  std::shared_ptr<const WeightArchive> view(std::shared_ptr<const WeightArchive>{}, &w);
  return Backbone(cfg, view, options).forward(t);
}

}  // namespace ciq::features
