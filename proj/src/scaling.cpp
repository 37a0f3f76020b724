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
#include "contrastiq/textio.hpp"

namespace ciq::features {

ScaleFactors compound_scale(const CompoundScale& s, double tolerance, bool strict) {
  if (!(s.alpha >= 1.0 && s.beta >= 1.0 && s.gamma_res >= 1.0))
    throw Error(ErrorCode::InvalidArgument, "compound scaling bases must be >= 1");
  if (!std::isfinite(s.phi)) throw Error(ErrorCode::InvalidArgument, "phi must be finite");

  ScaleFactors f;
  f.depth = std::pow(s.alpha, s.phi);
  f.width = std::pow(s.beta, s.phi);
  f.resolution = std::pow(s.gamma_res, s.phi);
  f.constraint = s.alpha * s.beta * s.beta * s.gamma_res * s.gamma_res;
  f.residual = f.constraint - 2.0;
  if (strict && std::abs(f.residual) > tolerance)
    throw Error(ErrorCode::ConstraintViolation,
                "alpha*beta^2*gamma^2 = " + format_double(f.constraint) +
                    " is not within " + format_double(tolerance) + " of 2");
  return f;
}

BackboneConfig BackboneConfig::nano() {
  BackboneConfig c;
  c.name = "nano";
  c.stem_channels = 8;
  c.stages = {
      {1, 8, 1, 4, 3, 0.25},
      {2, 16, 2, 4, 3, 0.25},
      {2, 24, 2, 4, 5, 0.25},
  };
  c.head_channels = 1280;
  c.input_size = 224;
  return c;
}

BackboneConfig BackboneConfig::efficientnet_b0() {
  BackboneConfig c;
  c.name = "b0";
  c.stem_channels = 32;
  c.stages = {
      {1, 16, 1, 1, 3, 0.25},  {2, 24, 2, 6, 3, 0.25},  {2, 40, 2, 6, 5, 0.25},
      {3, 80, 2, 6, 3, 0.25},  {3, 112, 1, 6, 5, 0.25}, {4, 192, 2, 6, 5, 0.25},
      {1, 320, 1, 6, 3, 0.25},
  };
  c.head_channels = 1280;
  c.input_size = 224;
  return c;
}

BackboneConfig BackboneConfig::preset(std::string_view name) {
  if (name == "nano") return nano();
  if (name == "b0") return efficientnet_b0();
  throw Error(ErrorCode::InvalidArgument,
              "unknown backbone config '" + std::string(name) + "' (expected nano or b0)");
}

void BackboneConfig::validate() const {
  const auto fail = [](const std::string& what) {
    throw Error(ErrorCode::InvalidArgument, "backbone config: " + what);
  };
  if (stem_channels < 1) fail("stem_channels must be >= 1");
  if (head_channels < 1) fail("head_channels must be >= 1");
  if (input_size < 8) fail("input_size must be >= 8");
  if (stages.empty()) fail("at least one stage is required");
  for (const auto& s : stages) {
    if (s.blocks < 1 || s.channels < 1 || s.expansion < 1) fail("stage counts must be >= 1");
    if (s.stride != 1 && s.stride != 2) fail("stage stride must be 1 or 2");
    if (s.kernel < 1 || s.kernel % 2 == 0) fail("stage kernel must be odd");
    if (!(s.se_ratio > 0.0 && s.se_ratio <= 1.0)) fail("se_ratio must be in (0,1]");
  }
}

int round_channels(double channels) {
  const int rounded = static_cast<int>(std::floor(channels / 8.0 + 0.5)) * 8;
  return std::max(8, rounded);
}

BackboneConfig scaled_config(const BackboneConfig& base, const ScaleFactors& f) {
  BackboneConfig out = base;
  const bool identity = f.depth == 1.0 && f.width == 1.0 && f.resolution == 1.0;
  if (identity) return out;
  // ceil with a small guard so 5 * 1.2 = 6.000000000000001 stays 6.
  const auto scaled_blocks = [&](int n) {
    return static_cast<int>(std::ceil(n * f.depth - 1e-9));
  };
  out.stem_channels = round_channels(base.stem_channels * f.width);
  for (auto& s : out.stages) {
    s.blocks = std::max(1, scaled_blocks(s.blocks));
    s.channels = round_channels(s.channels * f.width);
  }
  out.input_size = static_cast<int>(std::floor(base.input_size * f.resolution + 0.5));
  return out;
}

std::vector<ParamSpec> parameter_specs(const BackboneConfig& cfg) {
  cfg.validate();
  using Shape = std::vector<std::uint32_t>;
  const auto u = [](int v) { return static_cast<std::uint32_t>(v); };
  std::vector<ParamSpec> specs;
  const auto conv = [&](const std::string& prefix, Shape weight) {
    const std::uint32_t out = weight[0];
    specs.push_back({prefix + ".weight", std::move(weight)});
    specs.push_back({prefix + ".bias", {out}});
  };

  conv("stem.conv", {u(cfg.stem_channels), 3, 3, 3});
  int in = cfg.stem_channels;
  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    const auto& st = cfg.stages[s];
    for (int b = 0; b < st.blocks; ++b) {
      const std::string p = "blocks." + std::to_string(s) + "." + std::to_string(b);
      const int hidden = in * st.expansion;
      const int reduced = std::max(1, static_cast<int>(in * st.se_ratio));
      if (st.expansion > 1) conv(p + ".expand", {u(hidden), u(in), 1, 1});
      conv(p + ".dw", {u(hidden), 1, u(st.kernel), u(st.kernel)});
      conv(p + ".se.reduce", {u(reduced), u(hidden), 1, 1});
      conv(p + ".se.expand", {u(hidden), u(reduced), 1, 1});
      conv(p + ".project", {u(st.channels), u(hidden), 1, 1});
      in = st.channels;
    }
  }
  conv("head.conv", {u(cfg.head_channels), u(in), 1, 1});
  return specs;
}

WeightArchive random_backbone_weights(const BackboneConfig& cfg, std::uint64_t seed) {
  WeightArchive a;
  std::uint64_t index = 0;
  for (auto& spec : parameter_specs(cfg)) {
    std::size_t n = 1;
    for (const auto d : spec.shape) n *= d;
    std::vector<float> values(n, 0.0f);
    if (spec.shape.size() == 4) {
      const double fan_in = static_cast<double>(spec.shape[1]) * spec.shape[2] * spec.shape[3];
      const double bound = std::sqrt(6.0 / fan_in);
      SeededRng rng = SeededRng::stream(seed, index);
      for (float& v : values) v = static_cast<float>(rng.uniform(-bound, bound));
    }
    ++index;
    a.add(std::move(spec.name), std::move(spec.shape), std::move(values));
  }
  a.metadata()["arch"] = "mbconv-backbone";
  a.metadata()["config"] = cfg.name;
  a.metadata()["init"] = "he-uniform seed=" + std::to_string(seed);
  return a;
}

WeightArchive zero_backbone_weights(const BackboneConfig& cfg) {
  WeightArchive a;
  for (auto& spec : parameter_specs(cfg)) {
    std::size_t n = 1;
    for (const auto d : spec.shape) n *= d;
    a.add(std::move(spec.name), std::move(spec.shape), std::vector<float>(n, 0.0f));
  }
  a.metadata()["arch"] = "mbconv-backbone";
  a.metadata()["config"] = cfg.name;
  return a;
}

}  // namespace ciq::features
