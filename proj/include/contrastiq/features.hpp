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

// Frozen feature extraction: compound-scaled MBConv backbone (forward only),
// handcrafted contrast statistics, and the on-disk feature cache.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "contrastiq/archive.hpp"
#include "contrastiq/dataset.hpp"
#include "contrastiq/image.hpp"

namespace ciq::features {

struct FeatureVector {
  std::vector<float> values;

  std::size_t dim() const noexcept { return values.size(); }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// --- compound scaling ------------------------------------------------------

struct CompoundScale {
  double phi = 0.0;
  double alpha = 1.2;  // depth base
  double beta = 1.1;   // width base
  double gamma_res = 1.15;  // resolution base
};

struct ScaleFactors {
  double depth = 1.0;
  double width = 1.0;
  double resolution = 1.0;
  /// alpha * beta^2 * gamma^2
  double constraint = 2.0;
  /// constraint - 2
  double residual = 0.0;
};

/// Returns (alpha^phi, beta^phi, gamma^phi) and the FLOPs constraint. Bases
/// below 1 are InvalidArgument. A residual outside +-tolerance throws
/// ConstraintViolation when `strict`, otherwise it is only reported.
ScaleFactors compound_scale(const CompoundScale& s, double tolerance = 0.2, bool strict = true);

// --- backbone --------------------------------------------------------------

struct StageConfig {
  int blocks = 1;
  int channels = 16;
  int stride = 1;  // 1 or 2, applied by the first block of the stage
  int expansion = 4;
  int kernel = 3;  // 3 or 5
  double se_ratio = 0.25;

  friend bool operator==(const StageConfig&, const StageConfig&) = default;
};

struct BackboneConfig {
  std::string name = "nano";
  int stem_channels = 8;
  std::vector<StageConfig> stages;
  int head_channels = 1280;
  int input_size = 224;

  /// Desk-scale default: stem 8, (1x8 k3), (2x16 k3 s2), (2x24 k5 s2),
  /// expansion 4, SE 0.25, head 1280.
  static BackboneConfig nano();
  /// EfficientNet-B0 stage table (stem 32, seven stages, head 1280).
  static BackboneConfig efficientnet_b0();
  /// "nano" or "b0"; InvalidArgument otherwise.
  static BackboneConfig preset(std::string_view name);

  void validate() const;

  friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

/// Nearest multiple of 8 (ties upward), never below 8.
int round_channels(double channels);

/// Block counts ceil(count * depth); stem and stage channels rounded to a
/// multiple of 8 after scaling by width; input size round(input * resolution).
/// Head width is kept, so the feature dimension does not change.
BackboneConfig scaled_config(const BackboneConfig& base, const ScaleFactors& f);

struct ParamSpec {
  std::string name;
  std::vector<std::uint32_t> shape;
};

/**
 * Every parameter the backbone reads, in forward order. Naming scheme:
 *
 *   stem.conv.{weight,bias}                 [C, 3, 3, 3], [C]
 *   blocks.<s>.<b>.expand.{weight,bias}     [E, Cin, 1, 1]   (expansion > 1)
 *   blocks.<s>.<b>.dw.{weight,bias}         [E, 1, k, k]
 *   blocks.<s>.<b>.se.reduce.{weight,bias}  [R, E, 1, 1]     R = max(1, floor(Cin * se))
 *   blocks.<s>.<b>.se.expand.{weight,bias}  [E, R, 1, 1]
 *   blocks.<s>.<b>.project.{weight,bias}    [Cout, E, 1, 1]
 *   head.conv.{weight,bias}                 [H, Clast, 1, 1]
 *
 * Weights are OIHW with batch norm already folded in.
 */
std::vector<ParamSpec> parameter_specs(const BackboneConfig& cfg);

enum class Activation { Swish, Identity };

struct ForwardOptions {
  /// Identity exists so linearity properties can be checked exactly.
  Activation activation = Activation::Swish;
};

/// A config bound to validated weights. Construction checks every parameter
/// (MissingParameter / ShapeMismatch), so forward() cannot fail on weights.
class Backbone {
 public:
  Backbone(BackboneConfig cfg, std::shared_ptr<const WeightArchive> weights,
           ForwardOptions options = {});

  const BackboneConfig& config() const noexcept { return cfg_; }
  std::size_t feature_dim() const noexcept { return static_cast<std::size_t>(cfg_.head_channels); }

  /// Input must be 3 x input_size x input_size (ShapeMismatch otherwise).
  FeatureVector forward(const image::Tensor3& input) const;

  // Bound layer views; defined in backbone.cpp.
  struct Conv;
  struct Block;

 private:
  BackboneConfig cfg_;
  std::shared_ptr<const WeightArchive> weights_;
  ForwardOptions options_;
  std::shared_ptr<const std::vector<Block>> blocks_;
  std::shared_ptr<const Conv> stem_;
  std::shared_ptr<const Conv> head_;
};

FeatureVector backbone_forward(const image::Tensor3& t, const BackboneConfig& cfg,
                               const WeightArchive& w, ForwardOptions options = {});

/// He-uniform random weights (biases zero) for every parameter of `cfg`.
WeightArchive random_backbone_weights(const BackboneConfig& cfg, std::uint64_t seed);

/// Same shapes, every value zero.
WeightArchive zero_backbone_weights(const BackboneConfig& cfg);

// --- handcrafted -----------------------------------------------------------

inline constexpr std::size_t kHandcraftedDim = 16;

/**
 * 16 statistics of the rounded Rec. 601 grayscale image:
 *
 *   0 mean          1 std (population)   2 skewness       3 excess kurtosis
 *   4 entropy (256-bin, bits)            5 symmetric KL to uniform (bits)
 *   6 mean and 7 std of per-patch std over an 8x8 patch grid
 *   8 min           9 max               10 median        11 interquartile range
 *   12-15 reserved, zero
 *
 * Skewness and kurtosis of a constant image are 0. KL uses histogram
 * probabilities smoothed by +1e-12 and renormalized. The patch grid is
 * mirror-symmetric, so every statistic is invariant to horizontal flips.
 */
FeatureVector handcrafted_features(const image::RasterImage& img);

// --- extraction ------------------------------------------------------------

enum class ExtractorKind { Handcrafted, Cnn };

/// Frozen feature extractor. Handcrafted statistics are computed on the image
/// after the eval (or augmented) resize to policy.target_size; the CNN path
/// additionally converts to a unit tensor and normalizes.
class Extractor {
 public:
  static Extractor handcrafted(image::AugmentPolicy policy = {});
  static Extractor cnn(BackboneConfig cfg, std::shared_ptr<const WeightArchive> weights,
                       image::AugmentPolicy policy = {});

  ExtractorKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept;
  /// "handcrafted" or "cnn-<config name>".
  std::string tag() const;
  const image::AugmentPolicy& policy() const noexcept { return policy_; }

  FeatureVector extract(const image::RasterImage& img) const;
  FeatureVector extract_augmented(const image::RasterImage& img, SeededRng rng) const;

 private:
  ExtractorKind kind_ = ExtractorKind::Handcrafted;
  image::AugmentPolicy policy_;
  std::shared_ptr<const Backbone> backbone_;
};

struct FeatureCache {
  std::vector<std::string> paths;
  std::vector<FeatureVector> rows;
  std::string extractor_tag;
  std::size_t dim = 0;
  std::string manifest_hash;
  /// Additional metadata carried through the archive (e.g. weight source).
  std::map<std::string, std::string> extra;

  std::size_t size() const noexcept { return rows.size(); }

  /// Entries "0".."N-1" of shape [dim]; metadata kind=feature-cache,
  /// extractor, dim, manifest_hash, paths (newline separated).
  WeightArchive to_archive() const;
  static FeatureCache from_archive(const WeightArchive& a);

  /// Throws DimMismatch unless this cache was extracted for `m` (same hash,
  /// same paths in the same order).
  void check_matches(const dataset::Manifest& m) const;

  friend bool operator==(const FeatureCache&, const FeatureCache&) = default;
};

FeatureCache load_feature_cache(const std::filesystem::path& path);
void save_feature_cache(const FeatureCache& c, const std::filesystem::path& path);

/// One row per manifest record, in manifest order, using the eval transform.
/// Images are processed on up to `threads` workers (0 = hardware
/// concurrency); row order and values do not depend on the thread count.
/// Decode failures are collected and reported together, naming every path.
FeatureCache extract_features(const dataset::Manifest& m, const Extractor& ex,
                              unsigned threads = 0);

/// Decodes every manifest image (parallel, manifest order). Decode failures
/// are collected and reported together.
std::vector<image::RasterImage> load_images(const dataset::Manifest& m, unsigned threads = 0);

/// Augmented features for on-the-fly training: image i draws from
/// SeededRng::stream(seed, i, epoch). Only `indices` are extracted; the other
/// returned rows are empty.
std::vector<FeatureVector> extract_augmented(const std::vector<image::RasterImage>& images,
                                             const Extractor& ex, std::uint64_t seed,
                                             std::uint64_t epoch,
                                             const std::vector<std::size_t>& indices,
                                             unsigned threads = 0);

// --- forward-parity fixtures -----------------------------------------------

/**
 * A parity fixture is three archives written side by side:
 *
 *   input      entry "input"    [3, S, S]  normalized eval tensor
 *   reference  entry "features" [H]        features from the reference model
 *   weights    backbone archive (parameter_specs naming)
 *
 * input and reference carry metadata "config" (preset name).
 */
struct ParityFixture {
  image::Tensor3 input;
  FeatureVector reference;
  std::string config;
};

struct ParityResult {
  double max_abs_diff = 0.0;
  std::size_t worst_index = 0;
  bool passed = false;
};

inline constexpr double kParityTolerance = 1e-3;

void save_parity_fixture(const ParityFixture& f, const std::filesystem::path& input_path,
                         const std::filesystem::path& reference_path);
ParityFixture load_parity_fixture(const std::filesystem::path& input_path,
                                  const std::filesystem::path& reference_path);
/// Runs backbone_forward on the fixture input and compares against the
/// reference. Throws ShapeMismatch when the reference has the wrong width.
ParityResult check_parity(const ParityFixture& f, const BackboneConfig& cfg,
                          const WeightArchive& weights, double tolerance = kParityTolerance);

}  // namespace ciq::features
