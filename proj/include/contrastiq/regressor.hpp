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
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "contrastiq/archive.hpp"
#include "contrastiq/dataset.hpp"
#include "contrastiq/features.hpp"
#include "contrastiq/rng.hpp"

namespace ciq::regressor {

inline constexpr std::size_t kHidden1 = 512;
inline constexpr std::size_t kHidden2 = 256;

/**
 * Head parameters in one contiguous buffer:
 *
 *   w1 [512 x in_dim]  b1 [512]  w2 [256 x 512]  b2 [256]  w3 [1 x 256]  b3 [1]
 *
 * Weight matrices are row-major (out x in). T is float for stored heads and
 * double for gradients, optimizer moments and 64-bit checks.
 */
template <typename T>
class HeadParamsT {
 public:
  explicit HeadParamsT(std::size_t in_dim = features::kHandcraftedDim);

  std::size_t in_dim() const noexcept { return in_dim_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  std::span<T> w1() noexcept { return slice(0, kHidden1 * in_dim_); }
  std::span<T> b1() noexcept { return slice(off_b1(), kHidden1); }
  std::span<T> w2() noexcept { return slice(off_w2(), kHidden2 * kHidden1); }
  std::span<T> b2() noexcept { return slice(off_b2(), kHidden2); }
  std::span<T> w3() noexcept { return slice(off_w3(), kHidden2); }
  std::span<T> b3() noexcept { return slice(off_b3(), 1); }
  std::span<const T> w1() const noexcept { return cslice(0, kHidden1 * in_dim_); }
  std::span<const T> b1() const noexcept { return cslice(off_b1(), kHidden1); }
  std::span<const T> w2() const noexcept { return cslice(off_w2(), kHidden2 * kHidden1); }
  std::span<const T> b2() const noexcept { return cslice(off_b2(), kHidden2); }
  std::span<const T> w3() const noexcept { return cslice(off_w3(), kHidden2); }
  std::span<const T> b3() const noexcept { return cslice(off_b3(), 1); }

  /// Incremented by every optimizer step; traces remember the value they saw.
  std::uint64_t version() const noexcept { return version_; }
  void touch() noexcept { ++version_; }

  bool all_finite() const;

  template <typename U>
  HeadParamsT<U> cast() const;

  friend bool operator==(const HeadParamsT& a, const HeadParamsT& b) {
    return a.in_dim_ == b.in_dim_ && a.data_ == b.data_;
  }

 private:
  std::size_t off_b1() const noexcept { return kHidden1 * in_dim_; }
  std::size_t off_w2() const noexcept { return off_b1() + kHidden1; }
  std::size_t off_b2() const noexcept { return off_w2() + kHidden2 * kHidden1; }
  std::size_t off_w3() const noexcept { return off_b2() + kHidden2; }
  std::size_t off_b3() const noexcept { return off_w3() + kHidden2; }
  std::span<T> slice(std::size_t o, std::size_t n) noexcept { return {data_.data() + o, n}; }
  std::span<const T> cslice(std::size_t o, std::size_t n) const noexcept {
    return {data_.data() + o, n};
  }

  std::size_t in_dim_;
  std::vector<T> data_;
  std::uint64_t version_ = 0;
};

using HeadParams = HeadParamsT<float>;
using HeadParams64 = HeadParamsT<double>;
using Gradients = HeadParamsT<double>;

/// Xavier-uniform weights, zero biases, one seeded stream per layer.
HeadParams init_head(std::size_t in_dim, std::uint64_t seed);

/// Per-unit scale for the first hidden layer: 0 (dropped) or 1/(1-p).
std::vector<double> draw_dropout_mask(SeededRng& rng, double p);

struct HeadTrace {
  std::vector<double> x;
  std::vector<double> a1, h1;  // pre-activation, post ReLU and dropout
  std::vector<double> a2, h2;
  std::vector<double> mask;  // empty in eval mode
  double output = 0.0;
  const void* owner = nullptr;
  std::uint64_t version = 0;
};

/// Eval mode when `mask` is null. Throws DimMismatch.
template <typename T>
double head_forward(std::span<const float> x, const HeadParamsT<T>& p,
                    const std::vector<double>* mask = nullptr, HeadTrace* trace = nullptr);
template <typename T>
double head_forward(std::span<const double> x, const HeadParamsT<T>& p,
                    const std::vector<double>* mask = nullptr, HeadTrace* trace = nullptr);

/// Train mode: draws a fresh dropout mask from `rng`.
double head_forward_train(std::span<const float> x, const HeadParams& p, SeededRng& rng,
                          double dropout, HeadTrace* trace);

/// Adds d(pred)/d(params) * dpred into `grads`. Throws StaleTrace when the
/// trace came from other parameters or an older version of these.
template <typename T>
void accumulate_backward(const HeadTrace& trace, double dpred, const HeadParamsT<T>& p,
                         Gradients& grads);
template <typename T>
Gradients head_backward(const HeadTrace& trace, double dpred, const HeadParamsT<T>& p);

struct MseResult {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Throws EmptyBatch on empty input, LengthMismatch on unequal lengths.
MseResult mse_loss(std::span<const double> pred, std::span<const double> target);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct SchedulerConfig {
  double factor = 0.5;
  int patience = 5;
  double min_lr = 1e-6;
  double threshold = 1e-8;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  double weight_decay = 1e-5;
  int epochs = 50;
  int batch_size = 32;
  double dropout = 0.5;
  std::uint64_t seed = 0;
  SchedulerConfig scheduler;
  AdamWConfig adamw;

  /// Throws InvalidArgument naming the offending field.
  void validate() const;
};

struct OptimizerState {
  std::vector<double> m, v;
  std::uint64_t t = 0;
  double lr = 1e-4;
};

OptimizerState make_optimizer_state(std::size_t n, double lr);

/// One decoupled-weight-decay Adam step:
///   p <- p - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * p
template <typename T>
void adamw_step(HeadParamsT<T>& p, const Gradients& g, OptimizerState& s, double weight_decay,
                const AdamWConfig& cfg = {});

/// Reduce-on-plateau over a metric that should decrease. An epoch improves
/// when metric < best - threshold. After `patience` consecutive epochs without
/// improvement lr becomes max(lr * factor, min_lr) and the counter resets.
class PlateauScheduler {
 public:
  PlateauScheduler(SchedulerConfig cfg, double lr) : cfg_(cfg), lr_(lr) {}
  double step(double metric);
  double lr() const noexcept { return lr_; }
  int bad_epochs() const noexcept { return bad_; }

 private:
  SchedulerConfig cfg_;
  double lr_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_ = 0;
};

struct EpochStats {
  int epoch = 0;
  double train_mse = 0.0;  // normalized scale, train mode
  double val_mse = 0.0;
  double val_plcc = 0.0;  // NaN when undefined (constant predictions)
  double val_srcc = 0.0;
  double lr = 0.0;  // rate used during the epoch
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  double wall_seconds = 0.0;

  const EpochStats& best() const;
  /// `epoch,train_mse,val_mse,val_plcc,val_srcc,lr`; wall time is omitted so
  /// reruns are byte-identical.
  std::string to_csv() const;
  static TrainReport from_csv(std::string_view csv);
};

struct TrainResult {
  HeadParams params;
  TrainReport report;
};

/// Features for the train rows of one epoch, indexed by manifest row.
using EpochFeatures = std::function<std::vector<features::FeatureVector>(std::uint64_t epoch)>;

/**
 * Head training on a split manifest. Validation MSE/PLCC/SRCC are measured in
 * MOS units after denormalize_clip, and the parameters of the epoch with the
 * lowest validation MSE are returned. With `augmented` set, train rows are
 * taken from it every epoch and the cache supplies validation rows only.
 * Throws EmptySplit, DimMismatch.
 */
TrainResult train(const features::FeatureCache& cache, const dataset::Manifest& m,
                  const dataset::ZScoreNormalizer& normalizer, const TrainConfig& cfg,
                  const EpochFeatures& augmented = {});

/// Eval-mode forward followed by denormalize_clip, in input order.
std::vector<double> predict(std::span<const features::FeatureVector> rows, const HeadParams& p,
                            const dataset::ZScoreNormalizer& normalizer);
double predict(const features::FeatureVector& row, const HeadParams& p,
               const dataset::ZScoreNormalizer& normalizer);

// Siamese difference mode.

struct PairSample {
  features::FeatureVector feature_a, feature_b;
  double target = 0.0;  // |z_a - z_b|
};

/// |a - b| elementwise.
std::vector<float> pair_input(const features::FeatureVector& a, const features::FeatureVector& b);

/// K partners per image, drawn uniformly from the other images of `split`.
std::vector<PairSample> make_pairs(const features::FeatureCache& cache, const dataset::Manifest& m,
                                   const dataset::ZScoreNormalizer& normalizer,
                                   dataset::Split split, int pairs_per_image, std::uint64_t seed);

/// Same loop as train(); validation metrics are computed on predicted versus
/// target distances in normalized units.
TrainResult siamese_train(const std::vector<PairSample>& train_pairs,
                          const std::vector<PairSample>& val_pairs, const TrainConfig& cfg);

/// Predicted normalized distance; exactly symmetric in a and b.
double siamese_predict(const features::FeatureVector& a, const features::FeatureVector& b,
                       const HeadParams& p);

struct Anchor {
  features::FeatureVector features;
  double mos = 0.0;
};

/// sum(w_i mos_i) / sum(w_i) with w_i = 1 / (max(d_i, 0) + eps), clipped to
/// the normalizer's range. Throws NoAnchors.
double siamese_score(const features::FeatureVector& f, std::span<const Anchor> anchors,
                     const HeadParams& p, const dataset::ZScoreNormalizer& normalizer,
                     double eps = 1e-6);

// Persistence.

struct HeadModel {
  HeadParams params;
  dataset::ZScoreNormalizer normalizer;
  std::string arch = "mlp-512-256-1";
  /// Extra metadata (extractor tag, anchors file, ...).
  std::map<std::string, std::string> extra;
};

/// Entries layer{1,2,3}.{weight,bias}; metadata in_dim, arch, normalizer.
WeightArchive head_to_archive(const HeadModel& model);
/// Throws MissingParameter, DimMismatch.
HeadModel head_from_archive(const WeightArchive& a);

void save_head(const HeadModel& model, const std::filesystem::path& path);
HeadModel load_head(const std::filesystem::path& path);

}  // namespace ciq::regressor
