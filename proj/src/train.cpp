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
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "contrastiq/error.hpp"
#include "contrastiq/metrics.hpp"
#include "contrastiq/regressor.hpp"
#include "contrastiq/textio.hpp"

namespace ciq::regressor {
namespace {

using features::FeatureVector;

struct ValMetrics {
  double mse = 0.0, plcc = 0.0, srcc = 0.0;
};

double correlation_or_nan(double (*fn)(std::span<const double>, std::span<const double>),
                          std::span<const double> a, std::span<const double> b) {
  try {
    return fn(a, b);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateVector) return std::nan("");
    throw;
  }
}

ValMetrics score(std::span<const double> pred, std::span<const double> actual) {
  return {metrics::mse(pred, actual), correlation_or_nan(metrics::plcc, pred, actual),
          correlation_or_nan(metrics::srcc, pred, actual)};
}

// Rows for one epoch; the reference stays valid until the next call.
using RowSource = std::function<const std::vector<FeatureVector>&(std::uint64_t epoch)>;
using Validator = std::function<ValMetrics(const HeadParams&)>;

struct InputScaling {
  std::vector<double> mean, scale;
};

// Per-feature mean and population std over `rows`; constant features keep
// scale 1.
InputScaling fit_scaling(const std::vector<FeatureVector>& rows, std::size_t dim) {
  InputScaling s{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows)
    for (std::size_t i = 0; i < dim; ++i) s.mean[i] += r.values[i];
  for (auto& m : s.mean) m /= n;
  std::vector<double> var(dim, 0.0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < dim; ++i) var[i] += (r.values[i] - s.mean[i]) * (r.values[i] - s.mean[i]);
  for (std::size_t i = 0; i < dim; ++i) {
    const double sd = std::sqrt(var[i] / n);
    if (sd > 0.0)
      s.scale[i] = sd;
    else
      s.mean[i] = 0.0;  // centring would zero the column; pass it through raw
  }
  return s;
}

std::vector<FeatureVector> standardize(const std::vector<FeatureVector>& rows,
                                       const InputScaling& s) {
  std::vector<FeatureVector> out(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].dim() != s.mean.size())
      throw Error(ErrorCode::DimMismatch, "feature row " + std::to_string(k) + " has dim " +
                                              std::to_string(rows[k].dim()));
    out[k].values.resize(s.mean.size());
    for (std::size_t i = 0; i < s.mean.size(); ++i)
      out[k].values[i] = static_cast<float>((rows[k].values[i] - s.mean[i]) / s.scale[i]);
  }
  return out;
}

// Rewrites layer 1 so the head takes raw features: W' = W / s, b' = b - W' m.
HeadParams fold_scaling(const HeadParams& p, const InputScaling& s) {
  HeadParams out = p;
  const std::size_t in = p.in_dim();
  auto w = out.w1();
  auto b = out.b1();
  for (std::size_t j = 0; j < kHidden1; ++j) {
    double shift = 0.0;
    for (std::size_t i = 0; i < in; ++i) {
      const double wi = static_cast<double>(p.w1()[j * in + i]) / s.scale[i];
      w[j * in + i] = static_cast<float>(wi);
      shift += wi * s.mean[i];
    }
    b[j] = static_cast<float>(static_cast<double>(p.b1()[j]) - shift);
  }
  return out;
}

// Trains in standardized input space. The validator and the returned
// parameters see the folded head, which consumes raw features.
TrainResult fit(std::size_t in_dim, const std::vector<FeatureVector>& reference,
                const RowSource& raw_rows_for, std::span<const double> targets,
                const Validator& validate_raw, const TrainConfig& cfg) {
  cfg.validate();
  const InputScaling scaling = fit_scaling(reference, in_dim);
  std::vector<FeatureVector> scaled;
  const RowSource rows_for = [&](std::uint64_t epoch) -> const std::vector<FeatureVector>& {
    scaled = standardize(raw_rows_for(epoch), scaling);
    return scaled;
  };
  const Validator validate = [&](const HeadParams& p) {
    return validate_raw(fold_scaling(p, scaling));
  };
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = targets.size();

  HeadParams params = init_head(in_dim, cfg.seed);
  std::optional<HeadParams> best_params;
  double best_mse = std::numeric_limits<double>::infinity();
  PlateauScheduler scheduler(cfg.scheduler, cfg.learning_rate);
  OptimizerState state = make_optimizer_state(params.size(), cfg.learning_rate);
  Gradients grads(in_dim);
  HeadTrace trace;
  TrainReport report;

  std::vector<std::size_t> order(n);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto e = static_cast<std::uint64_t>(epoch);
    const auto& rows = rows_for(e);
    SeededRng rng(cfg.seed ^ e);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    state.lr = scheduler.lr();
    double sum_sq = 0.0;
    for (std::size_t begin = 0; begin < n; begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(n, begin + static_cast<std::size_t>(cfg.batch_size));
      const double batch = static_cast<double>(end - begin);
      std::fill(grads.data().begin(), grads.data().end(), 0.0);
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t i = order[k];
        const double pred = head_forward_train(rows[i].values, params, rng, cfg.dropout, &trace);
        const double diff = pred - targets[i];
        sum_sq += diff * diff;
        accumulate_backward(trace, 2.0 * diff / batch, params, grads);
      }
      adamw_step(params, grads, state, cfg.weight_decay, cfg.adamw);
    }

    const ValMetrics v = validate(params);
    report.epochs.push_back(
        {epoch, sum_sq / static_cast<double>(n), v.mse, v.plcc, v.srcc, state.lr});
    if (v.mse < best_mse || !best_params) {
      best_mse = v.mse;
      best_params = fold_scaling(params, scaling);
      report.best_epoch = epoch;
    }
    scheduler.step(v.mse);
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(*best_params), std::move(report)};
}

}  // namespace

const EpochStats& TrainReport::best() const {
  for (const auto& e : epochs)
    if (e.epoch == best_epoch) return e;
  throw Error(ErrorCode::EmptySplit, "train report has no best epoch");
}

std::string TrainReport::to_csv() const {
  std::string s = "epoch,train_mse,val_mse,val_plcc,val_srcc,lr\n";
  for (const auto& e : epochs) {
    s += std::to_string(e.epoch) + "," + format_double(e.train_mse) + "," +
         format_double(e.val_mse) + "," + format_double(e.val_plcc) + "," +
         format_double(e.val_srcc) + "," + format_double(e.lr) + "\n";
  }
  return s;
}

TrainReport TrainReport::from_csv(std::string_view csv) {
  const auto lines = split_lines(csv);
  if (lines.empty() || trim(lines[0]) != "epoch,train_mse,val_mse,val_plcc,val_srcc,lr")
    throw Error(ErrorCode::BadHeader,
                "expected header 'epoch,train_mse,val_mse,val_plcc,val_srcc,lr'");
  TrainReport r;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto f = split(lines[i], ',');
    const std::string row = "row " + std::to_string(i + 1);
    if (f.size() != 6) throw Error(ErrorCode::MalformedRow, row + ": expected 6 fields");
    const auto epoch = parse_int(f[0]);
    if (!epoch) throw Error(ErrorCode::MalformedRow, row + ": bad epoch");
    EpochStats e;
    e.epoch = static_cast<int>(*epoch);
    double* cols[] = {&e.train_mse, &e.val_mse, &e.val_plcc, &e.val_srcc, &e.lr};
    for (int c = 0; c < 5; ++c) {
      const auto v = parse_double(f[c + 1]);
      if (!v) throw Error(ErrorCode::MalformedRow, row + ": bad number '" + std::string(f[c + 1]) + "'");
      *cols[c] = *v;
    }
    if (e.val_mse < best || r.epochs.empty()) {
      best = e.val_mse;
      r.best_epoch = e.epoch;
    }
    r.epochs.push_back(e);
  }
  if (r.epochs.empty()) throw Error(ErrorCode::EmptySplit, "train report has no epochs");
  return r;
}

TrainResult train(const features::FeatureCache& cache, const dataset::Manifest& m,
                  const dataset::ZScoreNormalizer& normalizer, const TrainConfig& cfg,
                  const EpochFeatures& augmented) {
  cache.check_matches(m);
  const auto train_idx = m.indices(dataset::Split::Train);
  const auto val_idx = m.indices(dataset::Split::Val);
  if (train_idx.empty()) throw Error(ErrorCode::EmptySplit, "no train rows in the manifest");
  if (val_idx.empty()) throw Error(ErrorCode::EmptySplit, "no validation rows in the manifest");

  std::vector<double> targets;
  std::vector<FeatureVector> train_rows;
  for (const auto i : train_idx) {
    targets.push_back(normalizer.normalize(m.records[i].mos));
    train_rows.push_back(cache.rows[i]);
  }
  std::vector<FeatureVector> val_rows;
  std::vector<double> val_mos;
  for (const auto i : val_idx) {
    val_rows.push_back(cache.rows[i]);
    val_mos.push_back(m.records[i].mos);
  }

  std::vector<FeatureVector> epoch_rows;
  const RowSource source = [&](std::uint64_t epoch) -> const std::vector<FeatureVector>& {
    if (!augmented) return train_rows;
    auto all = augmented(epoch);
    if (all.size() != m.size())
      throw Error(ErrorCode::DimMismatch, "augmented features do not cover the manifest");
    epoch_rows.clear();
    for (const auto i : train_idx) epoch_rows.push_back(std::move(all[i]));
    return epoch_rows;
  };
  const Validator validate = [&](const HeadParams& p) {
    return score(predict(val_rows, p, normalizer), val_mos);
  };
  return fit(cache.dim, train_rows, source, targets, validate, cfg);
}

double predict(const FeatureVector& row, const HeadParams& p,
               const dataset::ZScoreNormalizer& normalizer) {
  return normalizer.denormalize_clip(head_forward(std::span<const float>(row.values), p));
}

std::vector<double> predict(std::span<const FeatureVector> rows, const HeadParams& p,
                            const dataset::ZScoreNormalizer& normalizer) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(predict(r, p, normalizer));
  return out;
}

std::vector<float> pair_input(const FeatureVector& a, const FeatureVector& b) {
  if (a.dim() != b.dim())
    throw Error(ErrorCode::DimMismatch, "pair features have dims " + std::to_string(a.dim()) +
                                            " and " + std::to_string(b.dim()));
  std::vector<float> d(a.dim());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::abs(a.values[i] - b.values[i]);
  return d;
}

std::vector<PairSample> make_pairs(const features::FeatureCache& cache, const dataset::Manifest& m,
                                   const dataset::ZScoreNormalizer& normalizer,
                                   dataset::Split split, int pairs_per_image, std::uint64_t seed) {
  cache.check_matches(m);
  if (pairs_per_image < 1) throw Error(ErrorCode::InvalidArgument, "pairs per image must be >= 1");
  const auto idx = m.indices(split);
  if (idx.size() < 2)
    throw Error(ErrorCode::EmptySplit, "need at least two " + std::string(to_string(split)) +
                                           " rows to form pairs");
  std::vector<PairSample> pairs;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    SeededRng rng = SeededRng::stream(seed, idx[k], 0x70616972);  // "pair"
    const std::size_t a = idx[k];
    for (int j = 0; j < pairs_per_image; ++j) {
      std::size_t r = rng.below(idx.size() - 1);
      if (r >= k) ++r;
      const std::size_t b = idx[r];
      pairs.push_back({cache.rows[a], cache.rows[b],
                       std::abs(normalizer.normalize(m.records[a].mos) -
                                normalizer.normalize(m.records[b].mos))});
    }
  }
  return pairs;
}

TrainResult siamese_train(const std::vector<PairSample>& train_pairs,
                          const std::vector<PairSample>& val_pairs, const TrainConfig& cfg) {
  if (train_pairs.empty()) throw Error(ErrorCode::EmptySplit, "no training pairs");
  if (val_pairs.empty()) throw Error(ErrorCode::EmptySplit, "no validation pairs");
  const std::size_t dim = train_pairs.front().feature_a.dim();

  std::vector<FeatureVector> rows;
  std::vector<double> targets;
  for (const auto& p : train_pairs) {
    if (p.feature_a.dim() != dim)
      throw Error(ErrorCode::DimMismatch, "training pairs have inconsistent dims");
    rows.push_back({pair_input(p.feature_a, p.feature_b)});
    targets.push_back(p.target);
  }
  std::vector<FeatureVector> val_rows;
  std::vector<double> val_targets;
  for (const auto& p : val_pairs) {
    val_rows.push_back({pair_input(p.feature_a, p.feature_b)});
    val_targets.push_back(p.target);
  }

  const RowSource source = [&](std::uint64_t) -> const std::vector<FeatureVector>& {
    return rows;
  };
  const Validator validate = [&](const HeadParams& p) {
    std::vector<double> pred;
    for (const auto& r : val_rows) pred.push_back(head_forward(std::span<const float>(r.values), p));
    return score(pred, val_targets);
  };
  return fit(dim, rows, source, targets, validate, cfg);
}

double siamese_predict(const FeatureVector& a, const FeatureVector& b, const HeadParams& p) {
  const auto d = pair_input(a, b);
  return head_forward(std::span<const float>(d), p);
}

double siamese_score(const FeatureVector& f, std::span<const Anchor> anchors, const HeadParams& p,
                     const dataset::ZScoreNormalizer& normalizer, double eps) {
  if (anchors.empty()) throw Error(ErrorCode::NoAnchors, "siamese scoring needs anchors");
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be > 0");
  double num = 0.0, den = 0.0;
  for (const auto& a : anchors) {
    const double d = std::max(siamese_predict(f, a.features, p), 0.0);
    const double w = 1.0 / (d + eps);
    num += w * a.mos;
    den += w;
  }
  return std::clamp(num / den, normalizer.clip_lo, normalizer.clip_hi);
}

}  // namespace ciq::regressor
