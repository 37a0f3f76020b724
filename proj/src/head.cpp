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
#include "contrastiq/regressor.hpp"
#include "contrastiq/textio.hpp"

namespace ciq::regressor {

template <typename T>
HeadParamsT<T>::HeadParamsT(std::size_t in_dim)
    : in_dim_(in_dim),
      data_(kHidden1 * in_dim + kHidden1 + kHidden2 * kHidden1 + kHidden2 + kHidden2 + 1, T{0}) {
  if (in_dim == 0) throw Error(ErrorCode::DimMismatch, "head input dimension must be >= 1");
}

template <typename T>
bool HeadParamsT<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
template <typename U>
HeadParamsT<U> HeadParamsT<T>::cast() const {
  HeadParamsT<U> out(in_dim_);
  std::transform(data_.begin(), data_.end(), out.data().begin(),
                 [](T v) { return static_cast<U>(v); });
  return out;
}

template class HeadParamsT<float>;
template class HeadParamsT<double>;
template HeadParamsT<double> HeadParamsT<float>::cast<double>() const;
template HeadParamsT<float> HeadParamsT<double>::cast<float>() const;
template HeadParamsT<float> HeadParamsT<float>::cast<float>() const;
template HeadParamsT<double> HeadParamsT<double>::cast<double>() const;

HeadParams init_head(std::size_t in_dim, std::uint64_t seed) {
  HeadParams p(in_dim);
  const auto fill = [&](std::span<float> w, std::size_t fan_in, std::size_t fan_out,
                        std::uint64_t layer) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    SeededRng rng = SeededRng::stream(seed, layer, 0x68656164);  // "head"
    for (float& v : w) v = static_cast<float>(rng.uniform(-bound, bound));
  };
  fill(p.w1(), in_dim, kHidden1, 1);
  fill(p.w2(), kHidden1, kHidden2, 2);
  fill(p.w3(), kHidden2, 1, 3);
  return p;
}

std::vector<double> draw_dropout_mask(SeededRng& rng, double p) {
  if (!(p >= 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidArgument, "dropout must be in [0,1)");
  const double scale = 1.0 / (1.0 - p);
  std::vector<double> mask(kHidden1);
  for (double& m : mask) m = rng.uniform() < p ? 0.0 : scale;
  return mask;
}

namespace {

template <typename T, typename X>
double forward_impl(std::span<const X> x, const HeadParamsT<T>& p,
                    const std::vector<double>* mask, HeadTrace* trace) {
  const std::size_t in = p.in_dim();
  if (x.size() != in)
    throw Error(ErrorCode::DimMismatch, "head expects " + std::to_string(in) +
                                            " features, got " + std::to_string(x.size()));
  if (mask && mask->size() != kHidden1)
    throw Error(ErrorCode::DimMismatch, "dropout mask must have 512 entries");

  HeadTrace local;
  HeadTrace& t = trace ? *trace : local;
  t.x.assign(x.begin(), x.end());
  t.a1.resize(kHidden1);
  t.h1.resize(kHidden1);
  t.a2.resize(kHidden2);
  t.h2.resize(kHidden2);
  if (mask)
    t.mask = *mask;
  else
    t.mask.clear();

  const auto w1 = p.w1(), b1 = p.b1(), w2 = p.w2(), b2 = p.b2(), w3 = p.w3();
  for (std::size_t j = 0; j < kHidden1; ++j) {
    double acc = b1[j];
    const T* row = w1.data() + j * in;
    for (std::size_t i = 0; i < in; ++i) acc += static_cast<double>(row[i]) * t.x[i];
    t.a1[j] = acc;
    const double h = acc > 0.0 ? acc : 0.0;
    t.h1[j] = mask ? h * (*mask)[j] : h;
  }
  for (std::size_t j = 0; j < kHidden2; ++j) {
    double acc = b2[j];
    const T* row = w2.data() + j * kHidden1;
    for (std::size_t i = 0; i < kHidden1; ++i) acc += static_cast<double>(row[i]) * t.h1[i];
    t.a2[j] = acc;
    t.h2[j] = acc > 0.0 ? acc : 0.0;
  }
  double out = p.b3()[0];
  for (std::size_t i = 0; i < kHidden2; ++i) out += static_cast<double>(w3[i]) * t.h2[i];
  t.output = out;
  t.owner = &p;
  t.version = p.version();
  return out;
}

}  // namespace

template <typename T>
double head_forward(std::span<const float> x, const HeadParamsT<T>& p,
                    const std::vector<double>* mask, HeadTrace* trace) {
  return forward_impl(x, p, mask, trace);
}

template <typename T>
double head_forward(std::span<const double> x, const HeadParamsT<T>& p,
                    const std::vector<double>* mask, HeadTrace* trace) {
  return forward_impl(x, p, mask, trace);
}

double head_forward_train(std::span<const float> x, const HeadParams& p, SeededRng& rng,
                          double dropout, HeadTrace* trace) {
  if (dropout == 0.0) return head_forward(x, p, nullptr, trace);
  const auto mask = draw_dropout_mask(rng, dropout);
  return head_forward(x, p, &mask, trace);
}

template <typename T>
void accumulate_backward(const HeadTrace& t, double dpred, const HeadParamsT<T>& p,
                         Gradients& g) {
  if (t.owner != &p || t.version != p.version())
    throw Error(ErrorCode::StaleTrace, "trace does not belong to the current parameters");
  if (g.in_dim() != p.in_dim() || t.x.size() != p.in_dim())
    throw Error(ErrorCode::DimMismatch, "gradient buffer does not match the head");
  if (dpred == 0.0) return;
  const std::size_t in = p.in_dim();

  g.b3()[0] += dpred;
  std::vector<double> da2(kHidden2);
  const auto w3 = p.w3();
  auto gw3 = g.w3();
  for (std::size_t j = 0; j < kHidden2; ++j) {
    gw3[j] += dpred * t.h2[j];
    da2[j] = t.a2[j] > 0.0 ? dpred * static_cast<double>(w3[j]) : 0.0;
  }

  std::vector<double> dh1(kHidden1, 0.0);
  const auto w2 = p.w2();
  auto gw2 = g.w2();
  auto gb2 = g.b2();
  for (std::size_t j = 0; j < kHidden2; ++j) {
    const double d = da2[j];
    if (d == 0.0) continue;
    gb2[j] += d;
    const T* row = w2.data() + j * kHidden1;
    double* grow = gw2.data() + j * kHidden1;
    for (std::size_t i = 0; i < kHidden1; ++i) {
      grow[i] += d * t.h1[i];
      dh1[i] += d * static_cast<double>(row[i]);
    }
  }

  auto gw1 = g.w1();
  auto gb1 = g.b1();
  for (std::size_t j = 0; j < kHidden1; ++j) {
    if (!(t.a1[j] > 0.0)) continue;
    const double d = t.mask.empty() ? dh1[j] : dh1[j] * t.mask[j];
    if (d == 0.0) continue;
    gb1[j] += d;
    double* grow = gw1.data() + j * in;
    for (std::size_t i = 0; i < in; ++i) grow[i] += d * t.x[i];
  }
}

template <typename T>
Gradients head_backward(const HeadTrace& trace, double dpred, const HeadParamsT<T>& p) {
  Gradients g(p.in_dim());
  accumulate_backward(trace, dpred, p, g);
  return g;
}

template double head_forward(std::span<const float>, const HeadParams&, const std::vector<double>*,
                             HeadTrace*);
template double head_forward(std::span<const float>, const HeadParams64&,
                             const std::vector<double>*, HeadTrace*);
template double head_forward(std::span<const double>, const HeadParams&,
                             const std::vector<double>*, HeadTrace*);
template double head_forward(std::span<const double>, const HeadParams64&,
                             const std::vector<double>*, HeadTrace*);
template void accumulate_backward(const HeadTrace&, double, const HeadParams&, Gradients&);
template void accumulate_backward(const HeadTrace&, double, const HeadParams64&, Gradients&);
template Gradients head_backward(const HeadTrace&, double, const HeadParams&);
template Gradients head_backward(const HeadTrace&, double, const HeadParams64&);

MseResult mse_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.empty()) throw Error(ErrorCode::EmptyBatch, "mse of an empty batch");
  if (pred.size() != target.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(pred.size()) + " predictions for " +
                                               std::to_string(target.size()) + " targets");
  const double n = static_cast<double>(pred.size());
  MseResult r;
  r.grad.resize(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    r.loss += d * d;
    r.grad[i] = 2.0 * d / n;
  }
  r.loss /= n;
  return r;
}

void TrainConfig::validate() const {
  const auto fail = [](const std::string& what) {
    throw Error(ErrorCode::InvalidArgument, what);
  };
  if (!(learning_rate > 0.0 && std::isfinite(learning_rate))) fail("learning_rate must be > 0");
  if (!(weight_decay >= 0.0 && std::isfinite(weight_decay))) fail("weight_decay must be >= 0");
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0,1)");
  if (!(scheduler.factor > 0.0 && scheduler.factor < 1.0))
    fail("scheduler_factor must be in (0,1)");
  if (scheduler.patience < 1) fail("scheduler_patience must be >= 1");
  if (!(scheduler.min_lr > 0.0)) fail("min_lr must be > 0");
  if (!(adamw.beta1 > 0.0 && adamw.beta1 < 1.0)) fail("beta1 must be in (0,1)");
  if (!(adamw.beta2 > 0.0 && adamw.beta2 < 1.0)) fail("beta2 must be in (0,1)");
  if (!(adamw.eps > 0.0)) fail("eps must be > 0");
}

OptimizerState make_optimizer_state(std::size_t n, double lr) {
  OptimizerState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.lr = lr;
  return s;
}

template <typename T>
void adamw_step(HeadParamsT<T>& p, const Gradients& g, OptimizerState& s, double weight_decay,
                const AdamWConfig& cfg) {
  if (g.size() != p.size() || s.m.size() != p.size() || s.v.size() != p.size())
    throw Error(ErrorCode::DimMismatch, "optimizer state does not match the head");
  ++s.t;
  const double t = static_cast<double>(s.t);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  auto params = p.data();
  const auto grads = g.data();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double gi = grads[i];
    s.m[i] = cfg.beta1 * s.m[i] + (1.0 - cfg.beta1) * gi;
    s.v[i] = cfg.beta2 * s.v[i] + (1.0 - cfg.beta2) * gi * gi;
    const double m_hat = s.m[i] / bc1;
    const double v_hat = s.v[i] / bc2;
    const double old = params[i];
    params[i] = static_cast<T>(old - s.lr * m_hat / (std::sqrt(v_hat) + cfg.eps) -
                               s.lr * weight_decay * old);
  }
  p.touch();
}

template void adamw_step(HeadParams&, const Gradients&, OptimizerState&, double,
                         const AdamWConfig&);
template void adamw_step(HeadParams64&, const Gradients&, OptimizerState&, double,
                         const AdamWConfig&);

double PlateauScheduler::step(double metric) {
  if (metric < best_ - cfg_.threshold) {
    best_ = metric;
    bad_ = 0;
  } else if (++bad_ >= cfg_.patience) {
    lr_ = std::max(lr_ * cfg_.factor, cfg_.min_lr);
    bad_ = 0;
  }
  return lr_;
}

namespace {

std::vector<std::uint32_t> shape(std::initializer_list<std::size_t> xs) {
  std::vector<std::uint32_t> out;
  for (auto x : xs) out.push_back(static_cast<std::uint32_t>(x));
  return out;
}

std::vector<float> copy(std::span<const float> s) { return {s.begin(), s.end()}; }

void load_into(std::span<float> dst, const ArchiveEntry& e) {
  std::copy(e.values.begin(), e.values.end(), dst.begin());
}

}  // namespace

WeightArchive head_to_archive(const HeadModel& model) {
  const auto& p = model.params;
  WeightArchive a;
  a.add("layer1.weight", shape({kHidden1, p.in_dim()}), copy(p.w1()));
  a.add("layer1.bias", shape({kHidden1}), copy(p.b1()));
  a.add("layer2.weight", shape({kHidden2, kHidden1}), copy(p.w2()));
  a.add("layer2.bias", shape({kHidden2}), copy(p.b2()));
  a.add("layer3.weight", shape({1, kHidden2}), copy(p.w3()));
  a.add("layer3.bias", shape({1}), copy(p.b3()));
  for (const auto& [k, v] : model.extra) a.metadata()[k] = v;
  a.metadata()["in_dim"] = std::to_string(p.in_dim());
  a.metadata()["arch"] = model.arch;
  a.metadata()["normalizer"] = model.normalizer.to_json();
  return a;
}

HeadModel head_from_archive(const WeightArchive& a) {
  const auto in_meta = a.meta("in_dim");
  if (!in_meta) throw Error(ErrorCode::MissingParameter, "head archive has no in_dim metadata");
  const auto in_dim = parse_int(*in_meta);
  if (!in_dim || *in_dim < 1)
    throw Error(ErrorCode::DimMismatch, "head archive in_dim '" + *in_meta + "' is invalid");
  const auto* l1 = a.find("layer1.weight");
  if (!l1) throw Error(ErrorCode::MissingParameter, "layer1.weight");
  if (l1->shape.size() != 2 || l1->shape[1] != static_cast<std::uint32_t>(*in_dim))
    throw Error(ErrorCode::DimMismatch,
                "in_dim metadata says " + *in_meta + " but layer1.weight has " +
                    (l1->shape.size() == 2 ? std::to_string(l1->shape[1]) : "another") +
                    " inputs");
  const auto norm = a.meta("normalizer");
  if (!norm) throw Error(ErrorCode::MissingParameter, "head archive has no normalizer metadata");

  const std::size_t in = static_cast<std::size_t>(*in_dim);
  HeadModel model{HeadParams(in), dataset::ZScoreNormalizer::from_json(*norm),
                  a.meta("arch").value_or(""), {}};
  auto& p = model.params;
  load_into(p.w1(), a.require("layer1.weight", shape({kHidden1, in})));
  load_into(p.b1(), a.require("layer1.bias", shape({kHidden1})));
  load_into(p.w2(), a.require("layer2.weight", shape({kHidden2, kHidden1})));
  load_into(p.b2(), a.require("layer2.bias", shape({kHidden2})));
  load_into(p.w3(), a.require("layer3.weight", shape({1, kHidden2})));
  load_into(p.b3(), a.require("layer3.bias", shape({1})));
  if (!p.all_finite()) throw Error(ErrorCode::CorruptData, "head archive has non-finite values");
  for (const auto& [k, v] : a.metadata())
    if (k != "in_dim" && k != "arch" && k != "normalizer") model.extra[k] = v;
  return model;
}

void save_head(const HeadModel& model, const std::filesystem::path& path) {
  save_weight_archive(head_to_archive(model), path);
}

HeadModel load_head(const std::filesystem::path& path) {
  return head_from_archive(load_weight_archive(path));
}

}  // namespace ciq::regressor
