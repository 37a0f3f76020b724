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


#include "contrastiq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "contrastiq/error.hpp"
#include "contrastiq/textio.hpp"

namespace ciq::metrics {
namespace {

void check_lengths(std::span<const double> x, std::span<const double> y, std::size_t min_n) {
  if (x.size() != y.size())
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(x.size()) + " vs " + std::to_string(y.size()) + " values");
  if (x.size() < min_n)
    throw Error(ErrorCode::DegenerateVector,
                "need at least " + std::to_string(min_n) + " values, got " +
                    std::to_string(x.size()));
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out + "\"";
}

std::string json_number(double v) { return std::isfinite(v) ? format_double(v) : "null"; }

}  // namespace

double plcc(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y, 2);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw Error(ErrorCode::DegenerateVector, "constant input has no correlation");
  const double prod = sxx * syy;
  const double denom = std::isfinite(prod) && prod > 0.0 ? std::sqrt(prod)
                                                         : std::sqrt(sxx) * std::sqrt(syy);
  const double r = sxy / denom;
  return std::clamp(r, -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    // Positions i..j-1 (0-based) share the mean 1-based rank.
    const double r = (static_cast<double>(i) + static_cast<double>(j - 1)) / 2.0 + 1.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

double srcc(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y, 2);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return plcc(rx, ry);
}

double srcc_closed_form(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y, 2);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  double d2 = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double n = static_cast<double>(x.size());
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

double tolerance_accuracy(std::span<const double> pred, std::span<const double> actual,
                          double tau) {
  check_lengths(pred, actual, 1);
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be > 0");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (std::abs(pred[i] - actual[i]) <= tau) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double mse(std::span<const double> pred, std::span<const double> actual) {
  check_lengths(pred, actual, 1);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - actual[i]) * (pred[i] - actual[i]);
  return s / static_cast<double>(pred.size());
}

EvalReport evaluate(std::span<const double> predictions, std::span<const double> actuals,
                    std::span<const std::string> paths, double tau) {
  check_lengths(predictions, actuals, 1);
  if (paths.size() != predictions.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(paths.size()) + " paths for " +
                                               std::to_string(predictions.size()) +
                                               " predictions");
  EvalReport r;
  r.n = predictions.size();
  r.plcc = plcc(predictions, actuals);
  r.srcc = srcc(predictions, actuals);
  r.tolerance_accuracy = tolerance_accuracy(predictions, actuals, tau);
  r.mse = mse(predictions, actuals);
  for (std::size_t i = 0; i < r.n; ++i) r.per_image.push_back({paths[i], actuals[i], predictions[i]});
  return r;
}

std::string EvalReport::to_json() const {
  std::string s = "{\n";
  s += "  \"plcc\": " + json_number(plcc) + ",\n";
  s += "  \"srcc\": " + json_number(srcc) + ",\n";
  s += "  \"tolerance_accuracy\": " + json_number(tolerance_accuracy) + ",\n";
  s += "  \"mse\": " + json_number(mse) + ",\n";
  s += "  \"n\": " + std::to_string(n) + ",\n";
  s += "  \"per_image\": [";
  for (std::size_t i = 0; i < per_image.size(); ++i) {
    const auto& p = per_image[i];
    s += i ? ",\n    " : "\n    ";
    s += "{\"path\": " + json_string(p.path) + ", \"actual_mos\": " + json_number(p.actual) +
         ", \"predicted_mos\": " + json_number(p.predicted) + "}";
  }
  s += per_image.empty() ? "]\n}\n" : "\n  ]\n}\n";
  return s;
}

std::string EvalReport::summary_csv() const {
  return "plcc,srcc,tolerance_accuracy,mse,n\n" + format_double(plcc) + "," + format_double(srcc) +
         "," + format_double(tolerance_accuracy) + "," + format_double(mse) + "," +
         std::to_string(n) + "\n";
}

std::string EvalReport::per_image_csv() const {
  std::string s = "path,actual_mos,predicted_mos\n";
  for (const auto& p : per_image)
    s += csv_field(p.path) + "," + format_double(p.actual) + "," + format_double(p.predicted) + "\n";
  return s;
}

}  // namespace ciq::metrics
