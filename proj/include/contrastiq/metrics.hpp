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

#include <span>
#include <string>
#include <vector>

namespace ciq::metrics {

/// Pearson correlation, 64-bit accumulation. Throws LengthMismatch, or
/// DegenerateVector when n < 2 or either input is constant.
double plcc(std::span<const double> x, std::span<const double> y);

/// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x);

/// Spearman correlation: Pearson correlation of average ranks.
double srcc(std::span<const double> x, std::span<const double> y);

/// 1 - 6 sum(d^2) / (n (n^2 - 1)). Only meaningful without ties.
double srcc_closed_form(std::span<const double> x, std::span<const double> y);

/// Fraction of |pred - actual| <= tau. The boundary counts as within.
double tolerance_accuracy(std::span<const double> pred, std::span<const double> actual,
                          double tau = 0.5);

double mse(std::span<const double> pred, std::span<const double> actual);

struct PerImage {
  std::string path;
  double actual = 0.0;
  double predicted = 0.0;
};

struct EvalReport {
  double plcc = 0.0;
  double srcc = 0.0;
  double tolerance_accuracy = 0.0;
  double mse = 0.0;
  std::size_t n = 0;
  std::vector<PerImage> per_image;

  std::string to_json() const;
  /// Header `plcc,srcc,tolerance_accuracy,mse,n` plus one row.
  std::string summary_csv() const;
  /// Header `path,actual_mos,predicted_mos`.
  std::string per_image_csv() const;
};

EvalReport evaluate(std::span<const double> predictions, std::span<const double> actuals,
                    std::span<const std::string> paths, double tau = 0.5);

}  // namespace ciq::metrics
