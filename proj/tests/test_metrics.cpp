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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "contrastiq/metrics.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ciq;
using namespace ciq::metrics;
using ciq::test::error_code_of;
using V = std::vector<double>;

TEST_SUITE("plcc") {
  TEST_CASE("hand-checked values") {
    CHECK(plcc(V{1, 2, 3}, V{1, 2, 4}) == doctest::Approx(9.0 / std::sqrt(84.0)).epsilon(1e-14));
    CHECK(std::abs(plcc(V{1, 2, 3}, V{1, 2, 4}) - 0.98198050606) < 1e-10);
    CHECK(plcc(V{1, 2, 3, 4}, V{2, 4, 6, 8}) == 1.0);
    CHECK(plcc(V{1, 2, 3, 4}, V{-1, -2, -3, -4}) == -1.0);
  }

  TEST_CASE("invariant to positive affine maps") {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> n;
    V x(50), y(50);
    for (std::size_t i = 0; i < 50; ++i) {
      x[i] = n(gen);
      y[i] = x[i] + n(gen);
    }
    V y2 = y;
    for (double& v : y2) v = 3.0 * v + 7.0;
    CHECK(plcc(x, y2) == doctest::Approx(plcc(x, y)).epsilon(1e-12));
    CHECK(plcc(x, y) == doctest::Approx(plcc(y, x)).epsilon(1e-15));
  }

  TEST_CASE("errors") {
    CHECK(error_code_of([] { plcc(V{1, 2}, V{1, 2, 3}); }) == ErrorCode::LengthMismatch);
    CHECK(error_code_of([] { plcc(V{1}, V{1}); }) == ErrorCode::DegenerateVector);
    CHECK(error_code_of([] { plcc(V{2, 2, 2}, V{1, 2, 3}); }) == ErrorCode::DegenerateVector);
  }
}

TEST_SUITE("srcc") {
  TEST_CASE("hand-checked values") {
    CHECK(srcc(V{1, 2, 3}, V{3, 1, 2}) == -0.5);
    CHECK(srcc_closed_form(V{1, 2, 3}, V{3, 1, 2}) == -0.5);
    CHECK(srcc(V{1, 2, 3, 4}, V{10, 20, 25, 100}) == 1.0);
  }

  TEST_CASE("ties match the brute-force rank oracle") {
    const V x = {1, 2, 2, 3}, y = {1, 2, 3, 4};
    CHECK(average_ranks(x) == V{1, 2.5, 2.5, 4});
    CHECK(std::abs(srcc(x, y) - test::naive_spearman(x, y)) < 1e-12);
  }

  TEST_CASE("invariant to monotone transforms") {
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    V x(40), y(40);
    for (std::size_t i = 0; i < 40; ++i) {
      x[i] = u(gen);
      y[i] = u(gen) + x[i];
    }
    V ex = x;
    for (double& v : ex) v = std::exp(v);
    CHECK(srcc(ex, y) == srcc(x, y));
  }

  TEST_CASE("random vectors against the naive oracles") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + gen() % 60;
      V x(n), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = static_cast<double>(gen() % 7);  // plenty of ties
        y[i] = static_cast<double>(gen() % 1000) / 10.0;
      }
      if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) continue;
      if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) continue;
      CHECK(std::abs(plcc(x, y) - test::naive_pearson(x, y)) < 1e-9);
      CHECK(std::abs(srcc(x, y) - test::naive_spearman(x, y)) < 1e-9);
    }
  }

  TEST_CASE("all-tied input is degenerate") {
    CHECK(error_code_of([] { srcc(V{4, 4, 4}, V{1, 2, 3}); }) == ErrorCode::DegenerateVector);
  }
}

TEST_SUITE("tolerance and report") {
  TEST_CASE("tolerance accuracy counts the boundary") {
    CHECK(tolerance_accuracy(V{1, 2, 3}, V{1, 2, 3}) == 1.0);
    CHECK(tolerance_accuracy(V{2.4, 2.6}, V{2.0, 2.0}) == 0.5);
    CHECK(tolerance_accuracy(V{0.4, 0.5, 0.6}, V{0, 0, 0}) == doctest::Approx(2.0 / 3.0));
    CHECK(error_code_of([] { tolerance_accuracy(V{1}, V{1, 2}); }) == ErrorCode::LengthMismatch);
  }

  TEST_CASE("mse") {
    CHECK(mse(V{1, 3}, V{0, 0}) == 5.0);
    CHECK(mse(V{2, 2}, V{2, 2}) == 0.0);
  }

  TEST_CASE("perfect predictions") {
    const V a = {1.5, 2.5, 4.0, 3.25};
    const std::vector<std::string> paths = {"a", "b", "c", "d"};
    const auto r = evaluate(a, a, paths);
    CHECK(r.plcc == 1.0);
    CHECK(r.srcc == 1.0);
    CHECK(r.tolerance_accuracy == 1.0);
    CHECK(r.mse == 0.0);
    CHECK(r.n == 4);
  }

  TEST_CASE("outputs") {
    const std::vector<std::string> paths = {"x.png", "y.png", "z.png"};
    const auto r = evaluate(V{1.0, 2.0, 2.5}, V{1.5, 2.0, 4.0}, paths);
    const auto j = nlohmann::json::parse(r.to_json());
    CHECK(j["n"] == 3);
    CHECK(j["tolerance_accuracy"].get<double>() == doctest::Approx(2.0 / 3.0));
    CHECK(r.summary_csv().rfind("plcc,srcc,tolerance_accuracy,mse,n\n", 0) == 0);
    CHECK(r.per_image_csv() == "path,actual_mos,predicted_mos\nx.png,1.5,1\ny.png,2,2\nz.png,4,2.5\n");
  }
}
