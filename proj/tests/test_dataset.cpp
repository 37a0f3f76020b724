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
#include <numeric>
#include <set>

#include "contrastiq/dataset.hpp"
#include "contrastiq/textio.hpp"
#include "support.hpp"

using namespace ciq;
using namespace ciq::dataset;
using ciq::test::error_code_of;

namespace {

Manifest numbered(int n) {
  Manifest m;
  for (int i = 0; i < n; ++i) m.records.push_back({"img" + std::to_string(i) + ".png", 1.0 + i % 5});
  return m;
}

std::string error_detail(const std::string& csv) {
  try {
    parse_manifest(csv);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

std::uint64_t fnv_oracle(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

TEST_SUITE("manifest") {
  TEST_CASE("parses two and three column files") {
    const auto m = parse_manifest("path,mos\na.png,3.5\nb.png,1\n");
    REQUIRE(m.size() == 2);
    CHECK(m.records[0] == MosRecord{"a.png", 3.5, Split::Unassigned});
    const auto s = parse_manifest("path,mos,split\r\na.png,2,train\r\nb.png,4,val\r\n");
    CHECK(s.records[1].split == Split::Val);
    CHECK(s.indices(Split::Train) == std::vector<std::size_t>{0});
  }

  TEST_CASE("unparsable MOS names the file row") {
    const std::string csv = "path,mos\na.png,abc\n";
    CHECK(error_code_of([&] { parse_manifest(csv); }) == ErrorCode::UnparsableMos);
    CHECK(error_detail(csv).find("row 2") != std::string::npos);
  }

  TEST_CASE("header, row and duplicate errors") {
    CHECK(error_code_of([] { parse_manifest(""); }) == ErrorCode::BadHeader);
    CHECK(error_code_of([] { parse_manifest("file,score\na,1\n"); }) == ErrorCode::BadHeader);
    CHECK(error_code_of([] { parse_manifest("path,mos\na.png\n"); }) == ErrorCode::MalformedRow);
    CHECK(error_code_of([] { parse_manifest("path,mos,split\na.png,1,test\n"); }) ==
          ErrorCode::MalformedRow);
    CHECK(error_code_of([] { parse_manifest("path,mos\na.png,1\na.png,2\n"); }) ==
          ErrorCode::DuplicatePath);
    CHECK(error_code_of([] { parse_manifest("path,mos\na.png,nan\n"); }) ==
          ErrorCode::UnparsableMos);
  }

  TEST_CASE("csv round trip and relative resolution") {
    test::TempDir dir("manifest");
    auto m = numbered(4);
    m.records[1].mos = 0.1;
    m.records[2].split = Split::Val;
    save_manifest(m, dir / "m.csv");
    const auto back = load_manifest(dir / "m.csv");
    CHECK(back.records == m.records);
    CHECK(back.resolve(back.records[0]) == dir.path() / "img0.png");
    CHECK(manifest_to_csv(back) == read_file_text(dir / "m.csv"));
    CHECK(error_code_of([&] { load_manifest(dir / "nope.csv"); }) == ErrorCode::MissingFile);
  }

  TEST_CASE("hash is FNV-1a over paths") {
    CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
    auto m = numbered(3);
    CHECK(manifest_hash(m) == hex64(fnv_oracle("img0.png\nimg1.png\nimg2.png\n")));
    auto rescored = m;
    rescored.records[0].mos = 4.9;
    rescored.records[1].split = Split::Train;
    CHECK(manifest_hash(rescored) == manifest_hash(m));
  }
}

TEST_SUITE("split") {
  TEST_CASE("sizes follow round(N * fraction)") {
    CHECK(split(numbered(10), 0.8, 1).indices(Split::Train).size() == 8);
    CHECK(split(numbered(10), 0.8, 1).indices(Split::Val).size() == 2);
    CHECK(split(numbered(5), 0.8, 1).indices(Split::Train).size() == 4);
    CHECK(split(numbered(5), 0.8, 1).indices(Split::Val).size() == 1);
  }

  TEST_CASE("seeded, order preserving, partition") {
    const auto m = numbered(40);
    const auto a = split(m, 0.75, 9), b = split(m, 0.75, 9), c = split(m, 0.75, 10);
    CHECK(a.records == b.records);
    CHECK_FALSE(a.records == c.records);
    for (std::size_t i = 0; i < m.size(); ++i) {
      CHECK(a.records[i].image_path == m.records[i].image_path);
      CHECK(a.records[i].split != Split::Unassigned);
    }
  }

  TEST_CASE("bad input") {
    CHECK(error_code_of([] { split(Manifest{}, 0.8, 0); }) == ErrorCode::EmptyManifest);
    CHECK(error_code_of([] { split(numbered(3), 1.0, 0); }) == ErrorCode::InvalidArgument);
  }
}

TEST_SUITE("normalizer") {
  TEST_CASE("population statistics") {
    const std::vector<double> s = {2, 3, 4};
    const auto z = fit_normalizer(s);
    CHECK(z.mu == 3.0);
    CHECK(z.sigma == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
    const auto w = fit_normalizer(std::vector<double>{0, 2});
    CHECK(w.mu == 1.0);
    CHECK(w.sigma == 1.0);
    CHECK(w.normalize(2.0) == 1.0);
  }

  TEST_CASE("denormalize clips to the MOS range") {
    const auto z = fit_normalizer(std::vector<double>{2, 3, 4});
    CHECK(z.denormalize_clip(10.0) == 5.0);
    CHECK(z.denormalize_clip(-10.0) == 1.0);
    CHECK(z.denormalize_clip(0.0) == 3.0);
  }

  TEST_CASE("round trip is the identity on [1, 5]") {
    const auto z = fit_normalizer(std::vector<double>{1.2, 4.4, 3.1, 2.0});
    for (int i = 0; i <= 400; ++i) {
      const double mos = 1.0 + i * 0.01;
      CHECK(std::abs(z.denormalize_clip(z.normalize(mos)) - mos) <= 1e-9);
    }
  }

  TEST_CASE("normalized train scores have mean 0 and std 1") {
    std::vector<double> s;
    for (int i = 0; i < 97; ++i) s.push_back(1.0 + std::fmod(i * 0.731, 4.0));
    const auto z = fit_normalizer(s);
    double sum = 0, sq = 0;
    for (double v : s) sum += z.normalize(v);
    const double mean = sum / s.size();
    for (double v : s) sq += (z.normalize(v) - mean) * (z.normalize(v) - mean);
    CHECK(std::abs(mean) <= 1e-9);
    CHECK(std::abs(std::sqrt(sq / s.size()) - 1.0) <= 1e-9);
  }

  TEST_CASE("degenerate inputs") {
    CHECK(error_code_of([] { fit_normalizer(std::vector<double>{3.0}); }) ==
          ErrorCode::TooFewRecords);
    CHECK(error_code_of([] { fit_normalizer(std::vector<double>{3.0, 3.0}); }) ==
          ErrorCode::DegenerateScores);
  }

  TEST_CASE("json round trip") {
    const auto z = fit_normalizer(std::vector<double>{1.1, 2.7, 4.9});
    CHECK(ZScoreNormalizer::from_json(z.to_json()) == z);
    CHECK(error_code_of([] { ZScoreNormalizer::from_json("{\"mu\":1,\"sigma\":0}"); }) ==
          ErrorCode::InvalidArgument);
  }
}
