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

// The weight exporter writes archives and caches from outside this code base.
// These tests build those files byte by byte from the documented layout and
// check that the C++ side reads, writes and uses them identically.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <bit>
#include <cstring>
#include <random>
#include <sstream>

#include "contrastiq/cli.hpp"
#include "contrastiq/features.hpp"
#include "contrastiq/regressor.hpp"
#include "contrastiq/textio.hpp"
#include "reference_backbone.hpp"
#include "support.hpp"

using namespace ciq;
using namespace ciq::features;
using ciq::test::error_code_of;

namespace {

std::uint32_t bitwise_crc32(const std::vector<std::uint8_t>& bytes) {
  std::uint32_t c = 0xffffffffu;
  for (std::uint8_t b : bytes) {
    c ^= b;
    for (int k = 0; k < 8; ++k) c = (c >> 1) ^ (0xedb88320u & (0u - (c & 1u)));
  }
  return ~c;
}

// Little-endian writer in the style of struct.pack("<...").
class Packer {
 public:
  template <typename T>
  Packer& le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
      bytes.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
    return *this;
  }
  Packer& f32(float v) { return le(std::bit_cast<std::uint32_t>(v)); }
  Packer& raw(const std::string& s) {
    bytes.insert(bytes.end(), s.begin(), s.end());
    return *this;
  }
  std::vector<std::uint8_t> finish() {
    auto out = bytes;
    const std::uint32_t crc = bitwise_crc32(bytes);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
    return out;
  }
  std::vector<std::uint8_t> bytes;
};

struct Entry {
  std::string name;
  std::vector<std::uint32_t> shape;
  std::vector<float> values;
};

std::vector<std::uint8_t> exporter_archive(const std::vector<Entry>& entries,
                                           const std::map<std::string, std::string>& meta) {
  Packer p;
  p.raw("CQWA").le<std::uint16_t>(1).le<std::uint32_t>(static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    p.le<std::uint16_t>(static_cast<std::uint16_t>(e.name.size())).raw(e.name);
    p.le<std::uint8_t>(static_cast<std::uint8_t>(e.shape.size()));
    for (auto d : e.shape) p.le<std::uint32_t>(d);
    for (float v : e.values) p.f32(v);
  }
  p.le<std::uint32_t>(static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {  // std::map iterates sorted by key
    p.le<std::uint16_t>(static_cast<std::uint16_t>(k.size())).raw(k);
    p.le<std::uint32_t>(static_cast<std::uint32_t>(v.size())).raw(v);
  }
  return p.finish();
}

std::string fnv_hex(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string p_str(const std::filesystem::path& p) { return p.string(); }

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  if (out_text) *out_text = out.str() + err.str();
  return code;
}

}  // namespace

TEST_SUITE("weight archive format") {
  TEST_CASE("crc matches the IEEE reference value") {
    const std::string s = "123456789";
    CHECK(bitwise_crc32({s.begin(), s.end()}) == 0xcbf43926u);
  }

  TEST_CASE("hand-packed archive reads and re-serializes byte-identically") {
    const std::vector<Entry> entries = {
        {"stem.conv.weight", {2, 1, 1, 1}, {0.5f, -1.25f}},
        {"stem.conv.bias", {2}, {0.0f, 3.0f}},
        {"scalar", {}, {7.0f}},
    };
    const std::map<std::string, std::string> meta = {
        {"model_version", "zoo-1.0"}, {"bn_eps", "0.001"}, {"arch", "efficientnet-b0"}};
    const auto bytes = exporter_archive(entries, meta);
    const auto a = WeightArchive::deserialize(bytes);
    REQUIRE(a.size() == 3);
    CHECK(a.entries()[0].name == "stem.conv.weight");
    CHECK(a.entries()[0].values[1] == -1.25f);
    CHECK(a.entries()[2].shape.empty());
    CHECK(a.meta("bn_eps") == "0.001");
    CHECK(a.serialize() == bytes);
  }

  TEST_CASE("version and checksum are enforced") {
    auto bytes = exporter_archive({{"x", {1}, {1.0f}}}, {});
    auto v2 = bytes;
    v2[4] = 2;
    // Re-seal so only the version differs.
    v2.resize(v2.size() - 4);
    const auto crc = bitwise_crc32(v2);
    for (int i = 0; i < 4; ++i) v2.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
    CHECK(error_code_of([&] { WeightArchive::deserialize(v2); }) == ErrorCode::BadMagic);
    bytes[bytes.size() - 1] ^= 0x80;
    CHECK(error_code_of([&] { WeightArchive::deserialize(bytes); }) == ErrorCode::ChecksumMismatch);
  }

  TEST_CASE("exported backbone archive loads with no missing parameters") {
    const auto cfg = test::tiny_config();
    std::vector<Entry> entries;
    std::mt19937 gen(3);
    std::uniform_real_distribution<float> u(-0.2f, 0.2f);
    for (const auto& spec : parameter_specs(cfg)) {
      std::size_t n = 1;
      for (auto d : spec.shape) n *= d;
      std::vector<float> v(n);
      for (float& x : v) x = u(gen);
      entries.push_back({spec.name, spec.shape, v});
    }
    const auto a = std::make_shared<const WeightArchive>(
        WeightArchive::deserialize(exporter_archive(entries, {{"arch", "tiny"}})));
    CHECK_NOTHROW(Backbone(cfg, a));
  }
}

TEST_SUITE("feature cache format") {
  TEST_CASE("exporter cache is consumed by training unchanged") {
    test::TempDir dir("export-cache");
    const std::size_t n = 30, dim = 512;  // resnet18 penultimate width
    std::string csv = "path,mos\n", joined;
    std::vector<Entry> rows;
    std::mt19937 gen(5);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string path = "img" + std::to_string(i) + ".png";
      const double mos = 1.0 + 4.0 * static_cast<double>(i) / (n - 1);
      csv += path + "," + format_double(mos) + "\n";
      joined += path + "\n";
      std::vector<float> f(dim);
      for (float& x : f) x = u(gen);
      f[0] = static_cast<float>(mos);
      rows.push_back({std::to_string(i), {static_cast<std::uint32_t>(dim)}, f});
    }
    write_file_text(dir / "m.csv", csv);
    const std::map<std::string, std::string> meta = {{"kind", "feature-cache"},
                                                     {"extractor", "resnet18"},
                                                     {"dim", "512"},
                                                     {"manifest_hash", fnv_hex(joined)},
                                                     {"paths", joined},
                                                     {"model_version", "zoo-1.0"}};
    write_file_bytes(dir / "c.cqwa", exporter_archive(rows, meta));

    const auto m = dataset::split(dataset::load_manifest(dir / "m.csv"), 0.8, 1);
    const auto cache = load_feature_cache(dir / "c.cqwa");
    CHECK(cache.dim == dim);
    CHECK(cache.extractor_tag == "resnet18");
    CHECK(cache.extra.at("model_version") == "zoo-1.0");
    CHECK(cache.manifest_hash == dataset::manifest_hash(m));
    CHECK_NOTHROW(cache.check_matches(m));

    std::vector<double> train_mos;
    for (auto i : m.indices(dataset::Split::Train)) train_mos.push_back(m.records[i].mos);
    regressor::TrainConfig cfg;
    cfg.epochs = 2;
    const auto r = regressor::train(cache, m, dataset::fit_normalizer(train_mos), cfg);
    CHECK(r.params.in_dim() == dim);
    CHECK(r.params.all_finite());

    const auto out = run({"train", "--manifest", p_str(dir / "m.csv"), "--cache",
                          p_str(dir / "c.cqwa"), "--epochs", "1", "--out", p_str(dir / "run")});
    CHECK(out == 0);
  }
}

TEST_SUITE("parity fixture") {
  struct Fixture {
    test::TempDir dir{"parity"};
    features::BackboneConfig cfg = BackboneConfig::nano();
    WeightArchive weights = random_backbone_weights(cfg, 21);

    // Reference features come from the naive oracle, standing in for the zoo
    // model on the exporter side.
    ParityFixture make() const {
      std::mt19937 gen(8);
      std::uniform_real_distribution<float> u(-2.0f, 2.0f);
      image::Tensor3 t(3, cfg.input_size, cfg.input_size);
      for (float& x : t.data()) x = u(gen);
      ParityFixture f{t, {}, cfg.name};
      for (double v : test::reference_forward(t, cfg, weights)) f.reference.values.push_back(static_cast<float>(v));
      return f;
    }
  };

  TEST_CASE_FIXTURE(Fixture, "backbone matches the reference and reruns are identical") {
    const auto f = make();
    save_parity_fixture(f, dir / "in.cqwa", dir / "ref.cqwa");
    save_parity_fixture(make(), dir / "in2.cqwa", dir / "ref2.cqwa");
    CHECK(read_file_bytes(dir / "in.cqwa") == read_file_bytes(dir / "in2.cqwa"));
    CHECK(read_file_bytes(dir / "ref.cqwa") == read_file_bytes(dir / "ref2.cqwa"));

    const auto back = load_parity_fixture(dir / "in.cqwa", dir / "ref.cqwa");
    CHECK(back.input == f.input);
    CHECK(back.config == "nano");
    const auto r = check_parity(back, cfg, weights);
    CHECK(r.passed);
    CHECK(r.max_abs_diff < 1e-3);

    save_weight_archive(weights, dir / "w.cqwa");
    std::string text;
    CHECK(run({"parity", "--input", p_str(dir / "in.cqwa"), "--reference", p_str(dir / "ref.cqwa"),
               "--weights", p_str(dir / "w.cqwa")},
              &text) == 0);
    CHECK(text.find("max_abs_diff") != std::string::npos);
  }

  TEST_CASE_FIXTURE(Fixture, "perturbed weights fail the parity check") {
    const auto f = make();
    WeightArchive bad;
    for (const auto& e : weights.entries()) {
      auto v = e.values;
      if (e.name == "head.conv.weight")
        for (float& x : v) x *= 1.05f;
      bad.add(e.name, e.shape, v);
    }
    const auto r = check_parity(f, cfg, bad);
    CHECK_FALSE(r.passed);
    CHECK(r.max_abs_diff >= 1e-3);

    save_parity_fixture(f, dir / "in.cqwa", dir / "ref.cqwa");
    save_weight_archive(bad, dir / "bad.cqwa");
    CHECK(run({"parity", "--input", p_str(dir / "in.cqwa"), "--reference", p_str(dir / "ref.cqwa"),
               "--weights", p_str(dir / "bad.cqwa")}) == cli::kExitValidation);
  }

  TEST_CASE_FIXTURE(Fixture, "reference width must match") {
    auto f = make();
    f.reference.values.pop_back();
    CHECK(error_code_of([&] { check_parity(f, cfg, weights); }) == ErrorCode::ShapeMismatch);
  }
}
