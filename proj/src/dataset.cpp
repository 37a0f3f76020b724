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

#include "contrastiq/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <unordered_set>

#include "contrastiq/error.hpp"
#include "contrastiq/rng.hpp"
#include "contrastiq/textio.hpp"

namespace ciq::dataset {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Unassigned: break;
  }
  return "unassigned";
}

std::filesystem::path Manifest::resolve(const MosRecord& r) const {
  const std::filesystem::path p(r.image_path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

std::vector<std::size_t> Manifest::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].split == split) out.push_back(i);
  return out;
}

Manifest parse_manifest(std::string_view csv, std::string source_tag) {
  if (csv.substr(0, 3) == "\xEF\xBB\xBF") csv.remove_prefix(3);
  const auto lines = split_lines(csv);
  if (lines.empty()) throw Error(ErrorCode::BadHeader, "empty manifest file");

  const auto header = ciq::split(trim(lines[0]), ',');
  const bool has_split = header.size() == 3;
  if ((header.size() != 2 && header.size() != 3) || trim(header[0]) != "path" ||
      trim(header[1]) != "mos" || (has_split && trim(header[2]) != "split")) {
    throw Error(ErrorCode::BadHeader, "expected header 'path,mos[,split]', got '" +
                                          std::string(lines[0]) + "'");
  }

  Manifest m;
  m.source_tag = std::move(source_tag);
  std::unordered_set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string row = std::to_string(i + 1);
    if (trim(lines[i]).empty()) continue;
    const auto fields = ciq::split(lines[i], ',');
    if (fields.size() != header.size())
      throw Error(ErrorCode::MalformedRow, "row " + row + ": expected " +
                                               std::to_string(header.size()) + " fields");
    MosRecord r;
    r.image_path = std::string(trim(fields[0]));
    if (r.image_path.empty()) throw Error(ErrorCode::MalformedRow, "row " + row + ": empty path");
    const auto mos = parse_double(fields[1]);
    if (!mos || !std::isfinite(*mos))
      throw Error(ErrorCode::UnparsableMos,
                  "row " + row + ": '" + std::string(trim(fields[1])) + "'");
    r.mos = *mos;
    if (has_split) {
      const auto s = trim(fields[2]);
      if (s == "train") {
        r.split = Split::Train;
      } else if (s == "val") {
        r.split = Split::Val;
      } else if (s.empty() || s == "unassigned") {
        r.split = Split::Unassigned;
      } else {
        throw Error(ErrorCode::MalformedRow, "row " + row + ": unknown split '" +
                                                 std::string(s) + "'");
      }
    }
    if (!seen.insert(r.image_path).second)
      throw Error(ErrorCode::DuplicatePath, "row " + row + ": " + r.image_path);
    m.records.push_back(std::move(r));
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  Manifest m = parse_manifest(read_file_text(path), path.stem().string());
  m.base_dir = path.parent_path();
  return m;
}

std::string manifest_to_csv(const Manifest& m) {
  std::string out = "path,mos,split\n";
  for (const auto& r : m.records) {
    out += r.image_path;
    out += ',';
    out += format_double(r.mos);
    out += ',';
    out += to_string(r.split);
    out += '\n';
  }
  return out;
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  write_file_text(path, manifest_to_csv(m));
}

std::string manifest_hash(const Manifest& m) {
  std::string joined;
  for (const auto& r : m.records) {
    joined += r.image_path;
    joined += '\n';
  }
  return hex64(fnv1a64(joined));
}

Manifest split(const Manifest& m, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorCode::InvalidArgument, "train_fraction must be in (0,1)");
  if (m.records.empty()) throw Error(ErrorCode::EmptyManifest, "cannot split an empty manifest");

  const std::size_t n = m.records.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  SeededRng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = rng.below(i + 1);
    std::swap(order[i], order[j]);
  }
  const auto n_train = static_cast<std::size_t>(std::floor(n * train_fraction + 0.5));

  Manifest out = m;
  for (std::size_t k = 0; k < n; ++k)
    out.records[order[k]].split = k < n_train ? Split::Train : Split::Val;
  return out;
}

double ZScoreNormalizer::denormalize_clip(double z) const {
  return std::clamp(z * sigma + mu, clip_lo, clip_hi);
}

std::string ZScoreNormalizer::to_json() const {
  // Written by hand to keep shortest round-trip formatting and key order.
  return "{\"mu\":" + format_double(mu) + ",\"sigma\":" + format_double(sigma) +
         ",\"clip_lo\":" + format_double(clip_lo) + ",\"clip_hi\":" + format_double(clip_hi) +
         "}";
}

ZScoreNormalizer ZScoreNormalizer::from_json(std::string_view json) {
  ZScoreNormalizer n;
  try {
    const auto j = nlohmann::json::parse(json);
    n.mu = j.at("mu").get<double>();
    n.sigma = j.at("sigma").get<double>();
    n.clip_lo = j.value("clip_lo", 1.0);
    n.clip_hi = j.value("clip_hi", 5.0);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("normalizer json: ") + e.what());
  }
  if (!(n.sigma > 0.0) || !(n.clip_lo < n.clip_hi) || !std::isfinite(n.mu))
    throw Error(ErrorCode::InvalidArgument, "normalizer json: need sigma > 0, clip_lo < clip_hi");
  return n;
}

ZScoreNormalizer fit_normalizer(std::span<const double> scores) {
  if (scores.size() < 2)
    throw Error(ErrorCode::TooFewRecords, "need at least 2 scores, got " +
                                              std::to_string(scores.size()));
  const double n = static_cast<double>(scores.size());
  double sum = 0.0;
  for (const double s : scores) sum += s;
  const double mu = sum / n;
  double ss = 0.0;
  for (const double s : scores) ss += (s - mu) * (s - mu);
  const double sigma = std::sqrt(ss / n);
  if (!(sigma > 0.0)) throw Error(ErrorCode::DegenerateScores, "all scores are equal");
  ZScoreNormalizer z;
  z.mu = mu;
  z.sigma = sigma;
  return z;
}

ZScoreNormalizer fit_normalizer(std::span<const MosRecord> records) {
  std::vector<double> scores;
  scores.reserve(records.size());
  for (const auto& r : records) scores.push_back(r.mos);
  return fit_normalizer(scores);
}

}  // namespace ciq::dataset
