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
#include <span>
#include <string>
#include <vector>

namespace ciq::dataset {

enum class Split { Unassigned, Train, Val };

std::string_view to_string(Split s);

struct MosRecord {
  std::string image_path;
  double mos = 0.0;
  Split split = Split::Unassigned;

  friend bool operator==(const MosRecord&, const MosRecord&) = default;
};

/// Ordered catalog of images and their mean opinion scores. Relative image
/// paths are resolved against base_dir (the manifest file's directory when
/// loaded from disk).
struct Manifest {
  std::vector<MosRecord> records;
  std::string source_tag;
  std::filesystem::path base_dir;

  std::size_t size() const noexcept { return records.size(); }
  std::filesystem::path resolve(const MosRecord& r) const;

  /// Indices of the records in `split`, in manifest order.
  std::vector<std::size_t> indices(Split split) const;
};

/// CSV with header `path,mos[,split]`. Row numbers in errors are file line
/// numbers (the header is line 1).
Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(std::string_view csv, std::string source_tag = {});

/// Always writes the three-column header; LF endings; shortest round-trip
/// decimal MOS.
std::string manifest_to_csv(const Manifest& m);
void save_manifest(const Manifest& m, const std::filesystem::path& path);

/// Hash binding a feature cache to a manifest: FNV-1a 64 over every path
/// followed by '\n', as 16 lowercase hex digits. Independent of MOS and
/// split so re-splitting does not invalidate a cache.
std::string manifest_hash(const Manifest& m);

/// Seeded Fisher-Yates shuffle of record indices, then the first
/// round(N * train_fraction) shuffled records become train and the rest val.
/// Record order in the returned manifest is unchanged.
Manifest split(const Manifest& m, double train_fraction, std::uint64_t seed);

/// Mean/standard-deviation state for MOS z-scoring, plus the clip range
/// applied on the way back.
struct ZScoreNormalizer {
  double mu = 0.0;
  double sigma = 1.0;
  double clip_lo = 1.0;
  double clip_hi = 5.0;

  double normalize(double mos) const { return (mos - mu) / sigma; }
  double denormalize_clip(double z) const;

  std::string to_json() const;
  static ZScoreNormalizer from_json(std::string_view json);

  friend bool operator==(const ZScoreNormalizer&, const ZScoreNormalizer&) = default;
};

/// mu = mean, sigma = population standard deviation (divisor N).
ZScoreNormalizer fit_normalizer(std::span<const double> scores);
ZScoreNormalizer fit_normalizer(std::span<const MosRecord> records);

}  // namespace ciq::dataset
