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

#include <optional>

#include "contrastiq/error.hpp"
#include "contrastiq/features.hpp"
#include "contrastiq/textio.hpp"
#include "parallel.hpp"

namespace ciq::features {
namespace {

// Runs `fn` per index and rethrows a single error naming every failed path.
template <typename Fn>
void for_each_record(const dataset::Manifest& m, const std::vector<std::size_t>& indices,
                     unsigned threads, Fn&& fn) {
  std::vector<std::optional<Error>> errors(indices.size());
  detail::parallel_for(indices.size(), threads, [&](std::size_t k) {
    try {
      fn(indices[k]);
    } catch (const Error& e) {
      errors[k].emplace(e);
    } catch (const std::exception& e) {
      errors[k].emplace(ErrorCode::IoFailure, e.what());
    }
  });
  std::optional<ErrorCode> first;
  std::string report;
  std::size_t failed = 0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (!errors[k]) continue;
    if (!first) first = errors[k]->code();
    ++failed;
    report += "\n  " + m.records[indices[k]].image_path + ": " + errors[k]->what();
  }
  if (first)
    throw Error(*first, std::to_string(failed) + " image(s) failed:" + report);
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

}  // namespace

Extractor Extractor::handcrafted(image::AugmentPolicy policy) {
  policy.validate();
  Extractor e;
  e.kind_ = ExtractorKind::Handcrafted;
  e.policy_ = policy;
  return e;
}

Extractor Extractor::cnn(BackboneConfig cfg, std::shared_ptr<const WeightArchive> weights,
                         image::AugmentPolicy policy) {
  policy.validate();
  if (policy.target_size != cfg.input_size)
    throw Error(ErrorCode::ShapeMismatch,
                "augment target size " + std::to_string(policy.target_size) +
                    " differs from backbone input size " + std::to_string(cfg.input_size));
  Extractor e;
  e.kind_ = ExtractorKind::Cnn;
  e.policy_ = policy;
  e.backbone_ = std::make_shared<Backbone>(std::move(cfg), std::move(weights));
  return e;
}

std::size_t Extractor::dim() const noexcept {
  return kind_ == ExtractorKind::Cnn ? backbone_->feature_dim() : kHandcraftedDim;
}

std::string Extractor::tag() const {
  return kind_ == ExtractorKind::Cnn ? "cnn-" + backbone_->config().name : "handcrafted";
}

FeatureVector Extractor::extract(const image::RasterImage& img) const {
  if (kind_ == ExtractorKind::Handcrafted)
    return handcrafted_features(
        image::resize_bilinear(img, policy_.target_size, policy_.target_size));
  return backbone_->forward(image::eval_transform(img, policy_));
}

FeatureVector Extractor::extract_augmented(const image::RasterImage& img, SeededRng rng) const {
  if (kind_ == ExtractorKind::Handcrafted)
    return handcrafted_features(image::augment_raster(img, rng, policy_));
  return backbone_->forward(image::augment(img, rng, policy_));
}

WeightArchive FeatureCache::to_archive() const {
  WeightArchive a;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].dim() != dim)
      throw Error(ErrorCode::DimMismatch, "cache row " + std::to_string(i) + " has dim " +
                                              std::to_string(rows[i].dim()));
    a.add(std::to_string(i), {static_cast<std::uint32_t>(dim)}, rows[i].values);
  }
  for (const auto& [k, v] : extra) a.metadata()[k] = v;
  std::string joined;
  for (const auto& p : paths) {
    joined += p;
    joined += '\n';
  }
  a.metadata()["kind"] = "feature-cache";
  a.metadata()["extractor"] = extractor_tag;
  a.metadata()["dim"] = std::to_string(dim);
  a.metadata()["manifest_hash"] = manifest_hash;
  a.metadata()["paths"] = joined;
  return a;
}

FeatureCache FeatureCache::from_archive(const WeightArchive& a) {
  if (a.meta("kind") != "feature-cache")
    throw Error(ErrorCode::InvalidArgument, "archive is not a feature cache (kind metadata)");
  FeatureCache c;
  c.extractor_tag = a.meta("extractor").value_or("");
  c.manifest_hash = a.meta("manifest_hash").value_or("");
  const auto dim = parse_int(a.meta("dim").value_or(""));
  if (!dim || *dim < 1) throw Error(ErrorCode::InvalidArgument, "feature cache: bad dim metadata");
  c.dim = static_cast<std::size_t>(*dim);
  const std::string joined = a.meta("paths").value_or("");
  for (const auto line : split_lines(joined)) c.paths.emplace_back(line);
  if (c.paths.size() != a.size())
    throw Error(ErrorCode::DimMismatch, "feature cache: " + std::to_string(a.size()) +
                                            " rows but " + std::to_string(c.paths.size()) +
                                            " paths");
  for (const auto& [k, v] : a.metadata())
    if (k != "kind" && k != "extractor" && k != "dim" && k != "manifest_hash" && k != "paths")
      c.extra[k] = v;
  const std::vector<std::uint32_t> shape = {static_cast<std::uint32_t>(c.dim)};
  for (std::size_t i = 0; i < a.size(); ++i)
    c.rows.push_back(FeatureVector{a.require(std::to_string(i), shape).values});
  return c;
}

void FeatureCache::check_matches(const dataset::Manifest& m) const {
  if (manifest_hash != dataset::manifest_hash(m) || paths.size() != m.size())
    throw Error(ErrorCode::DimMismatch,
                "feature cache (" + std::to_string(paths.size()) + " rows, manifest hash " +
                    manifest_hash + ") was not extracted from this manifest (" +
                    std::to_string(m.size()) + " rows, hash " + dataset::manifest_hash(m) + ")");
  for (std::size_t i = 0; i < paths.size(); ++i)
    if (paths[i] != m.records[i].image_path)
      throw Error(ErrorCode::DimMismatch, "feature cache row " + std::to_string(i) + " is " +
                                              paths[i] + ", manifest has " +
                                              m.records[i].image_path);
}

FeatureCache load_feature_cache(const std::filesystem::path& path) {
  return FeatureCache::from_archive(load_weight_archive(path));
}

void save_feature_cache(const FeatureCache& c, const std::filesystem::path& path) {
  save_weight_archive(c.to_archive(), path);
}

FeatureCache extract_features(const dataset::Manifest& m, const Extractor& ex, unsigned threads) {
  FeatureCache c;
  c.extractor_tag = ex.tag();
  c.dim = ex.dim();
  c.manifest_hash = dataset::manifest_hash(m);
  c.rows.resize(m.size());
  for (const auto& r : m.records) c.paths.push_back(r.image_path);
  for_each_record(m, all_indices(m.size()), threads, [&](std::size_t i) {
    c.rows[i] = ex.extract(image::read_image(m.resolve(m.records[i])));
  });
  return c;
}

std::vector<image::RasterImage> load_images(const dataset::Manifest& m, unsigned threads) {
  std::vector<image::RasterImage> images(m.size());
  for_each_record(m, all_indices(m.size()), threads, [&](std::size_t i) {
    images[i] = image::read_image(m.resolve(m.records[i]));
  });
  return images;
}

std::vector<FeatureVector> extract_augmented(const std::vector<image::RasterImage>& images,
                                             const Extractor& ex, std::uint64_t seed,
                                             std::uint64_t epoch,
                                             const std::vector<std::size_t>& indices,
                                             unsigned threads) {
  std::vector<FeatureVector> rows(images.size());
  detail::parallel_for(indices.size(), threads, [&](std::size_t k) {
    const std::size_t i = indices[k];
    rows[i] = ex.extract_augmented(images[i], SeededRng::stream(seed, i, epoch));
  });
  return rows;
}

}  // namespace ciq::features
