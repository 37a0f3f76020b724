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

#include <cmath>
#include <limits>

#include "contrastiq/error.hpp"
#include "contrastiq/features.hpp"

namespace ciq::features {

void save_parity_fixture(const ParityFixture& f, const std::filesystem::path& input_path,
                         const std::filesystem::path& reference_path) {
  const auto& t = f.input;
  WeightArchive in;
  in.add("input",
         {static_cast<std::uint32_t>(t.channels()), static_cast<std::uint32_t>(t.height()),
          static_cast<std::uint32_t>(t.width())},
         {t.data().begin(), t.data().end()});
  in.metadata()["config"] = f.config;
  WeightArchive ref;
  ref.add("features", {static_cast<std::uint32_t>(f.reference.dim())}, f.reference.values);
  ref.metadata()["config"] = f.config;
  save_weight_archive(in, input_path);
  save_weight_archive(ref, reference_path);
}

ParityFixture load_parity_fixture(const std::filesystem::path& input_path,
                                  const std::filesystem::path& reference_path) {
  const WeightArchive in = load_weight_archive(input_path);
  const WeightArchive ref = load_weight_archive(reference_path);
  const ArchiveEntry* x = in.find("input");
  if (!x) throw Error(ErrorCode::MissingParameter, input_path.string() + ": no 'input' entry");
  if (x->shape.size() != 3)
    throw Error(ErrorCode::ShapeMismatch, input_path.string() + ": input must be rank 3");
  const ArchiveEntry* y = ref.find("features");
  if (!y)
    throw Error(ErrorCode::MissingParameter, reference_path.string() + ": no 'features' entry");
  if (y->shape.size() != 1)
    throw Error(ErrorCode::ShapeMismatch, reference_path.string() + ": features must be rank 1");
  ParityFixture f;
  f.input = image::Tensor3(static_cast<int>(x->shape[0]), static_cast<int>(x->shape[1]),
                           static_cast<int>(x->shape[2]), x->values);
  f.reference.values = y->values;
  f.config = in.meta("config").value_or("");
  return f;
}

ParityResult check_parity(const ParityFixture& f, const BackboneConfig& cfg,
                          const WeightArchive& weights, double tolerance) {
  const FeatureVector got = backbone_forward(f.input, cfg, weights);
  if (got.dim() != f.reference.dim())
    throw Error(ErrorCode::ShapeMismatch,
                "reference has " + std::to_string(f.reference.dim()) + " features, backbone " +
                    std::to_string(got.dim()));
  ParityResult r;
  for (std::size_t i = 0; i < got.dim(); ++i) {
    const double d = std::abs(static_cast<double>(got.values[i]) - f.reference.values[i]);
    // NaN compares false, so route it through the failure branch explicitly.
    if (!(d <= r.max_abs_diff)) {
      r.max_abs_diff = std::isnan(d) ? std::numeric_limits<double>::infinity() : d;
      r.worst_index = i;
    }
  }
  r.passed = r.max_abs_diff < tolerance;
  return r;
}

}  // namespace ciq::features
