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
#include <random>

namespace ciq {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/**
 * Seeded generator with a platform-independent draw sequence.
 *
 * The engine is std::mt19937_64, whose output sequence is fixed by the C++
 * standard. The std:: distributions are not (their algorithms are left to the
 * library vendor), so every variate here is derived from raw engine output:
 * doubles take the top 53 bits, bounded integers use rejection sampling.
 *
 * Streams: stream(seed, index, epoch) seeds the engine with
 * mix64(mix64(mix64(seed) ^ index) ^ epoch), so per-image draws do not depend
 * on the order in which images are processed.
 */
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  static SeededRng stream(std::uint64_t seed, std::uint64_t index,
                          std::uint64_t epoch = 0);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform();

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);

  /// Uniform integer on [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace ciq
