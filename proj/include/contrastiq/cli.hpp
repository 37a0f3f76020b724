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
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "contrastiq/regressor.hpp"

namespace ciq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitEnvironment = 2;
inline constexpr int kExitValidation = 3;

/**
 * Run configuration read from a flat `key = value` file. Blank lines and
 * lines starting with '#' are ignored; unknown keys are errors. Relative
 * paths resolve against the config file's directory.
 *
 *   learning_rate weight_decay epochs batch_size dropout seed
 *   scheduler_factor scheduler_patience min_lr beta1 beta2 eps
 *   manifest cache output_dir split_fraction
 *   extractor (handcrafted|cnn) backbone (nano|b0) weights random_weights
 *   augment (true|false) pairs_per_image threads
 */
struct RunConfig {
  regressor::TrainConfig train;
  std::filesystem::path manifest;
  std::filesystem::path cache;
  std::filesystem::path output_dir = "run";
  double split_fraction = 0.8;
  std::string extractor = "handcrafted";
  std::string backbone = "nano";
  std::filesystem::path weights;
  std::optional<std::uint64_t> random_weights;
  bool augment = false;
  int pairs_per_image = 4;
  unsigned threads = 0;

  /// Throws InvalidArgument naming the key.
  static RunConfig parse(std::string_view text, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
  void validate() const;
};

/// Runs one command line (without the program name). Returns the exit code:
/// 0 success, 2 IO/environment failure, 3 invalid input.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ciq::cli
