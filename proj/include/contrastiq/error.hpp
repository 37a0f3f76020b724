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

#include <stdexcept>
#include <string>
#include <string_view>

namespace ciq {

enum class ErrorCode {
  // imagecore
  UnsupportedFormat,
  CorruptData,
  ZeroStd,
  InvalidArgument,
  // synthdata
  InvalidGamma,
  InvalidScale,
  IoFailure,
  // dataset
  MissingFile,
  BadHeader,
  MalformedRow,
  UnparsableMos,
  DuplicatePath,
  EmptyManifest,
  DegenerateScores,
  TooFewRecords,
  // features
  ConstraintViolation,
  ShapeMismatch,
  MissingParameter,
  BadMagic,
  ChecksumMismatch,
  TruncatedFile,
  // regressor
  DimMismatch,
  StaleTrace,
  EmptyBatch,
  EmptySplit,
  NoAnchors,
  // metrics
  DegenerateVector,
  LengthMismatch,
};

std::string_view to_string(ErrorCode code);

/// Whether an error comes from the environment (files, decoding) rather than
/// from invalid arguments or inconsistent inputs. The CLI maps the former to
/// exit code 2 and the latter to exit code 3.
bool is_environment_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace ciq
