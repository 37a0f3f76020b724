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

#include "contrastiq/error.hpp"

namespace ciq {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptData: return "CorruptData";
    case ErrorCode::ZeroStd: return "ZeroStd";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidGamma: return "InvalidGamma";
    case ErrorCode::InvalidScale: return "InvalidScale";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::UnparsableMos: return "UnparsableMos";
    case ErrorCode::DuplicatePath: return "DuplicatePath";
    case ErrorCode::EmptyManifest: return "EmptyManifest";
    case ErrorCode::DegenerateScores: return "DegenerateScores";
    case ErrorCode::TooFewRecords: return "TooFewRecords";
    case ErrorCode::ConstraintViolation: return "ConstraintViolation";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingParameter: return "MissingParameter";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::StaleTrace: return "StaleTrace";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::NoAnchors: return "NoAnchors";
    case ErrorCode::DegenerateVector: return "DegenerateVector";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
  }
  return "Unknown";
}

bool is_environment_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::CorruptData:
    case ErrorCode::IoFailure:
    case ErrorCode::MissingFile:
    case ErrorCode::BadMagic:
    case ErrorCode::ChecksumMismatch:
    case ErrorCode::TruncatedFile:
      return true;
    default:
      return false;
  }
}

}  // namespace ciq
