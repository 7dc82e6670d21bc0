// Copyright 2026 The xsynth Authors
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

#ifndef XSYNTH_ERROR_HPP
#define XSYNTH_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace xsynth {

enum class ErrorCode {
  FileNotFound,
  UnsupportedFormat,
  CorruptImage,
  CorruptFile,
  IoError,
  FormatVersionMismatch,
  DimensionMismatch,
  DivisionByZero,
  InvalidParameter,
  OutOfBounds,
  OverlappingRegions,
  ImageTooSmall,
  EmptyTrainingSet,
  MixedRegionTags,
  DivergedLoss,
  DivergedObjective,
  MissingEmbedding,
  ZeroFeatureVector,
  ZeroVector,
  EmptyScores,
  NoGenuinePairs,
  CountMismatch,
  ConfigError,
  DataError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptImage: return "CorruptImage";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::OverlappingRegions: return "OverlappingRegions";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::MixedRegionTags: return "MixedRegionTags";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::DivergedObjective: return "DivergedObjective";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::ZeroFeatureVector: return "ZeroFeatureVector";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::NoGenuinePairs: return "NoGenuinePairs";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::DataError: return "DataError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch on the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace xsynth

#endif  // XSYNTH_ERROR_HPP
