// Copyright 2026 The histaug Authors. All Rights Reserved.
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

namespace histaug {

/// Broad failure categories. The CLI maps `Usage` to exit code 2 and
/// everything else to exit code 1.
enum class ErrorKind {
  Usage,
  InputValidation,
  Shape,
  Domain,
  Range,
  Numeric,
  Dataset,
  BatchComposition,
  Divergence,
  DegenerateHistogram,
  DegenerateLabels,
  UndefinedMetric,
  Alignment,
  Parameter,
  ResizePolicy,
  Io,
};

inline const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::InputValidation: return "input-validation";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Range: return "range";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Dataset: return "dataset";
    case ErrorKind::BatchComposition: return "batch-composition";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::DegenerateHistogram: return "degenerate-histogram";
    case ErrorKind::DegenerateLabels: return "degenerate-label";
    case ErrorKind::UndefinedMetric: return "undefined-metric";
    case ErrorKind::Alignment: return "alignment";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::ResizePolicy: return "resize-policy";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace histaug
