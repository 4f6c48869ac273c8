/*
 * Copyright 2026 The softeval Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace softeval {

enum class ErrorCode {
  kInvalidScale,
  kOutOfRange,
  kEmptyAnnotations,
  kInvalidVote,
  kMajorityTie,
  kInvalidScore,
  kInvalidLabel,
  kDuplicateItem,
  kDegenerateLabels,
  kParse,
  kMismatch,
  kConfig,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidScale: return "invalid-scale";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kEmptyAnnotations: return "empty-annotations";
    case ErrorCode::kInvalidVote: return "invalid-vote";
    case ErrorCode::kMajorityTie: return "majority-tie";
    case ErrorCode::kInvalidScore: return "invalid-score";
    case ErrorCode::kInvalidLabel: return "invalid-label";
    case ErrorCode::kDuplicateItem: return "duplicate-item";
    case ErrorCode::kDegenerateLabels: return "degenerate-labels";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kMismatch: return "mismatch";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

// All input and validation failures surface as this type. Anything else that
// escapes the library is an internal error.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// A real-valued result that may be undefined (degenerate labels, zero
// variance, no evidence). Undefined values carry the reason instead of NaN.
class Measure {
 public:
  static Measure of(double value) { return Measure(value, {}); }
  static Measure undefined(std::string reason) {
    return Measure(std::nullopt, std::move(reason));
  }

  bool defined() const noexcept { return value_.has_value(); }
  explicit operator bool() const noexcept { return defined(); }

  double value() const {
    if (!value_) throw std::logic_error("Measure is undefined: " + reason_);
    return *value_;
  }
  const std::optional<double>& optional() const noexcept { return value_; }
  const std::string& reason() const noexcept { return reason_; }

  friend bool operator==(const Measure&, const Measure&) = default;

 private:
  Measure(std::optional<double> value, std::string reason)
      : value_(value), reason_(std::move(reason)) {}

  std::optional<double> value_;
  std::string reason_;
};

}  // namespace softeval
