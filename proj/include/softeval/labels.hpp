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

// Turning raw multi-annotator ratings into soft labels (normalized mean) and
// hard labels (threshold on the mean, or majority vote).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "softeval/compensated_sum.hpp"
#include "softeval/error.hpp"

namespace softeval {

namespace detail {

inline std::string format_for_message(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

inline std::string item_context(std::string_view item_id) {
  if (item_id.empty()) return {};
  return " (item '" + std::string(item_id) + "')";
}

}  // namespace detail

// Bounds of the ordinal (or continuous) scale annotators rated on. Always
// declared by the caller, never inferred from data.
class RatingScale {
 public:
  RatingScale(double min_value, double max_value)
      : min_(min_value), max_(max_value) {
    if (!std::isfinite(min_value) || !std::isfinite(max_value)) {
      throw Error(ErrorCode::kInvalidScale, "scale bounds must be finite");
    }
    if (!(max_value > min_value)) {
      throw Error(ErrorCode::kInvalidScale,
                  "scale max must exceed min, got [" +
                      detail::format_for_message(min_value) + ", " +
                      detail::format_for_message(max_value) + "]");
    }
  }

  double min_value() const noexcept { return min_; }
  double max_value() const noexcept { return max_; }

  bool contains(double r) const noexcept { return r >= min_ && r <= max_; }

  friend bool operator==(const RatingScale&, const RatingScale&) = default;

 private:
  double min_;
  double max_;
};

class SoftLabel {
 public:
  explicit SoftLabel(double p) : p_(p) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::kInvalidLabel,
                  "soft label must lie in [0,1], got " +
                      detail::format_for_message(p));
    }
  }

  double p() const noexcept { return p_; }

  friend bool operator==(const SoftLabel&, const SoftLabel&) = default;

 private:
  double p_;
};

enum class HardLabel : std::uint8_t { kNegative = 0, kPositive = 1 };

inline int to_int(HardLabel y) noexcept { return static_cast<int>(y); }

inline HardLabel hard_label_from_int(int y) {
  if (y != 0 && y != 1) {
    throw Error(ErrorCode::kInvalidLabel,
                "hard label must be 0 or 1, got " + std::to_string(y));
  }
  return y == 1 ? HardLabel::kPositive : HardLabel::kNegative;
}

struct AnnotatedItem {
  std::string item_id;
  std::vector<double> ratings;
  // Either empty or aligned with ratings; entries may be empty strings.
  std::vector<std::string> annotator_ids;
};

// Per-item rating multisets on a declared scale. The rating multisets are kept
// unaggregated so they can be resampled.
class AnnotationTable {
 public:
  AnnotationTable(std::vector<AnnotatedItem> items, RatingScale scale)
      : items_(std::move(items)), scale_(scale) {
    index_.reserve(items_.size());
    for (std::size_t i = 0; i < items_.size(); ++i) {
      const AnnotatedItem& item = items_[i];
      if (!index_.emplace(item.item_id, i).second) {
        throw Error(ErrorCode::kDuplicateItem,
                    "item_id '" + item.item_id + "' appears more than once");
      }
      if (item.ratings.empty()) {
        throw Error(ErrorCode::kEmptyAnnotations,
                    "item '" + item.item_id + "' has no ratings");
      }
      if (!item.annotator_ids.empty() &&
          item.annotator_ids.size() != item.ratings.size()) {
        throw Error(ErrorCode::kParse, "item '" + item.item_id +
                                           "' has misaligned annotator ids");
      }
      for (double r : item.ratings) {
        if (std::isnan(r)) {
          throw Error(ErrorCode::kOutOfRange,
                      "missing/NaN rating for item '" + item.item_id + "'");
        }
        if (!scale_.contains(r)) {
          throw Error(ErrorCode::kOutOfRange,
                      "rating " + detail::format_for_message(r) +
                          " outside scale for item '" + item.item_id + "'");
        }
      }
    }
  }

  const std::vector<AnnotatedItem>& items() const noexcept { return items_; }
  const RatingScale& scale() const noexcept { return scale_; }
  std::size_t size() const noexcept { return items_.size(); }

  const AnnotatedItem* find(std::string_view item_id) const {
    auto it = index_.find(std::string(item_id));
    return it == index_.end() ? nullptr : &items_[it->second];
  }

  // Long-format accumulation: repeated item ids merge into one multiset, and
  // items keep the order of their first appearance.
  class Builder {
   public:
    void add(std::string_view item_id, std::string_view annotator_id,
             double rating) {
      auto [it, inserted] =
          index_.emplace(std::string(item_id), items_.size());
      if (inserted) items_.push_back(AnnotatedItem{std::string(item_id), {}, {}});
      AnnotatedItem& item = items_[it->second];
      item.ratings.push_back(rating);
      item.annotator_ids.emplace_back(annotator_id);
    }

    bool empty() const noexcept { return items_.empty(); }

    AnnotationTable build(RatingScale scale) && {
      return AnnotationTable(std::move(items_), scale);
    }

   private:
    std::vector<AnnotatedItem> items_;
    std::unordered_map<std::string, std::size_t> index_;
  };

 private:
  std::vector<AnnotatedItem> items_;
  RatingScale scale_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline double normalize_rating(double r, const RatingScale& scale,
                               std::string_view item_id = {}) {
  if (std::isnan(r) || !scale.contains(r)) {
    throw Error(ErrorCode::kOutOfRange,
                "rating " + detail::format_for_message(r) + " outside [" +
                    detail::format_for_message(scale.min_value()) + ", " +
                    detail::format_for_message(scale.max_value()) + "]" +
                    detail::item_context(item_id));
  }
  return (r - scale.min_value()) / (scale.max_value() - scale.min_value());
}

inline SoftLabel aggregate_mean(std::span<const double> normalized,
                                std::string_view item_id = {}) {
  if (normalized.empty()) {
    throw Error(ErrorCode::kEmptyAnnotations,
                "cannot average an empty rating list" +
                    detail::item_context(item_id));
  }
  CompensatedSum sum;
  for (double r : normalized) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw Error(ErrorCode::kOutOfRange,
                  "normalized rating " + detail::format_for_message(r) +
                      " outside [0,1]" + detail::item_context(item_id));
    }
    sum += r;
  }
  // Rounding can nudge the mean of values in [0,1] a hair past 1.
  const double mean = sum.sum() / static_cast<double>(normalized.size());
  return SoftLabel(std::min(1.0, std::max(0.0, mean)));
}

enum class ThresholdMode { kStrict, kInclusive };

inline HardLabel binarize_threshold(SoftLabel label, double threshold,
                                    ThresholdMode mode) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kConfig, "threshold must lie in [0,1], got " +
                                        detail::format_for_message(threshold));
  }
  const bool positive = mode == ThresholdMode::kStrict ? label.p() > threshold
                                                       : label.p() >= threshold;
  return positive ? HardLabel::kPositive : HardLabel::kNegative;
}

enum class TiePolicy { kNegative, kPositive, kError };

struct VoteOutcome {
  HardLabel label;
  bool tie;
};

inline VoteOutcome majority_vote_outcome(std::span<const double> votes,
                                         TiePolicy tie_policy,
                                         std::string_view item_id = {}) {
  if (votes.empty()) {
    throw Error(ErrorCode::kEmptyAnnotations,
                "cannot vote on an empty list" + detail::item_context(item_id));
  }
  std::size_t positives = 0;
  for (double v : votes) {
    if (v == 1.0) {
      ++positives;
    } else if (v != 0.0) {
      throw Error(ErrorCode::kInvalidVote,
                  "vote " + detail::format_for_message(v) + " is not 0 or 1" +
                      detail::item_context(item_id));
    }
  }
  const std::size_t negatives = votes.size() - positives;
  if (positives != negatives) {
    return {positives > negatives ? HardLabel::kPositive : HardLabel::kNegative,
            false};
  }
  switch (tie_policy) {
    case TiePolicy::kNegative: return {HardLabel::kNegative, true};
    case TiePolicy::kPositive: return {HardLabel::kPositive, true};
    case TiePolicy::kError: break;
  }
  throw Error(ErrorCode::kMajorityTie,
              "exact split of " + std::to_string(votes.size()) + " votes" +
                  detail::item_context(item_id));
}

inline HardLabel majority_vote(std::span<const double> votes,
                               TiePolicy tie_policy = TiePolicy::kNegative) {
  return majority_vote_outcome(votes, tie_policy).label;
}

struct ThresholdRule {
  double threshold = 0.5;
  ThresholdMode mode = ThresholdMode::kStrict;
};

struct MajorityRule {
  TiePolicy tie_policy = TiePolicy::kNegative;
};

using BinarizationRule = std::variant<ThresholdRule, MajorityRule>;

// Normalization scale plus the hard-label rule: everything needed to turn one
// item's raw rating multiset into (p, y).
struct AggregationPipeline {
  RatingScale scale;
  BinarizationRule rule = ThresholdRule{};
};

struct AggregatedLabel {
  SoftLabel p;
  HardLabel y;
  // Majority vote hit an exact split (resolved by the tie policy), or the
  // mean sat exactly on the threshold.
  bool tie = false;
};

inline AggregatedLabel aggregate_ratings(std::span<const double> raw,
                                         const AggregationPipeline& pipeline,
                                         std::string_view item_id = {}) {
  if (raw.empty()) {
    throw Error(ErrorCode::kEmptyAnnotations,
                "no ratings" + detail::item_context(item_id));
  }
  std::vector<double> normalized;
  normalized.reserve(raw.size());
  for (double r : raw) normalized.push_back(normalize_rating(r, pipeline.scale, item_id));
  const SoftLabel p = aggregate_mean(normalized, item_id);
  return std::visit(
      [&](const auto& rule) -> AggregatedLabel {
        using Rule = std::decay_t<decltype(rule)>;
        if constexpr (std::is_same_v<Rule, ThresholdRule>) {
          return {p, binarize_threshold(p, rule.threshold, rule.mode),
                  p.p() == rule.threshold};
        } else {
          const VoteOutcome vote =
              majority_vote_outcome(normalized, rule.tie_policy, item_id);
          return {p, vote.label, vote.tie};
        }
      },
      pipeline.rule);
}

struct LabelRecord {
  std::string item_id;
  SoftLabel p;
  HardLabel y;
  bool tie = false;
};

inline std::vector<LabelRecord> aggregate_table(
    const AnnotationTable& table, const AggregationPipeline& pipeline) {
  std::vector<LabelRecord> out;
  out.reserve(table.size());
  for (const AnnotatedItem& item : table.items()) {
    const AggregatedLabel label =
        aggregate_ratings(item.ratings, pipeline, item.item_id);
    out.push_back(LabelRecord{item.item_id, label.p, label.y, label.tie});
  }
  return out;
}

}  // namespace softeval
