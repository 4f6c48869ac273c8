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

// Soft AUROC and soft AP over probabilistic labels.
//
// Items are ranked by descending score. With p_i the probability that item i
// is positive, the expected positive/negative counts among the top i are the
// prefix sums
//
//   n_i^+ = sum_{j<=i} p_j        n_i^- = sum_{j<=i} (1 - p_j)
//
// and the usual rank-indexed step curves follow:
//
//   TPR_i = n_i^+ / n^+   FPR_i = n_i^- / n^-   P_i = n_i^+ / i   R_i = TPR_i
//
//   s-AUROC = sum_i TPR_i (FPR_i - FPR_{i-1})
//   s-AP    = sum_i P_i   (R_i   - R_{i-1})
//
// with FPR_0 = R_0 = 0. For p in {0,1} both reduce to ordinary step AUROC and
// AP. After sorting, both are a single O(n) pass.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <ranges>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "softeval/compensated_sum.hpp"
#include "softeval/error.hpp"
#include "softeval/labels.hpp"

namespace softeval {

inline double label_value(double p) noexcept { return p; }
inline double label_value(SoftLabel p) noexcept { return p.p(); }
inline double label_value(HardLabel y) noexcept { return to_int(y); }

template <typename T>
concept LabelLike = requires(const T& t) {
  { label_value(t) } -> std::convertible_to<double>;
};

template <typename R>
concept LabelRange =
    std::ranges::input_range<R> && LabelLike<std::ranges::range_value_t<R>>;

// ---------------------------------------------------------------------------
// Scored items.

struct ScoredItem {
  std::string item_id;
  double score;
  SoftLabel p;
  std::optional<HardLabel> y;
};

class LabeledScoreSet {
 public:
  LabeledScoreSet() = default;

  explicit LabeledScoreSet(std::vector<ScoredItem> items)
      : items_(std::move(items)) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(items_.size());
    for (const ScoredItem& item : items_) {
      if (!std::isfinite(item.score)) {
        throw Error(ErrorCode::kInvalidScore,
                    "non-finite score for item '" + item.item_id + "'");
      }
      if (!seen.insert(item.item_id).second) {
        throw Error(ErrorCode::kDuplicateItem,
                    "item_id '" + item.item_id + "' appears more than once");
      }
    }
  }

  const std::vector<ScoredItem>& items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }

  bool has_hard_labels() const noexcept {
    return std::all_of(items_.begin(), items_.end(),
                       [](const ScoredItem& it) { return it.y.has_value(); });
  }

  // True once canonical_sort produced this set.
  bool canonical() const noexcept { return canonical_; }

 private:
  friend LabeledScoreSet canonical_sort(LabeledScoreSet set);

  std::vector<ScoredItem> items_;
  bool canonical_ = false;
};

// Descending score; equal scores by ascending item_id. A total order, so the
// result does not depend on input row order.
inline LabeledScoreSet canonical_sort(LabeledScoreSet set) {
  if (set.canonical_) return set;
  for (const ScoredItem& item : set.items_) {
    if (!std::isfinite(item.score)) {
      throw Error(ErrorCode::kInvalidScore,
                  "non-finite score for item '" + item.item_id + "'");
    }
  }
  std::sort(set.items_.begin(), set.items_.end(),
            [](const ScoredItem& a, const ScoredItem& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.item_id < b.item_id;
            });
  set.canonical_ = true;
  return set;
}

inline std::vector<double> soft_labels_of(const LabeledScoreSet& sorted) {
  std::vector<double> p;
  p.reserve(sorted.size());
  for (const ScoredItem& item : sorted.items()) p.push_back(item.p.p());
  return p;
}

// Throws kInvalidLabel when any item lacks a hard label.
inline std::vector<double> hard_labels_of(const LabeledScoreSet& sorted) {
  std::vector<double> y;
  y.reserve(sorted.size());
  for (const ScoredItem& item : sorted.items()) {
    if (!item.y) {
      throw Error(ErrorCode::kInvalidLabel,
                  "item '" + item.item_id + "' has no hard label");
    }
    y.push_back(to_int(*item.y));
  }
  return y;
}

// ---------------------------------------------------------------------------
// Cumulative counts.

struct CumulativeCounts {
  // Index i-1 holds the count over the top i items.
  std::vector<double> n_pos;
  std::vector<double> n_neg;
  double total_pos = 0.0;
  double total_neg = 0.0;

  std::size_t size() const noexcept { return n_pos.size(); }
};

template <LabelRange R>
CumulativeCounts cumulative_counts(R&& sorted_labels) {
  CumulativeCounts counts;
  if constexpr (std::ranges::sized_range<R>) {
    counts.n_pos.reserve(std::ranges::size(sorted_labels));
    counts.n_neg.reserve(std::ranges::size(sorted_labels));
  }
  CompensatedSum pos;
  CompensatedSum neg;
  for (const auto& label : sorted_labels) {
    const double p = label_value(label);
    pos += p;
    neg += 1.0 - p;
    counts.n_pos.push_back(pos.sum());
    counts.n_neg.push_back(neg.sum());
  }
  counts.total_pos = pos.sum();
  counts.total_neg = neg.sum();
  return counts;
}

// ---------------------------------------------------------------------------
// Sorted-scan kernels.

namespace detail {

inline void require_positive_mass(double total_pos) {
  if (!(total_pos > 0.0)) {
    throw Error(ErrorCode::kDegenerateLabels,
                "total positive mass n+ is zero");
  }
}

inline void require_negative_mass(double total_neg) {
  if (!(total_neg > 0.0)) {
    throw Error(ErrorCode::kDegenerateLabels,
                "total negative mass n- is zero");
  }
}

inline void require_both_masses(double total_pos, double total_neg) {
  if (!(total_pos > 0.0) && !(total_neg > 0.0)) {
    throw Error(ErrorCode::kDegenerateLabels,
                "total positive mass n+ and negative mass n- are both zero");
  }
  require_positive_mass(total_pos);
  require_negative_mass(total_neg);
}

}  // namespace detail

// sum_i TPR_i * dFPR_i = sum_i n_i^+ (1 - p_i) / (n^+ n^-), one pass.
template <LabelRange R>
double soft_auroc_sorted(R&& sorted_labels) {
  CompensatedSum pos;
  CompensatedSum neg;
  CompensatedSum area;
  for (const auto& label : sorted_labels) {
    const double p = label_value(label);
    pos += p;
    neg += 1.0 - p;
    area += pos.sum() * (1.0 - p);
  }
  const double total_pos = pos.sum();
  const double total_neg = neg.sum();
  detail::require_both_masses(total_pos, total_neg);
  return std::clamp(area.sum() / (total_pos * total_neg), 0.0, 1.0);
}

// sum_i P_i * dR_i = sum_i (n_i^+ / i) p_i / n^+, one pass.
template <LabelRange R>
double soft_ap_sorted(R&& sorted_labels) {
  CompensatedSum pos;
  CompensatedSum area;
  std::size_t rank = 0;
  for (const auto& label : sorted_labels) {
    const double p = label_value(label);
    ++rank;
    pos += p;
    area += pos.sum() / static_cast<double>(rank) * p;
  }
  const double total_pos = pos.sum();
  detail::require_positive_mass(total_pos);
  return std::clamp(area.sum() / total_pos, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Pairwise double sums, O(n^2). These never touch the prefix-sum kernels and
// serve as the independent route for cross-checking them.

enum class PairUpperBound {
  kInclusive,  // j <= i: exact expansion of the step-curve form.
  kExclusive,  // j <= i-1: strictly-above pairs only.
};

template <LabelRange R>
double soft_auroc_pairwise_sorted(R&& sorted_labels, PairUpperBound upper) {
  std::vector<double> p;
  for (const auto& label : sorted_labels) p.push_back(label_value(label));
  double total_pos = 0.0;
  double total_neg = 0.0;
  for (double v : p) {
    total_pos += v;
    total_neg += 1.0 - v;
  }
  detail::require_both_masses(total_pos, total_neg);
  const std::size_t n = p.size();
  CompensatedSum sum;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j_end = upper == PairUpperBound::kInclusive ? i + 1 : i;
    for (std::size_t j = 0; j < j_end; ++j) sum += (1.0 - p[i]) * p[j];
  }
  return sum.sum() / (total_pos * total_neg);
}

template <LabelRange R>
double soft_ap_pairwise_sorted(R&& sorted_labels) {
  std::vector<double> p;
  for (const auto& label : sorted_labels) p.push_back(label_value(label));
  double total_pos = 0.0;
  for (double v : p) total_pos += v;
  detail::require_positive_mass(total_pos);
  CompensatedSum sum;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      sum += (p[i] / static_cast<double>(i + 1)) * (p[j] / total_pos);
    }
  }
  return sum.sum();
}

// ---------------------------------------------------------------------------
// Set-level entry points.

enum class TieMode {
  // One step per item in canonical order.
  kStable,
  // Tied-score blocks collapse to a single step; AUROC interpolates linearly
  // across each block, AP uses the block-end precision.
  kBlockTrapezoid,
};

namespace detail {

template <typename Extract>
double tie_block_auroc(const LabeledScoreSet& sorted, Extract label_of) {
  const auto& items = sorted.items();
  CompensatedSum pos;
  CompensatedSum neg;
  CompensatedSum area;
  std::size_t i = 0;
  while (i < items.size()) {
    const double before = pos.sum();
    double block_neg = 0.0;
    std::size_t k = i;
    for (; k < items.size() && items[k].score == items[i].score; ++k) {
      const double p = label_of(items[k]);
      pos += p;
      neg += 1.0 - p;
      block_neg += 1.0 - p;
    }
    area += 0.5 * (before + pos.sum()) * block_neg;
    i = k;
  }
  require_both_masses(pos.sum(), neg.sum());
  return std::clamp(area.sum() / (pos.sum() * neg.sum()), 0.0, 1.0);
}

template <typename Extract>
double tie_block_ap(const LabeledScoreSet& sorted, Extract label_of) {
  const auto& items = sorted.items();
  CompensatedSum pos;
  CompensatedSum area;
  std::size_t i = 0;
  while (i < items.size()) {
    double block_pos = 0.0;
    std::size_t k = i;
    for (; k < items.size() && items[k].score == items[i].score; ++k) {
      const double p = label_of(items[k]);
      pos += p;
      block_pos += p;
    }
    area += pos.sum() / static_cast<double>(k) * block_pos;
    i = k;
  }
  require_positive_mass(pos.sum());
  return std::clamp(area.sum() / pos.sum(), 0.0, 1.0);
}

inline const LabeledScoreSet& ensure_sorted(const LabeledScoreSet& set,
                                            LabeledScoreSet& storage) {
  if (set.canonical()) return set;
  storage = canonical_sort(set);
  return storage;
}

}  // namespace detail

inline double soft_auroc(const LabeledScoreSet& set,
                         TieMode tie_mode = TieMode::kStable) {
  LabeledScoreSet storage;
  const LabeledScoreSet& sorted = detail::ensure_sorted(set, storage);
  if (tie_mode == TieMode::kBlockTrapezoid) {
    return detail::tie_block_auroc(
        sorted, [](const ScoredItem& it) { return it.p.p(); });
  }
  return soft_auroc_sorted(soft_labels_of(sorted));
}

inline double soft_ap(const LabeledScoreSet& set,
                      TieMode tie_mode = TieMode::kStable) {
  LabeledScoreSet storage;
  const LabeledScoreSet& sorted = detail::ensure_sorted(set, storage);
  if (tie_mode == TieMode::kBlockTrapezoid) {
    return detail::tie_block_ap(sorted,
                                [](const ScoredItem& it) { return it.p.p(); });
  }
  return soft_ap_sorted(soft_labels_of(sorted));
}

inline double soft_auroc_pairwise_oracle(const LabeledScoreSet& set,
                                         PairUpperBound upper) {
  return soft_auroc_pairwise_sorted(soft_labels_of(canonical_sort(set)), upper);
}

inline double soft_ap_pairwise_oracle(const LabeledScoreSet& set) {
  return soft_ap_pairwise_sorted(soft_labels_of(canonical_sort(set)));
}

// ---------------------------------------------------------------------------
// Metric quads.

enum class MetricKind { kAuroc = 0, kAp = 1, kSoftAuroc = 2, kSoftAp = 3 };

inline constexpr std::array<MetricKind, 4> kAllMetrics = {
    MetricKind::kAuroc, MetricKind::kAp, MetricKind::kSoftAuroc,
    MetricKind::kSoftAp};

inline std::string_view metric_name(MetricKind kind) {
  switch (kind) {
    case MetricKind::kAuroc: return "AUROC";
    case MetricKind::kAp: return "AP";
    case MetricKind::kSoftAuroc: return "s-AUROC";
    case MetricKind::kSoftAp: return "s-AP";
  }
  return "?";
}

// Snake-case column name used in CSV exports.
inline std::string_view metric_column(MetricKind kind) {
  switch (kind) {
    case MetricKind::kAuroc: return "auroc";
    case MetricKind::kAp: return "ap";
    case MetricKind::kSoftAuroc: return "s_auroc";
    case MetricKind::kSoftAp: return "s_ap";
  }
  return "?";
}

inline std::optional<MetricKind> parse_metric(std::string_view s) {
  for (MetricKind kind : kAllMetrics) {
    if (s == metric_name(kind) || s == metric_column(kind)) return kind;
  }
  return std::nullopt;
}

struct MetricQuad {
  Measure auroc = Measure::undefined("not computed");
  Measure ap = Measure::undefined("not computed");
  Measure s_auroc = Measure::undefined("not computed");
  Measure s_ap = Measure::undefined("not computed");

  const Measure& get(MetricKind kind) const {
    switch (kind) {
      case MetricKind::kAuroc: return auroc;
      case MetricKind::kAp: return ap;
      case MetricKind::kSoftAuroc: return s_auroc;
      case MetricKind::kSoftAp: return s_ap;
    }
    return auroc;
  }
  Measure& get(MetricKind kind) {
    return const_cast<Measure&>(std::as_const(*this).get(kind));
  }

  friend bool operator==(const MetricQuad&, const MetricQuad&) = default;
};

namespace detail {

template <typename F>
Measure measure_or_undefined(F&& compute) {
  try {
    return Measure::of(compute());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateLabels &&
        e.code() != ErrorCode::kInvalidLabel) {
      throw;
    }
    return Measure::undefined(e.what());
  }
}

}  // namespace detail

// Ordinary metrics run the hard labels through the same kernels as the soft
// ones (binary reduction). Each cell is computed independently; a degenerate
// cell is marked undefined without affecting the others.
inline MetricQuad metric_quad(const LabeledScoreSet& set,
                              TieMode tie_mode = TieMode::kStable) {
  LabeledScoreSet storage;
  const LabeledScoreSet& sorted = detail::ensure_sorted(set, storage);
  MetricQuad quad;
  if (tie_mode == TieMode::kStable) {
    const std::vector<double> p = soft_labels_of(sorted);
    quad.s_auroc = detail::measure_or_undefined([&] { return soft_auroc_sorted(p); });
    quad.s_ap = detail::measure_or_undefined([&] { return soft_ap_sorted(p); });
    if (sorted.has_hard_labels()) {
      const std::vector<double> y = hard_labels_of(sorted);
      quad.auroc = detail::measure_or_undefined([&] { return soft_auroc_sorted(y); });
      quad.ap = detail::measure_or_undefined([&] { return soft_ap_sorted(y); });
    } else {
      quad.auroc = Measure::undefined("hard labels missing");
      quad.ap = Measure::undefined("hard labels missing");
    }
    return quad;
  }
  const auto soft = [](const ScoredItem& it) { return it.p.p(); };
  const auto hard = [](const ScoredItem& it) {
    return static_cast<double>(to_int(*it.y));
  };
  quad.s_auroc = detail::measure_or_undefined(
      [&] { return detail::tie_block_auroc(sorted, soft); });
  quad.s_ap = detail::measure_or_undefined(
      [&] { return detail::tie_block_ap(sorted, soft); });
  if (sorted.has_hard_labels()) {
    quad.auroc = detail::measure_or_undefined(
        [&] { return detail::tie_block_auroc(sorted, hard); });
    quad.ap = detail::measure_or_undefined(
        [&] { return detail::tie_block_ap(sorted, hard); });
  } else {
    quad.auroc = Measure::undefined("hard labels missing");
    quad.ap = Measure::undefined("hard labels missing");
  }
  return quad;
}

// ---------------------------------------------------------------------------
// Curves. Both include the rank-0 origin.

struct RocPoint {
  std::size_t rank;
  double fpr;
  double tpr;
};

struct PrPoint {
  std::size_t rank;
  double recall;
  // Undefined at rank 0.
  std::optional<double> precision;
};

inline std::vector<RocPoint> roc_curve_from_counts(const CumulativeCounts& c) {
  detail::require_both_masses(c.total_pos, c.total_neg);
  std::vector<RocPoint> curve;
  curve.reserve(c.size() + 1);
  curve.push_back({0, 0.0, 0.0});
  for (std::size_t i = 0; i < c.size(); ++i) {
    curve.push_back({i + 1, std::min(1.0, c.n_neg[i] / c.total_neg),
                     std::min(1.0, c.n_pos[i] / c.total_pos)});
  }
  return curve;
}

inline std::vector<PrPoint> pr_curve_from_counts(const CumulativeCounts& c) {
  detail::require_positive_mass(c.total_pos);
  std::vector<PrPoint> curve;
  curve.reserve(c.size() + 1);
  curve.push_back({0, 0.0, std::nullopt});
  for (std::size_t i = 0; i < c.size(); ++i) {
    curve.push_back({i + 1, std::min(1.0, c.n_pos[i] / c.total_pos),
                     std::min(1.0, c.n_pos[i] / static_cast<double>(i + 1))});
  }
  return curve;
}

inline std::vector<RocPoint> roc_curve(const LabeledScoreSet& set) {
  return roc_curve_from_counts(
      cumulative_counts(soft_labels_of(canonical_sort(set))));
}

inline std::vector<PrPoint> pr_curve(const LabeledScoreSet& set) {
  return pr_curve_from_counts(
      cumulative_counts(soft_labels_of(canonical_sort(set))));
}

// Right-Riemann area under an exported ROC staircase.
inline double area_under_roc_steps(std::span<const RocPoint> curve) {
  CompensatedSum area;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += curve[i].tpr * (curve[i].fpr - curve[i - 1].fpr);
  }
  return area.sum();
}

}  // namespace softeval
