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

// Ordinary-vs-soft comparison reports: per-model metric quads, rankings
// under each metric, rank flips between a metric and its soft counterpart,
// and R^2 between ordinary and soft scores across models.

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "softeval/error.hpp"
#include "softeval/softmetrics.hpp"
#include "softeval/stability.hpp"
#include "softeval/stats.hpp"

namespace softeval {

using QuadsByModel = std::map<std::string, MetricQuad>;

// A pair of models whose relative order differs between two metrics.
// model_a < model_b lexicographically.
struct RankFlip {
  std::string model_a;
  std::string model_b;
  std::string leader_on_first;
  std::string leader_on_second;

  friend bool operator==(const RankFlip&, const RankFlip&) = default;
};

struct Exclusion {
  std::string model_id;
  std::string reason;

  friend bool operator==(const Exclusion&, const Exclusion&) = default;
};

struct FlipAnalysis {
  MetricKind first = MetricKind::kAp;
  MetricKind second = MetricKind::kSoftAp;
  std::vector<RankFlip> flips;
  std::vector<Exclusion> excluded;
  std::size_t pairs_total = 0;     // C(m, 2) over all models
  std::size_t pairs_compared = 0;  // C(m', 2) over models defined on both
  std::size_t pairs_excluded = 0;
  // Compared pairs with an exact tie on either metric; never flips.
  std::size_t pairs_tied = 0;

  friend bool operator==(const FlipAnalysis&, const FlipAnalysis&) = default;
};

inline std::size_t choose2(std::size_t m) { return m < 2 ? 0 : m * (m - 1) / 2; }

inline void check_pair_arithmetic(const FlipAnalysis& a) {
  if (a.pairs_compared + a.pairs_excluded != a.pairs_total) {
    throw std::logic_error("flip analysis pair counts do not add up");
  }
}

inline FlipAnalysis detect_flips(const QuadsByModel& quads, MetricKind first,
                                 MetricKind second) {
  FlipAnalysis out;
  out.first = first;
  out.second = second;
  std::vector<const std::string*> ids;
  std::vector<double> a;
  std::vector<double> b;
  for (const auto& [model, quad] : quads) {
    const Measure& x = quad.get(first);
    const Measure& y = quad.get(second);
    if (!x || !y) {
      out.excluded.push_back(
          {model, std::string(metric_name(!x ? first : second)) + " undefined: " +
                      (!x ? x.reason() : y.reason())});
      continue;
    }
    ids.push_back(&model);
    a.push_back(x.value());
    b.push_back(y.value());
  }
  out.pairs_total = choose2(quads.size());
  out.pairs_compared = choose2(ids.size());
  out.pairs_excluded = out.pairs_total - out.pairs_compared;
  // Map iteration is sorted by id, so the output order is by (model_a, model_b).
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      const double da = a[i] - a[j];
      const double db = b[i] - b[j];
      if (da == 0.0 || db == 0.0) {
        ++out.pairs_tied;
        continue;
      }
      if ((da > 0) != (db > 0)) {
        out.flips.push_back({*ids[i], *ids[j], da > 0 ? *ids[i] : *ids[j],
                             db > 0 ? *ids[i] : *ids[j]});
      }
    }
  }
  check_pair_arithmetic(out);
  return out;
}

inline FlipAnalysis detect_flips(const QuadsByModel& quads, MetricPair pair) {
  return detect_flips(quads, pair.ordinary, pair.soft);
}

struct R2Summary {
  Measure auroc_vs_s_auroc = Measure::undefined("not computed");
  Measure ap_vs_s_ap = Measure::undefined("not computed");

  friend bool operator==(const R2Summary&, const R2Summary&) = default;
};

namespace detail {

inline Measure r2_between(const QuadsByModel& quads, MetricKind x, MetricKind y) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [model, quad] : quads) {
    if (quad.get(x) && quad.get(y)) {
      xs.push_back(quad.get(x).value());
      ys.push_back(quad.get(y).value());
    }
  }
  if (xs.size() < 2) return Measure::undefined("fewer than 2 models with defined values");
  return pearson_r2(xs, ys);
}

}  // namespace detail

inline R2Summary summarize_r2(const QuadsByModel& quads) {
  return {detail::r2_between(quads, MetricKind::kAuroc, MetricKind::kSoftAuroc),
          detail::r2_between(quads, MetricKind::kAp, MetricKind::kSoftAp)};
}

struct ComparisonReport {
  std::string task_id;
  QuadsByModel quads;
  // Each ranking covers the models for which that metric is defined.
  std::array<ModelRanking, 4> rankings;
  std::array<FlipAnalysis, 2> flips;  // follows kOrdinarySoftPairs
  R2Summary r2;

  friend bool operator==(const ComparisonReport&, const ComparisonReport&) = default;
};

inline std::array<ModelRanking, 4> rank_models(const QuadsByModel& quads) {
  std::array<ModelRanking, 4> rankings;
  for (MetricKind kind : kAllMetrics) {
    std::map<std::string, double> values;
    for (const auto& [model, quad] : quads) {
      if (quad.get(kind)) values[model] = quad.get(kind).value();
    }
    rankings[static_cast<std::size_t>(kind)] =
        ModelRanking::from_values(std::string(metric_name(kind)), values);
  }
  return rankings;
}

inline ComparisonReport build_comparison(std::string task_id, QuadsByModel quads) {
  ComparisonReport report;
  report.task_id = std::move(task_id);
  report.quads = std::move(quads);
  report.rankings = rank_models(report.quads);
  for (std::size_t i = 0; i < kOrdinarySoftPairs.size(); ++i) {
    report.flips[i] = detect_flips(report.quads, kOrdinarySoftPairs[i]);
  }
  report.r2 = summarize_r2(report.quads);
  return report;
}

}  // namespace softeval
