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

// Ranking stability under annotation bootstrap.
//
// Each replicate resamples every item's rating multiset with replacement (k
// out of k), re-aggregates soft and hard labels, recomputes all four metrics
// for every model, re-ranks the models per metric and correlates each
// ranking with the one obtained from the original annotations.
//
// Replicate b draws item i's ratings from the Philox substream
// (seed, {b, i}), so a report is a pure function of (inputs, seed,
// iterations) whatever the worker count.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "softeval/compensated_sum.hpp"
#include "softeval/error.hpp"
#include "softeval/labels.hpp"
#include "softeval/rng.hpp"
#include "softeval/softmetrics.hpp"
#include "softeval/stats.hpp"

namespace softeval {

inline std::vector<double> bootstrap_resample_item(std::span<const double> ratings,
                                                   CounterStream& stream) {
  if (ratings.empty()) {
    throw Error(ErrorCode::kEmptyAnnotations, "cannot resample an empty rating list");
  }
  std::vector<double> out;
  out.reserve(ratings.size());
  for (std::size_t k = 0; k < ratings.size(); ++k) {
    out.push_back(ratings[stream.uniform_index(ratings.size())]);
  }
  return out;
}

struct BootstrapConfig {
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  AggregationPipeline aggregation{RatingScale(0.0, 1.0), MajorityRule{}};
  TieMode tie_mode = TieMode::kStable;
  // Parallelism only; never changes the result.
  unsigned workers = 1;
};

enum class RankStatistic { kSpearman, kKendall };

// Headline statistic for the per-iteration comparison; the other is reported
// alongside.
inline constexpr RankStatistic kPrimaryStatistic = RankStatistic::kKendall;

inline std::string_view statistic_name(RankStatistic s) {
  return s == RankStatistic::kSpearman ? "spearman" : "kendall";
}

// The ordinary metric and its soft counterpart.
struct MetricPair {
  MetricKind ordinary;
  MetricKind soft;
};

inline constexpr std::array<MetricPair, 2> kOrdinarySoftPairs = {
    MetricPair{MetricKind::kAuroc, MetricKind::kSoftAuroc},
    MetricPair{MetricKind::kAp, MetricKind::kSoftAp}};

struct MetricStability {
  Measure mean_spearman = Measure::undefined("no iterations");
  Measure mean_kendall = Measure::undefined("no iterations");
  // Iterations where the metric or the correlation was undefined.
  std::size_t skipped_spearman = 0;
  std::size_t skipped_kendall = 0;

  friend bool operator==(const MetricStability&, const MetricStability&) = default;
};

// Per-iteration comparison of the soft metric's correlation against the
// ordinary one. Iterations where either side is undefined count as ties and
// are also tallied in `skipped`, so wins_soft + wins_ordinary + ties always
// equals the iteration count.
struct PairComparison {
  std::size_t wins_soft = 0;
  std::size_t wins_ordinary = 0;
  std::size_t ties = 0;
  std::size_t skipped = 0;
  Measure p_value = Measure::undefined("no informative comparisons");

  friend bool operator==(const PairComparison&, const PairComparison&) = default;
};

struct StabilityReport {
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  std::size_t models = 0;
  std::size_t items = 0;
  std::array<ModelRanking, 4> reference_rankings;
  std::array<MetricStability, 4> metrics;
  // Indexed [pair][statistic] following kOrdinarySoftPairs and RankStatistic.
  std::array<std::array<PairComparison, 2>, 2> pairs;
  // Majority-vote splits or at-threshold means over all replicates.
  std::size_t label_ties = 0;

  const MetricStability& metric(MetricKind kind) const {
    return metrics[static_cast<std::size_t>(kind)];
  }
  const PairComparison& pair(std::size_t pair_index, RankStatistic s) const {
    return pairs[pair_index][static_cast<std::size_t>(s)];
  }
};

struct ReplicateResult {
  std::array<Measure, 4> spearman{
      Measure::undefined(""), Measure::undefined(""), Measure::undefined(""),
      Measure::undefined("")};
  std::array<Measure, 4> kendall{
      Measure::undefined(""), Measure::undefined(""), Measure::undefined(""),
      Measure::undefined("")};
  std::size_t label_ties = 0;
};

// Scores for several models over the items of one annotation table. Each
// model's vector is aligned with table.items().
class StabilityProblem {
 public:
  StabilityProblem(const AnnotationTable& table,
                   std::map<std::string, std::vector<double>> scores_by_model,
                   BootstrapConfig config)
      : table_(table), scores_(std::move(scores_by_model)), config_(config) {
    if (scores_.size() < 2) {
      throw Error(ErrorCode::kConfig, "stability analysis needs at least 2 models");
    }
    if (config_.iterations < 1) {
      throw Error(ErrorCode::kConfig, "iterations must be at least 1");
    }
    if (table_.size() > std::numeric_limits<std::uint32_t>::max() ||
        config_.iterations > std::numeric_limits<std::uint32_t>::max()) {
      throw Error(ErrorCode::kConfig, "too many items or iterations for stream ids");
    }
    for (const auto& [model, scores] : scores_) {
      if (scores.size() != table_.size()) {
        throw Error(ErrorCode::kMismatch,
                    "model '" + model + "' has " + std::to_string(scores.size()) +
                        " scores for " + std::to_string(table_.size()) + " items");
      }
      model_ids_.push_back(model);
      orders_.push_back(canonical_order(scores));
    }
    reference_ = rankings_for(original_labels());
  }

  const std::array<ModelRanking, 4>& reference_rankings() const { return reference_; }
  const BootstrapConfig& config() const { return config_; }

  ReplicateResult replicate(std::size_t iteration) const {
    Labels labels;
    labels.p.reserve(table_.size());
    labels.y.reserve(table_.size());
    std::size_t ties = 0;
    const auto& items = table_.items();
    for (std::size_t i = 0; i < items.size(); ++i) {
      CounterStream stream(config_.seed, StreamId{static_cast<std::uint32_t>(iteration),
                                                  static_cast<std::uint32_t>(i)});
      const std::vector<double> drawn = bootstrap_resample_item(items[i].ratings, stream);
      const AggregatedLabel label =
          aggregate_ratings(drawn, config_.aggregation, items[i].item_id);
      labels.p.push_back(label.p.p());
      labels.y.push_back(to_int(label.y));
      if (label.tie) ++ties;
    }
    const std::array<ModelRanking, 4> rankings = rankings_for(labels);
    ReplicateResult result;
    result.label_ties = ties;
    for (MetricKind kind : kAllMetrics) {
      const auto k = static_cast<std::size_t>(kind);
      if (rankings[k].ranks.size() != model_ids_.size() ||
          reference_[k].ranks.size() != model_ids_.size()) {
        result.spearman[k] = Measure::undefined("metric undefined for some model");
        result.kendall[k] = Measure::undefined("metric undefined for some model");
        continue;
      }
      result.spearman[k] = spearman_rho(reference_[k], rankings[k]);
      result.kendall[k] = kendall_tau(reference_[k], rankings[k]);
    }
    return result;
  }

 private:
  struct Labels {
    std::vector<double> p;
    std::vector<double> y;
  };

  const AnnotationTable& table_;
  std::map<std::string, std::vector<double>> scores_;
  BootstrapConfig config_;
  std::vector<std::string> model_ids_;
  // Per model: item indices in canonical (descending score, ascending id) order.
  std::vector<std::vector<std::size_t>> orders_;
  std::array<ModelRanking, 4> reference_;

  std::vector<std::size_t> canonical_order(const std::vector<double>& scores) const {
    const auto& items = table_.items();
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (!std::isfinite(scores[i])) {
        throw Error(ErrorCode::kInvalidScore,
                    "non-finite score for item '" + items[i].item_id + "'");
      }
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return items[a].item_id < items[b].item_id;
    });
    return order;
  }

  Labels original_labels() const {
    Labels labels;
    for (const AnnotatedItem& item : table_.items()) {
      const AggregatedLabel label =
          aggregate_ratings(item.ratings, config_.aggregation, item.item_id);
      labels.p.push_back(label.p.p());
      labels.y.push_back(to_int(label.y));
    }
    return labels;
  }

  std::array<double, 4> metric_values(std::size_t model, const Labels& labels,
                                      std::array<bool, 4>& defined) const {
    std::array<double, 4> values{};
    defined.fill(false);
    const auto& order = orders_[model];
    auto eval = [&](MetricKind kind, auto&& compute) {
      try {
        values[static_cast<std::size_t>(kind)] = compute();
        defined[static_cast<std::size_t>(kind)] = true;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateLabels) throw;
      }
    };
    if (config_.tie_mode == TieMode::kStable) {
      std::vector<double> p(order.size());
      std::vector<double> y(order.size());
      for (std::size_t r = 0; r < order.size(); ++r) {
        p[r] = labels.p[order[r]];
        y[r] = labels.y[order[r]];
      }
      eval(MetricKind::kAuroc, [&] { return soft_auroc_sorted(y); });
      eval(MetricKind::kAp, [&] { return soft_ap_sorted(y); });
      eval(MetricKind::kSoftAuroc, [&] { return soft_auroc_sorted(p); });
      eval(MetricKind::kSoftAp, [&] { return soft_ap_sorted(p); });
      return values;
    }
    const auto& items = table_.items();
    const auto& scores = scores_.at(model_ids_[model]);
    std::vector<ScoredItem> scored;
    scored.reserve(order.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      scored.push_back(ScoredItem{items[i].item_id, scores[i], SoftLabel(labels.p[i]),
                                  hard_label_from_int(static_cast<int>(labels.y[i]))});
    }
    const MetricQuad quad = metric_quad(LabeledScoreSet(std::move(scored)), config_.tie_mode);
    for (MetricKind kind : kAllMetrics) {
      const Measure& m = quad.get(kind);
      if (m) {
        values[static_cast<std::size_t>(kind)] = m.value();
        defined[static_cast<std::size_t>(kind)] = true;
      }
    }
    return values;
  }

  // A metric's ranking only includes models for which it is defined.
  std::array<ModelRanking, 4> rankings_for(const Labels& labels) const {
    std::array<std::map<std::string, double>, 4> values;
    for (std::size_t m = 0; m < model_ids_.size(); ++m) {
      std::array<bool, 4> defined{};
      const std::array<double, 4> v = metric_values(m, labels, defined);
      for (std::size_t k = 0; k < 4; ++k) {
        if (defined[k]) values[k][model_ids_[m]] = v[k];
      }
    }
    std::array<ModelRanking, 4> rankings;
    for (MetricKind kind : kAllMetrics) {
      const auto k = static_cast<std::size_t>(kind);
      rankings[k] = ModelRanking::from_values(std::string(metric_name(kind)), values[k]);
    }
    return rankings;
  }
};

// Folds per-iteration results in iteration order.
inline StabilityReport summarize_replicates(const StabilityProblem& problem,
                                            std::span<const ReplicateResult> results,
                                            std::size_t models, std::size_t items) {
  StabilityReport report;
  report.seed = problem.config().seed;
  report.iterations = results.size();
  report.models = models;
  report.items = items;
  report.reference_rankings = problem.reference_rankings();

  for (MetricKind kind : kAllMetrics) {
    const auto k = static_cast<std::size_t>(kind);
    CompensatedSum rho_sum;
    CompensatedSum tau_sum;
    std::size_t rho_n = 0;
    std::size_t tau_n = 0;
    MetricStability& out = report.metrics[k];
    for (const ReplicateResult& r : results) {
      if (r.spearman[k]) {
        rho_sum += r.spearman[k].value();
        ++rho_n;
      } else {
        ++out.skipped_spearman;
      }
      if (r.kendall[k]) {
        tau_sum += r.kendall[k].value();
        ++tau_n;
      } else {
        ++out.skipped_kendall;
      }
    }
    out.mean_spearman = rho_n ? Measure::of(rho_sum.sum() / static_cast<double>(rho_n))
                              : Measure::undefined("undefined in every iteration");
    out.mean_kendall = tau_n ? Measure::of(tau_sum.sum() / static_cast<double>(tau_n))
                             : Measure::undefined("undefined in every iteration");
  }

  for (std::size_t pi = 0; pi < kOrdinarySoftPairs.size(); ++pi) {
    const auto ord = static_cast<std::size_t>(kOrdinarySoftPairs[pi].ordinary);
    const auto soft = static_cast<std::size_t>(kOrdinarySoftPairs[pi].soft);
    for (RankStatistic stat : {RankStatistic::kSpearman, RankStatistic::kKendall}) {
      PairComparison& cmp = report.pairs[pi][static_cast<std::size_t>(stat)];
      for (const ReplicateResult& r : results) {
        const auto& series = stat == RankStatistic::kSpearman ? r.spearman : r.kendall;
        if (!series[ord] || !series[soft]) {
          ++cmp.ties;
          ++cmp.skipped;
        } else if (series[soft].value() > series[ord].value()) {
          ++cmp.wins_soft;
        } else if (series[soft].value() < series[ord].value()) {
          ++cmp.wins_ordinary;
        } else {
          ++cmp.ties;
        }
      }
      cmp.p_value = sign_test(cmp.wins_soft, cmp.wins_ordinary);
    }
  }
  for (const ReplicateResult& r : results) report.label_ties += r.label_ties;
  return report;
}

inline StabilityReport bootstrap_stability(
    const AnnotationTable& table,
    std::map<std::string, std::vector<double>> scores_by_model,
    const BootstrapConfig& config) {
  const std::size_t models = scores_by_model.size();
  const StabilityProblem problem(table, std::move(scores_by_model), config);
  std::vector<ReplicateResult> results(config.iterations);

  const unsigned workers =
      std::max(1u, std::min<unsigned>(config.workers,
                                      static_cast<unsigned>(config.iterations)));
  if (workers == 1) {
    for (std::size_t b = 0; b < config.iterations; ++b) results[b] = problem.replicate(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        try {
          for (std::size_t b = next++; b < config.iterations; b = next++) {
            results[b] = problem.replicate(b);
          }
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = config.iterations;
        }
      });
    }
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  return summarize_replicates(problem, results, models, table.size());
}

}  // namespace softeval
