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

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "softeval/serialize.hpp"
#include "softeval/stability.hpp"
#include "support/generators.hpp"

namespace softeval {
namespace {

using testing::SyntheticStudyConfig;
using testing::synthetic_study;

BootstrapConfig small_config(std::size_t iterations, std::uint64_t seed) {
  BootstrapConfig c;
  c.iterations = iterations;
  c.seed = seed;
  return c;
}

TEST(ResampleTest, DrawsFromTheInputWithSameLength) {
  const std::vector<double> ratings{0.0, 0.25, 1.0};
  CounterStream s(3, {1, 2});
  for (int trial = 0; trial < 100; ++trial) {
    const auto out = bootstrap_resample_item(ratings, s);
    ASSERT_EQ(out.size(), ratings.size());
    for (double r : out) {
      EXPECT_NE(std::find(ratings.begin(), ratings.end(), r), ratings.end());
    }
  }
  EXPECT_THROW(bootstrap_resample_item(std::vector<double>{}, s), Error);
}

TEST(ResampleTest, SingleRatingIsFixed) {
  CounterStream s(3, {});
  EXPECT_EQ(bootstrap_resample_item(std::vector<double>{0.7}, s), (std::vector<double>{0.7}));
}

TEST(ResampleTest, MeanOfResampledMeansConverges) {
  const std::vector<double> ratings{0.0, 0.0, 1.0};
  CounterStream s(2024, {});
  double total = 0;
  const int draws = 100000;
  for (int b = 0; b < draws; ++b) {
    const auto out = bootstrap_resample_item(ratings, s);
    total += (out[0] + out[1] + out[2]) / 3.0;
  }
  EXPECT_NEAR(total / draws, 1.0 / 3.0, 0.01);
}

TEST(StabilityTest, RejectsBadConfigurations) {
  auto study = synthetic_study({.seed = 1, .items = 20});
  std::map<std::string, std::vector<double>> one{{"m", study.scores.at("model0")}};
  EXPECT_THROW(bootstrap_stability(study.table, one, small_config(5, 1)), Error);
  EXPECT_THROW(bootstrap_stability(study.table, study.scores, small_config(0, 1)), Error);
  auto short_scores = study.scores;
  short_scores["model1"].pop_back();
  EXPECT_THROW(bootstrap_stability(study.table, short_scores, small_config(5, 1)), Error);
}

TEST(StabilityTest, ByteIdenticalAcrossRerunsAndWorkerCounts) {
  const auto study = synthetic_study({.seed = 9, .items = 80});
  std::string first;
  for (unsigned workers : {1u, 4u, 8u, 1u, 3u}) {
    BootstrapConfig c = small_config(60, 7);
    c.workers = workers;
    const std::string dump = canonical_dump(to_json(bootstrap_stability(study.table, study.scores, c)));
    if (first.empty()) first = dump;
    EXPECT_EQ(dump, first) << "workers=" << workers;
  }
}

TEST(StabilityTest, DifferentSeedsGiveDifferentReplicates) {
  const auto study = synthetic_study({.seed = 9, .items = 80});
  const auto a = bootstrap_stability(study.table, study.scores, small_config(40, 1));
  const auto b = bootstrap_stability(study.table, study.scores, small_config(40, 2));
  EXPECT_NE(canonical_dump(to_json(a)), canonical_dump(to_json(b)));
}

TEST(StabilityTest, UnanimousAnnotationsAreExactlyStable) {
  auto study = synthetic_study({.seed = 4, .items = 60, .flip_noise = 0.0});
  for (TieMode mode : {TieMode::kStable, TieMode::kBlockTrapezoid}) {
    BootstrapConfig c = small_config(25, 11);
    c.tie_mode = mode;
    const StabilityReport r = bootstrap_stability(study.table, study.scores, c);
    for (MetricKind kind : kAllMetrics) {
      EXPECT_EQ(r.metric(kind).mean_spearman.value(), 1.0);
      EXPECT_EQ(r.metric(kind).mean_kendall.value(), 1.0);
      EXPECT_EQ(r.metric(kind).skipped_spearman, 0u);
    }
    for (std::size_t pi = 0; pi < 2; ++pi) {
      for (RankStatistic s : {RankStatistic::kSpearman, RankStatistic::kKendall}) {
        EXPECT_EQ(r.pair(pi, s).ties, 25u);
        EXPECT_FALSE(r.pair(pi, s).p_value.defined());
      }
    }
  }
}

TEST(StabilityTest, OneIterationEqualsTheFirstReplicate) {
  const auto study = synthetic_study({.seed = 12, .items = 50});
  const BootstrapConfig c = small_config(1, 5);
  const StabilityProblem problem(study.table, study.scores, c);
  const ReplicateResult rep = problem.replicate(0);
  const StabilityReport r = bootstrap_stability(study.table, study.scores, c);
  for (MetricKind kind : kAllMetrics) {
    const auto k = static_cast<std::size_t>(kind);
    EXPECT_EQ(r.metric(kind).mean_spearman, rep.spearman[k]);
    EXPECT_EQ(r.metric(kind).mean_kendall, rep.kendall[k]);
  }
}

TEST(StabilityTest, CountsAlwaysAddUpToIterations) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    // A tiny, low-prevalence study so some replicates lose all positives.
    const auto study = synthetic_study({.seed = seed, .items = 8, .prevalence = 0.15});
    const StabilityReport r = bootstrap_stability(study.table, study.scores, small_config(97, seed));
    EXPECT_EQ(r.iterations, 97u);
    for (std::size_t pi = 0; pi < 2; ++pi) {
      for (RankStatistic s : {RankStatistic::kSpearman, RankStatistic::kKendall}) {
        const PairComparison& p = r.pair(pi, s);
        EXPECT_EQ(p.wins_soft + p.wins_ordinary + p.ties, 97u);
        EXPECT_LE(p.skipped, p.ties);
      }
    }
    for (MetricKind kind : kAllMetrics) {
      EXPECT_LE(r.metric(kind).skipped_spearman, 97u);
    }
  }
}

TEST(StabilityTest, SoftMetricsAreAtLeastAsStableOnNoisySyntheticStudy) {
  const auto study = synthetic_study(
      {.seed = 314, .items = 200, .annotators = 3, .flip_noise = 0.25, .separations = {1.0, 1.15, 1.3}});
  const StabilityReport r = bootstrap_stability(study.table, study.scores, small_config(300, 314));
  for (const MetricPair& p : kOrdinarySoftPairs) {
    EXPECT_GE(r.metric(p.soft).mean_spearman.value(), r.metric(p.ordinary).mean_spearman.value());
    EXPECT_GE(r.metric(p.soft).mean_kendall.value(), r.metric(p.ordinary).mean_kendall.value());
  }
}

TEST(StabilityTest, ReferenceRankingsUseOriginalLabels) {
  const auto study = synthetic_study({.seed = 21, .items = 100});
  const StabilityReport r = bootstrap_stability(study.table, study.scores, small_config(3, 1));
  EXPECT_EQ(r.models, 4u);
  EXPECT_EQ(r.items, 100u);
  for (const ModelRanking& ranking : r.reference_rankings) EXPECT_EQ(ranking.ranks.size(), 4u);
}

}  // namespace
}  // namespace softeval
