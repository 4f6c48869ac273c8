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

// Model rankings, rank correlations (Spearman, Kendall tau-b), Pearson R^2
// and the exact one-sided sign test.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "softeval/compensated_sum.hpp"
#include "softeval/error.hpp"

namespace softeval {

// Average ranks; the largest value gets rank 1. Exact ties share the mean of
// the ranks they span.
inline std::vector<double> average_ranks_descending(std::span<const double> values) {
  const std::size_t m = values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] > values[b];
  });
  std::vector<double> ranks(m);
  std::size_t i = 0;
  while (i < m) {
    std::size_t k = i;
    while (k + 1 < m && values[order[k + 1]] == values[order[i]]) ++k;
    // Positions i..k (0-based) share ranks i+1..k+1.
    const double shared = 0.5 * static_cast<double>(i + 1 + k + 1);
    for (std::size_t t = i; t <= k; ++t) ranks[order[t]] = shared;
    i = k + 1;
  }
  return ranks;
}

// Ranking of models under one metric. Keys are model ids; rank 1 is best.
struct ModelRanking {
  std::string metric_name;
  std::map<std::string, double> ranks;

  static ModelRanking from_values(std::string metric_name,
                                  const std::map<std::string, double>& values) {
    std::vector<double> v;
    v.reserve(values.size());
    for (const auto& [model, value] : values) v.push_back(value);
    const std::vector<double> r = average_ranks_descending(v);
    ModelRanking ranking{std::move(metric_name), {}};
    std::size_t i = 0;
    for (const auto& [model, value] : values) ranking.ranks[model] = r[i++];
    return ranking;
  }

  friend bool operator==(const ModelRanking&, const ModelRanking&) = default;
};

namespace detail {

struct AlignedRanks {
  std::vector<double> a;
  std::vector<double> b;
};

inline AlignedRanks align(const ModelRanking& x, const ModelRanking& y) {
  if (x.ranks.size() != y.ranks.size()) {
    throw Error(ErrorCode::kMismatch, "rankings cover different model sets");
  }
  AlignedRanks out;
  for (const auto& [model, rank] : x.ranks) {
    auto it = y.ranks.find(model);
    if (it == y.ranks.end()) {
      throw Error(ErrorCode::kMismatch,
                  "model '" + model + "' missing from second ranking");
    }
    out.a.push_back(rank);
    out.b.push_back(it->second);
  }
  return out;
}

inline Measure pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw Error(ErrorCode::kMismatch, "correlation inputs differ in length");
  }
  const std::size_t n = xs.size();
  if (n < 2) return Measure::undefined("fewer than 2 points");
  CompensatedSum sx, sy;
  for (std::size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx.sum() / static_cast<double>(n);
  const double my = sy.sum() / static_cast<double>(n);
  CompensatedSum sxx, syy, sxy;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx.sum() > 0.0) || !(syy.sum() > 0.0)) {
    return Measure::undefined("zero variance");
  }
  const double r = sxy.sum() / std::sqrt(sxx.sum() * syy.sum());
  return Measure::of(std::clamp(r, -1.0, 1.0));
}

}  // namespace detail

inline Measure pearson_r(std::span<const double> xs, std::span<const double> ys) {
  return detail::pearson(xs, ys);
}

inline Measure pearson_r2(std::span<const double> xs, std::span<const double> ys) {
  const Measure r = detail::pearson(xs, ys);
  if (!r) return r;
  return Measure::of(r.value() * r.value());
}

// Pearson correlation of the average ranks (tie-corrected Spearman).
inline Measure spearman_rho(const ModelRanking& a, const ModelRanking& b) {
  const detail::AlignedRanks r = detail::align(a, b);
  if (r.a.size() < 2) return Measure::undefined("fewer than 2 models");
  const Measure rho = detail::pearson(r.a, r.b);
  if (!rho) return Measure::undefined("zero rank variance");
  return rho;
}

// Kendall tau-b: (C - D) / sqrt((n0 - n1)(n0 - n2)).
inline Measure kendall_tau(const ModelRanking& a, const ModelRanking& b) {
  const detail::AlignedRanks r = detail::align(a, b);
  const std::size_t m = r.a.size();
  if (m < 2) return Measure::undefined("fewer than 2 models");
  std::int64_t concordant = 0;
  std::int64_t discordant = 0;
  std::int64_t ties_a = 0;
  std::int64_t ties_b = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double da = r.a[i] - r.a[j];
      const double db = r.b[i] - r.b[j];
      if (da == 0.0) ++ties_a;
      if (db == 0.0) ++ties_b;
      if (da == 0.0 || db == 0.0) continue;
      if ((da > 0) == (db > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const auto pairs = static_cast<std::int64_t>(m * (m - 1) / 2);
  const double denom = std::sqrt(static_cast<double>(pairs - ties_a) *
                                 static_cast<double>(pairs - ties_b));
  if (!(denom > 0.0)) return Measure::undefined("zero rank variance");
  return Measure::of(
      std::clamp(static_cast<double>(concordant - discordant) / denom, -1.0, 1.0));
}

// ---------------------------------------------------------------------------
// Binomial tails under a fair coin.

namespace detail {

inline double log_binomial_half_pmf(std::uint64_t n, std::uint64_t k) {
  const double nn = static_cast<double>(n);
  const double kk = static_cast<double>(k);
  return std::lgamma(nn + 1.0) - std::lgamma(kk + 1.0) -
         std::lgamma(nn - kk + 1.0) - nn * std::log(2.0);
}

// Probability mass of Binomial(n, 1/2) at 0..n. Up to kExactTailLimit the
// pmf comes from the integer recurrence C(n,i+1) = C(n,i)(n-i)/(i+1) scaled
// by 2^-n in long double, which stays exact while C(n,i) fits the 64-bit
// mantissa; beyond that it falls back to lgamma.
inline constexpr std::uint64_t kExactTailLimit = 16000;

inline std::vector<long double> binomial_half_pmf(std::uint64_t n) {
  std::vector<long double> pmf(n + 1);
  if (n <= kExactTailLimit) {
    long double c = std::ldexp(1.0L, -static_cast<int>(n));
    for (std::uint64_t i = 0; i <= n; ++i) {
      pmf[i] = c;
      c = c * static_cast<long double>(n - i) / static_cast<long double>(i + 1);
    }
  } else {
    for (std::uint64_t i = 0; i <= n; ++i) pmf[i] = std::exp(log_binomial_half_pmf(n, i));
  }
  return pmf;
}

inline double sum_range(const std::vector<long double>& pmf, std::uint64_t lo,
                        std::uint64_t hi) {
  long double s = 0;
  // Add smallest terms first.
  if (hi < pmf.size() / 2) {
    for (std::uint64_t i = lo; i <= hi; ++i) s += pmf[i];
  } else {
    for (std::uint64_t i = hi + 1; i-- > lo;) s += pmf[i];
  }
  return std::clamp(static_cast<double>(s), 0.0, 1.0);
}

}  // namespace detail

// P[X >= k] for X ~ Binomial(n, 1/2).
inline double binomial_half_upper_tail(std::uint64_t n, std::uint64_t k) {
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  return detail::sum_range(detail::binomial_half_pmf(n), k, n);
}

// P[X <= k] for X ~ Binomial(n, 1/2).
inline double binomial_half_lower_tail(std::uint64_t n, std::uint64_t k) {
  if (k >= n) return 1.0;
  return detail::sum_range(detail::binomial_half_pmf(n), 0, k);
}

// One-sided exact sign test for "a beats b": P[X >= wins_a] with
// X ~ Binomial(wins_a + wins_b, 1/2). Ties must be removed beforehand.
inline Measure sign_test(std::uint64_t wins_a, std::uint64_t wins_b) {
  const std::uint64_t n = wins_a + wins_b;
  if (n == 0) return Measure::undefined("no informative comparisons");
  return Measure::of(binomial_half_upper_tail(n, wins_a));
}

}  // namespace softeval
