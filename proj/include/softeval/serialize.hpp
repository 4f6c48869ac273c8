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

// JSON for comparison and stability reports. Output is canonical: object
// keys sorted, reals printed with 17 significant digits, two-space indent,
// undefined values as null with their reason kept alongside.

#pragma once

#include <cstdio>
#include <string>

#include "json.hpp"
#include "softeval/error.hpp"
#include "softeval/report.hpp"
#include "softeval/stability.hpp"

namespace softeval {

using Json = nlohmann::json;

inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline void dump_canonical(const Json& j, std::string& out, int depth) {
  const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(depth + 1) * 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += inner;
        out += Json(key).dump();
        out += ": ";
        dump_canonical(value, out, depth + 1);
      }
      out += "\n" + indent + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += inner;
        dump_canonical(j[i], out, depth + 1);
      }
      out += "\n" + indent + "]";
      return;
    }
    case Json::value_t::number_float:
      out += format_real(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

inline Json measure_json(const Measure& m) {
  return m ? Json(m.value()) : Json(nullptr);
}

inline Measure measure_from(const Json& value, const Json& reasons,
                            const std::string& key) {
  if (!value.is_null()) return Measure::of(value.get<double>());
  std::string reason = "undefined";
  if (reasons.is_object() && reasons.contains(key)) reason = reasons.at(key).get<std::string>();
  return Measure::undefined(reason);
}

}  // namespace detail

// nlohmann's object type is an ordered std::map, so key order is canonical.
inline std::string canonical_dump(const Json& j) {
  std::string out;
  detail::dump_canonical(j, out, 0);
  out += "\n";
  return out;
}

inline Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("invalid JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Comparison report.

inline Json quad_json(const MetricQuad& quad) {
  Json j = Json::object();
  Json reasons = Json::object();
  for (MetricKind kind : kAllMetrics) {
    const std::string key(metric_column(kind));
    j[key] = detail::measure_json(quad.get(kind));
    if (!quad.get(kind)) reasons[key] = quad.get(kind).reason();
  }
  if (!reasons.empty()) j["undefined"] = reasons;
  return j;
}

inline MetricQuad quad_from_json(const Json& j) {
  MetricQuad quad;
  const Json reasons = j.value("undefined", Json::object());
  for (MetricKind kind : kAllMetrics) {
    const std::string key(metric_column(kind));
    quad.get(kind) = detail::measure_from(j.at(key), reasons, key);
  }
  return quad;
}

inline Json to_json(const ComparisonReport& r) {
  Json j = Json::object();
  j["task_id"] = r.task_id;
  Json models = Json::object();
  for (const auto& [model, quad] : r.quads) models[model] = quad_json(quad);
  j["models"] = models;

  Json rankings = Json::object();
  for (MetricKind kind : kAllMetrics) {
    Json ranks = Json::object();
    for (const auto& [model, rank] : r.rankings[static_cast<std::size_t>(kind)].ranks) {
      ranks[model] = rank;
    }
    rankings[std::string(metric_name(kind))] = ranks;
  }
  j["rankings"] = rankings;

  Json flips = Json::array();
  for (const FlipAnalysis& a : r.flips) {
    Json fa = Json::object();
    fa["metrics"] = {std::string(metric_name(a.first)), std::string(metric_name(a.second))};
    Json list = Json::array();
    for (const RankFlip& f : a.flips) {
      list.push_back({{"models", {f.model_a, f.model_b}},
                      {"leader_on_first", f.leader_on_first},
                      {"leader_on_second", f.leader_on_second}});
    }
    fa["flips"] = list;
    Json excluded = Json::array();
    for (const Exclusion& e : a.excluded) {
      excluded.push_back({{"model", e.model_id}, {"reason", e.reason}});
    }
    fa["excluded"] = excluded;
    fa["pairs_total"] = a.pairs_total;
    fa["pairs_compared"] = a.pairs_compared;
    fa["pairs_excluded"] = a.pairs_excluded;
    fa["pairs_tied"] = a.pairs_tied;
    flips.push_back(fa);
  }
  j["flips"] = flips;

  Json r2 = Json::object();
  r2["auroc_vs_s_auroc"] = detail::measure_json(r.r2.auroc_vs_s_auroc);
  r2["ap_vs_s_ap"] = detail::measure_json(r.r2.ap_vs_s_ap);
  Json r2_reasons = Json::object();
  if (!r.r2.auroc_vs_s_auroc) r2_reasons["auroc_vs_s_auroc"] = r.r2.auroc_vs_s_auroc.reason();
  if (!r.r2.ap_vs_s_ap) r2_reasons["ap_vs_s_ap"] = r.r2.ap_vs_s_ap.reason();
  if (!r2_reasons.empty()) r2["undefined"] = r2_reasons;
  j["r2"] = r2;
  return j;
}

inline ComparisonReport comparison_from_json(const Json& j) {
  try {
    ComparisonReport r;
    r.task_id = j.at("task_id").get<std::string>();
    for (const auto& [model, q] : j.at("models").items()) r.quads[model] = quad_from_json(q);
    for (MetricKind kind : kAllMetrics) {
      ModelRanking& ranking = r.rankings[static_cast<std::size_t>(kind)];
      ranking.metric_name = std::string(metric_name(kind));
      for (const auto& [model, rank] : j.at("rankings").at(ranking.metric_name).items()) {
        ranking.ranks[model] = rank.get<double>();
      }
    }
    const Json& flips = j.at("flips");
    if (flips.size() != r.flips.size()) throw Error(ErrorCode::kParse, "expected 2 flip analyses");
    for (std::size_t i = 0; i < r.flips.size(); ++i) {
      const Json& fa = flips[i];
      FlipAnalysis& a = r.flips[i];
      const auto first = parse_metric(fa.at("metrics").at(0).get<std::string>());
      const auto second = parse_metric(fa.at("metrics").at(1).get<std::string>());
      if (!first || !second) throw Error(ErrorCode::kParse, "unknown metric name");
      a.first = *first;
      a.second = *second;
      for (const Json& f : fa.at("flips")) {
        a.flips.push_back({f.at("models").at(0).get<std::string>(),
                           f.at("models").at(1).get<std::string>(),
                           f.at("leader_on_first").get<std::string>(),
                           f.at("leader_on_second").get<std::string>()});
      }
      for (const Json& e : fa.at("excluded")) {
        a.excluded.push_back({e.at("model").get<std::string>(), e.at("reason").get<std::string>()});
      }
      a.pairs_total = fa.at("pairs_total").get<std::size_t>();
      a.pairs_compared = fa.at("pairs_compared").get<std::size_t>();
      a.pairs_excluded = fa.at("pairs_excluded").get<std::size_t>();
      a.pairs_tied = fa.at("pairs_tied").get<std::size_t>();
      check_pair_arithmetic(a);
    }
    const Json& r2 = j.at("r2");
    const Json reasons = r2.value("undefined", Json::object());
    r.r2.auroc_vs_s_auroc = detail::measure_from(r2.at("auroc_vs_s_auroc"), reasons, "auroc_vs_s_auroc");
    r.r2.ap_vs_s_ap = detail::measure_from(r2.at("ap_vs_s_ap"), reasons, "ap_vs_s_ap");
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed comparison report: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::kParse, std::string("inconsistent comparison report: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Stability report.

inline Json to_json(const StabilityReport& r) {
  Json j = Json::object();
  j["seed"] = r.seed;
  j["iterations"] = r.iterations;
  j["models"] = r.models;
  j["items"] = r.items;
  j["label_ties"] = r.label_ties;
  j["primary_statistic"] = std::string(statistic_name(kPrimaryStatistic));

  Json metrics = Json::object();
  for (MetricKind kind : kAllMetrics) {
    const MetricStability& m = r.metric(kind);
    Json entry = Json::object();
    entry["mean_spearman"] = detail::measure_json(m.mean_spearman);
    entry["mean_kendall"] = detail::measure_json(m.mean_kendall);
    entry["skipped_iterations"] = {{"spearman", m.skipped_spearman},
                                   {"kendall", m.skipped_kendall}};
    Json ranks = Json::object();
    for (const auto& [model, rank] : r.reference_rankings[static_cast<std::size_t>(kind)].ranks) {
      ranks[model] = rank;
    }
    entry["reference_ranks"] = ranks;
    metrics[std::string(metric_name(kind))] = entry;
  }
  j["metrics"] = metrics;

  Json pairs = Json::object();
  for (std::size_t pi = 0; pi < kOrdinarySoftPairs.size(); ++pi) {
    const MetricPair& mp = kOrdinarySoftPairs[pi];
    Json by_stat = Json::object();
    for (RankStatistic stat : {RankStatistic::kSpearman, RankStatistic::kKendall}) {
      const PairComparison& c = r.pair(pi, stat);
      Json entry = {{"wins", c.wins_soft},
                    {"losses", c.wins_ordinary},
                    {"ties", c.ties},
                    {"skipped", c.skipped},
                    {"p_value", detail::measure_json(c.p_value)}};
      by_stat[std::string(statistic_name(stat))] = entry;
    }
    pairs[std::string(metric_name(mp.ordinary)) + "_vs_" + std::string(metric_name(mp.soft))] =
        by_stat;
  }
  j["pairs"] = pairs;
  return j;
}

}  // namespace softeval
