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

// CSV readers and writers for annotations, labels, scores, quads, curves.
// All reals are written with 17 significant digits.

#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "softeval/error.hpp"
#include "softeval/labels.hpp"
#include "softeval/report.hpp"
#include "softeval/serialize.hpp"
#include "softeval/softmetrics.hpp"

namespace softeval::io {

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  // Column index by name, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  }

  std::size_t require_column(std::string_view name) const {
    auto c = column(name);
    if (!c) {
      throw Error(ErrorCode::kParse,
                  source + ": missing required column '" + std::string(name) + "'");
    }
    return *c;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// RFC 4180-style fields: commas split, double quotes group, "" escapes a
// quote. Records do not span lines.
inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no,
                                               const std::string& source) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? field : trim(field));
      field.clear();
      was_quoted = false;
    } else {
      field += c;
    }
  }
  if (quoted) {
    throw Error(ErrorCode::kParse,
                source + ":" + std::to_string(line_no) + ": unterminated quoted field");
  }
  fields.push_back(was_quoted ? field : trim(field));
  return fields;
}

}  // namespace detail

inline CsvTable parse_csv(std::istream& in, std::string source) {
  CsvTable table;
  table.source = std::move(source);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> fields = detail::split_csv_line(line, line_no, table.source);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(ErrorCode::kParse, table.source + ":" + std::to_string(line_no) +
                                         ": expected " + std::to_string(table.header.size()) +
                                         " fields, got " + std::to_string(fields.size()));
    }
    table.rows.push_back({line_no, std::move(fields)});
  }
  if (!have_header) throw Error(ErrorCode::kParse, table.source + ": empty file (no header)");
  return table;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParse, "cannot open '" + path.string() + "'");
  return parse_csv(in, path.string());
}

inline double parse_real(std::string_view raw, const std::string& where) {
  const std::string text = detail::trim(raw);
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kParse, where + ": '" + std::string(text) + "' is not a number");
  }
  if (std::isnan(value)) throw Error(ErrorCode::kParse, where + ": NaN is not allowed");
  return value;
}

inline std::string where(const CsvTable& t, const CsvRow& row) {
  return t.source + ":" + std::to_string(row.line);
}

// ---------------------------------------------------------------------------
// Annotations: item_id,annotator_id,rating (long format).

inline AnnotationTable annotations_from_csv(const CsvTable& t, const RatingScale& scale) {
  const std::size_t c_item = t.require_column("item_id");
  const std::size_t c_annotator = t.require_column("annotator_id");
  const std::size_t c_rating = t.require_column("rating");
  if (t.rows.empty()) throw Error(ErrorCode::kEmptyAnnotations, t.source + ": no annotation rows");
  AnnotationTable::Builder builder;
  for (const CsvRow& row : t.rows) {
    const std::string& item = row.fields[c_item];
    if (item.empty()) throw Error(ErrorCode::kParse, where(t, row) + ": empty item_id");
    const std::string& text = row.fields[c_rating];
    if (text.empty()) {
      throw Error(ErrorCode::kParse, where(t, row) + ": missing rating for item '" + item + "'");
    }
    const double rating = parse_real(text, where(t, row));
    if (!scale.contains(rating)) {
      throw Error(ErrorCode::kOutOfRange, where(t, row) + ": rating " + format_real(rating) +
                                              " outside scale for item '" + item + "'");
    }
    builder.add(item, row.fields[c_annotator], rating);
  }
  return std::move(builder).build(scale);
}

inline AnnotationTable read_annotations(const std::filesystem::path& path,
                                        const RatingScale& scale) {
  return annotations_from_csv(read_csv(path), scale);
}

// ---------------------------------------------------------------------------
// Labels: item_id,p,y (y may be empty).

struct LabelRow {
  std::string item_id;
  SoftLabel p;
  std::optional<HardLabel> y;
};

inline void write_labels(std::ostream& out, const std::vector<LabelRecord>& labels) {
  out << "item_id,p,y\n";
  for (const LabelRecord& l : labels) {
    out << l.item_id << ',' << format_real(l.p.p()) << ',' << to_int(l.y) << '\n';
  }
}

inline std::vector<LabelRow> labels_from_csv(const CsvTable& t) {
  const std::size_t c_item = t.require_column("item_id");
  const std::size_t c_p = t.require_column("p");
  const auto c_y = t.column("y");
  std::vector<LabelRow> out;
  std::set<std::string> seen;
  for (const CsvRow& row : t.rows) {
    const std::string& item = row.fields[c_item];
    if (!seen.insert(item).second) {
      throw Error(ErrorCode::kDuplicateItem, where(t, row) + ": duplicate item '" + item + "'");
    }
    const double p = parse_real(row.fields[c_p], where(t, row));
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::kOutOfRange, where(t, row) + ": p outside [0,1]");
    }
    std::optional<HardLabel> y;
    if (c_y && !row.fields[*c_y].empty()) {
      const std::string& ys = row.fields[*c_y];
      if (ys != "0" && ys != "1") {
        throw Error(ErrorCode::kInvalidLabel, where(t, row) + ": y must be 0 or 1");
      }
      y = ys == "1" ? HardLabel::kPositive : HardLabel::kNegative;
    }
    out.push_back({item, SoftLabel(p), y});
  }
  if (out.empty()) throw Error(ErrorCode::kParse, t.source + ": no label rows");
  return out;
}

inline std::vector<LabelRow> read_labels(const std::filesystem::path& path) {
  return labels_from_csv(read_csv(path));
}

// ---------------------------------------------------------------------------
// Scores: item_id,score (model id from the file stem) or wide
// item_id,score_<model>,...

struct ModelScores {
  std::string model_id;
  std::string source;
  // Insertion order of items is preserved.
  std::vector<std::pair<std::string, double>> scores;
};

inline std::vector<ModelScores> scores_from_csv(const CsvTable& t,
                                                const std::string& default_model_id) {
  const std::size_t c_item = t.require_column("item_id");
  std::vector<std::pair<std::size_t, std::string>> columns;
  if (auto c = t.column("score")) {
    if (default_model_id.empty()) {
      throw Error(ErrorCode::kConfig, t.source + ": cannot derive a model id");
    }
    columns.emplace_back(*c, default_model_id);
  }
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    const std::string& h = t.header[i];
    if (h.rfind("score_", 0) == 0) {
      if (h.size() == 6) throw Error(ErrorCode::kParse, t.source + ": empty model name in 'score_'");
      columns.emplace_back(i, h.substr(6));
    }
  }
  if (columns.empty()) {
    throw Error(ErrorCode::kParse, t.source + ": need a 'score' column or 'score_<model>' columns");
  }
  if (columns.size() > 1 && t.column("score")) {
    throw Error(ErrorCode::kParse, t.source + ": mixes 'score' with 'score_<model>' columns");
  }
  std::vector<ModelScores> out;
  for (const auto& [col, model] : columns) {
    ModelScores ms{model, t.source, {}};
    std::set<std::string> seen;
    for (const CsvRow& row : t.rows) {
      const std::string& item = row.fields[c_item];
      if (!seen.insert(item).second) {
        throw Error(ErrorCode::kDuplicateItem, where(t, row) + ": duplicate item '" + item + "'");
      }
      const double s = parse_real(row.fields[col], where(t, row));
      if (!std::isfinite(s)) {
        throw Error(ErrorCode::kInvalidScore, where(t, row) + ": non-finite score");
      }
      ms.scores.emplace_back(item, s);
    }
    out.push_back(std::move(ms));
  }
  return out;
}

inline std::vector<ModelScores> read_scores(const std::filesystem::path& path,
                                            const std::string& model_id = {}) {
  return scores_from_csv(read_csv(path), model_id.empty() ? path.stem().string() : model_id);
}

struct ManifestEntry {
  std::string model_id;
  std::filesystem::path path;
};

// model_id,path; relative paths resolve against the manifest's directory.
inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t c_model = t.require_column("model_id");
  const std::size_t c_path = t.require_column("path");
  std::vector<ManifestEntry> out;
  for (const CsvRow& row : t.rows) {
    std::filesystem::path p = row.fields[c_path];
    if (p.is_relative()) p = path.parent_path() / p;
    if (row.fields[c_model].empty()) {
      throw Error(ErrorCode::kParse, where(t, row) + ": empty model_id");
    }
    out.push_back({row.fields[c_model], p});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Precomputed quads: [task,]model,auroc,ap,s_auroc,s_ap. Empty cell =
// undefined.

inline std::map<std::string, QuadsByModel> quads_from_csv(const CsvTable& t,
                                                          const std::string& default_task) {
  const auto c_task = t.column("task");
  const std::size_t c_model = t.require_column("model");
  std::array<std::size_t, 4> cols{};
  for (MetricKind kind : kAllMetrics) {
    cols[static_cast<std::size_t>(kind)] = t.require_column(metric_column(kind));
  }
  std::map<std::string, QuadsByModel> out;
  for (const CsvRow& row : t.rows) {
    const std::string task = c_task ? row.fields[*c_task] : default_task;
    const std::string& model = row.fields[c_model];
    MetricQuad quad;
    for (MetricKind kind : kAllMetrics) {
      const std::string& cell = row.fields[cols[static_cast<std::size_t>(kind)]];
      quad.get(kind) = cell.empty()
                           ? Measure::undefined("empty cell")
                           : Measure::of(parse_real(cell, where(t, row)));
    }
    if (!out[task].emplace(model, quad).second) {
      throw Error(ErrorCode::kDuplicateItem,
                  where(t, row) + ": duplicate model '" + model + "' in task '" + task + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::kParse, t.source + ": no quad rows");
  return out;
}

// ---------------------------------------------------------------------------
// Writers.

inline std::string cell(const Measure& m) { return m ? format_real(m.value()) : std::string(); }

inline void write_roc_curve(std::ostream& out, const std::vector<RocPoint>& curve) {
  out << "rank,fpr,tpr\n";
  for (const RocPoint& p : curve) {
    out << p.rank << ',' << format_real(p.fpr) << ',' << format_real(p.tpr) << '\n';
  }
}

inline void write_pr_curve(std::ostream& out, const std::vector<PrPoint>& curve) {
  out << "rank,recall,precision\n";
  for (const PrPoint& p : curve) {
    out << p.rank << ',' << format_real(p.recall) << ','
        << (p.precision ? format_real(*p.precision) : std::string()) << '\n';
  }
}

inline void write_flat_csv_header(std::ostream& out) {
  out << "task,model";
  for (MetricKind kind : kAllMetrics) out << ',' << metric_column(kind);
  for (MetricKind kind : kAllMetrics) out << ",rank_" << metric_column(kind);
  out << '\n';
}

inline void write_flat_csv_rows(std::ostream& out, const ComparisonReport& r) {
  for (const auto& [model, quad] : r.quads) {
    out << r.task_id << ',' << model;
    for (MetricKind kind : kAllMetrics) out << ',' << cell(quad.get(kind));
    for (MetricKind kind : kAllMetrics) {
      const auto& ranks = r.rankings[static_cast<std::size_t>(kind)].ranks;
      auto it = ranks.find(model);
      out << ',' << (it == ranks.end() ? std::string() : format_real(it->second));
    }
    out << '\n';
  }
}

// One row per (model, ordinary/soft pair) for scatter plots.
inline void write_scatter_csv(std::ostream& out, const std::vector<ComparisonReport>& reports) {
  out << "task,model,pair,ordinary,soft\n";
  for (const ComparisonReport& r : reports) {
    for (const auto& [model, quad] : r.quads) {
      for (const MetricPair& mp : kOrdinarySoftPairs) {
        out << r.task_id << ',' << model << ',' << metric_column(mp.ordinary) << '_'
            << metric_column(mp.soft) << ',' << cell(quad.get(mp.ordinary)) << ','
            << cell(quad.get(mp.soft)) << '\n';
      }
    }
  }
}

}  // namespace softeval::io
