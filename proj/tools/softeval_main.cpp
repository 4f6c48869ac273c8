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

// softeval: aggregate annotations, evaluate rankers with ordinary and soft
// metrics, measure ranking stability under annotation bootstrap, and compare
// precomputed metric tables.
//
// Exit codes: 0 success, 2 input/validation error, 1 internal error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "softeval/softeval.hpp"

namespace fs = std::filesystem;
using namespace softeval;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

struct RunConfig {
  std::string annotations;
  std::string labels;
  std::vector<std::string> scores;
  std::string manifest;
  std::string quads;
  std::optional<double> scale_min;
  std::optional<double> scale_max;
  std::string binarize = "threshold";
  double threshold = 0.5;
  bool inclusive = false;
  std::string tie_policy = "negative";
  std::string tie_mode = "stable";
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string task = "task";
  std::string out;
  std::string format = "json";
  std::string curves_dir;
  std::string scatter;
};

// Echoed into every report. Worker count is omitted: it never changes output.
Json effective_config(const RunConfig& c, const std::string& command) {
  Json j = Json::object();
  j["command"] = command;
  if (!c.annotations.empty()) j["annotations"] = c.annotations;
  if (!c.labels.empty()) j["labels"] = c.labels;
  if (!c.scores.empty()) j["scores"] = c.scores;
  if (!c.manifest.empty()) j["manifest"] = c.manifest;
  if (!c.quads.empty()) j["quads"] = c.quads;
  if (c.scale_min) j["scale_min"] = *c.scale_min;
  if (c.scale_max) j["scale_max"] = *c.scale_max;
  j["binarize"] = c.binarize;
  if (c.binarize == "threshold") {
    j["threshold"] = c.threshold;
    j["threshold_mode"] = c.inclusive ? "inclusive" : "strict";
  } else {
    j["tie_policy"] = c.tie_policy;
  }
  j["tie_mode"] = c.tie_mode;
  if (command == "bootstrap") {
    j["iterations"] = c.iterations;
    j["seed"] = c.seed;
  }
  j["task"] = c.task;
  j["format"] = c.format;
  return j;
}

RatingScale scale_of(const RunConfig& c) {
  if (!c.scale_min || !c.scale_max) {
    throw Error(ErrorCode::kConfig,
                "--scale-min and --scale-max are required with --annotations "
                "(the rating scale is never inferred from data)");
  }
  return RatingScale(*c.scale_min, *c.scale_max);
}

AggregationPipeline pipeline_of(const RunConfig& c) {
  AggregationPipeline pipeline{scale_of(c), ThresholdRule{}};
  if (c.binarize == "threshold") {
    if (!(c.threshold >= 0.0 && c.threshold <= 1.0)) {
      throw Error(ErrorCode::kConfig, "--threshold must lie in [0,1]");
    }
    pipeline.rule = ThresholdRule{c.threshold,
                                  c.inclusive ? ThresholdMode::kInclusive : ThresholdMode::kStrict};
  } else {
    TiePolicy policy = TiePolicy::kNegative;
    if (c.tie_policy == "positive") policy = TiePolicy::kPositive;
    if (c.tie_policy == "error") policy = TiePolicy::kError;
    pipeline.rule = MajorityRule{policy};
  }
  return pipeline;
}

TieMode tie_mode_of(const RunConfig& c) {
  return c.tie_mode == "block" ? TieMode::kBlockTrapezoid : TieMode::kStable;
}

// Writes to --out, or stdout when unset.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw Error(ErrorCode::kConfig, "cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

  // A failed write is not the user's input at fault; it maps to exit 1.
  void finish() {
    stream().flush();
    if (!stream()) throw std::runtime_error("failed writing output");
  }

 private:
  std::ofstream file_;
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kConfig, "cannot write '" + path.string() + "'");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::vector<io::ModelScores> load_scores(const RunConfig& c) {
  std::vector<io::ModelScores> models;
  if (!c.manifest.empty()) {
    if (!c.scores.empty()) {
      throw Error(ErrorCode::kConfig, "give either --manifest or --scores, not both");
    }
    for (const io::ManifestEntry& e : io::read_manifest(c.manifest)) {
      const io::CsvTable t = io::read_csv(e.path);
      if (!t.column("score")) {
        throw Error(ErrorCode::kConfig, "manifest entry '" + e.model_id + "' (" +
                                            e.path.string() +
                                            ") must be a single-model file with a 'score' column");
      }
      for (io::ModelScores& m : io::scores_from_csv(t, e.model_id)) models.push_back(std::move(m));
    }
  } else {
    for (const std::string& path : c.scores) {
      for (io::ModelScores& m : io::read_scores(path)) models.push_back(std::move(m));
    }
  }
  if (models.empty()) throw Error(ErrorCode::kConfig, "no score files given (--scores or --manifest)");
  std::map<std::string, std::string> seen;
  for (const io::ModelScores& m : models) {
    auto [it, inserted] = seen.emplace(m.model_id, m.source);
    if (!inserted) {
      throw Error(ErrorCode::kConfig, "ambiguous model id '" + m.model_id + "' from " + it->second +
                                          " and " + m.source + "; use --manifest");
    }
  }
  return models;
}

// Exact item-set agreement between one model's scores and the label items.
void check_alignment(const io::ModelScores& model, const std::set<std::string>& label_items) {
  std::vector<std::string> offending;
  std::set<std::string> scored;
  for (const auto& [item, score] : model.scores) {
    scored.insert(item);
    if (!label_items.count(item)) offending.push_back(item + " (no label)");
  }
  for (const std::string& item : label_items) {
    if (!scored.count(item)) offending.push_back(item + " (no score)");
  }
  if (offending.empty()) return;
  std::ostringstream msg;
  msg << "model '" << model.model_id << "': " << offending.size()
      << " item id(s) do not match the labels; first ids:";
  for (std::size_t i = 0; i < offending.size() && i < 10; ++i) msg << ' ' << offending[i];
  throw Error(ErrorCode::kMismatch, msg.str());
}

struct LabelSource {
  std::vector<io::LabelRow> rows;
  std::size_t ties = 0;
};

LabelSource load_labels(const RunConfig& c) {
  if (!c.labels.empty() && !c.annotations.empty()) {
    throw Error(ErrorCode::kConfig, "give either --labels or --annotations, not both");
  }
  LabelSource src;
  if (!c.labels.empty()) {
    src.rows = io::read_labels(c.labels);
    return src;
  }
  if (c.annotations.empty()) throw Error(ErrorCode::kConfig, "need --labels or --annotations");
  const AnnotationTable table = io::read_annotations(c.annotations, scale_of(c));
  for (const LabelRecord& l : aggregate_table(table, pipeline_of(c))) {
    src.rows.push_back({l.item_id, l.p, l.y});
    if (l.tie) ++src.ties;
  }
  return src;
}

int cmd_aggregate(const RunConfig& c) {
  if (c.annotations.empty()) throw Error(ErrorCode::kConfig, "aggregate needs --annotations");
  const AnnotationTable table = io::read_annotations(c.annotations, scale_of(c));
  const std::vector<LabelRecord> labels = aggregate_table(table, pipeline_of(c));
  const std::size_t ties =
      std::count_if(labels.begin(), labels.end(), [](const LabelRecord& l) { return l.tie; });
  Output out(c.out);
  if (c.format == "json") {
    Json j = Json::object();
    j["config"] = effective_config(c, "aggregate");
    j["ties"] = ties;
    Json rows = Json::array();
    for (const LabelRecord& l : labels) {
      rows.push_back({{"item_id", l.item_id}, {"p", l.p.p()}, {"y", to_int(l.y)}, {"tie", l.tie}});
    }
    j["labels"] = rows;
    out.stream() << canonical_dump(j);
  } else {
    io::write_labels(out.stream(), labels);
  }
  out.finish();
  if (ties) std::cerr << "note: " << ties << " item(s) resolved by the tie rule\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& c) {
  const LabelSource labels = load_labels(c);
  const std::vector<io::ModelScores> models = load_scores(c);
  std::map<std::string, const io::LabelRow*> by_item;
  std::set<std::string> label_items;
  for (const io::LabelRow& row : labels.rows) {
    by_item[row.item_id] = &row;
    label_items.insert(row.item_id);
  }
  for (const io::ModelScores& m : models) check_alignment(m, label_items);

  const TieMode tie_mode = tie_mode_of(c);
  QuadsByModel quads;
  std::map<std::string, LabeledScoreSet> sets;
  for (const io::ModelScores& m : models) {
    std::vector<ScoredItem> items;
    items.reserve(m.scores.size());
    for (const auto& [item, score] : m.scores) {
      const io::LabelRow& l = *by_item.at(item);
      items.push_back({item, score, l.p, l.y});
    }
    LabeledScoreSet set = canonical_sort(LabeledScoreSet(std::move(items)));
    quads[m.model_id] = metric_quad(set, tie_mode);
    sets.emplace(m.model_id, std::move(set));
  }
  const ComparisonReport report = build_comparison(c.task, quads);

  if (!c.curves_dir.empty()) {
    fs::create_directories(c.curves_dir);
    for (const auto& [model, set] : sets) {
      const CumulativeCounts counts = cumulative_counts(soft_labels_of(set));
      try {
        std::ostringstream roc;
        io::write_roc_curve(roc, roc_curve_from_counts(counts));
        write_file(fs::path(c.curves_dir) / (model + ".roc.csv"), roc.str());
      } catch (const Error& e) {
        std::cerr << "warning: no ROC curve for '" << model << "': " << e.what() << '\n';
      }
      try {
        std::ostringstream pr;
        io::write_pr_curve(pr, pr_curve_from_counts(counts));
        write_file(fs::path(c.curves_dir) / (model + ".pr.csv"), pr.str());
      } catch (const Error& e) {
        std::cerr << "warning: no PR curve for '" << model << "': " << e.what() << '\n';
      }
    }
  }
  if (!c.scatter.empty()) {
    std::ostringstream s;
    io::write_scatter_csv(s, {report});
    write_file(c.scatter, s.str());
  }

  Output out(c.out);
  if (c.format == "json") {
    Json j = to_json(report);
    j["config"] = effective_config(c, "eval");
    j["label_ties"] = labels.ties;
    out.stream() << canonical_dump(j);
  } else {
    io::write_flat_csv_header(out.stream());
    io::write_flat_csv_rows(out.stream(), report);
  }
  out.finish();
  return kExitOk;
}

int cmd_bootstrap(const RunConfig& c) {
  if (c.annotations.empty()) {
    throw Error(ErrorCode::kConfig,
                "bootstrap needs raw annotations (--annotations): aggregated labels cannot be "
                "resampled, since resampling draws from each item's unaggregated ratings");
  }
  const AnnotationTable table = io::read_annotations(c.annotations, scale_of(c));
  const std::vector<io::ModelScores> models = load_scores(c);
  if (models.size() < 2) throw Error(ErrorCode::kConfig, "bootstrap needs at least 2 models");
  std::set<std::string> items;
  for (const AnnotatedItem& it : table.items()) items.insert(it.item_id);
  std::map<std::string, std::vector<double>> scores_by_model;
  for (const io::ModelScores& m : models) {
    check_alignment(m, items);
    std::map<std::string, double> lookup(m.scores.begin(), m.scores.end());
    std::vector<double> aligned;
    aligned.reserve(table.size());
    for (const AnnotatedItem& it : table.items()) aligned.push_back(lookup.at(it.item_id));
    scores_by_model[m.model_id] = std::move(aligned);
  }
  BootstrapConfig config;
  config.iterations = c.iterations;
  config.seed = c.seed;
  config.aggregation = pipeline_of(c);
  config.tie_mode = tie_mode_of(c);
  config.workers = c.workers;
  const StabilityReport report = bootstrap_stability(table, std::move(scores_by_model), config);

  Output out(c.out);
  if (c.format == "json") {
    Json j = to_json(report);
    j["config"] = effective_config(c, "bootstrap");
    out.stream() << canonical_dump(j);
  } else {
    std::ostream& os = out.stream();
    os << "metric,mean_spearman,mean_kendall,skipped_spearman,skipped_kendall\n";
    for (MetricKind kind : kAllMetrics) {
      const MetricStability& m = report.metric(kind);
      os << metric_name(kind) << ',' << io::cell(m.mean_spearman) << ','
         << io::cell(m.mean_kendall) << ',' << m.skipped_spearman << ',' << m.skipped_kendall
         << '\n';
    }
  }
  out.finish();
  return kExitOk;
}

int cmd_compare(const RunConfig& c) {
  if (c.quads.empty()) throw Error(ErrorCode::kConfig, "compare needs --quads");
  const auto tasks = io::quads_from_csv(io::read_csv(c.quads), c.task);
  std::vector<ComparisonReport> reports;
  for (const auto& [task, quads] : tasks) reports.push_back(build_comparison(task, quads));
  if (!c.scatter.empty()) {
    std::ostringstream s;
    io::write_scatter_csv(s, reports);
    write_file(c.scatter, s.str());
  }
  Output out(c.out);
  if (c.format == "json") {
    Json j = Json::object();
    j["config"] = effective_config(c, "compare");
    Json by_task = Json::object();
    for (const ComparisonReport& r : reports) by_task[r.task_id] = to_json(r);
    j["tasks"] = by_task;
    out.stream() << canonical_dump(j);
  } else {
    io::write_flat_csv_header(out.stream());
    for (const ComparisonReport& r : reports) io::write_flat_csv_rows(out.stream(), r);
  }
  out.finish();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uncertainty-aware evaluation of binary rankers against soft labels"};
  app.set_config("--config", "", "Read options from a TOML/INI file; flags override it");
  app.require_subcommand(1);

  RunConfig c;
  double scale_min = 0.0;
  double scale_max = 0.0;
  bool strict = false;
  app.add_option("--annotations", c.annotations, "Long-format CSV: item_id,annotator_id,rating");
  app.add_option("--labels", c.labels, "Aggregated labels CSV: item_id,p,y");
  app.add_option("--scores", c.scores, "Score CSV(s): item_id,score or item_id,score_<model>...");
  app.add_option("--manifest", c.manifest, "CSV model_id,path naming each score file");
  app.add_option("--quads", c.quads, "CSV [task,]model,auroc,ap,s_auroc,s_ap (compare)");
  auto* smin = app.add_option("--scale-min", scale_min, "Rating scale lower bound");
  auto* smax = app.add_option("--scale-max", scale_max, "Rating scale upper bound");
  app.add_option("--binarize", c.binarize, "Hard-label rule")
      ->check(CLI::IsMember({"threshold", "majority"}));
  app.add_option("--threshold", c.threshold, "Threshold on the normalized mean");
  auto* strict_flag = app.add_flag("--strict", strict, "Positive iff p > threshold (default)");
  app.add_flag("--inclusive", c.inclusive, "Positive iff p >= threshold")->excludes(strict_flag);
  app.add_option("--tie-policy", c.tie_policy, "Majority-vote exact split")
      ->check(CLI::IsMember({"negative", "positive", "error"}));
  app.add_option("--tie-mode", c.tie_mode, "Tied scores: per-item steps or block trapezoid")
      ->check(CLI::IsMember({"stable", "block"}));
  app.add_option("--iterations", c.iterations, "Bootstrap replicates")->check(CLI::PositiveNumber);
  app.add_option("--seed", c.seed, "Bootstrap master seed");
  app.add_option("--workers", c.workers, "Bootstrap threads (does not affect results)")
      ->check(CLI::PositiveNumber);
  app.add_option("--task", c.task, "Task id recorded in reports");
  app.add_option("--out", c.out, "Output path (default: stdout)");
  app.add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--curves-dir", c.curves_dir, "eval: write <model>.roc.csv / <model>.pr.csv here");
  app.add_option("--scatter", c.scatter, "eval/compare: write ordinary-vs-soft point pairs CSV");

  auto* aggregate = app.add_subcommand("aggregate", "Annotations -> item_id,p,y");
  auto* eval = app.add_subcommand("eval", "Per-model AUROC, AP, s-AUROC, s-AP with flips and R^2");
  auto* bootstrap = app.add_subcommand("bootstrap", "Ranking stability under annotation bootstrap");
  auto* compare = app.add_subcommand("compare", "Flips and R^2 from precomputed metric tables");
  for (auto* sub : {aggregate, eval, bootstrap, compare}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }
  if (smin->count() > 0) c.scale_min = scale_min;
  if (smax->count() > 0) c.scale_max = scale_max;

  try {
    if (*aggregate) return cmd_aggregate(c);
    if (*eval) return cmd_eval(c);
    if (*bootstrap) return cmd_bootstrap(c);
    if (*compare) return cmd_compare(c);
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
