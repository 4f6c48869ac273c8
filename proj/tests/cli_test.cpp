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

// End-to-end runs of the softeval binary.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "softeval/serialize.hpp"
#include "support/generators.hpp"

namespace fs = std::filesystem;

namespace softeval {
namespace {

const std::string kCli = SOFTEVAL_CLI_PATH;
const fs::path kData = fs::path(SOFTEVAL_TEST_DATA_DIR) / "cli";

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("softeval_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliRun run(const std::vector<std::string>& args) {
    std::string cmd = quote(kCli);
    for (const std::string& a : args) cmd += " " + quote(a);
    cmd += " >" + quote((dir_ / "stdout").string()) + " 2>" + quote((dir_ / "stderr").string());
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(dir_ / "stdout");
    r.err = slurp(dir_ / "stderr");
    return r;
  }

  std::string data(const std::string& name) const { return (kData / name).string(); }
  fs::path path(const std::string& name) const { return dir_ / name; }

  // Noisy synthetic annotations and three score files; returns their paths.
  std::vector<std::string> write_synthetic(double flip_noise, std::uint64_t seed) {
    const auto study = testing::synthetic_study(
        {.seed = seed, .items = 60, .flip_noise = flip_noise, .separations = {1.0, 1.2, 1.4}});
    std::ofstream ann(path("annotations.csv"));
    ann << "item_id,annotator_id,rating\n";
    for (const AnnotatedItem& item : study.table.items()) {
      for (std::size_t k = 0; k < item.ratings.size(); ++k) {
        ann << item.item_id << ',' << item.annotator_ids[k] << ',' << item.ratings[k] << '\n';
      }
    }
    std::vector<std::string> files{path("annotations.csv").string()};
    for (const auto& [model, scores] : study.scores) {
      const fs::path p = path(model + ".csv");
      std::ofstream s(p);
      s << "item_id,score\n";
      for (std::size_t i = 0; i < scores.size(); ++i) {
        s << study.table.items()[i].item_id << ',' << format_real(scores[i]) << '\n';
      }
      files.push_back(p.string());
    }
    return files;
  }

  fs::path dir_;
};

TEST_F(CliTest, AggregateMergesRowsAndWritesLabels) {
  const CliRun r = run({"aggregate", "--annotations", data("annotations_3item.csv"), "--scale-min",
                     "0", "--scale-max", "2", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "item_id,p,y\nx1,0.66666666666666663,1\nx2,0.5,0\nx3,0,0\n");
  EXPECT_NE(r.err.find("1 item(s) resolved by the tie rule"), std::string::npos);
}

TEST_F(CliTest, AggregateJsonEchoesConfig) {
  const CliRun r = run({"aggregate", "--annotations", data("annotations_binary.csv"), "--scale-min",
                     "0", "--scale-max", "1", "--binarize", "majority", "--tie-policy", "positive"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = parse_json(r.out);
  EXPECT_EQ(j["config"]["binarize"], "majority");
  EXPECT_EQ(j["config"]["tie_policy"], "positive");
  EXPECT_EQ(j["labels"][1]["y"], 1);
  EXPECT_EQ(j["ties"], 1);
}

TEST_F(CliTest, MajorityRejectsNonBinaryRatingsAndErrorPolicyTies) {
  CliRun r = run({"aggregate", "--annotations", data("annotations_3item.csv"), "--scale-min", "0",
                  "--scale-max", "2", "--binarize", "majority"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("x2"), std::string::npos);
  r = run({"aggregate", "--annotations", data("annotations_binary.csv"), "--scale-min", "0",
           "--scale-max", "1", "--binarize", "majority", "--tie-policy", "error"});
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, EmptyAnnotationFilesExitTwo) {
  for (const char* f : {"annotations_empty.csv", "annotations_header_only.csv"}) {
    const CliRun r = run({"aggregate", "--annotations", data(f), "--scale-min", "0", "--scale-max", "2"});
    EXPECT_EQ(r.code, 2) << f;
    EXPECT_NE(r.err.find("error"), std::string::npos);
  }
}

TEST_F(CliTest, MissingScaleOrBadFlagExitTwo) {
  EXPECT_EQ(run({"aggregate", "--annotations", data("annotations_3item.csv")}).code, 2);
  EXPECT_EQ(run({"aggregate", "--no-such-flag"}).code, 2);
  EXPECT_EQ(run({"eval", "--labels", data("does_not_exist.csv"), "--scores",
                 data("perfect_scores.csv")}).code, 2);
}

TEST_F(CliTest, EvalPerfectBinaryFixtureIsAllOnes) {
  const CliRun r = run({"eval", "--labels", data("perfect_labels.csv"), "--scores",
                     data("perfect_scores.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json q = parse_json(r.out)["models"]["perfect_scores"];
  for (const char* k : {"auroc", "ap", "s_auroc", "s_ap"}) EXPECT_EQ(q[k], 1.0) << k;
}

TEST_F(CliTest, EvalReportsSingleApFlip) {
  const CliRun r = run({"eval", "--labels", data("flip_labels.csv"), "--scores", data("model_a.csv"),
                     data("model_b.csv"), "--task", "toy"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = parse_json(r.out);
  EXPECT_EQ(j["task_id"], "toy");
  ASSERT_EQ(j["flips"].size(), 2u);
  EXPECT_EQ(j["flips"][0]["flips"].size(), 0u);
  ASSERT_EQ(j["flips"][1]["flips"].size(), 1u);
  EXPECT_EQ(j["flips"][1]["flips"][0]["models"], Json::array({"model_a", "model_b"}));
}

TEST_F(CliTest, EvalWithManifestUsesItsModelIds) {
  const CliRun r = run({"eval", "--labels", data("flip_labels.csv"), "--manifest", data("manifest.csv"),
                     "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\ntask,alpha,"), std::string::npos);
  EXPECT_NE(r.out.find("\ntask,beta,"), std::string::npos);
}

TEST_F(CliTest, EvalUnknownItemExitsTwoAndNamesIt) {
  const CliRun r = run({"eval", "--labels", data("perfect_labels.csv"), "--scores",
                     data("unknown_item_scores.csv")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("zz"), std::string::npos);
  EXPECT_NE(r.err.find("n2"), std::string::npos);
}

TEST_F(CliTest, EvalUndefinedCellsStillSucceed) {
  const CliRun r = run({"eval", "--labels", data("all_positive_labels.csv"), "--scores",
                     data("model_a.csv"), data("model_b.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json q = parse_json(r.out)["models"]["model_a"];
  EXPECT_TRUE(q["auroc"].is_null());
  EXPECT_TRUE(q["undefined"].contains("auroc"));
  EXPECT_EQ(q["ap"], 1.0);
}

TEST_F(CliTest, DuplicateModelIdsAreAnError) {
  fs::create_directories(path("other"));
  fs::copy_file(data("model_a.csv"), path("other/model_a.csv"));
  const CliRun r = run({"eval", "--labels", data("flip_labels.csv"), "--scores", data("model_a.csv"),
                     path("other/model_a.csv").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--manifest"), std::string::npos);
}

TEST_F(CliTest, EvalWritesCurvesAndScatter) {
  const CliRun r = run({"eval", "--labels", data("flip_labels.csv"), "--scores", data("model_a.csv"),
                     data("model_b.csv"), "--curves-dir", path("curves").string(), "--scatter",
                     path("scatter.csv").string(), "--out", path("report.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_TRUE(fs::exists(path("report.json")));
  EXPECT_EQ(slurp(path("curves/model_a.roc.csv")).rfind("rank,fpr,tpr\n0,0,0\n", 0), 0u);
  EXPECT_TRUE(fs::exists(path("curves/model_b.pr.csv")));
  EXPECT_EQ(slurp(path("scatter.csv")).rfind("task,model,pair,ordinary,soft\n", 0), 0u);
}

TEST_F(CliTest, BootstrapNeedsRawAnnotations) {
  const CliRun r = run({"bootstrap", "--labels", data("flip_labels.csv"), "--scores",
                     data("model_a.csv"), data("model_b.csv")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("cannot be resampled"), std::string::npos);
}

TEST_F(CliTest, BootstrapIsByteIdenticalForAFixedSeed) {
  const auto files = write_synthetic(0.25, 5);
  std::vector<std::string> args{"bootstrap", "--annotations", files[0], "--scale-min", "0",
                                "--scale-max", "1", "--iterations", "50", "--seed", "7", "--scores"};
  args.insert(args.end(), files.begin() + 1, files.end());
  const CliRun a = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  const CliRun b = run(args);
  args.insert(args.end(), {"--workers", "4"});
  const CliRun c = run(args);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
  EXPECT_EQ(parse_json(a.out)["config"]["seed"], 7);
  EXPECT_FALSE(parse_json(a.out)["config"].contains("workers"));
}

TEST_F(CliTest, BootstrapUnanimousAnnotationsAreFullyStable) {
  const auto files = write_synthetic(0.0, 6);
  std::vector<std::string> args{"bootstrap", "--annotations", files[0], "--scale-min", "0",
                                "--scale-max", "1", "--iterations", "20", "--scores"};
  args.insert(args.end(), files.begin() + 1, files.end());
  const CliRun r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& [name, m] : parse_json(r.out)["metrics"].items()) {
    EXPECT_EQ(m["mean_spearman"], 1.0) << name;
    EXPECT_EQ(m["mean_kendall"], 1.0) << name;
  }
}

TEST_F(CliTest, BootstrapTalliesAddUp) {
  const auto files = write_synthetic(0.25, 8);
  std::vector<std::string> args{"bootstrap", "--annotations", files[0], "--scale-min", "0",
                                "--scale-max", "1", "--iterations", "200", "--binarize",
                                "majority", "--scores"};
  args.insert(args.end(), files.begin() + 1, files.end());
  const CliRun r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = parse_json(r.out);
  EXPECT_EQ(j["iterations"], 200);
  for (const auto& [pair, by_stat] : j["pairs"].items()) {
    for (const auto& [stat, c] : by_stat.items()) {
      EXPECT_EQ(c["wins"].get<int>() + c["losses"].get<int>() + c["ties"].get<int>(), 200)
          << pair << " " << stat;
    }
  }
}

TEST_F(CliTest, CompareBenchmarkTable) {
  const CliRun r = run({"compare", "--quads",
                     (fs::path(SOFTEVAL_TEST_DATA_DIR) / "benchmark_quads.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = parse_json(r.out);
  EXPECT_EQ(j["tasks"].size(), 8u);
  EXPECT_EQ(j["tasks"]["VinDr-Pneumothorax"]["flips"][0]["flips"].size(), 2u);
  EXPECT_EQ(j["tasks"]["ENHANCE-Border"]["flips"][1]["pairs_tied"], 1);
}

TEST_F(CliTest, ConfigFileValuesAreOverriddenByFlags) {
  {
    std::ofstream cfg(path("run.toml"));
    cfg << "annotations = \"" << data("annotations_3item.csv") << "\"\n"
        << "scale-min = 0\nscale-max = 2\nthreshold = 0.9\nformat = \"json\"\n";
  }
  const CliRun r = run({"aggregate", "--config", path("run.toml").string(), "--threshold", "0.6"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = parse_json(r.out);
  EXPECT_EQ(j["config"]["threshold"], 0.6);
  EXPECT_EQ(j["config"]["scale_max"], 2.0);
  EXPECT_EQ(j["labels"][0]["y"], 1);
}

TEST_F(CliTest, OutputWriteFailureIsAnInternalError) {
  if (!fs::exists("/dev/full")) GTEST_SKIP() << "/dev/full unavailable";
  const CliRun r = run({"aggregate", "--annotations", data("annotations_3item.csv"), "--scale-min",
                     "0", "--scale-max", "2", "--out", "/dev/full"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("internal error"), std::string::npos);
}

}  // namespace
}  // namespace softeval
