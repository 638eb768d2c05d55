// Copyright 2026 The lnecg Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lnecg/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "gtest/gtest.h"

namespace lnecg {
namespace {

namespace fs = std::filesystem;

constexpr char kToyConfig[] = R"(
# ToyGame with the reference learning rates.
[problem]
name = toy

[run]
steps = 400

[generator]
schedule = const:3.75e-8
init = 0.5

[discriminator]
schedule = const:1e-6
init = 9.0
)";

std::string ErrorOf(const std::string& text) {
  try {
    parse_config(text);
  } catch (const UsageError& e) {
    return e.what();
  }
  return "";
}

fs::path TempDir(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("lnecg_" + name);
  fs::remove_all(p);
  return p;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Summary text with the trailing wall-time column removed.
std::string WithoutWallTime(const std::string& csv) {
  std::stringstream in(csv), out;
  std::string line;
  while (std::getline(in, line)) out << line.substr(0, line.rfind(',')) << '\n';
  return out.str();
}

TEST(ParseConfigTest, ToyConfigEchoesValues) {
  const ExperimentSpec s = parse_config(kToyConfig);
  EXPECT_EQ(s.base.problem.name, "toy");
  EXPECT_EQ(s.base.steps, 400);
  EXPECT_EQ(s.base.generator.schedule.kind, ScheduleKind::kConstant);
  EXPECT_EQ(s.base.generator.schedule.a, 3.75e-8);
  EXPECT_EQ(s.base.discriminator.schedule.a, 1e-6);
  EXPECT_EQ(*s.base.generator.init, ParameterVector{0.5});
  EXPECT_EQ(*s.base.discriminator.init, ParameterVector{9.0});
  EXPECT_EQ(s.base.generator.beta.kind, BetaKind::kZero);
  EXPECT_EQ(s.toy.momentum_coeff, 0.9);
  EXPECT_EQ(s.toy.cg_a, 2.5e-8);
  EXPECT_EQ(s.toy.cg_b, 5e-7);
  EXPECT_EQ(expand_grid(s).size(), 1u);
}

TEST(ParseConfigTest, DefaultsForEmptyDocument) {
  const ExperimentSpec s = parse_config("");
  EXPECT_EQ(s.base.problem.name, "toy");
  EXPECT_EQ(s.base.sampling, SamplingMode::kEpoch);
  EXPECT_EQ(s.grid_cap, 10000u);
  EXPECT_FALSE(s.metrics.vi);
}

TEST(ParseConfigTest, RejectsHagerZhangMuBelowQuarter) {
  const std::string err = ErrorOf("[generator]\nbeta = hz:0.2\n");
  EXPECT_NE(err.find("generator.beta"), std::string::npos) << err;
  EXPECT_NE(err.find("1/4"), std::string::npos) << err;
  EXPECT_NE(ErrorOf("[grid]\nbeta = fr, hz:0.2\n").find("grid.beta"),
            std::string::npos);
}

TEST(ParseConfigTest, UnknownKeysAndSectionsNameThePath) {
  EXPECT_NE(ErrorOf("[generator]\nshedule = const:1\n").find("generator.shedule"),
            std::string::npos);
  EXPECT_NE(ErrorOf("[optimizer]\nlr = 1\n").find("[optimizer]"),
            std::string::npos);
  EXPECT_NE(ErrorOf("steps = 4\n").find("outside any section"), std::string::npos);
}

TEST(ParseConfigTest, MalformedValuesNameThePath) {
  EXPECT_NE(ErrorOf("[run]\nsteps = ten\n").find("run.steps"), std::string::npos);
  EXPECT_NE(ErrorOf("[run]\nsteps = 0\n").find("run.steps"), std::string::npos);
  EXPECT_NE(ErrorOf("[run]\nsampling = sometimes\n").find("run.sampling"),
            std::string::npos);
  EXPECT_NE(ErrorOf("[generator]\nschedule = power:1:2\n").find("generator.schedule"),
            std::string::npos);
  EXPECT_NE(ErrorOf("[problem]\nname = lq\n[generator]\ninit = 1, 2\n")
                .find("generator.init"),
            std::string::npos);
  EXPECT_NE(ErrorOf("[run]\nsteps = 3\nsteps = 4\n"), "");  // duplicate key
  EXPECT_NE(ErrorOf("[run\nsteps = 3\n"), "");              // broken header
  EXPECT_NE(ErrorOf("[problem]\nname = gan\n"), "");
  EXPECT_NE(ErrorOf("[run]\nbatch_size = 2\n").find("batch_size"),
            std::string::npos);  // toy has one sample
  EXPECT_NE(ErrorOf("[grid]\na = 1e-3, 1e-3\n").find("duplicate"),
            std::string::npos);
}

TEST(ParseConfigTest, GridCapIsEnforced) {
  const std::string text =
      "[grid]\na = 1,2,3,4,5\nb = 1,2,3,4,5\nseeds = 0..9\ncap = 100\n";
  EXPECT_NE(ErrorOf(text).find("cap"), std::string::npos);
  EXPECT_EQ(ErrorOf("[grid]\nseeds = 0..9999\n"), "");
  EXPECT_NE(ErrorOf("[grid]\nseeds = 0..10000\n").find("cap"), std::string::npos);
}

TEST(ParseConfigTest, SeedsListsAndRanges) {
  const ExperimentSpec s = parse_config("[grid]\nseeds = 7, 0..2\n");
  EXPECT_EQ(s.seeds, (std::vector<std::uint64_t>{7, 0, 1, 2}));
}

TEST(ParseConfigTest, CommentsAndWhitespace) {
  const ExperimentSpec s =
      parse_config("; comment\n# another\n[run]\n  steps =   12  \n");
  EXPECT_EQ(s.base.steps, 12);
}

TEST(ParseConfigTest, LogPointsAddRecordSteps) {
  const ExperimentSpec s = parse_config("[run]\nsteps = 1000\ntrace_stride = 1000\nlog_points = 20\n");
  EXPECT_EQ(s.base.extra_record_steps.size(), 20u);
  EXPECT_EQ(s.base.extra_record_steps.front(), 1);
}

constexpr char kLqGrid[] = R"(
[problem]
name = lq

[run]
steps = 50
batch_size = 4
trace_stride = 10

[generator]
schedule = const:1e-3
beta = fr

[discriminator]
schedule = const:1e-3
beta = fr

[grid]
a = 5e-5, 1e-4, 5e-4, 1e-3, 5e-3
b = 5e-5, 1e-4, 5e-4, 1e-3, 5e-3
seeds = 0..2
)";

TEST(RunGridTest, FiveByFiveByThreeGivesSeventyFiveRows) {
  ExperimentSpec s = parse_config(kLqGrid);
  const fs::path dir = TempDir("grid75");
  s.output_dir = dir.string();
  const SummaryTable t = run_grid(s, 4);
  ASSERT_EQ(t.rows.size(), 75u);
  for (const SummaryRow& r : t.rows) EXPECT_EQ(r.status, "ok") << r.message;
  EXPECT_TRUE(fs::exists(dir / "summary.csv"));
  EXPECT_TRUE(fs::exists(dir / "lq_fr_5e-05_0.0001_0.csv"));
  EXPECT_TRUE(fs::exists(dir / "lq_fr_0.005_0.005_2.csv"));
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir)) files += e.is_regular_file();
  EXPECT_EQ(files, 76u);
}

TEST(RunGridTest, DivergentCellIsIsolated) {
  ExperimentSpec s = parse_config(
      "[problem]\nname = toy\n[run]\nsteps = 200\n"
      "[generator]\nschedule = const:1e-4\n"
      "[discriminator]\nschedule = const:1e-4\n"
      "[grid]\na = 1e-4, 50\n");
  const SummaryTable t = run_grid(s, 2);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].status, "ok");
  EXPECT_FALSE(t.rows[0].diverged);
  EXPECT_EQ(t.rows[1].status, "diverged");
  EXPECT_TRUE(t.rows[1].diverged);
  EXPECT_GT(t.rows[1].diverged_step, 0);
}

TEST(RunGridTest, RerunsAndParallelismAreReproducible) {
  ExperimentSpec s = parse_config(kLqGrid);
  s.metrics.vi = true;
  s.base.trace_stride = 5;
  const fs::path d1 = TempDir("rerun1"), d2 = TempDir("rerun2");
  s.output_dir = d1.string();
  run_grid(s, 1);
  s.output_dir = d2.string();
  const SummaryTable t = run_grid(s, 8);
  EXPECT_EQ(t.fit_reports.size(), 50u);
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(d1)) {
    const std::string name = e.path().filename().string();
    const std::string a = Slurp(e.path()), b = Slurp(d2 / name);
    if (name == "summary.csv") {
      EXPECT_EQ(WithoutWallTime(a), WithoutWallTime(b));
    } else {
      EXPECT_EQ(a, b) << name;
    }
    ++compared;
  }
  EXPECT_EQ(compared, 1u + 75u + 25u);  // summary, traces, metrics
  EXPECT_TRUE(fs::exists(d1 / "lq_fr_0.001_0.005_metrics.csv"));
}

TEST(RunGridTest, BetaGridUsesEachPlayersClipMode) {
  ExperimentSpec s = parse_config(
      "[problem]\nname = lq\n[run]\nsteps = 5\n"
      "[generator]\nclip = clip-decay:0.5\n[discriminator]\nclip = raw\n"
      "[grid]\nbeta = fr, hyb2\n");
  const std::vector<GridCell> cells = expand_grid(s);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[1].config.generator.beta.kind, BetaKind::kHyb2);
  EXPECT_EQ(cells[1].config.generator.beta.clip,
            ClipMode::kClipHalfTimesPowerDecay);
  EXPECT_EQ(cells[1].config.discriminator.beta.clip, ClipMode::kRaw);
  EXPECT_EQ(cells[1].file_name, "lq_hyb2_0.001_0.001_0.csv");
}

TEST(RunGridTest, RuleNamesAreSanitizedInFileNames) {
  ExperimentSpec s = parse_config("[grid]\nbeta = const:0.25, hz:0.5\n");
  const std::vector<GridCell> cells = expand_grid(s);
  EXPECT_EQ(cells[0].file_name, "toy_const-0.25_0.001_0.001_0.csv");
  EXPECT_EQ(cells[1].file_name, "toy_hz-0.5_0.001_0.001_0.csv");
}

TEST(ReportToyTest, ThreeMethodsTwoSchedules) {
  ExperimentSpec s = parse_config(kToyConfig);
  const fs::path dir = TempDir("toy");
  s.output_dir = dir.string();
  const ToyReport r = report_toy(s);
  ASSERT_EQ(r.runs.size(), 6u);
  std::map<std::string, const ToyRunResult*> by;
  for (const ToyRunResult& run : r.runs) by[run.method + "/" + run.schedule] = &run;
  ASSERT_TRUE(by.count("momentum/constant"));
  ASSERT_TRUE(by.count("cg-fr/diminishing"));
  const ToyRunResult& sgd = *by["sgd/constant"];
  EXPECT_FALSE(sgd.diverged);
  EXPECT_EQ(sgd.x.size(), 401u);
  EXPECT_LT(sgd.final_norm(), sgd.initial_norm());
  const ToyRunResult& cg = *by["cg-fr/constant"];
  EXPECT_EQ(cg.a, 2.5e-8);
  EXPECT_LT(std::abs(cg.f.back() - 100), std::abs(cg.f.front() - 100));
  EXPECT_TRUE(fs::exists(dir / "toy_momentum_constant.csv"));
  const std::string csv = Slurp(dir / "toy_sgd_constant.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,x,y,f,grad_norm");
  std::ostringstream text;
  write_toy_report(text, r);
  EXPECT_NE(text.str().find("momentum (constant"), std::string::npos);
}

TEST(ReportToyTest, NeedsToyProblem) {
  EXPECT_THROW(report_toy(parse_config("[problem]\nname = lq\n")), UsageError);
}

}  // namespace
}  // namespace lnecg
