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

// Command-line front end.
//
//   lnecg run  <config> [--out DIR] [--jobs N]   base config over its seeds
//   lnecg grid <config> [--out DIR] [--jobs N]   full learning-rate/rule grid
//   lnecg toy  <config> [--out DIR]              ToyGame optimizer comparison
//   lnecg fit  <metrics.csv> [--nmin N] [--nmax N]
//
// Exit status: 0 success, 1 usage or I/O error, 2 when `run` had only
// divergence failures.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lnecg/lnecg.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDiverged = 2;

void PrintAdvisory(const lnecg::ExperimentSpec& spec) {
  const lnecg::TimescaleReport r = lnecg::validate_timescales(
      spec.base.generator.schedule, spec.base.discriminator.schedule);
  std::cerr << "timescales: " << r.text << '\n';
}

void PrintRows(const lnecg::SummaryTable& t) {
  for (const lnecg::SummaryRow& r : t.rows) {
    std::cout << r.problem << ' ' << r.rule << " a=" << r.a << " b=" << r.b
              << " seed=" << r.seed << ": " << r.status;
    if (r.status == "ok") {
      std::cout << " grad_norm_g=" << r.grad_norm_g
                << " grad_norm_d=" << r.grad_norm_d;
      if (r.vi_g) std::cout << " A_G=" << *r.vi_g << " A_D=" << *r.vi_d;
    } else {
      std::cout << " (" << r.message << ')';
    }
    std::cout << '\n';
  }
  for (const std::string& line : t.fit_reports) std::cout << line << '\n';
}

int RunCommand(const std::string& config, const std::string& out,
               unsigned jobs, bool whole_grid) {
  lnecg::ExperimentSpec spec = lnecg::load_config(config);
  if (!out.empty()) spec.output_dir = out;
  if (!whole_grid &&
      (!spec.grid_a.empty() || !spec.grid_b.empty() || !spec.grid_beta.empty())) {
    throw lnecg::UsageError(
        "run sweeps seeds only; use `grid` for grid.a, grid.b or grid.beta");
  }
  PrintAdvisory(spec);
  const lnecg::SummaryTable t = lnecg::run_grid(spec, jobs);
  PrintRows(t);
  bool diverged = false, failed = false;
  for (const lnecg::SummaryRow& r : t.rows) {
    diverged |= r.status == "diverged";
    failed |= r.status == "error";
  }
  if (failed) return kExitUsage;
  if (diverged && !whole_grid) return kExitDiverged;
  return kExitOk;
}

int ToyCommand(const std::string& config, const std::string& out) {
  lnecg::ExperimentSpec spec = lnecg::load_config(config);
  if (!out.empty()) spec.output_dir = out;
  const lnecg::ToyReport report = lnecg::report_toy(spec);
  lnecg::write_toy_report(std::cout, report);
  if (!spec.output_dir.empty()) {
    std::ofstream f(spec.output_dir + "/toy_report.txt");
    lnecg::write_toy_report(f, report);
  }
  return kExitOk;
}

int FitCommand(const std::string& path, std::int64_t nmin, std::int64_t nmax) {
  std::ifstream in(path);
  if (!in) throw lnecg::UsageError("cannot read '" + path + "'");
  const lnecg::ViSeries s = lnecg::read_metrics_csv(in);
  if (s.n.empty()) throw lnecg::UsageError("'" + path + "' has no rows");
  const std::int64_t lo = nmin > 0 ? nmin : s.n.front();
  const std::int64_t hi = nmax > 0 ? nmax : s.n.back();
  std::cout << lnecg::FormatFit("A_G", lnecg::fit_rate(s.n, s.a_g, lo, hi)) << '\n'
            << lnecg::FormatFit("A_D", lnecg::fit_rate(s.n, s.a_d, lo, hi)) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-player stochastic conjugate-gradient solver"};
  app.require_subcommand(1);
  std::string config, out, metrics;
  unsigned jobs = 0;
  std::int64_t nmin = 0, nmax = 0;

  auto add_run_like = [&](const char* name, const char* help) {
    CLI::App* cmd = app.add_subcommand(name, help);
    cmd->add_option("config", config, "INI config file")->required();
    cmd->add_option("--out", out, "output directory (overrides output.dir)");
    cmd->add_option("--jobs", jobs, "parallel runs (default: all cores)");
    return cmd;
  };
  CLI::App* run = add_run_like("run", "run the base config for each seed");
  CLI::App* grid = add_run_like("grid", "run the full grid");
  CLI::App* toy = app.add_subcommand("toy", "ToyGame optimizer comparison");
  toy->add_option("config", config, "INI config file")->required();
  toy->add_option("--out", out, "output directory (overrides output.dir)");
  CLI::App* fit = app.add_subcommand("fit", "fit log-log rates to a metrics CSV");
  fit->add_option("metrics", metrics, "metrics CSV")->required();
  fit->add_option("--nmin", nmin, "smallest N in the fit window");
  fit->add_option("--nmax", nmax, "largest N in the fit window");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) return RunCommand(config, out, jobs, false);
    if (*grid) return RunCommand(config, out, jobs, true);
    if (*toy) return ToyCommand(config, out);
    if (*fit) return FitCommand(metrics, nmin, nmax);
  } catch (const lnecg::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
