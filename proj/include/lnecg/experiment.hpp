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

// Experiment plumbing: INI configuration, grid sweeps over learning-rate
// pairs, beta rules and seeds, and the ToyGame comparison report.
//
// A config is an INI document with the sections [run], [problem],
// [generator], [discriminator], [grid], [output], [metrics] and [toy]; the
// accepted keys are listed in internal::AllowedKeys() and documented in README.md.
// Unknown sections or keys are errors.

#ifndef LNECG_EXPERIMENT_HPP_
#define LNECG_EXPERIMENT_HPP_

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "lnecg/conjugacy.hpp"
#include "lnecg/core.hpp"
#include "lnecg/games.hpp"
#include "lnecg/metrics.hpp"
#include "lnecg/schedules.hpp"
#include "lnecg/solver.hpp"

namespace lnecg {

struct MetricsOptions {
  bool vi = false;
  // Reference point; the problem's known equilibrium when unset.
  std::optional<ParameterVector> reference_theta;
  std::optional<ParameterVector> reference_w;
  std::int64_t fit_min = 0;  // 0: smallest recorded N
  std::int64_t fit_max = 0;  // 0: largest recorded N
};

// Defaults are the ToyGame learning rates of the reference experiment.
struct ToyOptions {
  double sgd_a = 3.75e-8, sgd_b = 1e-6;
  double momentum_a = 3.75e-8, momentum_b = 1e-7, momentum_coeff = 0.9;
  double cg_a = 2.5e-8, cg_b = 5e-7;
  std::string cg_rule = "fr";
  std::string cg_clip = "clip";
  double decay_eta = 0.5;  // diminishing variant: a n^-eta
};

struct ExperimentSpec {
  RunConfig base;
  std::vector<double> grid_a;
  std::vector<double> grid_b;
  std::vector<std::string> grid_beta;  // applied to both players
  std::vector<std::uint64_t> seeds;    // empty: base.seed
  std::size_t grid_cap = 10000;
  std::int64_t log_points = 0;
  std::string output_dir;
  bool write_traces = true;
  MetricsOptions metrics;
  ToyOptions toy;
};

namespace internal {

inline const std::map<std::string, std::set<std::string>>& AllowedKeys() {
  static const auto* keys = new std::map<std::string, std::set<std::string>>{
      {"run",
       {"seed", "steps", "batch_size", "sampling", "trace_stride", "snapshot",
        "log_points", "eps_denom", "divergence_threshold"}},
      {"problem",
       {"name", "toy_sigma", "dim_theta", "dim_w", "dataset_size",
        "data_seed"}},
      {"generator",
       {"schedule", "beta", "clip", "init", "initial_direction", "radius"}},
      {"discriminator",
       {"schedule", "beta", "clip", "init", "initial_direction", "radius"}},
      {"grid", {"a", "b", "beta", "seeds", "cap"}},
      {"output", {"dir", "traces"}},
      {"metrics", {"vi", "reference_theta", "reference_w", "fit_min", "fit_max"}},
      {"toy",
       {"sgd_a", "sgd_b", "momentum_a", "momentum_b", "momentum_coeff", "cg_a",
        "cg_b", "cg_rule", "cg_clip", "decay_eta"}},
  };
  return *keys;
}

inline std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Wraps value conversion so every error names its key path.
class Section {
 public:
  Section(std::string name, const boost::property_tree::ptree* tree)
      : name_(std::move(name)), tree_(tree) {}

  std::optional<std::string> Raw(const std::string& key) const {
    if (tree_ == nullptr) return std::nullopt;
    const auto v = tree_->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return Trim(*v);
  }

  template <typename Fn>
  auto Parse(const std::string& key, Fn fn) const
      -> std::optional<decltype(fn(std::string()))> {
    const auto raw = Raw(key);
    if (!raw) return std::nullopt;
    try {
      return fn(*raw);
    } catch (const std::exception& e) {
      throw UsageError(name_ + "." + key + ": " + e.what());
    }
  }

  std::optional<double> Number(const std::string& key) const {
    return Parse(key, [](const std::string& s) { return ParseNumber(s, "value"); });
  }

  std::optional<std::int64_t> Integer(const std::string& key,
                                      std::int64_t min_value) const {
    return Parse(key, [min_value](const std::string& s) {
      const double v = ParseNumber(s, "value");
      if (v != std::floor(v) || v < static_cast<double>(min_value) ||
          v > 9.0e15) {
        throw UsageError("expected an integer >= " + std::to_string(min_value) +
                         ", got '" + s + "'");
      }
      return static_cast<std::int64_t>(v);
    });
  }

  std::optional<bool> Bool(const std::string& key) const {
    return Parse(key, [](const std::string& s) {
      if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
      if (s == "false" || s == "0" || s == "no" || s == "off") return false;
      throw UsageError("expected true or false, got '" + s + "'");
    });
  }

  std::optional<ParameterVector> Vector(const std::string& key) const {
    return Parse(key, [](const std::string& s) {
      std::vector<double> v;
      for (const std::string& item : SplitList(s)) {
        v.push_back(ParseNumber(item, "vector entry"));
      }
      if (v.empty()) throw UsageError("empty vector");
      return ParameterVector(std::move(v));
    });
  }

  std::optional<std::vector<double>> NumberList(const std::string& key) const {
    return Parse(key, [](const std::string& s) {
      std::vector<double> v;
      for (const std::string& item : SplitList(s)) {
        v.push_back(ParseNumber(item, "list entry"));
      }
      return v;
    });
  }

  const std::string& name() const { return name_; }

 private:
  std::string name_;
  const boost::property_tree::ptree* tree_;
};

// "0, 3, 7" or an inclusive range "0..9".
inline std::vector<std::uint64_t> ParseSeeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const std::string& item : SplitList(s)) {
    const auto dots = item.find("..");
    auto one = [](const std::string& t) {
      const double v = ParseNumber(t, "seed");
      if (v < 0 || v != std::floor(v) || v > 9.0e15) {
        throw UsageError("seed must be a non-negative integer, got '" + t + "'");
      }
      return static_cast<std::uint64_t>(v);
    };
    if (dots == std::string::npos) {
      out.push_back(one(item));
    } else {
      const std::uint64_t lo = one(item.substr(0, dots));
      const std::uint64_t hi = one(item.substr(dots + 2));
      if (hi < lo) throw UsageError("empty seed range '" + item + "'");
      for (std::uint64_t k = lo; k <= hi; ++k) out.push_back(k);
    }
  }
  return out;
}

template <typename T>
void RejectDuplicates(const std::vector<T>& v, const std::string& path) {
  std::vector<T> s = v;
  std::sort(s.begin(), s.end());
  if (std::adjacent_find(s.begin(), s.end()) != s.end()) {
    throw UsageError(path + ": duplicate values");
  }
}

inline void ParsePlayer(const Section& sec, PlayerConfig& p) {
  if (auto s = sec.Parse("schedule", [](const std::string& t) {
        return ParseSchedule(t);
      })) {
    p.schedule = *s;
  }
  const std::string beta = sec.Raw("beta").value_or(BetaRuleName(p.beta));
  const std::string clip = sec.Raw("clip").value_or("clip");
  try {
    p.beta = ParseBetaRule(beta, clip);
  } catch (const std::exception& e) {
    throw UsageError(sec.name() + ".beta: " + e.what());
  }
  if (auto v = sec.Vector("init")) p.init = *v;
  if (auto v = sec.Vector("initial_direction")) p.initial_direction = *v;
  if (auto r = sec.Number("radius")) p.radius = *r;
}

inline std::size_t GridSize(const ExperimentSpec& s) {
  auto count = [](std::size_t n) { return std::max<std::size_t>(n, 1); };
  // Guard against overflow with long double before comparing to the cap.
  const long double total = static_cast<long double>(count(s.grid_a.size())) *
                            count(s.grid_b.size()) *
                            count(s.grid_beta.size()) * count(s.seeds.size());
  return total > 1e18L ? static_cast<std::size_t>(-1)
                       : static_cast<std::size_t>(total);
}

}  // namespace internal

// Parses and validates a config document. Errors name the offending key as
// "section.key".
inline ExperimentSpec parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw UsageError("config: " + e.message() + " (line " +
                     std::to_string(e.line()) + ")");
  }
  const auto& allowed = internal::AllowedKeys();
  for (const auto& [section, body] : tree) {
    const auto it = allowed.find(section);
    if (it == allowed.end()) {
      if (body.empty()) {
        throw UsageError("config: key '" + section + "' outside any section");
      }
      throw UsageError("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) {
        throw UsageError("config: unknown key '" + section + "." + key + "'");
      }
    }
  }
  auto section = [&tree](const std::string& name) {
    const auto child = tree.get_child_optional(name);
    return internal::Section(name, child ? &*child : nullptr);
  };

  ExperimentSpec spec;
  RunConfig& c = spec.base;

  const internal::Section problem = section("problem");
  c.problem.name = problem.Raw("name").value_or("toy");
  if (auto v = problem.Number("toy_sigma")) c.problem.toy_sigma = *v;
  if (auto v = problem.Integer("dim_theta", 1)) c.problem.lq.dim_theta = *v;
  if (auto v = problem.Integer("dim_w", 1)) c.problem.lq.dim_w = *v;
  if (auto v = problem.Integer("dataset_size", 1)) c.problem.lq.dataset_size = *v;
  if (auto v = problem.Integer("data_seed", 0)) c.problem.lq.data_seed = *v;

  const internal::Section run_sec = section("run");
  if (auto v = run_sec.Integer("seed", 0)) c.seed = static_cast<std::uint64_t>(*v);
  if (auto v = run_sec.Integer("steps", 1)) c.steps = *v;
  if (auto v = run_sec.Integer("batch_size", 1)) c.batch_size = *v;
  if (auto v = run_sec.Integer("trace_stride", 1)) c.trace_stride = *v;
  if (auto v = run_sec.Bool("snapshot")) c.snapshot_iterates = *v;
  if (auto v = run_sec.Integer("log_points", 0)) spec.log_points = *v;
  if (auto v = run_sec.Number("eps_denom")) c.eps_denom = *v;
  if (auto v = run_sec.Number("divergence_threshold")) c.divergence_threshold = *v;
  if (auto v = run_sec.Parse("sampling", [](const std::string& s) {
        if (s == "epoch") return SamplingMode::kEpoch;
        if (s == "iid") return SamplingMode::kIid;
        throw UsageError("expected epoch or iid, got '" + s + "'");
      })) {
    c.sampling = *v;
  }

  internal::ParsePlayer(section("generator"), c.generator);
  internal::ParsePlayer(section("discriminator"), c.discriminator);

  const internal::Section grid = section("grid");
  if (auto v = grid.NumberList("a")) spec.grid_a = *v;
  if (auto v = grid.NumberList("b")) spec.grid_b = *v;
  if (auto v = grid.Raw("beta")) spec.grid_beta = internal::SplitList(*v);
  if (auto v = grid.Parse("seeds", internal::ParseSeeds)) spec.seeds = *v;
  if (auto v = grid.Integer("cap", 1)) spec.grid_cap = *v;
  internal::RejectDuplicates(spec.grid_a, "grid.a");
  internal::RejectDuplicates(spec.grid_b, "grid.b");
  internal::RejectDuplicates(spec.grid_beta, "grid.beta");
  internal::RejectDuplicates(spec.seeds, "grid.seeds");
  for (double a : spec.grid_a) {
    if (!(a > 0.0)) throw UsageError("grid.a: learning rates must be > 0");
  }
  for (double b : spec.grid_b) {
    if (!(b > 0.0)) throw UsageError("grid.b: learning rates must be > 0");
  }
  for (const std::string& rule : spec.grid_beta) {
    for (const auto* sec : {"generator", "discriminator"}) {
      try {
        ParseBetaRule(rule, section(sec).Raw("clip").value_or("clip"));
      } catch (const std::exception& e) {
        throw UsageError(std::string("grid.beta: ") + e.what());
      }
    }
  }
  const std::size_t cells = internal::GridSize(spec);
  if (cells > spec.grid_cap) {
    throw UsageError("grid: " + std::to_string(cells) +
                     " cells exceed the cap of " +
                     std::to_string(spec.grid_cap));
  }

  const internal::Section out = section("output");
  spec.output_dir = out.Raw("dir").value_or("");
  if (auto v = out.Bool("traces")) spec.write_traces = *v;

  const internal::Section met = section("metrics");
  if (auto v = met.Bool("vi")) spec.metrics.vi = *v;
  spec.metrics.reference_theta = met.Vector("reference_theta");
  spec.metrics.reference_w = met.Vector("reference_w");
  if (spec.metrics.reference_theta.has_value() !=
      spec.metrics.reference_w.has_value()) {
    throw UsageError(
        "metrics: reference_theta and reference_w must be given together");
  }
  if (auto v = met.Integer("fit_min", 0)) spec.metrics.fit_min = *v;
  if (auto v = met.Integer("fit_max", 0)) spec.metrics.fit_max = *v;
  if (spec.metrics.fit_max != 0 && spec.metrics.fit_min >= spec.metrics.fit_max) {
    throw UsageError("metrics: fit_min must be < fit_max");
  }

  const internal::Section toy = section("toy");
  ToyOptions& t = spec.toy;
  for (auto [key, field] :
       std::initializer_list<std::pair<const char*, double*>>{
           {"sgd_a", &t.sgd_a}, {"sgd_b", &t.sgd_b},
           {"momentum_a", &t.momentum_a}, {"momentum_b", &t.momentum_b},
           {"momentum_coeff", &t.momentum_coeff}, {"cg_a", &t.cg_a},
           {"cg_b", &t.cg_b}, {"decay_eta", &t.decay_eta}}) {
    if (auto v = toy.Number(key)) *field = *v;
  }
  t.cg_rule = toy.Raw("cg_rule").value_or(t.cg_rule);
  t.cg_clip = toy.Raw("cg_clip").value_or(t.cg_clip);
  try {
    ParseBetaRule(t.cg_rule, t.cg_clip);
    BetaRule::Constant(t.momentum_coeff, ClipMode::kRaw).Validate();
    Schedule::PowerDecay(1.0, t.decay_eta).Validate();
  } catch (const std::exception& e) {
    throw UsageError(std::string("toy: ") + e.what());
  }

  // Whole-config checks: run invariants and dimensions against the problem.
  c.Validate();
  if (spec.log_points > 0) {
    c.extra_record_steps = log_spaced_steps(1, c.steps, static_cast<int>(
        std::min<std::int64_t>(spec.log_points, c.steps + 1)));
  }
  const std::unique_ptr<GameProblem> prob = MakeProblem(c.problem);
  auto check_dim = [](const std::optional<ParameterVector>& v, std::size_t dim,
                      const std::string& path) {
    if (v && v->dim() != dim) {
      throw UsageError(path + ": expected " + std::to_string(dim) +
                       " entries, got " + std::to_string(v->dim()));
    }
  };
  check_dim(c.generator.init, prob->dim_theta(), "generator.init");
  check_dim(c.generator.initial_direction, prob->dim_theta(),
            "generator.initial_direction");
  check_dim(c.discriminator.init, prob->dim_w(), "discriminator.init");
  check_dim(c.discriminator.initial_direction, prob->dim_w(),
            "discriminator.initial_direction");
  check_dim(spec.metrics.reference_theta, prob->dim_theta(),
            "metrics.reference_theta");
  check_dim(spec.metrics.reference_w, prob->dim_w(), "metrics.reference_w");
  if (c.batch_size > prob->dataset_size()) {
    throw UsageError("run.batch_size: " + std::to_string(c.batch_size) +
                     " exceeds dataset size " +
                     std::to_string(prob->dataset_size()));
  }
  if (spec.metrics.vi && !spec.metrics.reference_theta && !prob->known_lne()) {
    throw UsageError("metrics.vi: problem has no known equilibrium; set "
                     "reference_theta and reference_w");
  }
  return spec;
}

inline ExperimentSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

struct GridCell {
  RunConfig config;
  std::string rule;  // beta rule label
  std::string base_name;  // problem_rule_a_b, shared by all seeds
  std::string file_name;  // base_name_seed.csv
};

namespace internal {

inline std::string SanitizeName(std::string s) {
  for (char& ch : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' ||
                    ch == '-' || ch == '_' || ch == '+';
    if (!ok) ch = '-';
  }
  return s;
}

inline std::string RuleLabel(const RunConfig& c) {
  const std::string g = BetaRuleName(c.generator.beta);
  const std::string d = BetaRuleName(c.discriminator.beta);
  return g == d ? g : g + "+" + d;
}

}  // namespace internal

// Cartesian product a x b x beta x seed, in that nesting order (seed
// fastest). Empty lists contribute the base value.
inline std::vector<GridCell> expand_grid(const ExperimentSpec& spec) {
  const std::size_t cells = internal::GridSize(spec);
  if (cells > spec.grid_cap) {
    throw UsageError("grid: " + std::to_string(cells) +
                     " cells exceed the cap of " +
                     std::to_string(spec.grid_cap));
  }
  const RunConfig& base = spec.base;
  std::vector<std::optional<double>> as, bs;
  for (double a : spec.grid_a) as.push_back(a);
  for (double b : spec.grid_b) bs.push_back(b);
  if (as.empty()) as.push_back(std::nullopt);
  if (bs.empty()) bs.push_back(std::nullopt);
  std::vector<std::optional<std::string>> rules;
  for (const std::string& r : spec.grid_beta) rules.push_back(r);
  if (rules.empty()) rules.push_back(std::nullopt);
  std::vector<std::uint64_t> seeds = spec.seeds;
  if (seeds.empty()) seeds.push_back(base.seed);

  std::vector<GridCell> out;
  out.reserve(cells);
  for (const auto& a : as) {
    for (const auto& b : bs) {
      for (const auto& rule : rules) {
        for (std::uint64_t seed : seeds) {
          GridCell cell;
          RunConfig& c = cell.config;
          c = base;
          c.seed = seed;
          if (a) c.generator.schedule.a = *a;
          if (b) c.discriminator.schedule.a = *b;
          if (rule) {
            const BetaRule g = c.generator.beta, d = c.discriminator.beta;
            c.generator.beta = ParseBetaRule(*rule, ClipModeName(g));
            c.discriminator.beta = ParseBetaRule(*rule, ClipModeName(d));
          }
          c.Validate();
          cell.rule = internal::RuleLabel(c);
          cell.base_name = internal::SanitizeName(
              c.problem.name + "_" + cell.rule + "_" +
              internal::FormatNumber(c.generator.schedule.a) + "_" +
              internal::FormatNumber(c.discriminator.schedule.a));
          cell.file_name = cell.base_name + "_" + std::to_string(seed) + ".csv";
          out.push_back(std::move(cell));
        }
      }
    }
  }
  return out;
}

struct SummaryRow {
  std::string problem;
  std::string rule;
  double a = 0.0;
  double b = 0.0;
  std::uint64_t seed = 0;
  std::string status;  // ok, diverged, error
  bool diverged = false;
  std::int64_t diverged_step = 0;
  double grad_norm_g = 0.0;  // at the last completed step
  double grad_norm_d = 0.0;
  std::optional<double> vi_g;  // A_G(N), when VI is on
  std::optional<double> vi_d;
  std::string trace_file;
  std::string message;
  double wall_time_s = 0.0;
};

struct SummaryTable {
  std::vector<SummaryRow> rows;
  std::vector<std::string> fit_reports;  // one line per fitted series
  // Seed-averaged VI series per group (file base name), when VI is on.
  std::map<std::string, ViSeries> series;
};

// Wall time is the final column so reruns can be compared without it.
inline void write_summary_csv(std::ostream& os, const SummaryTable& t) {
  os << "problem,rule,a,b,seed,status,diverged,diverged_step,grad_norm_g,"
        "grad_norm_d,A_G,A_D,trace_file,message,wall_time_s\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const SummaryRow& r : t.rows) {
    std::string msg = r.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    os << r.problem << ',' << r.rule << ',' << num(r.a) << ',' << num(r.b)
       << ',' << r.seed << ',' << r.status << ',' << (r.diverged ? 1 : 0) << ','
       << r.diverged_step << ',' << num(r.grad_norm_g) << ','
       << num(r.grad_norm_d) << ',' << (r.vi_g ? num(*r.vi_g) : "") << ','
       << (r.vi_d ? num(*r.vi_d) : "") << ',' << r.trace_file << ',' << msg
       << ',';
    std::snprintf(buf, sizeof(buf), "%.3f", r.wall_time_s);
    os << buf << '\n';
  }
}

namespace internal {

inline std::optional<Equilibrium> ViReference(const ExperimentSpec& spec,
                                              const GameProblem& problem) {
  if (!spec.metrics.vi) return std::nullopt;
  if (spec.metrics.reference_theta) {
    return Equilibrium{*spec.metrics.reference_theta, *spec.metrics.reference_w};
  }
  auto lne = problem.known_lne();
  if (!lne) {
    throw UsageError("metrics.vi: problem has no known equilibrium; set "
                     "reference_theta and reference_w");
  }
  return lne;
}

// Configured fit window, defaulting to the full recorded range.
inline std::pair<std::int64_t, std::int64_t> FitWindow(const ViSeries& s,
                                                       const MetricsOptions& m) {
  const std::int64_t lo = m.fit_min > 0 ? m.fit_min : (s.n.empty() ? 0 : s.n.front());
  const std::int64_t hi = m.fit_max > 0 ? m.fit_max : (s.n.empty() ? 0 : s.n.back());
  return {lo, hi};
}

}  // namespace internal

// Runs every grid cell on `jobs` threads (0: hardware concurrency). Cells
// are independent; a diverging or failing cell is recorded and never stops
// the sweep. When spec.output_dir is set, writes summary.csv, per-run trace
// CSVs and, with VI on, one <problem>_<rule>_<a>_<b>_metrics.csv per group
// of seeds.
inline SummaryTable run_grid(const ExperimentSpec& spec, unsigned jobs = 0) {
  const std::vector<GridCell> cells = expand_grid(spec);
  const std::unique_ptr<GameProblem> problem = MakeProblem(spec.base.problem);
  const std::optional<Equilibrium> vi_ref = internal::ViReference(spec, *problem);
  namespace fs = std::filesystem;
  const bool to_disk = !spec.output_dir.empty();
  if (to_disk) {
    std::error_code ec;
    fs::create_directories(spec.output_dir, ec);
    if (ec) {
      throw UsageError("cannot create output directory '" + spec.output_dir +
                       "': " + ec.message());
    }
  }

  SummaryTable table;
  table.rows.resize(cells.size());
  std::vector<std::optional<ViSeries>> series(cells.size());
  std::atomic<std::size_t> next{0};

  auto work = [&]() {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const GridCell& cell = cells[i];
      SummaryRow& row = table.rows[i];
      RunConfig cfg = cell.config;
      cfg.vi_reference = vi_ref;
      row.problem = cfg.problem.name;
      row.rule = cell.rule;
      row.a = cfg.generator.schedule.a;
      row.b = cfg.discriminator.schedule.a;
      row.seed = cfg.seed;
      const auto start = std::chrono::steady_clock::now();
      try {
        const Trace trace = run(*problem, cfg);
        const TraceRow& last = trace.rows.back();
        row.status = "ok";
        row.grad_norm_g = last.grad_norm_g;
        row.grad_norm_d = last.grad_norm_d;
        if (trace.has_vi) {
          row.vi_g = last.vi_g;
          row.vi_d = last.vi_d;
          series[i] = single_vi(trace);
        }
        if (to_disk && spec.write_traces) {
          const fs::path path = fs::path(spec.output_dir) / cell.file_name;
          std::ofstream out(path);
          write_trace_csv(out, trace);
          out.close();
          if (!out) throw std::runtime_error("write failed: " + path.string());
          row.trace_file = cell.file_name;
        }
      } catch (const DivergenceError& e) {
        row.status = "diverged";
        row.diverged = true;
        row.diverged_step = e.step();
        row.message = e.what();
      } catch (const std::exception& e) {
        row.status = "error";
        row.message = e.what();
      }
      row.wall_time_s = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    }
  };

  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, cells.size()));
  if (jobs <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }

  // Seed groups share base_name; cells of a group are contiguous.
  if (spec.metrics.vi) {
    for (std::size_t i = 0; i < cells.size();) {
      std::size_t j = i;
      std::vector<ViSeries> parts;
      while (j < cells.size() && cells[j].base_name == cells[i].base_name) {
        if (series[j]) parts.push_back(*series[j]);
        ++j;
      }
      const std::string label = cells[i].base_name;
      if (parts.empty()) {
        table.fit_reports.push_back(label + ": no completed runs");
      } else {
        const ViSeries& s = table.series[label] = average_series(parts);
        if (to_disk) {
          std::ofstream out(fs::path(spec.output_dir) / (label + "_metrics.csv"));
          write_metrics_csv(out, s);
        }
        const auto [lo, hi] = internal::FitWindow(s, spec.metrics);
        for (ViComponent which :
             {ViComponent::kGenerator, ViComponent::kDiscriminator}) {
          const std::string name =
              label + (which == ViComponent::kGenerator ? " A_G" : " A_D");
          try {
            table.fit_reports.push_back(FormatFit(name, fit_rate(s, which, lo, hi)));
          } catch (const UsageError& e) {
            table.fit_reports.push_back(name + ": fit skipped (" + e.what() + ")");
          }
        }
      }
      i = j;
    }
  }

  if (to_disk) {
    const fs::path path = fs::path(spec.output_dir) / "summary.csv";
    std::ofstream out(path);
    write_summary_csv(out, table);
    out.close();
    if (!out) throw std::runtime_error("cannot write " + path.string());
  }
  return table;
}

struct ToyRunResult {
  std::string method;    // sgd, momentum, cg-<rule>
  std::string schedule;  // constant, diminishing
  double a = 0.0, b = 0.0;
  std::vector<double> x, y, f, grad_norm;  // per step 0..N
  bool diverged = false;
  std::string message;

  double initial_norm() const { return std::hypot(x.front(), y.front()); }
  double final_norm() const { return std::hypot(x.back(), y.back()); }
  // Share of consecutive steps with ||grad f|| non-increasing.
  double non_increasing_fraction() const {
    if (grad_norm.size() < 2) return 1.0;
    std::size_t k = 0;
    for (std::size_t i = 1; i < grad_norm.size(); ++i) {
      k += grad_norm[i] <= grad_norm[i - 1] ? 1 : 0;
    }
    return static_cast<double>(k) / static_cast<double>(grad_norm.size() - 1);
  }
  // Same share for the iterate norm ||(x, y)||, reported as a diagnostic.
  double iterate_norm_non_increasing_fraction() const {
    if (x.size() < 2) return 1.0;
    std::size_t k = 0;
    for (std::size_t i = 1; i < x.size(); ++i) {
      k += std::hypot(x[i], y[i]) <= std::hypot(x[i - 1], y[i - 1]) ? 1 : 0;
    }
    return static_cast<double>(k) / static_cast<double>(x.size() - 1);
  }
  bool objective_gap_decreased() const {
    return std::abs(f.back() - 100.0) < std::abs(f.front() - 100.0);
  }
};

struct ToyReport {
  std::vector<ToyRunResult> runs;
};

// SGD, heavy-ball momentum and one CG rule on ToyGame, each with constant
// rates and with a n^-eta decay of the same initial rates.
inline ToyReport report_toy(const ExperimentSpec& spec) {
  if (spec.base.problem.name != "toy") {
    throw UsageError("toy report needs problem.name = toy");
  }
  const ToyGame game(spec.base.problem.toy_sigma);
  const ToyOptions& t = spec.toy;
  struct Method {
    std::string name;
    double a, b;
    BetaRule beta;
  };
  const BetaRule cg = ParseBetaRule(t.cg_rule, t.cg_clip);
  const std::vector<Method> methods = {
      {"sgd", t.sgd_a, t.sgd_b, BetaRule::Zero()},
      {"momentum", t.momentum_a, t.momentum_b,
       BetaRule::Constant(t.momentum_coeff, ClipMode::kRaw)},
      {"cg-" + internal::SanitizeName(BetaRuleName(cg)), t.cg_a, t.cg_b, cg},
  };
  namespace fs = std::filesystem;
  if (!spec.output_dir.empty()) fs::create_directories(spec.output_dir);

  ToyReport report;
  for (const Method& m : methods) {
    for (const bool diminishing : {false, true}) {
      RunConfig c = spec.base;
      c.trace_stride = 1;
      c.extra_record_steps.clear();
      c.snapshot_iterates = true;
      c.vi_reference.reset();
      c.generator.beta = m.beta;
      c.discriminator.beta = m.beta;
      c.generator.schedule = diminishing ? Schedule::PowerDecay(m.a, t.decay_eta)
                                         : Schedule::Constant(m.a);
      c.discriminator.schedule = diminishing
                                     ? Schedule::PowerDecay(m.b, t.decay_eta)
                                     : Schedule::Constant(m.b);
      ToyRunResult r;
      r.method = m.name;
      r.schedule = diminishing ? "diminishing" : "constant";
      r.a = m.a;
      r.b = m.b;
      try {
        const Trace trace = run(game, c);
        for (const TraceRow& row : trace.rows) {
          r.x.push_back(row.iterate[0]);
          r.y.push_back(row.iterate[1]);
          r.f.push_back(row.loss_g);
          r.grad_norm.push_back(std::hypot(row.grad_norm_g, row.grad_norm_d));
        }
      } catch (const DivergenceError& e) {
        r.diverged = true;
        r.message = e.what();
      }
      if (!spec.output_dir.empty() && !r.diverged) {
        std::ofstream out(fs::path(spec.output_dir) /
                          ("toy_" + r.method + "_" + r.schedule + ".csv"));
        out << "n,x,y,f,grad_norm\n";
        char buf[128];
        for (std::size_t i = 0; i < r.x.size(); ++i) {
          std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", i,
                        r.x[i], r.y[i], r.f[i], r.grad_norm[i]);
          out << buf;
        }
      }
      report.runs.push_back(std::move(r));
    }
  }
  return report;
}

inline void write_toy_report(std::ostream& os, const ToyReport& report) {
  char buf[512];
  for (const ToyRunResult& r : report.runs) {
    if (r.diverged) {
      os << r.method << " (" << r.schedule << "): " << r.message << '\n';
      continue;
    }
    std::snprintf(
        buf, sizeof(buf),
        "%s (%s, a=%g, b=%g): |(x,y)| %.6g -> %.6g (%s), f %.6g -> %.6g, "
        "|f-100| %s, non-increasing steps: grad norm %.1f%%, |(x,y)| %.1f%%\n",
        r.method.c_str(), r.schedule.c_str(), r.a, r.b, r.initial_norm(),
        r.final_norm(), r.final_norm() < r.initial_norm() ? "decreased" : "not decreased",
        r.f.front(), r.f.back(),
        r.objective_gap_decreased() ? "decreased" : "did not decrease",
        100.0 * r.non_increasing_fraction(),
        100.0 * r.iterate_norm_non_increasing_fraction());
    os << buf;
  }
}

}  // namespace lnecg

#endif  // LNECG_EXPERIMENT_HPP_
