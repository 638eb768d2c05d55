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

// Two-player stochastic conjugate-gradient iteration. For n = 0, 1, ...
//
//   d^D_n   = -D(theta_n, w_n) + beta^D_n d^D_{n-1}
//   w_{n+1} = P^D(w_n + b_n d^D_n)
//   d^G_n   = -G(theta_n, w_n) + beta^G_n d^G_{n-1}
//   theta_{n+1} = P^G(theta_n + a_n d^G_n)
//
// where D and G are minibatch gradients drawn from independent streams and
// P is the optional projection onto a ball. The discriminator moves first,
// but both gradients are evaluated at (theta_n, w_n). beta = 0 is simultaneous
// SGD; constant beta is the heavy-ball method.

#ifndef LNECG_SOLVER_HPP_
#define LNECG_SOLVER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "lnecg/conjugacy.hpp"
#include "lnecg/core.hpp"
#include "lnecg/games.hpp"
#include "lnecg/schedules.hpp"

namespace lnecg {

// Thrown when an iterate becomes non-finite or exceeds the divergence bound.
class DivergenceError : public NumericError {
 public:
  DivergenceError(std::int64_t step, const std::string& what)
      : NumericError("diverged at step " + std::to_string(step) + ": " + what),
        step_(step) {}
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

struct PlayerConfig {
  Schedule schedule;
  BetaRule beta;
  std::optional<ParameterVector> init;            // problem default if unset
  std::optional<ParameterVector> initial_direction;  // d_{-1}, zeros if unset
  std::optional<double> radius;                   // ball projection
};

struct RunConfig {
  ProblemConfig problem;
  std::uint64_t seed = 0;
  std::int64_t steps = 100;
  std::size_t batch_size = 1;
  SamplingMode sampling = SamplingMode::kEpoch;
  PlayerConfig generator;
  PlayerConfig discriminator;
  std::int64_t trace_stride = 1;
  bool snapshot_iterates = false;
  // Steps recorded in addition to the stride multiples (e.g. log-spaced).
  std::vector<std::int64_t> extra_record_steps;
  // When set, rows carry running averages (1/n) sum_{k=1..n} <x_k - ref, grad>.
  std::optional<Equilibrium> vi_reference;
  double eps_denom = 1e-30;
  double divergence_threshold = 1e12;

  void Validate() const {
    if (steps < 1) throw UsageError("steps must be >= 1");
    if (batch_size < 1) throw UsageError("batch_size must be >= 1");
    if (trace_stride < 1) throw UsageError("trace_stride must be >= 1");
    if (!(eps_denom >= 0.0)) throw UsageError("eps_denom must be >= 0");
    if (!(divergence_threshold > 0.0)) {
      throw UsageError("divergence_threshold must be > 0");
    }
    for (const PlayerConfig* p : {&generator, &discriminator}) {
      p->schedule.Validate();
      p->beta.Validate();
      if (p->radius && !(*p->radius > 0.0)) {
        throw UsageError("projection radius must be > 0");
      }
    }
  }
};

// One recorded step. Rates and betas are those of the update that produced
// iterate n (zero for n = 0); norms and losses are evaluated at (theta_n, w_n)
// with exact gradients.
struct TraceRow {
  std::int64_t n = 0;
  double a = 0.0;
  double b = 0.0;
  double beta_g = 0.0;
  double beta_d = 0.0;
  double grad_norm_g = 0.0;
  double grad_norm_d = 0.0;
  double loss_g = 0.0;
  double loss_d = 0.0;
  std::vector<double> iterate;  // theta then w, when snapshots are on
  double vi_g = 0.0;
  double vi_d = 0.0;
};

struct Trace {
  std::vector<TraceRow> rows;
  PlayerState final_generator;
  PlayerState final_discriminator;
  std::size_t dim_theta = 0;
  std::size_t dim_w = 0;
  bool has_vi = false;
  std::optional<Equilibrium> vi_reference;
};

inline ParameterVector cg_direction(const ParameterVector& g,
                                    const ParameterVector& d_prev,
                                    double beta) {
  return axpy(beta, d_prev, -g);
}

inline ParameterVector project_ball(const ParameterVector& x, double radius) {
  if (!(radius > 0.0)) throw UsageError("projection radius must be > 0");
  const double r = norm(x);
  if (r <= radius) return x;
  return scale(radius / r, x);
}

namespace internal {

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream seeds for the discriminator (0) and generator (1).
inline std::uint64_t StreamSeed(std::uint64_t seed, std::uint64_t stream) {
  return SplitMix64(SplitMix64(seed) + stream);
}

inline std::pair<PlayerState, PlayerState> InitialStates(
    const GameProblem& problem, const RunConfig& cfg) {
  const Equilibrium start = problem.default_start();
  ParameterVector theta = cfg.generator.init.value_or(start.theta);
  ParameterVector w = cfg.discriminator.init.value_or(start.w);
  CheckSameDim(theta.dim(), problem.dim_theta(), "generator init");
  CheckSameDim(w.dim(), problem.dim_w(), "discriminator init");
  ParameterVector dg = cfg.generator.initial_direction.value_or(
      ParameterVector::Zeros(theta.dim()));
  ParameterVector dd = cfg.discriminator.initial_direction.value_or(
      ParameterVector::Zeros(w.dim()));
  return {PlayerState(std::move(theta), std::move(dg)),
          PlayerState(std::move(w), std::move(dd))};
}

inline bool ShouldRecord(const RunConfig& cfg, std::int64_t n) {
  if (n % cfg.trace_stride == 0 || n == cfg.steps) return true;
  return std::binary_search(cfg.extra_record_steps.begin(),
                            cfg.extra_record_steps.end(), n);
}

// One player's half-step: direction, beta and the projected next iterate.
struct HalfStep {
  ParameterVector gradient;
  ParameterVector direction;
  ParameterVector next;
  double beta = 0.0;
};

inline HalfStep AdvancePlayer(const PlayerState& s, const PlayerConfig& pc,
                              ParameterVector gradient, double rate,
                              std::int64_t step1, double eps) {
  HalfStep h;
  h.beta = compute_beta(
      pc.beta, BetaInputs{gradient, s.prev_gradient, s.prev_direction, step1,
                          eps});
  h.direction = cg_direction(gradient, s.prev_direction, h.beta);
  h.next = axpy(rate, h.direction, s.iterate);
  if (pc.radius) h.next = project_ball(h.next, *pc.radius);
  h.gradient = std::move(gradient);
  return h;
}

inline void Commit(PlayerState& s, HalfStep&& h) {
  s.iterate = std::move(h.next);
  s.prev_direction = std::move(h.direction);
  s.prev_gradient = std::move(h.gradient);
  ++s.step;
}

}  // namespace internal

inline Trace run(const GameProblem& problem, const RunConfig& input_cfg) {
  RunConfig cfg = input_cfg;
  cfg.Validate();
  std::sort(cfg.extra_record_steps.begin(), cfg.extra_record_steps.end());

  auto [gen, disc] = internal::InitialStates(problem, cfg);
  MinibatchSampler disc_sampler(problem.dataset_size(), cfg.batch_size,
                                internal::StreamSeed(cfg.seed, 0), cfg.sampling);
  MinibatchSampler gen_sampler(problem.dataset_size(), cfg.batch_size,
                               internal::StreamSeed(cfg.seed, 1), cfg.sampling);

  Trace trace;
  trace.dim_theta = problem.dim_theta();
  trace.dim_w = problem.dim_w();
  trace.has_vi = cfg.vi_reference.has_value();
  trace.vi_reference = cfg.vi_reference;
  if (cfg.vi_reference) {
    internal::CheckSameDim(cfg.vi_reference->theta.dim(), problem.dim_theta(),
                           "VI reference theta");
    internal::CheckSameDim(cfg.vi_reference->w.dim(), problem.dim_w(),
                           "VI reference w");
  }
  CompensatedSum vi_g_sum, vi_d_sum;

  auto record = [&](std::int64_t n, double a, double b, double beta_g,
                    double beta_d, const ParameterVector* fg,
                    const ParameterVector* fd) {
    TraceRow row;
    row.n = n;
    row.a = a;
    row.b = b;
    row.beta_g = beta_g;
    row.beta_d = beta_d;
    ParameterVector g_local, d_local;
    if (fg == nullptr) {
      g_local = problem.full_grad_g(gen.iterate, disc.iterate);
      d_local = problem.full_grad_d(gen.iterate, disc.iterate);
      fg = &g_local;
      fd = &d_local;
    }
    row.grad_norm_g = norm(*fg);
    row.grad_norm_d = norm(*fd);
    row.loss_g = problem.loss_g(gen.iterate, disc.iterate);
    row.loss_d = problem.loss_d(gen.iterate, disc.iterate);
    if (cfg.snapshot_iterates) {
      row.iterate = concat(gen.iterate, disc.iterate).vec();
    }
    if (n > 0 && trace.has_vi) {
      row.vi_g = vi_g_sum.value() / static_cast<double>(n);
      row.vi_d = vi_d_sum.value() / static_cast<double>(n);
    }
    trace.rows.push_back(std::move(row));
  };

  record(0, 0.0, 0.0, 0.0, 0.0, nullptr, nullptr);

  for (std::int64_t n = 0; n < cfg.steps; ++n) {
    const std::int64_t step1 = n + 1;
    try {
      const double a = rate_at(cfg.generator.schedule, step1);
      const double b = rate_at(cfg.discriminator.schedule, step1);

      const MiniBatch disc_batch = disc_sampler.Next();
      internal::HalfStep hd = internal::AdvancePlayer(
          disc, cfg.discriminator,
          problem.grad_d(gen.iterate, disc.iterate, disc_batch), b, step1,
          cfg.eps_denom);

      const MiniBatch gen_batch = gen_sampler.Next();
      internal::HalfStep hg = internal::AdvancePlayer(
          gen, cfg.generator,
          problem.grad_g(gen.iterate, disc.iterate, gen_batch), a, step1,
          cfg.eps_denom);

      const double beta_g = hg.beta, beta_d = hd.beta;
      internal::Commit(disc, std::move(hd));
      internal::Commit(gen, std::move(hg));

      const double rg = norm(gen.iterate), rd = norm(disc.iterate);
      if (rg > cfg.divergence_threshold || rd > cfg.divergence_threshold) {
        throw DivergenceError(step1, "iterate norm exceeds " +
                                         internal::FormatNumber(
                                             cfg.divergence_threshold));
      }

      const bool want_row = internal::ShouldRecord(cfg, step1);
      if (trace.has_vi || want_row) {
        const ParameterVector fg = problem.full_grad_g(gen.iterate, disc.iterate);
        const ParameterVector fd = problem.full_grad_d(gen.iterate, disc.iterate);
        if (trace.has_vi) {
          vi_g_sum.Add(dot(gen.iterate - cfg.vi_reference->theta, fg));
          vi_d_sum.Add(dot(disc.iterate - cfg.vi_reference->w, fd));
        }
        if (want_row) record(step1, a, b, beta_g, beta_d, &fg, &fd);
      }
    } catch (const DivergenceError&) {
      throw;
    } catch (const NumericError& e) {
      throw DivergenceError(step1, e.what());
    }
  }
  trace.final_generator = std::move(gen);
  trace.final_discriminator = std::move(disc);
  return trace;
}

inline Trace run(const RunConfig& cfg) {
  const std::unique_ptr<GameProblem> problem = MakeProblem(cfg.problem);
  return run(*problem, cfg);
}

struct MomentumCheck {
  bool identical = false;
  double max_discrepancy = std::numeric_limits<double>::infinity();
};

// Replays a constant-beta, constant-rate run in heavy-ball form
//   m_n = g_n + c m_{n-1},  x_{n+1} = x_n - lr m_n,  m_{-1} = -d_{-1}
// with the same minibatch streams and compares every iterate against the CG
// recursion. The two forms are algebraically identical with d_n = -m_n.
inline MomentumCheck equivalence_momentum(const GameProblem& problem,
                                          const RunConfig& input_cfg) {
  for (const PlayerConfig* p : {&input_cfg.generator, &input_cfg.discriminator}) {
    if (p->beta.kind != BetaKind::kConstant && p->beta.kind != BetaKind::kZero) {
      throw UsageError("momentum equivalence needs a constant beta rule");
    }
    if (p->schedule.kind != ScheduleKind::kConstant) {
      throw UsageError("momentum equivalence needs constant learning rates");
    }
  }
  RunConfig cfg = input_cfg;
  cfg.trace_stride = 1;
  cfg.snapshot_iterates = true;
  cfg.extra_record_steps.clear();
  const Trace trace = run(problem, cfg);

  auto [gen, disc] = internal::InitialStates(problem, cfg);
  ParameterVector theta = gen.iterate, w = disc.iterate;
  ParameterVector mg = -gen.prev_direction, md = -disc.prev_direction;
  const double cg = cfg.generator.beta.kind == BetaKind::kConstant
                        ? cfg.generator.beta.constant
                        : 0.0;
  const double cd = cfg.discriminator.beta.kind == BetaKind::kConstant
                        ? cfg.discriminator.beta.constant
                        : 0.0;
  const double a = cfg.generator.schedule.a, b = cfg.discriminator.schedule.a;
  MinibatchSampler disc_sampler(problem.dataset_size(), cfg.batch_size,
                                internal::StreamSeed(cfg.seed, 0), cfg.sampling);
  MinibatchSampler gen_sampler(problem.dataset_size(), cfg.batch_size,
                               internal::StreamSeed(cfg.seed, 1), cfg.sampling);

  MomentumCheck check;
  check.max_discrepancy = 0.0;
  for (std::int64_t n = 0; n < cfg.steps; ++n) {
    const MiniBatch bd = disc_sampler.Next();
    const ParameterVector gd = problem.grad_d(theta, w, bd);
    const MiniBatch bg = gen_sampler.Next();
    const ParameterVector gg = problem.grad_g(theta, w, bg);
    md = axpy(cd, md, gd);
    mg = axpy(cg, mg, gg);
    ParameterVector w_next = axpy(-b, md, w);
    ParameterVector theta_next = axpy(-a, mg, theta);
    if (cfg.discriminator.radius) {
      w_next = project_ball(w_next, *cfg.discriminator.radius);
    }
    if (cfg.generator.radius) {
      theta_next = project_ball(theta_next, *cfg.generator.radius);
    }
    w = std::move(w_next);
    theta = std::move(theta_next);
    const std::vector<double>& snap = trace.rows[n + 1].iterate;
    const ParameterVector both = concat(theta, w);
    for (std::size_t i = 0; i < both.dim(); ++i) {
      check.max_discrepancy =
          std::max(check.max_discrepancy, std::abs(both[i] - snap[i]));
    }
  }
  check.identical = check.max_discrepancy == 0.0;
  return check;
}

// CSV: n,a_n,b_n,beta_g,beta_d,grad_norm_g,grad_norm_d,loss_g,loss_d then
// x0.. (theta followed by w) when snapshots are present. 17 significant digits.
inline void write_trace_csv(std::ostream& os, const Trace& trace) {
  const bool snaps = !trace.rows.empty() && !trace.rows.front().iterate.empty();
  os << "n,a_n,b_n,beta_g,beta_d,grad_norm_g,grad_norm_d,loss_g,loss_d";
  if (snaps) {
    for (std::size_t i = 0; i < trace.dim_theta + trace.dim_w; ++i) {
      os << ",x" << i;
    }
  }
  os << '\n';
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), ",%.17g", v);
    os << buf;
  };
  for (const TraceRow& r : trace.rows) {
    os << r.n;
    put(r.a);
    put(r.b);
    put(r.beta_g);
    put(r.beta_d);
    put(r.grad_norm_g);
    put(r.grad_norm_d);
    put(r.loss_g);
    put(r.loss_d);
    for (double v : r.iterate) put(v);
    os << '\n';
  }
}

}  // namespace lnecg

#endif  // LNECG_SOLVER_HPP_
