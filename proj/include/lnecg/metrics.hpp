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

// Convergence measurements over solver traces.
//
// The variational-inequality (VI) average of a run against a fixed reference
// point (theta_ref, w_ref) is
//
//   A_G(N) = (1/N) sum_{n=1..N} <theta_n - theta_ref, grad_theta L_G(theta_n, w_n)>
//   A_D(N) = (1/N) sum_{n=1..N} <w_n - w_ref, grad_w L_D(theta_n, w_n)>
//
// with exact gradients. Averaging over seeds estimates the expectation; the
// decay exponent is read off a least-squares line in log-log coordinates.

#ifndef LNECG_METRICS_HPP_
#define LNECG_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lnecg/core.hpp"
#include "lnecg/games.hpp"
#include "lnecg/solver.hpp"

namespace lnecg {

struct ViSeries {
  Equilibrium reference;
  std::vector<std::int64_t> n;
  std::vector<double> a_g, a_d;
  std::vector<double> a_g_min, a_g_max, a_d_min, a_d_max;
  std::vector<double> grad_norm_g_mean, grad_norm_d_mean;
  std::size_t num_traces = 0;

  std::size_t size() const { return n.size(); }
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::int64_t n_min = 0;
  std::int64_t n_max = 0;
  std::size_t points_used = 0;
  std::size_t points_dropped = 0;  // zero or sign-crossing values
};

namespace internal {

inline ViSeries MakeSeries(std::size_t len) {
  ViSeries s;
  for (auto* v : {&s.a_g, &s.a_d, &s.grad_norm_g_mean, &s.grad_norm_d_mean}) {
    v->assign(len, 0.0);
  }
  for (auto* v : {&s.a_g_min, &s.a_d_min}) {
    v->assign(len, std::numeric_limits<double>::infinity());
  }
  for (auto* v : {&s.a_g_max, &s.a_d_max}) {
    v->assign(len, -std::numeric_limits<double>::infinity());
  }
  return s;
}

inline void Accumulate(ViSeries& s, std::size_t i, double ag, double ad,
                       double gn, double dn) {
  s.a_g[i] += ag;
  s.a_d[i] += ad;
  s.grad_norm_g_mean[i] += gn;
  s.grad_norm_d_mean[i] += dn;
  s.a_g_min[i] = std::min(s.a_g_min[i], ag);
  s.a_g_max[i] = std::max(s.a_g_max[i], ag);
  s.a_d_min[i] = std::min(s.a_d_min[i], ad);
  s.a_d_max[i] = std::max(s.a_d_max[i], ad);
}

inline void Normalize(ViSeries& s) {
  const double k = static_cast<double>(s.num_traces);
  for (auto* v : {&s.a_g, &s.a_d, &s.grad_norm_g_mean, &s.grad_norm_d_mean}) {
    for (double& x : *v) x /= k;
  }
}

}  // namespace internal

// Seed-averaged VI series recomputed from iterate snapshots. Every trace
// must hold a snapshot for each step 0..N (trace_stride = 1); the series has
// one entry per N = 1..min length.
inline ViSeries vi_average(const std::vector<Trace>& traces,
                           const GameProblem& problem,
                           const Equilibrium& reference) {
  if (traces.empty()) throw UsageError("vi_average needs at least one trace");
  std::size_t len = std::numeric_limits<std::size_t>::max();
  for (const Trace& t : traces) {
    if (t.rows.size() < 2) throw UsageError("trace has no steps");
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      if (t.rows[i].n != static_cast<std::int64_t>(i)) {
        throw UsageError(
            "vi_average needs a snapshot at every step (trace_stride = 1)");
      }
      if (t.rows[i].iterate.size() != problem.dim_theta() + problem.dim_w()) {
        throw UsageError("vi_average: missing iterate snapshots");
      }
    }
    len = std::min(len, t.rows.size() - 1);
  }
  internal::CheckSameDim(reference.theta.dim(), problem.dim_theta(),
                         "VI reference theta");
  internal::CheckSameDim(reference.w.dim(), problem.dim_w(), "VI reference w");

  ViSeries s = internal::MakeSeries(len);
  s.reference = reference;
  s.num_traces = traces.size();
  for (std::size_t i = 0; i < len; ++i) s.n.push_back(static_cast<std::int64_t>(i + 1));
  const std::size_t p = problem.dim_theta();
  for (const Trace& t : traces) {
    CompensatedSum sg, sd;
    for (std::size_t i = 0; i < len; ++i) {
      const std::vector<double>& x = t.rows[i + 1].iterate;
      const ParameterVector theta(std::vector<double>(x.begin(), x.begin() + p));
      const ParameterVector w(std::vector<double>(x.begin() + p, x.end()));
      const ParameterVector gg = problem.full_grad_g(theta, w);
      const ParameterVector gd = problem.full_grad_d(theta, w);
      sg.Add(dot(theta - reference.theta, gg));
      sd.Add(dot(w - reference.w, gd));
      const double k = static_cast<double>(i + 1);
      internal::Accumulate(s, i, sg.value() / k, sd.value() / k, norm(gg),
                           norm(gd));
    }
  }
  internal::Normalize(s);
  return s;
}

// VI series of one trace from the running averages the solver accumulated
// online (RunConfig::vi_reference), one entry per recorded step n >= 1.
inline ViSeries single_vi(const Trace& t) {
  if (!t.has_vi) throw UsageError("trace was run without a VI reference point");
  std::size_t len = 0;
  for (const TraceRow& r : t.rows) len += r.n >= 1 ? 1 : 0;
  ViSeries s = internal::MakeSeries(len);
  s.reference = *t.vi_reference;
  s.num_traces = 1;
  std::size_t j = 0;
  for (const TraceRow& r : t.rows) {
    if (r.n < 1) continue;
    s.n.push_back(r.n);
    internal::Accumulate(s, j++, r.vi_g, r.vi_d, r.grad_norm_g, r.grad_norm_d);
  }
  return s;
}

// Trace-weighted average of series over the N values they all share;
// envelopes are merged.
inline ViSeries average_series(const std::vector<ViSeries>& parts) {
  if (parts.empty()) throw UsageError("average_series needs at least one series");
  std::vector<std::int64_t> common = parts.front().n;
  for (std::size_t k = 1; k < parts.size(); ++k) {
    std::vector<std::int64_t> out;
    std::set_intersection(common.begin(), common.end(), parts[k].n.begin(),
                          parts[k].n.end(), std::back_inserter(out));
    common = std::move(out);
  }
  ViSeries s = internal::MakeSeries(common.size());
  s.reference = parts.front().reference;
  s.n = common;
  for (const ViSeries& p : parts) {
    const double w = static_cast<double>(p.num_traces);
    std::size_t j = 0;
    for (std::size_t i = 0; i < p.size() && j < common.size(); ++i) {
      if (p.n[i] != common[j]) continue;
      s.a_g[j] += w * p.a_g[i];
      s.a_d[j] += w * p.a_d[i];
      s.grad_norm_g_mean[j] += w * p.grad_norm_g_mean[i];
      s.grad_norm_d_mean[j] += w * p.grad_norm_d_mean[i];
      s.a_g_min[j] = std::min(s.a_g_min[j], p.a_g_min[i]);
      s.a_g_max[j] = std::max(s.a_g_max[j], p.a_g_max[i]);
      s.a_d_min[j] = std::min(s.a_d_min[j], p.a_d_min[i]);
      s.a_d_max[j] = std::max(s.a_d_max[j], p.a_d_max[i]);
      ++j;
    }
    s.num_traces += p.num_traces;
  }
  internal::Normalize(s);
  return s;
}

// Seed-averaged VI series from online running averages, over the recorded
// steps n >= 1 shared by all traces.
inline ViSeries collect_vi(const std::vector<Trace>& traces) {
  if (traces.empty()) throw UsageError("collect_vi needs at least one trace");
  std::vector<ViSeries> parts;
  parts.reserve(traces.size());
  for (const Trace& t : traces) parts.push_back(single_vi(t));
  return average_series(parts);
}

// Least-squares fit of log|value| against log n over n in [n_min, n_max].
// Zeros and points whose sign disagrees with the majority sign in the window
// are dropped and counted.
inline RateFit fit_rate(const std::vector<std::int64_t>& n,
                        const std::vector<double>& values, std::int64_t n_min,
                        std::int64_t n_max) {
  internal::CheckSameDim(n.size(), values.size(), "fit_rate");
  if (!(n_min < n_max)) throw UsageError("fit window needs n_min < n_max");
  int sign_balance = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] < n_min || n[i] > n_max || n[i] < 1) continue;
    if (values[i] > 0) ++sign_balance;
    if (values[i] < 0) --sign_balance;
  }
  const double sign = sign_balance >= 0 ? 1.0 : -1.0;
  RateFit fit;
  fit.n_min = n_min;
  fit.n_max = n_max;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] < n_min || n[i] > n_max || n[i] < 1) continue;
    if (!(values[i] * sign > 0.0) || !std::isfinite(values[i])) {
      ++fit.points_dropped;
      continue;
    }
    xs.push_back(std::log(static_cast<double>(n[i])));
    ys.push_back(std::log(std::abs(values[i])));
  }
  fit.points_used = xs.size();
  if (xs.size() < 5) {
    throw UsageError("fit_rate needs at least 5 usable points, got " +
                     std::to_string(xs.size()));
  }
  const double k = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw UsageError("fit_rate needs distinct n values");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += e * e;
  }
  fit.r_squared = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return fit;
}

enum class ViComponent { kGenerator, kDiscriminator };

inline RateFit fit_rate(const ViSeries& s, ViComponent which,
                        std::int64_t n_min, std::int64_t n_max) {
  return fit_rate(s.n, which == ViComponent::kGenerator ? s.a_g : s.a_d, n_min,
                  n_max);
}

inline std::string FormatFit(const std::string& label, const RateFit& f) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%s: slope=%.4f intercept=%.4f r2=%.4f window=[%lld,%lld] "
                "points=%zu dropped=%zu",
                label.c_str(), f.slope, f.intercept, f.r_squared,
                static_cast<long long>(f.n_min),
                static_cast<long long>(f.n_max), f.points_used,
                f.points_dropped);
  return buf;
}

// min(count, last - first + 1) strictly increasing integers spread
// logarithmically over [first, last], both ends included.
inline std::vector<std::int64_t> log_spaced_steps(std::int64_t first,
                                                  std::int64_t last,
                                                  int count) {
  if (first < 1 || last < first || count < 2) {
    throw UsageError("log_spaced_steps: need 1 <= first <= last, count >= 2");
  }
  const std::int64_t k = std::min<std::int64_t>(count, last - first + 1);
  std::vector<std::int64_t> out;
  const double lo = std::log(static_cast<double>(first));
  const double hi = std::log(static_cast<double>(last));
  for (std::int64_t i = 0; i < k; ++i) {
    const double x = k == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) /
                                            static_cast<double>(k - 1);
    std::int64_t v = std::llround(std::exp(x));
    if (!out.empty()) v = std::max(v, out.back() + 1);
    v = std::min(v, last - (k - 1 - i));  // leave room for the rest
    out.push_back(v);
  }
  return out;
}

inline void write_metrics_csv(std::ostream& os, const ViSeries& s) {
  os << "N,A_G,A_D,A_G_min,A_G_max,A_D_min,A_D_max,grad_norm_g_mean,"
        "grad_norm_d_mean\n";
  char buf[40];
  for (std::size_t i = 0; i < s.size(); ++i) {
    os << s.n[i];
    for (double v : {s.a_g[i], s.a_d[i], s.a_g_min[i], s.a_g_max[i],
                     s.a_d_min[i], s.a_d_max[i], s.grad_norm_g_mean[i],
                     s.grad_norm_d_mean[i]}) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      os << buf;
    }
    os << '\n';
  }
}

// Reads the N, A_G and A_D columns of a metrics CSV. Other columns may be
// absent; the three named ones are required.
inline ViSeries read_metrics_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw UsageError("metrics CSV is empty");
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::stringstream ss(l);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    return cells;
  };
  const std::vector<std::string> header = split(line);
  auto col = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw UsageError("metrics CSV lacks column '" + name + "'");
  };
  const std::size_t cn = col("N"), cg = col("A_G"), cd = col("A_D");
  ViSeries s;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != header.size()) {
      throw UsageError("metrics CSV line " + std::to_string(lineno) +
                       ": expected " + std::to_string(header.size()) +
                       " cells");
    }
    const double nval = internal::ParseNumber(cells[cn], "metrics CSV N");
    s.n.push_back(static_cast<std::int64_t>(nval));
    s.a_g.push_back(internal::ParseNumber(cells[cg], "metrics CSV A_G"));
    s.a_d.push_back(internal::ParseNumber(cells[cd], "metrics CSV A_D"));
  }
  return s;
}

}  // namespace lnecg

#endif  // LNECG_METRICS_HPP_
