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

// Learning-rate sequences. Steps are 1-based: rate_at(s, 1) is the first rate.

#ifndef LNECG_SCHEDULES_HPP_
#define LNECG_SCHEDULES_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lnecg/core.hpp"

namespace lnecg {

enum class ScheduleKind { kConstant, kPowerDecay, kStepDecay };

struct Schedule {
  ScheduleKind kind = ScheduleKind::kConstant;
  double a = 1e-3;
  double eta = 0.5;      // kPowerDecay
  double gamma = 0.9;    // kStepDecay
  std::int64_t period = 1;  // kStepDecay block length T

  static Schedule Constant(double a) {
    Schedule s;
    s.a = a;
    return s;
  }
  static Schedule PowerDecay(double a, double eta) {
    Schedule s;
    s.kind = ScheduleKind::kPowerDecay;
    s.a = a;
    s.eta = eta;
    return s;
  }
  static Schedule StepDecay(double a, double gamma, std::int64_t period) {
    Schedule s;
    s.kind = ScheduleKind::kStepDecay;
    s.a = a;
    s.gamma = gamma;
    s.period = period;
    return s;
  }

  void Validate() const {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw UsageError("learning rate must be > 0, got " + std::to_string(a));
    }
    if (kind == ScheduleKind::kPowerDecay && !(eta > 0.0 && eta < 1.0)) {
      throw UsageError("power-decay exponent must lie in (0, 1), got " +
                       std::to_string(eta));
    }
    if (kind == ScheduleKind::kStepDecay) {
      if (!(gamma > 0.0 && gamma < 1.0)) {
        throw UsageError("step-decay factor must lie in (0, 1), got " +
                         std::to_string(gamma));
      }
      if (period < 1) throw UsageError("step-decay period must be >= 1");
    }
  }
};

// Constant: a. PowerDecay: a n^-eta. StepDecay: a gamma^floor((n-1)/T).
inline double rate_at(const Schedule& s, std::int64_t n) {
  if (n < 1) throw UsageError("rate_at needs n >= 1");
  switch (s.kind) {
    case ScheduleKind::kConstant:
      return s.a;
    case ScheduleKind::kPowerDecay:
      return s.a * std::pow(static_cast<double>(n), -s.eta);
    case ScheduleKind::kStepDecay:
      return s.a * std::pow(s.gamma, static_cast<double>((n - 1) / s.period));
  }
  return s.a;
}

enum class TimescaleRegime {
  kConstant,     // both rates constant
  kRateOptimal,  // both n^-1/2
  kAlmostSure,   // 1/2 < eta_b < eta_a < 1
  kStepDecay,    // both step-decay
  kNone,
};

struct TimescaleReport {
  TimescaleRegime regime = TimescaleRegime::kNone;
  std::string text;
};

// Classifies a (generator, discriminator) schedule pair. Advisory only.
inline TimescaleReport validate_timescales(const Schedule& gen,
                                           const Schedule& disc) {
  using K = ScheduleKind;
  if (gen.kind == K::kConstant && disc.kind == K::kConstant) {
    return {TimescaleRegime::kConstant,
            "constant regime: error floor proportional to the rates and the "
            "beta bound, O(1/N) transient"};
  }
  if (gen.kind == K::kPowerDecay && disc.kind == K::kPowerDecay) {
    if (gen.eta == 0.5 && disc.eta == 0.5) {
      return {TimescaleRegime::kRateOptimal,
              "rate-optimal O(N^{-1/2}) regime (eta_a = eta_b = 1/2)"};
    }
    if (0.5 < disc.eta && disc.eta < gen.eta && gen.eta < 1.0) {
      return {TimescaleRegime::kAlmostSure,
              "almost-sure regime (1/2 < eta_b < eta_a < 1): generator "
              "O(N^{-min(eta_a, 1-eta_a)}), discriminator "
              "O(N^{-min(eta_b, 1-eta_b)})"};
    }
    return {TimescaleRegime::kNone,
            "power-decay pair outside the recognized regimes; rates "
            "O(N^{-min(eta, 1-eta)}) per player still apply"};
  }
  if (gen.kind == K::kStepDecay && disc.kind == K::kStepDecay) {
    return {TimescaleRegime::kStepDecay,
            "step-decay regime: summable rates, O(1/N) with summable beta"};
  }
  return {TimescaleRegime::kNone, "no recognized regime for this pair"};
}

// "const:<a>", "power:<a>:<eta>", "step:<a>:<gamma>:<T>".
inline Schedule ParseSchedule(std::string_view text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  const std::string whole(text);
  Schedule s;
  if (parts[0] == "const" && parts.size() == 2) {
    s = Schedule::Constant(internal::ParseNumber(parts[1], whole));
  } else if (parts[0] == "power" && parts.size() == 3) {
    s = Schedule::PowerDecay(internal::ParseNumber(parts[1], whole),
                             internal::ParseNumber(parts[2], whole));
  } else if (parts[0] == "step" && parts.size() == 4) {
    const double t = internal::ParseNumber(parts[3], whole);
    if (t != std::floor(t)) throw UsageError("step period must be an integer");
    s = Schedule::StepDecay(internal::ParseNumber(parts[1], whole),
                            internal::ParseNumber(parts[2], whole),
                            static_cast<std::int64_t>(t));
  } else {
    throw UsageError("unknown schedule '" + whole +
                     "' (expected const:<a>, power:<a>:<eta> or "
                     "step:<a>:<gamma>:<T>)");
  }
  s.Validate();
  return s;
}

inline std::string ScheduleName(const Schedule& s) {
  using internal::FormatNumber;
  switch (s.kind) {
    case ScheduleKind::kConstant:
      return "const:" + FormatNumber(s.a);
    case ScheduleKind::kPowerDecay:
      return "power:" + FormatNumber(s.a) + ":" + FormatNumber(s.eta);
    case ScheduleKind::kStepDecay:
      return "step:" + FormatNumber(s.a) + ":" + FormatNumber(s.gamma) + ":" +
             std::to_string(s.period);
  }
  return "?";
}

}  // namespace lnecg

#endif  // LNECG_SCHEDULES_HPP_
