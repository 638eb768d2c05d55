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

// Conjugate-gradient coefficients beta_n. With g = g_n, p = g_{n-1},
// y = g - p and d = d_{n-1}:
//
//   FR  = |g|^2 / |p|^2            PRP = <g, y> / |p|^2
//   HS  = <g, y> / <d, y>          DY  = |g|^2 / <d, y>
//   HZ  = HS - mu |y|^2 <g, d> / <d, y>^2          (mu > 1/4)
//   Hyb1 = max{0, min{HS, DY}}     Hyb2 = max{0, min{FR, PRP}}
//
// A formula whose denominator is within eps_denom of zero yields 0. The clip
// modes bound the result into [0, 1/2], optionally times n^-eta, which keeps
// the CG directions bounded in expectation. Zero and Constant(c) are the SGD
// and heavy-ball degenerate cases and ignore the clip mode.

#ifndef LNECG_CONJUGACY_HPP_
#define LNECG_CONJUGACY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "lnecg/core.hpp"

namespace lnecg {

enum class BetaKind { kZero, kConstant, kFR, kPRP, kHS, kDY, kHZ, kHyb1, kHyb2 };

enum class ClipMode {
  kClipHalf,                 // clamp to [0, 1/2]
  kClipHalfTimesPowerDecay,  // clamp to [0, 1/2], then times n^-eta
  kRaw,                      // formula value, unclamped
};

struct BetaRule {
  BetaKind kind = BetaKind::kZero;
  ClipMode clip = ClipMode::kClipHalf;
  double constant = 0.0;  // Constant(c)
  double mu = 0.5;        // HZ
  double eta = 0.5;       // kClipHalfTimesPowerDecay

  static BetaRule Zero() { return {}; }
  static BetaRule Constant(double c, ClipMode clip = ClipMode::kClipHalf) {
    BetaRule r;
    r.kind = BetaKind::kConstant;
    r.constant = c;
    r.clip = clip;
    return r;
  }
  static BetaRule Of(BetaKind kind, ClipMode clip = ClipMode::kClipHalf) {
    BetaRule r;
    r.kind = kind;
    r.clip = clip;
    return r;
  }
  static BetaRule Decayed(BetaKind kind, double eta) {
    BetaRule r = Of(kind, ClipMode::kClipHalfTimesPowerDecay);
    r.eta = eta;
    return r;
  }
  static BetaRule HZ(double mu, ClipMode clip = ClipMode::kClipHalf) {
    BetaRule r = Of(BetaKind::kHZ, clip);
    r.mu = mu;
    return r;
  }

  // Throws UsageError unless the parameters are admissible. Constant(c)
  // needs c in [0, 1/2] under the clip modes; raw mode admits any c in
  // [0, 1) so classical heavy-ball coefficients such as 0.9 are expressible.
  void Validate() const {
    if (kind == BetaKind::kConstant) {
      const double hi = clip == ClipMode::kRaw ? 1.0 : 0.5;
      const bool ok = clip == ClipMode::kRaw ? (constant >= 0.0 && constant < hi)
                                             : (constant >= 0.0 && constant <= hi);
      if (!ok || !std::isfinite(constant)) {
        throw UsageError("constant beta " + std::to_string(constant) +
                         (clip == ClipMode::kRaw ? " outside [0, 1)"
                                                 : " outside [0, 1/2]"));
      }
    }
    if (kind == BetaKind::kHZ && !(mu > 0.25 && std::isfinite(mu))) {
      throw UsageError("HZ parameter mu must exceed 1/4, got " +
                       std::to_string(mu));
    }
    if (clip == ClipMode::kClipHalfTimesPowerDecay &&
        !(eta > 0.0 && eta < 1.0)) {
      throw UsageError("clip-decay exponent must lie in (0, 1), got " +
                       std::to_string(eta));
    }
  }
};

struct BetaInputs {
  const ParameterVector& g_curr;
  const ParameterVector& g_prev;
  const ParameterVector& d_prev;
  std::int64_t step = 1;  // 1-based
  double eps_denom = 1e-30;
};

namespace internal {

inline double Ratio(double num, double den, double eps) {
  if (std::abs(den) <= eps) return 0.0;
  const double r = num / den;
  CheckFinite(r, "beta");
  return r;
}

struct BetaTerms {
  double gg, pp, gy, dy, yy, gd;
};

inline BetaTerms ComputeTerms(const BetaInputs& in) {
  CheckSameDim(in.g_curr.dim(), in.g_prev.dim(), "beta inputs");
  CheckSameDim(in.g_curr.dim(), in.d_prev.dim(), "beta inputs");
  const ParameterVector y = in.g_curr - in.g_prev;
  return {dot(in.g_curr, in.g_curr), dot(in.g_prev, in.g_prev),
          dot(in.g_curr, y),         dot(in.d_prev, y),
          dot(y, y),                 dot(in.g_curr, in.d_prev)};
}

inline double RawBeta(BetaKind kind, double mu, const BetaTerms& t,
                      double eps) {
  switch (kind) {
    case BetaKind::kFR:
      return Ratio(t.gg, t.pp, eps);
    case BetaKind::kPRP:
      return Ratio(t.gy, t.pp, eps);
    case BetaKind::kHS:
      return Ratio(t.gy, t.dy, eps);
    case BetaKind::kDY:
      return Ratio(t.gg, t.dy, eps);
    case BetaKind::kHZ: {
      if (std::abs(t.dy) <= eps) return 0.0;
      const double v = t.gy / t.dy - mu * t.yy * t.gd / (t.dy * t.dy);
      CheckFinite(v, "beta HZ");
      return v;
    }
    default:
      return 0.0;
  }
}

inline double ApplyClip(double raw, const BetaRule& rule, std::int64_t step) {
  switch (rule.clip) {
    case ClipMode::kRaw:
      return raw;
    case ClipMode::kClipHalf:
      return std::clamp(raw, 0.0, 0.5);
    case ClipMode::kClipHalfTimesPowerDecay:
      return std::clamp(raw, 0.0, 0.5) *
             std::pow(static_cast<double>(step), -rule.eta);
  }
  return raw;
}

}  // namespace internal

inline double compute_beta(const BetaRule& rule, const BetaInputs& in) {
  if (rule.kind == BetaKind::kZero) return 0.0;
  if (rule.kind == BetaKind::kConstant) return rule.constant;
  if (rule.clip == ClipMode::kClipHalfTimesPowerDecay && in.step < 1) {
    throw UsageError("decayed beta needs step >= 1");
  }
  const internal::BetaTerms t = internal::ComputeTerms(in);
  auto component = [&](BetaKind k) {
    return internal::ApplyClip(internal::RawBeta(k, rule.mu, t, in.eps_denom),
                               rule, in.step);
  };
  switch (rule.kind) {
    case BetaKind::kHyb1:
      return std::max(0.0, std::min(component(BetaKind::kHS),
                                    component(BetaKind::kDY)));
    case BetaKind::kHyb2:
      return std::max(0.0, std::min(component(BetaKind::kFR),
                                    component(BetaKind::kPRP)));
    default:
      return component(rule.kind);
  }
}

inline std::string BetaKindName(BetaKind kind) {
  switch (kind) {
    case BetaKind::kZero: return "zero";
    case BetaKind::kConstant: return "const";
    case BetaKind::kFR: return "fr";
    case BetaKind::kPRP: return "prp";
    case BetaKind::kHS: return "hs";
    case BetaKind::kDY: return "dy";
    case BetaKind::kHZ: return "hz";
    case BetaKind::kHyb1: return "hyb1";
    case BetaKind::kHyb2: return "hyb2";
  }
  return "?";
}

// Rule names: zero, const:<c>, fr, prp, hs, dy, hz:<mu>, hyb1, hyb2.
// Clip modes: clip, clip-decay:<eta>, raw. The result is validated.
inline BetaRule ParseBetaRule(std::string_view rule_text,
                              std::string_view clip_text = "clip") {
  BetaRule r;
  const std::string rule(rule_text);
  if (rule == "zero") {
    r.kind = BetaKind::kZero;
  } else if (rule.rfind("const:", 0) == 0) {
    r.kind = BetaKind::kConstant;
    r.constant = internal::ParseNumber(rule.substr(6), "beta rule const");
  } else if (rule == "fr") {
    r.kind = BetaKind::kFR;
  } else if (rule == "prp") {
    r.kind = BetaKind::kPRP;
  } else if (rule == "hs") {
    r.kind = BetaKind::kHS;
  } else if (rule == "dy") {
    r.kind = BetaKind::kDY;
  } else if (rule == "hz") {
    r.kind = BetaKind::kHZ;
  } else if (rule.rfind("hz:", 0) == 0) {
    r.kind = BetaKind::kHZ;
    r.mu = internal::ParseNumber(rule.substr(3), "beta rule hz");
  } else if (rule == "hyb1") {
    r.kind = BetaKind::kHyb1;
  } else if (rule == "hyb2") {
    r.kind = BetaKind::kHyb2;
  } else {
    throw UsageError("unknown beta rule '" + rule + "'");
  }
  const std::string clip(clip_text);
  if (clip == "clip") {
    r.clip = ClipMode::kClipHalf;
  } else if (clip == "raw") {
    r.clip = ClipMode::kRaw;
  } else if (clip.rfind("clip-decay:", 0) == 0) {
    r.clip = ClipMode::kClipHalfTimesPowerDecay;
    r.eta = internal::ParseNumber(clip.substr(11), "clip-decay exponent");
  } else {
    throw UsageError("unknown clip mode '" + clip + "'");
  }
  r.Validate();
  return r;
}

inline std::string BetaRuleName(const BetaRule& r) {
  switch (r.kind) {
    case BetaKind::kConstant:
      return "const:" + internal::FormatNumber(r.constant);
    case BetaKind::kHZ:
      return "hz:" + internal::FormatNumber(r.mu);
    default:
      return BetaKindName(r.kind);
  }
}

inline std::string ClipModeName(const BetaRule& r) {
  switch (r.clip) {
    case ClipMode::kClipHalf: return "clip";
    case ClipMode::kRaw: return "raw";
    case ClipMode::kClipHalfTimesPowerDecay:
      return "clip-decay:" + internal::FormatNumber(r.eta);
  }
  return "?";
}

}  // namespace lnecg

#endif  // LNECG_CONJUGACY_HPP_
