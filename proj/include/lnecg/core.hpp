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

// Shared value types for two-player equilibrium solvers: parameter vectors,
// player roles and per-player iteration state, plus the handful of BLAS-1
// style operations the solver needs. Every arithmetic result is checked for
// finiteness; a NaN or infinity raises NumericError instead of propagating.

#ifndef LNECG_CORE_HPP_
#define LNECG_CORE_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <initializer_list>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lnecg {

// Raised for malformed input: mismatched dimensions, invalid configuration
// values, violated preconditions.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when an operation would produce a NaN or infinity.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace internal {

inline void CheckFinite(double v, std::string_view what) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << what << ": non-finite value " << v;
    throw NumericError(os.str());
  }
}

inline void CheckSameDim(std::size_t a, std::size_t b, std::string_view what) {
  if (a != b) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw UsageError(os.str());
  }
}

inline double ParseNumber(std::string_view text, std::string_view what) {
  std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw UsageError(std::string(what) + ": cannot parse number '" + s + "'");
  }
  return v;
}

inline std::string FormatNumber(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace internal

// Flat vector of one player's parameters. Entries are always finite.
class ParameterVector {
 public:
  ParameterVector() = default;
  explicit ParameterVector(std::size_t dim, double fill = 0.0)
      : values_(dim, fill) {
    internal::CheckFinite(fill, "ParameterVector");
  }
  explicit ParameterVector(std::vector<double> values)
      : values_(std::move(values)) {
    for (double v : values_) internal::CheckFinite(v, "ParameterVector");
  }
  ParameterVector(std::initializer_list<double> values)
      : ParameterVector(std::vector<double>(values)) {}

  static ParameterVector Zeros(std::size_t dim) { return ParameterVector(dim); }

  std::size_t dim() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& vec() const { return values_; }

  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  friend bool operator==(const ParameterVector&,
                         const ParameterVector&) = default;

 private:
  std::vector<double> values_;
};

enum class PlayerRole { kGenerator, kDiscriminator };

inline std::string_view RoleName(PlayerRole role) {
  return role == PlayerRole::kGenerator ? "generator" : "discriminator";
}

// Iteration state owned by one player. `prev_direction` holds d_{n-1} and
// `prev_gradient` the stochastic gradient used at the previous step (zeros
// before the first step, which makes every CG coefficient vanish there).
struct PlayerState {
  ParameterVector iterate;
  ParameterVector prev_direction;
  ParameterVector prev_gradient;
  std::int64_t step = 0;

  PlayerState() = default;
  PlayerState(ParameterVector x0, ParameterVector d_init)
      : iterate(std::move(x0)),
        prev_direction(std::move(d_init)),
        prev_gradient(ParameterVector::Zeros(iterate.dim())) {
    internal::CheckSameDim(iterate.dim(), prev_direction.dim(),
                           "PlayerState initial direction");
  }
  explicit PlayerState(ParameterVector x0)
      : PlayerState(x0, ParameterVector::Zeros(x0.dim())) {}
};

inline double dot(const ParameterVector& x, const ParameterVector& y) {
  internal::CheckSameDim(x.dim(), y.dim(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) s += x[i] * y[i];
  internal::CheckFinite(s, "dot");
  return s;
}

inline double norm(const ParameterVector& x) {
  // Plain sqrt(dot(x, x)) keeps norm(x)^2 == dot(x, x) to the last ulp or so.
  return std::sqrt(dot(x, x));
}

// alpha * x + y.
inline ParameterVector axpy(double alpha, const ParameterVector& x,
                            const ParameterVector& y) {
  internal::CheckSameDim(x.dim(), y.dim(), "axpy");
  internal::CheckFinite(alpha, "axpy coefficient");
  std::vector<double> out(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] = alpha * x[i] + y[i];
  return ParameterVector(std::move(out));
}

inline ParameterVector scale(double alpha, const ParameterVector& x) {
  internal::CheckFinite(alpha, "scale coefficient");
  std::vector<double> out(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] = alpha * x[i];
  return ParameterVector(std::move(out));
}

inline ParameterVector operator-(const ParameterVector& x) {
  std::vector<double> out(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] = -x[i];
  return ParameterVector(std::move(out));
}

inline ParameterVector operator+(const ParameterVector& x,
                                 const ParameterVector& y) {
  internal::CheckSameDim(x.dim(), y.dim(), "add");
  std::vector<double> out(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] = x[i] + y[i];
  return ParameterVector(std::move(out));
}

inline ParameterVector operator-(const ParameterVector& x,
                                 const ParameterVector& y) {
  internal::CheckSameDim(x.dim(), y.dim(), "subtract");
  std::vector<double> out(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] = x[i] - y[i];
  return ParameterVector(std::move(out));
}

inline ParameterVector concat(const ParameterVector& a,
                              const ParameterVector& b) {
  std::vector<double> out(a.vec());
  out.insert(out.end(), b.begin(), b.end());
  return ParameterVector(std::move(out));
}

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void Add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace lnecg

#endif  // LNECG_CORE_HPP_
