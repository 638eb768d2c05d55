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

#include "lnecg/core.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "gtest/gtest.h"

namespace lnecg {
namespace {

ParameterVector RandomVector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> normal;
  std::vector<double> v(dim);
  for (double& x : v) x = normal(rng);
  return ParameterVector(std::move(v));
}

TEST(DotTest, Examples) {
  EXPECT_EQ(dot({1, 2}, {3, 4}), 11.0);
  const ParameterVector x{3, 4};
  EXPECT_EQ(dot(x, x), 25.0);
  EXPECT_EQ(dot(x, ParameterVector::Zeros(2)), 0.0);
}

TEST(DotTest, DimensionMismatchIsUsageError) {
  EXPECT_THROW(dot({1, 2}, {1, 2, 3}), UsageError);
}

TEST(NormTest, Examples) {
  EXPECT_EQ(norm({3, 4}), 5.0);
  EXPECT_EQ(norm(ParameterVector::Zeros(3)), 0.0);
  EXPECT_EQ(norm({1, 1, 1, 1}), 2.0);
}

TEST(AxpyTest, Examples) {
  EXPECT_EQ(axpy(2.0, {1, 0}, {0, 1}), (ParameterVector{2, 1}));
  const ParameterVector y{1.5, -2.5, 7};
  EXPECT_EQ(axpy(0.0, {9, 9, 9}, y), y);
  EXPECT_EQ(axpy(-1.0, y, y), ParameterVector::Zeros(3));
  EXPECT_THROW(axpy(1.0, {1}, {1, 2}), UsageError);
}

TEST(ParameterVectorTest, RejectsNonFinite) {
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(ParameterVector({1.0, std::nan("")}), NumericError);
  EXPECT_THROW(ParameterVector({inf}), NumericError);
  EXPECT_THROW(ParameterVector(2, -inf), NumericError);
}

TEST(ParameterVectorTest, OverflowRaisesInsteadOfPropagating) {
  const ParameterVector big{1e308, 1e308};
  EXPECT_THROW(big + big, NumericError);
  EXPECT_THROW(axpy(10.0, big, big), NumericError);
  EXPECT_THROW(scale(1e10, big), NumericError);
  EXPECT_THROW(dot(big, big), NumericError);
}

TEST(PlayerStateTest, DefaultsAndDimensionCheck) {
  const PlayerState s(ParameterVector{1, 2, 3});
  EXPECT_EQ(s.prev_direction, ParameterVector::Zeros(3));
  EXPECT_EQ(s.prev_gradient, ParameterVector::Zeros(3));
  EXPECT_EQ(s.step, 0);
  const PlayerState t({1, 2}, {0.5, -0.5});
  EXPECT_EQ(t.prev_direction, (ParameterVector{0.5, -0.5}));
  EXPECT_THROW(PlayerState({1, 2}, {1}), UsageError);
}

TEST(DotProperty, SymmetricAndBilinear) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dim = 1 + trial % 17;
    const ParameterVector x = RandomVector(rng, dim);
    const ParameterVector y = RandomVector(rng, dim);
    const ParameterVector z = RandomVector(rng, dim);
    const double a = coef(rng), b = coef(rng);
    EXPECT_EQ(dot(x, y), dot(y, x));
    const double lhs = dot(axpy(a, x, scale(b, y)), z);
    const double rhs = a * dot(x, z) + b * dot(y, z);
    const double mag = std::abs(a) * norm(x) * norm(z) +
                       std::abs(b) * norm(y) * norm(z);
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * mag);
  }
}

TEST(NormProperty, SquaredNormEqualsSelfDot) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const ParameterVector x = RandomVector(rng, 1 + trial % 31);
    const double n = norm(x);
    EXPECT_GE(n, 0.0);
    EXPECT_NEAR(n * n, dot(x, x), 1e-12 * dot(x, x));
  }
}

TEST(CompensatedSumTest, RecoversCancellation) {
  CompensatedSum s;
  s.Add(1.0);
  s.Add(1e100);
  s.Add(1.0);
  s.Add(-1e100);
  EXPECT_EQ(s.value(), 2.0);
}

TEST(ConcatTest, JoinsInOrder) {
  EXPECT_EQ(concat({1, 2}, {3}), (ParameterVector{1, 2, 3}));
}

}  // namespace
}  // namespace lnecg
