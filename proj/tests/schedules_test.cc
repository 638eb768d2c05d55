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

#include "lnecg/schedules.hpp"

#include <cmath>
#include <string>

#include "gtest/gtest.h"

namespace lnecg {
namespace {

TEST(RateAtTest, Examples) {
  EXPECT_EQ(rate_at(Schedule::PowerDecay(1.0, 0.5), 4), 0.5);
  EXPECT_EQ(rate_at(Schedule::PowerDecay(0.37, 0.8), 1), 0.37);
  EXPECT_EQ(rate_at(Schedule::Constant(2e-3), 12345), 2e-3);
  const Schedule s = Schedule::StepDecay(1e-3, 0.9, 10000);
  EXPECT_EQ(rate_at(s, 1), 1e-3);
  EXPECT_EQ(rate_at(s, 10000), 1e-3);
  EXPECT_DOUBLE_EQ(rate_at(s, 10001), 9e-4);
  EXPECT_DOUBLE_EQ(rate_at(s, 20001), 1e-3 * 0.81);
}

TEST(RateAtTest, StepIsOneBased) {
  EXPECT_THROW(rate_at(Schedule::Constant(1.0), 0), UsageError);
}

TEST(ScheduleTest, Validation) {
  EXPECT_THROW(Schedule::Constant(0.0).Validate(), UsageError);
  EXPECT_THROW(Schedule::PowerDecay(1.0, 1.0).Validate(), UsageError);
  EXPECT_THROW(Schedule::PowerDecay(1.0, 0.0).Validate(), UsageError);
  EXPECT_THROW(Schedule::StepDecay(1.0, 1.0, 5).Validate(), UsageError);
  EXPECT_THROW(Schedule::StepDecay(1.0, 0.5, 0).Validate(), UsageError);
}

TEST(ScheduleProperty, PositiveAndNonIncreasing) {
  const Schedule all[] = {Schedule::Constant(0.1),
                          Schedule::PowerDecay(0.5, 0.5),
                          Schedule::PowerDecay(3.0, 0.95),
                          Schedule::StepDecay(1e-2, 0.9, 500),
                          Schedule::StepDecay(1.0, 0.5, 2000)};
  for (const Schedule& s : all) {
    double prev = rate_at(s, 1);
    for (int k = 1; k <= 600; ++k) {
      const auto n = static_cast<std::int64_t>(std::llround(std::pow(1e6, k / 600.0)));
      const double r = rate_at(s, n);
      EXPECT_GT(r, 0.0) << ScheduleName(s) << " n=" << n;
      EXPECT_LE(r, prev) << ScheduleName(s) << " n=" << n;
      prev = r;
    }
  }
}

TEST(ScheduleProperty, StepDecayPartialSumsAreGeometric) {
  for (const auto& [a, gamma, t] :
       {std::tuple{1e-2, 0.9, 500}, std::tuple{1e-3, 0.5, 7},
        std::tuple{2.0, 0.99, 1}}) {
    const Schedule s = Schedule::StepDecay(a, gamma, t);
    for (int p : {1, 2, 5, 40}) {
      double direct = 0.0;
      for (std::int64_t n = 1; n <= static_cast<std::int64_t>(t) * p; ++n) {
        direct += rate_at(s, n);
      }
      const double closed = a * t * (1 - std::pow(gamma, p)) / (1 - gamma);
      EXPECT_NEAR(direct, closed, 1e-12 * closed) << a << " " << gamma;
    }
  }
}

TEST(ValidateTimescalesTest, Regimes) {
  auto p = [](double eta) { return Schedule::PowerDecay(0.1, eta); };
  TimescaleReport r = validate_timescales(p(0.5), p(0.5));
  EXPECT_EQ(r.regime, TimescaleRegime::kRateOptimal);
  EXPECT_NE(r.text.find("rate-optimal O(N^{-1/2}) regime"), std::string::npos);
  r = validate_timescales(p(0.8), p(0.6));
  EXPECT_EQ(r.regime, TimescaleRegime::kAlmostSure);
  EXPECT_NE(r.text.find("almost-sure regime"), std::string::npos);
  r = validate_timescales(Schedule::Constant(1), Schedule::Constant(2));
  EXPECT_EQ(r.regime, TimescaleRegime::kConstant);
  EXPECT_NE(r.text.find("constant regime"), std::string::npos);
  EXPECT_EQ(validate_timescales(Schedule::StepDecay(1, 0.9, 3),
                                Schedule::StepDecay(1, 0.9, 3))
                .regime,
            TimescaleRegime::kStepDecay);
  // Wrong ordering (eta_b > eta_a) and mixed kinds are not recognized.
  EXPECT_EQ(validate_timescales(p(0.6), p(0.8)).regime, TimescaleRegime::kNone);
  EXPECT_EQ(validate_timescales(Schedule::Constant(1), p(0.5)).regime,
            TimescaleRegime::kNone);
}

TEST(ParseScheduleTest, RoundTripAndErrors) {
  for (const char* text : {"const:0.001", "power:0.5:0.5", "step:0.01:0.9:500"}) {
    EXPECT_EQ(ScheduleName(ParseSchedule(text)), text);
  }
  EXPECT_THROW(ParseSchedule("power:0.5"), UsageError);
  EXPECT_THROW(ParseSchedule("power:0.5:1.5"), UsageError);
  EXPECT_THROW(ParseSchedule("step:0.01:0.9:2.5"), UsageError);
  EXPECT_THROW(ParseSchedule("cosine:1"), UsageError);
  EXPECT_THROW(ParseSchedule("const:-1"), UsageError);
}

}  // namespace
}  // namespace lnecg
