//
// Copyright 2026 The bsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "bsynth/usage_index.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "oracles.h"
#include "test_util.h"

namespace bsynth {
namespace {

using ::bsynth::testing::PowerIterationPsi;

using ::testing::HasSubstr;

Dataset FiRows(const std::vector<std::array<double, 5>>& rows) {
  // age, gender level, nFI, nSavings, nLoans; one period.
  std::vector<std::vector<double>> cols(7);
  for (const auto& r : rows) {
    cols[0].push_back(0);
    cols[1].push_back(r[0]);
    cols[2].push_back(r[1]);
    cols[3].push_back(r[2]);
    cols[4].push_back(r[3]);
    cols[5].push_back(r[4]);
    cols[6].push_back(0);
  }
  auto d = Dataset::FromColumns(
      {ColumnSpec::Categorical("Period", {"2019"}), ColumnSpec::Numeric("Age"),
       ColumnSpec::Categorical("Gender", {"F", "M"}),
       ColumnSpec::Numeric("nFI"), ColumnSpec::Numeric("nSavings"),
       ColumnSpec::Numeric("nLoans"), ColumnSpec::Numeric("nCCards")},
      cols);
  EXPECT_TRUE(d.ok()) << d.status();
  return *d;
}

UsageIndicators Group(int i, double a, double b, double g) {
  return {{"p", std::to_string(i), "F"}, a, b, g, 100};
}

TEST(UsageIndicatorsTest, UnbankedEnterTheDenominator) {
  std::vector<std::array<double, 5>> rows(80, {30, 0, 1, 0, 0});
  UnbankedCounts unbanked;
  unbanked[{"2019", "25-35", "F"}] = 20;
  auto ind = BuildUsageIndicators(FiRows(rows), unbanked);
  ASSERT_TRUE(ind.ok()) << ind.status();
  ASSERT_EQ(ind->size(), 1u);
  EXPECT_DOUBLE_EQ((*ind)[0].alpha, 0.8);
  EXPECT_EQ((*ind)[0].population, 100);
}

TEST(UsageIndicatorsTest, SavingsSaturateWithoutUnbanked) {
  std::vector<std::array<double, 5>> rows(10, {50, 1, 2, 3, 0});
  auto ind = BuildUsageIndicators(FiRows(rows), {});
  ASSERT_TRUE(ind.ok());
  EXPECT_EQ((*ind)[0].beta, 1.0);
  EXPECT_EQ((*ind)[0].gamma, 0.0);
  EXPECT_EQ((*ind)[0].key.age_band, "45-55");
  EXPECT_EQ((*ind)[0].key.gender, "M");
}

TEST(UsageIndicatorsTest, ZeroPopulationGroupIsAnError) {
  UnbankedCounts unbanked;
  unbanked[{"2019", "18-25", "M"}] = 0;
  auto ind = BuildUsageIndicators(FiRows({}), unbanked);
  ASSERT_FALSE(ind.ok());
  EXPECT_THAT(ind.status().message(), HasSubstr("zero population"));
}

TEST(UsageIndicatorsTest, UnbankedCsvRoundTrip) {
  UnbankedCounts counts;
  counts[{"2019", "18-25", "M"}] = 12;
  counts[{"2020", "75-110", "F"}] = 3;
  auto parsed = ParseUnbankedCsv(FormatUnbankedCsv(counts));
  ASSERT_TRUE(parsed.ok());
  EXPECT_EQ(*parsed, counts);
  EXPECT_FALSE(ParseUnbankedCsv("period,age,gender,count\n").ok());
  EXPECT_FALSE(
      ParseUnbankedCsv("period,age_band,gender,count\n2019,18-25,M,-1\n").ok());
}

TEST(PcaUsageTest, SymmetricIndicatorsGiveEqualWeights) {
  std::vector<UsageIndicators> in;
  for (int i = 0; i < 6; ++i) {
    const double a = 0.1 + 0.13 * i;
    in.push_back(Group(i, a, a, a));
  }
  auto pc = PcaUsageComponent(in);
  ASSERT_TRUE(pc.ok());
  for (double w : pc->psi) EXPECT_DOUBLE_EQ(w, 1.0 / 3.0);
  for (std::size_t i = 0; i < in.size(); ++i) {
    EXPECT_NEAR(pc->values[i], in[i].alpha, 1e-15);
  }
  EXPECT_NEAR(pc->residual, 0.0, 1e-12);
}

TEST(PcaUsageTest, MatchesPowerIterationOracle) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<UsageIndicators> in;
    for (int i = 0; i < 10; ++i) {
      const double base = u(rng);
      in.push_back(Group(i, std::clamp(base + 0.2 * u(rng), 0.0, 1.0),
                         0.6 * base + 0.3 * u(rng), 0.2 * u(rng) + 0.1 * base));
    }
    auto pc = PcaUsageComponent(in);
    ASSERT_TRUE(pc.ok());
    const auto oracle = PowerIterationPsi(in);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(pc->psi[j], oracle[j], 1e-6);
    EXPECT_NEAR(pc->psi[0] + pc->psi[1] + pc->psi[2], 1.0, 1e-12);
  }
}

TEST(PcaUsageTest, CorrelatedIndicatorsPreserveRanking) {
  std::vector<UsageIndicators> in;
  const std::vector<double> a = {0.3, 0.9, 0.1, 0.5, 0.7};
  for (int i = 0; i < 5; ++i)
    in.push_back(Group(i, a[i], 0.5 * a[i], 0.1 * a[i] + 0.02));
  auto pc = PcaUsageComponent(in);
  ASSERT_TRUE(pc.ok());
  std::vector<int> by_b(5), by_a(5);
  std::iota(by_b.begin(), by_b.end(), 0);
  std::iota(by_a.begin(), by_a.end(), 0);
  std::sort(by_b.begin(), by_b.end(),
            [&](int x, int y) { return pc->values[x] < pc->values[y]; });
  std::sort(by_a.begin(), by_a.end(),
            [&](int x, int y) { return a[x] < a[y]; });
  EXPECT_EQ(by_b, by_a);
}

TEST(PcaUsageTest, ScalingAnIndicatorKeepsTheRanking) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 0.5);
  std::vector<UsageIndicators> in, scaled;
  for (int i = 0; i < 8; ++i) {
    in.push_back(Group(i, u(rng), u(rng), u(rng)));
    scaled.push_back(in.back());
    scaled.back().gamma *= 2;
  }
  auto p1 = PcaUsageComponent(in);
  auto p2 = PcaUsageComponent(scaled);
  ASSERT_TRUE(p1.ok() && p2.ok());
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(p1->psi[j], p2->psi[j], 1e-12);
}

TEST(PcaUsageTest, ValuesStayInUnitIntervalAndMonotone) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<UsageIndicators> in;
  for (int i = 0; i < 12; ++i) in.push_back(Group(i, u(rng), u(rng), u(rng)));
  auto pc = PcaUsageComponent(in);
  ASSERT_TRUE(pc.ok());
  for (double v : pc->values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  for (double w : pc->psi) EXPECT_GE(w, 0.0);
}

TEST(PcaUsageTest, ZeroVarianceIndicatorGetsEqualShare) {
  std::vector<UsageIndicators> in;
  for (int i = 0; i < 5; ++i)
    in.push_back(Group(i, 0.1 * i, 0.2 * i + 0.05 * (i % 2), 0.4));
  auto pc = PcaUsageComponent(in);
  ASSERT_TRUE(pc.ok());
  EXPECT_DOUBLE_EQ(pc->psi[2], 1.0 / 3.0);
  EXPECT_NEAR(pc->psi[0] + pc->psi[1], 2.0 / 3.0, 1e-12);
  ASSERT_EQ(pc->warnings.size(), 1u);
  EXPECT_THAT(pc->warnings[0], HasSubstr("gamma"));
}

TEST(PcaUsageTest, NeedsThreeGroups) {
  EXPECT_FALSE(
      PcaUsageComponent({Group(0, 0.1, 0.2, 0.3), Group(1, 0.2, 0.1, 0.3)})
          .ok());
}

TEST(TauMetricTest, MaximumOverPeriods) {
  std::map<GroupKey, double> s = {{{"2019", "18-25", "F"}, 0.5},
                                  {{"2020", "18-25", "F"}, 0.7}};
  std::map<GroupKey, double> o = {{{"2019", "18-25", "F"}, 0.4},
                                  {{"2020", "18-25", "F"}, 0.75}};
  auto tau = TauMetric(s, o);
  ASSERT_TRUE(tau.ok());
  EXPECT_NEAR(tau->overall, 0.1, 1e-15);
  EXPECT_NEAR((tau->per_group[{"18-25", "F"}]), 0.1, 1e-15);
  EXPECT_EQ(TauMetric(s, s)->overall, 0.0);
  EXPECT_EQ(TauMetric(o, s)->overall, tau->overall);
  o.erase(o.begin());
  EXPECT_FALSE(TauMetric(s, o).ok());
}

TEST(UsageLevelsTest, SaturatedAndPartitioned) {
  using ::bsynth::testing::MakeEncoded;
  Codebook book = ::bsynth::testing::CategoricalCodebook({7, 5, 5});
  book.columns[0].name = "nFI";
  book.columns[1].name = "nSavings";
  book.columns[2].name = "nLoans";
  auto top = EncodedDataset::Create({6, 4, 4, 6, 4, 4}, 2, book);
  auto shares = UsageLevels(*top);
  ASSERT_TRUE(shares.ok());
  for (const auto& [name, s] : shares->shares) EXPECT_EQ(s[2], 1.0);

  std::mt19937_64 rng(2);
  std::vector<int32_t> codes;
  for (int i = 0; i < 300; ++i) {
    codes.push_back(rng() % 7);
    codes.push_back(rng() % 5);
    codes.push_back(rng() % 5);
  }
  auto data = EncodedDataset::Create(codes, 300, book);
  auto mixed = UsageLevels(*data);
  ASSERT_TRUE(mixed.ok());
  for (const auto& [name, s] : mixed->shares) {
    EXPECT_NEAR(s[0] + s[1] + s[2], 1.0, 1e-12);
  }
  Codebook small = ::bsynth::testing::CategoricalCodebook({2, 5, 5});
  small.columns[0].name = "nFI";
  small.columns[1].name = "nSavings";
  small.columns[2].name = "nLoans";
  EXPECT_FALSE(UsageLevels(*EncodedDataset::Create({0, 0, 0}, 1, small)).ok());
}

}  // namespace
}  // namespace bsynth
