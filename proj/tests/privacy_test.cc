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

#include "bsynth/privacy.h"

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "gtest/gtest.h"

namespace bsynth {
namespace {

PrivacyParams Params(double eps, double delta) {
  return *PrivacyParams::Create(eps, delta);
}

TEST(PrivacyParamsTest, ValidatesRanges) {
  EXPECT_FALSE(PrivacyParams::Create(0, 1e-5).ok());
  EXPECT_FALSE(PrivacyParams::Create(-1, 1e-5).ok());
  EXPECT_FALSE(PrivacyParams::Create(1, 0).ok());
  EXPECT_FALSE(PrivacyParams::Create(1, 1).ok());
  EXPECT_TRUE(PrivacyParams::Create(1, 1e-10).ok());
}

TEST(GaussianSigmaTest, ReferenceSetting) {
  // (sqrt(ln 1e10) + sqrt(ln 1e10 + 1)) / 1, evaluated independently.
  EXPECT_NEAR(GaussianSigma(Params(1, 1e-10)), 9.700143087155997, 1e-12);
}

TEST(GaussianSigmaTest, VanishingLogTerm) {
  EXPECT_NEAR(GaussianSigma(Params(1, 1 - 1e-15)), 1.0, 1e-6);
}

TEST(GaussianSigmaTest, ClosedFormAtEpsilonTwo) {
  EXPECT_NEAR(GaussianSigma(Params(2, std::exp(-4.0))),
              (2 + std::sqrt(6.0)) / 2, 1e-12);
}

TEST(GaussianSigmaTest, StrictlyDecreasingInEpsilonAndDelta) {
  const std::vector<double> eps = {0.01, 0.1, 0.5, 1, 2, 5, 10};
  const std::vector<double> deltas = {1e-12, 1e-10, 1e-6, 1e-3, 0.1, 0.5};
  for (double d : deltas) {
    for (std::size_t i = 1; i < eps.size(); ++i) {
      EXPECT_LT(GaussianSigma(Params(eps[i], d)),
                GaussianSigma(Params(eps[i - 1], d)));
    }
  }
  for (double e : eps) {
    for (std::size_t i = 1; i < deltas.size(); ++i) {
      EXPECT_LT(GaussianSigma(Params(e, deltas[i])),
                GaussianSigma(Params(e, deltas[i - 1])));
    }
  }
}

TEST(AddGaussianNoiseTest, ZeroSigmaIsIdentity) {
  std::vector<double> counts = {3, 0, 7, 1};
  Rng rng(1);
  EXPECT_EQ(AddGaussianNoise(counts, 0, rng), counts);
}

TEST(AddGaussianNoiseTest, EmpiricalScaleMatchesSigma) {
  const double sigma = 9.7001;
  std::vector<double> counts(10000, 50.0);
  Rng rng(42);
  auto noisy = AddGaussianNoise(counts, sigma, rng);
  double sum = 0, sq = 0;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    const double e = noisy[i] - counts[i];
    sum += e;
    sq += e * e;
  }
  const double n = static_cast<double>(noisy.size());
  const double sd = std::sqrt(sq / n - (sum / n) * (sum / n));
  EXPECT_NEAR(sd, sigma, 0.03 * sigma);
}

TEST(AddGaussianNoiseTest, DeterministicUnderSeed) {
  std::vector<double> counts(100, 1.0);
  Rng a(7), b(7);
  EXPECT_EQ(AddGaussianNoise(counts, 2.5, a), AddGaussianNoise(counts, 2.5, b));
}

TEST(AddGaussianNoiseTest, AdjacentCellsUncorrelated) {
  std::vector<double> counts(100000, 0.0);
  Rng rng(99);
  auto noisy = AddGaussianNoise(counts, 1.0, rng);
  double sxy = 0, sx = 0, sy = 0, sxx = 0, syy = 0;
  const std::size_t m = noisy.size() - 1;
  for (std::size_t i = 0; i < m; ++i) {
    const double x = noisy[i], y = noisy[i + 1];
    sx += x;
    sy += y;
    sxy += x * y;
    sxx += x * x;
    syy += y * y;
  }
  const double n = static_cast<double>(m);
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double corr = cov / std::sqrt((sxx / n - (sx / n) * (sx / n)) *
                                      (syy / n - (sy / n) * (sy / n)));
  EXPECT_LT(std::abs(corr), 0.05);
}

TEST(SplitBudgetTest, NoSelectionGivesFullBudgetToSingleMeasurement) {
  auto split = SplitBudget(Params(1, 1e-10), 1, 0);
  ASSERT_TRUE(split.ok());
  EXPECT_EQ(split->per_measurement.epsilon, 1);
  EXPECT_EQ(split->per_measurement.delta, 1e-10);
  EXPECT_EQ(split->selection.epsilon, 0);
}

TEST(SplitBudgetTest, ThirdForSelectionFourMeasurements) {
  auto split = SplitBudget(Params(1, 1e-10), 4, 1.0 / 3);
  ASSERT_TRUE(split.ok());
  EXPECT_NEAR(split->per_measurement.epsilon, 1.0 / 6, 1e-15);
  EXPECT_NEAR(split->per_measurement.delta, 1e-10 / 6, 1e-25);
  EXPECT_NEAR(split->selection.epsilon, 1.0 / 3, 1e-15);
}

TEST(SplitBudgetTest, ConservesTotalBudget) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> f(0, 0.99);
  for (int trial = 0; trial < 100; ++trial) {
    const double eps = 0.1 + f(rng) * 5;
    const int m = 1 + static_cast<int>(rng() % 30);
    auto split = SplitBudget(Params(eps, 1e-8), m, f(rng));
    ASSERT_TRUE(split.ok());
    EXPECT_NEAR(split->selection.epsilon + m * split->per_measurement.epsilon,
                eps, 1e-12 * eps);
    EXPECT_NEAR(split->selection.delta + m * split->per_measurement.delta, 1e-8,
                1e-20);
  }
}

TEST(SplitBudgetTest, RejectsBadArguments) {
  EXPECT_FALSE(SplitBudget(Params(1, 1e-6), 0, 0.1).ok());
  EXPECT_FALSE(SplitBudget(Params(1, 1e-6), 2, 1.0).ok());
}

}  // namespace
}  // namespace bsynth
