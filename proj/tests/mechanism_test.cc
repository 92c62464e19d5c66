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

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "bsynth/aim.h"
#include "bsynth/marginal.h"
#include "bsynth/mst.h"
#include "bsynth/pac.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace bsynth {
namespace {

using ::bsynth::testing::MakeEncoded;
using ::bsynth::testing::RandomEncoded;
using ::testing::ElementsAre;

PrivacyParams Params(double epsilon, double delta = 1e-10) {
  return *PrivacyParams::Create(epsilon, delta);
}

// Tree-structured fixture: 0 -> 1 -> 2, 0 -> 3.
EncodedDataset ChainFixture(std::size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::vector<int>> rows(n, std::vector<int>(4));
  for (auto& r : rows) {
    r[0] = u(rng) < 0.3 ? 0 : (u(rng) < 0.5 ? 1 : 2);
    r[1] = u(rng) < 0.8 ? r[0] : static_cast<int>(u(rng) * 3);
    r[2] = u(rng) < 0.7 ? r[1] % 2 : 1 - r[1] % 2;
    r[3] = u(rng) < 0.6 + 0.1 * r[0] ? 1 : 0;
  }
  return MakeEncoded(rows, {3, 3, 2, 2});
}

double MarginalTv(const EncodedDataset& a, const EncodedDataset& b,
                  const std::vector<int>& attrs) {
  return TotalVariation(ComputeMarginal(a, attrs)->AsDouble(),
                        ComputeMarginal(b, attrs)->AsDouble());
}

TEST(MstTest, NoiselessCopyColumnIsReproducedOnEveryRow) {
  std::vector<std::vector<int>> rows;
  std::mt19937_64 data_rng(1);
  for (int i = 0; i < 500; ++i) {
    const int a = static_cast<int>(data_rng() % 4);
    rows.push_back({a, a, static_cast<int>(data_rng() % 3)});
  }
  const EncodedDataset data = MakeEncoded(rows, {4, 4, 3});
  Rng rng(7);
  auto out = MstSynthesize(data, Params(1), 2000, rng, {.noiseless = true});
  ASSERT_TRUE(out.ok()) << out.status();
  ASSERT_EQ(out->data.num_rows(), 2000u);
  for (std::size_t r = 0; r < out->data.num_rows(); ++r) {
    ASSERT_EQ(out->data.code(r, 0), out->data.code(r, 1));
  }
  EXPECT_THAT(out->log.edges, ::testing::Contains(Edge{0, 1}));
}

TEST(MstTest, NoiselessSingleColumnFrequenciesWithinBinomialBand) {
  std::vector<std::vector<int>> rows;
  const std::vector<int> counts = {500, 300, 150, 50};
  for (int v = 0; v < 4; ++v) {
    for (int i = 0; i < counts[v]; ++i) rows.push_back({v});
  }
  const EncodedDataset data = MakeEncoded(rows, {4});
  Rng rng(1);
  const std::size_t n = 100000;
  auto out = MstSynthesize(data, Params(1), n, rng, {.noiseless = true});
  ASSERT_TRUE(out.ok());
  const auto m = ComputeMarginal(out->data, {0});
  for (int v = 0; v < 4; ++v) {
    const double p = counts[v] / 1000.0;
    const double sd = std::sqrt(n * p * (1 - p));
    EXPECT_NEAR(static_cast<double>(m->counts[v]), n * p, 3 * sd);
  }
}

TEST(MstTest, ZeroRowsKeepsTheSchema) {
  const EncodedDataset data = ChainFixture(200, 1);
  Rng rng(3);
  auto out = MstSynthesize(data, Params(1), 0, rng);
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out->data.num_rows(), 0u);
  EXPECT_EQ(out->data.codebook(), data.codebook());
}

TEST(MstTest, NoiselessNeedsData) {
  const EncodedDataset empty = MakeEncoded({}, {2, 2});
  Rng rng(3);
  EXPECT_FALSE(
      MstSynthesize(empty, Params(1), 10, rng, {.noiseless = true}).ok());
  EXPECT_TRUE(MstSynthesize(empty, Params(1), 10, rng).ok());
}

TEST(MstTest, RejectsZeroSelectionBudget) {
  const EncodedDataset data = ChainFixture(100, 2);
  Rng rng(3);
  EXPECT_FALSE(
      MstSynthesize(data, Params(1), 10, rng, {.selection_fraction = 0}).ok());
}

TEST(MstTest, NoiselessRecoversPlantedTree) {
  const EncodedDataset data = ChainFixture(20000, 4);
  Rng rng(5);
  auto fit = MstFitModel(data, Params(1), rng, {.noiseless = true});
  ASSERT_TRUE(fit.ok());
  EXPECT_THAT(fit->model.edges,
              ElementsAre(Edge{0, 1}, Edge{0, 3}, Edge{1, 2}));
  EXPECT_EQ(fit->log.measurements.size(), 4u);
  EXPECT_EQ(fit->log.measurements[0].attrs, std::vector<int>{0});
}

TEST(MstTest, SigmaFollowsTheMeasurementBudget) {
  const EncodedDataset data = ChainFixture(500, 6);
  Rng rng(5);
  auto out = MstSynthesize(data, Params(1, 1e-10), 10, rng);
  ASSERT_TRUE(out.ok());
  const double expected =
      *GaussianSigma(PrivacyBudget{(2.0 / 3.0) / 4, (2.0 / 3.0) * 1e-10 / 4});
  for (const auto& m : out->log.measurements) {
    EXPECT_DOUBLE_EQ(m.sigma, expected);
  }
}

TEST(MechanismTest, DeterministicGivenSeed) {
  const EncodedDataset data = ChainFixture(1000, 8);
  auto run = [&](int which) {
    Rng rng(42);
    switch (which) {
      case 0:
        return MstSynthesize(data, Params(1), 300, rng)->data;
      case 1:
        return AimSynthesize(data, {{{0, 1}}, {{2, 3}}}, Params(1), 300, rng)
            ->data;
      default:
        return PacSynthesize(data, {}, Params(1), 300, rng)->data;
    }
  };
  for (int which = 0; which < 3; ++which) {
    const EncodedDataset a = run(which);
    const EncodedDataset b = run(which);
    EXPECT_TRUE(a == b) << which;
    EXPECT_EQ(a.domain_sizes(), data.domain_sizes());
  }
}

TEST(AimTest, AllPairsAtHugeEpsilonMatchWithinTwoPercent) {
  const EncodedDataset data = ChainFixture(20000, 10);
  std::vector<WorkloadQuery> workload;
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) workload.push_back({{a, b}});
  }
  Rng rng(11);
  auto out = AimSynthesize(data, workload, Params(1e7, 0.5), 20000, rng,
                           {.rounds = 6});
  ASSERT_TRUE(out.ok()) << out.status();
  for (const auto& q : workload) {
    EXPECT_LE(MarginalTv(data, out->data, q.attrs), 0.02)
        << q.attrs[0] << "," << q.attrs[1];
  }
}

TEST(AimTest, OneRoundOneQueryMeasuresThatMarginal) {
  const EncodedDataset data = ChainFixture(500, 12);
  Rng rng(1);
  auto out = AimSynthesize(data, {{{1, 3}}}, Params(1), 50, rng, {.rounds = 1});
  ASSERT_TRUE(out.ok());
  ASSERT_EQ(out->log.measurements.size(), 1u);
  EXPECT_THAT(out->log.measurements[0].attrs, ElementsAre(1, 3));
  EXPECT_THAT(out->log.edges, ElementsAre(Edge{1, 3}));
}

TEST(AimTest, RejectsBadWorkloads) {
  const EncodedDataset data = ChainFixture(50, 12);
  Rng rng(1);
  EXPECT_FALSE(AimSynthesize(data, {}, Params(1), 5, rng).ok());
  auto bad = AimSynthesize(data, {{{0, 9}}}, Params(1), 5, rng);
  ASSERT_FALSE(bad.ok());
  EXPECT_THAT(bad.status().message(),
              ::testing::HasSubstr("invalid workload attribute"));
  EXPECT_FALSE(
      AimSynthesize(data, {{{0, 1}}}, Params(1), 5, rng, {.rounds = 0}).ok());
}

TEST(AimTest, LargeQueriesContributeTheirPairs) {
  auto c = AimCandidates({{{2, 0, 1}, 2.0}, {{0, 1}}}, 3);
  ASSERT_TRUE(c.ok());
  EXPECT_EQ(c->size(), 3u);
  EXPECT_DOUBLE_EQ(c->at({0, 1}), 3.0);
  EXPECT_DOUBLE_EQ(c->at({1, 2}), 2.0);
}

TEST(PacThresholdTest, NormalQuantileArithmetic) {
  PacConfig config{.k = 2, .eta = 0.5, .delta_k = 3, .sigma_k = 1};
  EXPECT_NEAR(PacThreshold(config, 10, 10), 0.0, 1e-12);
  EXPECT_NEAR(SpuriousInclusionProbability(0.0, 1, 3), 0.5, 1e-12);
  config.eta = 0.025;
  const double rho = PacThreshold(config, 20, 10);
  EXPECT_NEAR(rho, std::sqrt(3.0) * 1.959963984540054, 1e-10);
  EXPECT_NEAR(rho, 3.3947, 1e-4);
  EXPECT_NEAR(SpuriousInclusionProbability(rho, 1, 3), 0.025, 1e-12);
  // Fewer survivors than candidates lowers the inclusion target.
  config.eta = 0.5;
  EXPECT_NEAR(SpuriousInclusionProbability(PacThreshold(config, 1, 10), 1, 3),
              0.05, 1e-12);
}

TEST(PacTest, PackingRoundTrips) {
  const std::vector<TupleItem> items = {{0, 5}, {7, 1000}, {63, 0}};
  EXPECT_EQ(UnpackTuple(PackTuple(items), 3), items);
}

TEST(PacTest, IdenticalRowsReproduceThatRow) {
  const EncodedDataset data = MakeEncoded(
      std::vector<std::vector<int>>(100, {2, 0, 1, 3}), {3, 2, 2, 4});
  Rng rng(4);
  PacConfig config;
  config.sigma_k = 0;
  auto out = PacSynthesize(data, config, Params(1), 50, rng);
  ASSERT_TRUE(out.ok()) << out.status();
  for (std::size_t r = 0; r < 50; ++r) {
    const auto row = out->data.row(r);
    EXPECT_THAT(std::vector<int>(row.begin(), row.end()),
                ElementsAre(2, 0, 1, 3));
  }
}

TEST(PacTest, NoiselessSurvivorsAreExactlyTheObservedTuples) {
  std::mt19937_64 gen(6);
  const EncodedDataset data = RandomEncoded(300, {2, 3, 2}, gen);
  PacConfig config{.k = 2, .delta_k = 100, .sigma_k = 0};
  Rng rng(1);
  auto agg = PacExtract(data, config, rng);
  ASSERT_TRUE(agg.ok());
  const auto pair = ComputeMarginal(data, {0, 1});
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 3; ++y) {
      const std::vector<TupleItem> t = {{0, x}, {1, y}};
      const auto it = agg->levels[1].find(PackTuple(t));
      const int64_t count = pair->counts[x * 3 + y];
      ASSERT_EQ(it != agg->levels[1].end(), count > 0);
      if (count > 0) EXPECT_EQ(it->second, count);
    }
  }
}

TEST(PacTest, ContributionCapLimitsTuplesPerRecord) {
  const EncodedDataset data = MakeEncoded(
      std::vector<std::vector<int>>(40, {0, 0, 0, 0, 0}), {1, 1, 1, 1, 1});
  PacConfig config{.k = 1, .delta_k = 2, .sigma_k = 0};
  Rng rng(1);
  auto agg = PacExtract(data, config, rng);
  ASSERT_TRUE(agg.ok());
  double total = 0;
  for (const auto& [key, value] : agg->levels[0]) total += value;
  EXPECT_EQ(total, 80);
}

TEST(PacTest, LongerTuplesNeedSurvivingSubtuples) {
  const EncodedDataset data = ChainFixture(3000, 14);
  PacConfig config{.k = 3, .sigma_k = 5};
  Rng rng(2);
  auto agg = PacExtract(data, config, rng);
  ASSERT_TRUE(agg.ok());
  for (int len = 2; len <= 3; ++len) {
    for (const auto& [key, value] : agg->levels[len - 1]) {
      const auto items = UnpackTuple(key, len);
      for (int drop = 0; drop < len; ++drop) {
        std::vector<TupleItem> sub;
        for (int i = 0; i < len; ++i) {
          if (i != drop) sub.push_back(items[i]);
        }
        EXPECT_TRUE(agg->Survives(sub));
      }
    }
  }
}

TEST(PacTest, KBeyondAttributesIsRejected) {
  const EncodedDataset data = MakeEncoded({{0, 1}, {1, 0}}, {2, 2});
  Rng rng(1);
  EXPECT_FALSE(PacSynthesize(data, {.k = 3}, Params(1), 5, rng).ok());
  EXPECT_FALSE(PacSynthesize(data, {.eta = 1.5}, Params(1), 5, rng).ok());
  EXPECT_TRUE(PacSynthesize(data, {.k = 2}, Params(1), 5, rng).ok());
}

}  // namespace
}  // namespace bsynth
