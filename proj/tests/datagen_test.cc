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

#include "bsynth/datagen.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "bsynth/csv.h"
#include "bsynth/decode.h"
#include "bsynth/encode.h"
#include "bsynth/strategies.h"
#include "bsynth/transition.h"
#include "bsynth/yield_curve.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace bsynth {
namespace {

using ::testing::HasSubstr;

PopulationConfig SmallConfig() {
  PopulationConfig c;
  c.fi.n_individuals = 3000;
  c.deposits.n_deposits = 2000;
  c.credit.n_cards = 2000;
  return c;
}

TEST(DatagenTest, SameSeedGivesIdenticalCsv) {
  const PopulationConfig c = SmallConfig();
  Rng a(7), b(7);
  auto fa = GenerateFiPopulation(c, a);
  auto fb = GenerateFiPopulation(c, b);
  ASSERT_TRUE(fa.ok() && fb.ok());
  EXPECT_EQ(FormatDataset(fa->data), FormatDataset(fb->data));
  EXPECT_EQ(FormatUnbankedCsv(fa->unbanked), FormatUnbankedCsv(fb->unbanked));

  auto da = GenerateTermDeposits(c, a);
  auto db = GenerateTermDeposits(c, b);
  ASSERT_TRUE(da.ok() && db.ok());
  EXPECT_EQ(FormatDataset(*da), FormatDataset(*db));

  auto ca = GenerateCreditCards(c, a);
  auto cb = GenerateCreditCards(c, b);
  ASSERT_TRUE(ca.ok() && cb.ok());
  EXPECT_EQ(FormatDataset(ca->first), FormatDataset(cb->first));
  EXPECT_EQ(FormatDataset(ca->second), FormatDataset(cb->second));
}

TEST(DatagenTest, DifferentSeedsDiffer) {
  const PopulationConfig c = SmallConfig();
  Rng a(1), b(2);
  auto da = GenerateTermDeposits(c, a);
  auto db = GenerateTermDeposits(c, b);
  ASSERT_TRUE(da.ok() && db.ok());
  EXPECT_NE(FormatDataset(*da), FormatDataset(*db));
}

TEST(DatagenTest, ZeroIndividualsGiveEmptyDataset) {
  PopulationConfig c;
  c.fi.n_individuals = 0;
  Rng rng(1);
  auto fi = GenerateFiPopulation(c, rng);
  ASSERT_TRUE(fi.ok());
  EXPECT_EQ(fi->data.num_rows(), 0u);
  EXPECT_EQ(fi->data.num_columns(), 10u);
  EXPECT_TRUE(fi->unbanked.empty());
}

TEST(DatagenTest, FiSchemaAndRanges) {
  Rng rng(3);
  auto fi = GenerateFiPopulation(SmallConfig(), rng);
  ASSERT_TRUE(fi.ok());
  const Dataset& d = fi->data;
  std::vector<std::string> names;
  for (const auto& c : d.schema()) names.push_back(c.name);
  EXPECT_THAT(names, ::testing::ElementsAre("Period", "Age", "Gender",
                                            "nCCards", "hasCollateral",
                                            "nLoans", "loanMaxDuration", "nFI",
                                            "nNZS", "nSavings"));
  const std::size_t loans = *d.ColumnIndex("nLoans");
  const std::size_t dur = *d.ColumnIndex("loanMaxDuration");
  const std::size_t coll = *d.ColumnIndex("hasCollateral");
  const std::size_t nzs = *d.ColumnIndex("nNZS");
  const std::size_t sav = *d.ColumnIndex("nSavings");
  const std::size_t nfi = *d.ColumnIndex("nFI");
  for (std::size_t r = 0; r < d.num_rows(); ++r) {
    EXPECT_GE(d.cell(r, nfi), 1);
    EXPECT_LE(d.cell(r, nzs), d.cell(r, sav));
    if (d.cell(r, loans) == 0) {
      EXPECT_EQ(d.cell(r, dur), 0);
      EXPECT_EQ(d.cell(r, coll), 0);
    } else {
      EXPECT_GE(d.cell(r, dur), 30);
    }
  }
}

// Binomial check of a planted penetration rate in every demographic cell.
TEST(DatagenTest, PlantedBankedRateWithinThreeSigmaPerCell) {
  PopulationConfig c;
  c.fi.n_individuals = 50000;
  c.fi.periods = {"2020"};
  c.fi.banked_by_age.assign(7, 0.8);
  c.fi.female_factor = 1.0;
  Rng rng(11);
  auto fi = GenerateFiPopulation(c, rng);
  ASSERT_TRUE(fi.ok());
  auto indicators = BuildUsageIndicators(fi->data, fi->unbanked);
  ASSERT_TRUE(indicators.ok()) << indicators.status();
  ASSERT_EQ(indicators->size(), 14u);
  for (const UsageIndicators& u : *indicators) {
    const double sd = std::sqrt(0.8 * 0.2 / u.population);
    EXPECT_NEAR(u.alpha, 0.8, 3 * sd)
        << u.key.age_band << " " << u.key.gender << " n=" << u.population;
  }
}

// Cells are too small at this size for a per-cell 0.01 check, so rates are
// pooled over age bands within each gender.
TEST(DatagenTest, PooledBankedRatesWithinOneHundredthOfPlanted) {
  PopulationConfig c;
  c.fi.n_individuals = 100000;
  c.fi.periods = {"2020"};
  Rng rng(13);
  auto fi = GenerateFiPopulation(c, rng);
  ASSERT_TRUE(fi.ok());
  auto indicators = BuildUsageIndicators(fi->data, fi->unbanked);
  ASSERT_TRUE(indicators.ok()) << indicators.status();
  double planted = 0;
  for (std::size_t b = 0; b < c.fi.banked_by_age.size(); ++b) {
    planted += c.demographics.age_band_weights[b] * c.fi.banked_by_age[b];
  }
  std::map<std::string, std::pair<double, double>> pooled;
  for (const UsageIndicators& u : *indicators) {
    auto& [banked, total] = pooled[u.key.gender];
    banked += u.alpha * u.population;
    total += u.population;
  }
  ASSERT_EQ(pooled.size(), 2u);
  for (const auto& [gender, t] : pooled) {
    const bool female = gender == internal::GenderLevels()[1];
    const double expected = planted * (female ? c.fi.female_factor : 1.0);
    EXPECT_NEAR(t.first / t.second, expected, 0.01) << gender;
  }
}

TEST(DatagenTest, LoansConcentrateAtTheLowestUsageLevel) {
  Rng rng(5);
  auto fi = GenerateFiPopulation(SmallConfig(), rng);
  ASSERT_TRUE(fi.ok());
  const std::size_t loans = *fi->data.ColumnIndex("nLoans");
  int low = 0;
  for (double v : fi->data.column(loans)) low += v <= 1;
  EXPECT_GT(low, 0.8 * fi->data.num_rows());
}

double Spearman(std::vector<double> x, std::vector<double> y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = i;
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = x.size();
  double d2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1 - 6 * d2 / (n * (n * n - 1));
}

std::vector<double> CbpTermEdges(const Dataset& deposits) {
  auto rules = StrategyRules(Application::kYield, Strategy::kCbp, deposits);
  const BinningRule& term = rules->at("Term");
  std::vector<double> edges = {*term.lower};
  edges.insert(edges.end(), term.cutoffs.begin(), term.cutoffs.end());
  return edges;
}

TEST(DatagenTest, DepositRatesRiseWithTerm) {
  PopulationConfig c;
  c.deposits.n_deposits = 10000;
  Rng rng(21);
  auto deposits = GenerateTermDeposits(c, rng);
  ASSERT_TRUE(deposits.ok());
  const std::vector<double> edges = CbpTermEdges(*deposits);
  const std::size_t term = *deposits->ColumnIndex("Term");
  const std::size_t rate = *deposits->ColumnIndex("InterestRate");
  const std::size_t capital = *deposits->ColumnIndex("Capital");
  std::vector<double> num(edges.size() - 1), den(edges.size() - 1);
  for (std::size_t r = 0; r < deposits->num_rows(); ++r) {
    const int b = *AssignBin(deposits->cell(r, term), edges);
    num[b] += deposits->cell(r, capital) * deposits->cell(r, rate);
    den[b] += deposits->cell(r, capital);
  }
  std::vector<double> bin, wai;
  for (std::size_t b = 0; b < num.size(); ++b) {
    if (den[b] == 0) continue;
    bin.push_back(b);
    wai.push_back(num[b] / den[b]);
  }
  ASSERT_GT(bin.size(), 20u);
  EXPECT_GT(Spearman(bin, wai), 0.9);
}

TEST(DatagenTest, NoiselessDepositsFollowThePlantedCurve) {
  PopulationConfig c;
  c.deposits.n_deposits = 5000;
  c.deposits.noise_sd = 0;
  c.deposits.foreign_currency_offset = 0;
  c.deposits.nonbank_offset = 0;
  c.deposits.capital_slope = 0;
  Rng rng(4);
  auto deposits = GenerateTermDeposits(c, rng);
  ASSERT_TRUE(deposits.ok());
  const std::size_t term = *deposits->ColumnIndex("Term");
  const std::size_t rate = *deposits->ColumnIndex("InterestRate");
  for (std::size_t r = 0; r < deposits->num_rows(); ++r) {
    EXPECT_NEAR(deposits->cell(r, rate),
                NssEval(c.deposits.curve, deposits->cell(r, term)),
                0.005 + 1e-12);
  }
  // Left-edge decoding moves each bin's weighted average down by less than
  // one rate bin.
  auto rules = StrategyRules(Application::kYield, Strategy::kCbp, *deposits);
  ASSERT_TRUE(rules.ok());
  auto encoded = EncodeDataset(*deposits, *rules);
  ASSERT_TRUE(encoded.ok());
  Rng decode_rng(1);
  auto decoded =
      DecodeDataset(*encoded, DecodeMode::kLeftEdge, nullptr, {}, decode_rng);
  ASSERT_TRUE(decoded.ok());
  const std::vector<double> edges = CbpTermEdges(*deposits);
  auto raw_curves = BuildYieldCurves(*deposits, edges);
  auto dec_curves = BuildYieldCurves(decoded->data, edges);
  ASSERT_TRUE(raw_curves.ok() && dec_curves.ok());
  ASSERT_EQ(raw_curves->size(), dec_curves->size());
  for (std::size_t i = 0; i < raw_curves->size(); ++i) {
    for (std::size_t b = 0; b < edges.size() - 1; ++b) {
      const CurvePoint& p = (*raw_curves)[i].points[b];
      const CurvePoint& q = (*dec_curves)[i].points[b];
      ASSERT_EQ(p.present, q.present);
      if (!p.present) continue;
      EXPECT_GE(p.wai - q.wai, -1e-9);
      EXPECT_LT(p.wai - q.wai, 0.5);
    }
  }
}

TEST(DatagenTest, CapitalDiscountIsLinearInLogCapital) {
  PopulationConfig c;
  c.deposits.n_deposits = 2000;
  c.deposits.noise_sd = 0;
  c.deposits.capital_slope = -0.2;
  Rng rng(8);
  auto deposits = GenerateTermDeposits(c, rng);
  ASSERT_TRUE(deposits.ok());
  const std::size_t term = *deposits->ColumnIndex("Term");
  const std::size_t capital = *deposits->ColumnIndex("Capital");
  const std::size_t rate = *deposits->ColumnIndex("InterestRate");
  for (std::size_t r = 0; r < deposits->num_rows(); ++r) {
    double expected =
        NssEval(c.deposits.curve, deposits->cell(r, term)) -
        0.2 * std::log2(deposits->cell(r, capital) / kCapitalUnit);
    expected = std::clamp(expected, c.deposits.rate_floor, c.deposits.rate_cap);
    EXPECT_NEAR(deposits->cell(r, rate), expected, 0.005 + 1e-9);
  }
}

TEST(DatagenTest, ShortTermMixtureConcentratesMassBelowTheCutoff) {
  PopulationConfig c;
  c.deposits.n_deposits = 20000;
  Rng rng(9);
  auto deposits = GenerateTermDeposits(c, rng);
  ASSERT_TRUE(deposits.ok());
  const std::size_t term = *deposits->ColumnIndex("Term");
  const double lo = std::log(c.deposits.min_term);
  const double span = std::log(c.deposits.max_term) - lo;
  const double expected = c.deposits.short_term_share +
                          (1 - c.deposits.short_term_share) *
                              (std::log(c.deposits.short_term_max) - lo) / span;
  int64_t below = 0;
  for (std::size_t r = 0; r < deposits->num_rows(); ++r) {
    const double t = deposits->cell(r, term);
    EXPECT_GE(t, c.deposits.min_term);
    EXPECT_LE(t, c.deposits.max_term);
    below += t <= c.deposits.short_term_max;
  }
  const double share = static_cast<double>(below) / deposits->num_rows();
  EXPECT_NEAR(share, expected,
              4 * std::sqrt(expected * (1 - expected) / 20000));
}

TEST(DatagenTest, PlantedKernelRecoveredFromTransitionCounts) {
  PopulationConfig c;
  c.credit.n_cards = 100000;
  c.credit.persistence = 1.0;
  Rng rng(8);
  auto cards = GenerateCreditCards(c, rng);
  ASSERT_TRUE(cards.ok());
  auto joined = ActiveBothFilter(cards->first, cards->second);
  ASSERT_TRUE(joined.ok());
  EXPECT_EQ(joined->count_coverage, 1.0);
  EXPECT_EQ(joined->data.num_rows(), 100000u);
  auto rules =
      StrategyRules(Application::kCredit, Strategy::kCbp, joined->data);
  ASSERT_TRUE(rules.ok());
  auto encoded = EncodeDataset(joined->data, *rules);
  ASSERT_TRUE(encoded.ok()) << encoded.status();
  auto m =
      TransitionFromColumns(*encoded, "Delinquency2020", "Delinquency2021");
  ASSERT_TRUE(m.ok());
  double worst = 0;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      worst = std::max(worst, std::abs(m->probs[i][j] - c.credit.kernel[i][j]));
    }
  }
  EXPECT_LT(worst, 0.01);
}

TEST(DatagenTest, PersistenceControlsOverlap) {
  PopulationConfig c = SmallConfig();
  c.credit.n_cards = 20000;
  c.credit.persistence = 0.6;
  Rng rng(9);
  auto cards = GenerateCreditCards(c, rng);
  ASSERT_TRUE(cards.ok());
  auto joined = ActiveBothFilter(cards->first, cards->second);
  ASSERT_TRUE(joined.ok());
  EXPECT_NEAR(joined->count_coverage, 0.6, 3 * std::sqrt(0.24 / 20000));
  EXPECT_EQ(cards->second.num_rows(), joined->data.num_rows() + 2000);
}

TEST(DatagenTest, PlantedPersistenceGivesMatchingCountCoverage) {
  PopulationConfig c;
  c.credit.n_cards = 100000;
  c.credit.persistence = 0.8;
  Rng rng(14);
  auto cards = GenerateCreditCards(c, rng);
  ASSERT_TRUE(cards.ok());
  auto joined = ActiveBothFilter(cards->first, cards->second);
  ASSERT_TRUE(joined.ok());
  EXPECT_NEAR(joined->count_coverage, 0.80, 0.01);
}

TEST(DatagenTest, FullPersistenceKeepsEveryCard) {
  PopulationConfig c = SmallConfig();
  c.credit.persistence = 1.0;
  Rng rng(15);
  auto cards = GenerateCreditCards(c, rng);
  ASSERT_TRUE(cards.ok());
  auto joined = ActiveBothFilter(cards->first, cards->second);
  ASSERT_TRUE(joined.ok());
  EXPECT_EQ(joined->count_coverage, 1.0);
  EXPECT_EQ(joined->debt_coverage, 1.0);
}

TEST(DatagenTest, FemaleDelinquencyIsHalfTheMaleRate) {
  PopulationConfig c;
  c.credit.n_cards = 100000;
  Rng rng(12);
  auto cards = GenerateCreditCards(c, rng);
  ASSERT_TRUE(cards.ok());
  const Dataset& d = cards->first;
  const std::size_t g = *d.ColumnIndex("Gender");
  const std::size_t del = *d.ColumnIndex("Delinquency");
  double late[2] = {0, 0}, total[2] = {0, 0};
  for (std::size_t r = 0; r < d.num_rows(); ++r) {
    const int k = d.level(r, g);
    total[k] += 1;
    late[k] += d.cell(r, del) >= 61;
  }
  const double ratio = (late[0] / total[0]) / (late[1] / total[1]);
  EXPECT_NEAR(ratio, 2.0, 0.2);
}

TEST(DatagenConfigTest, DefaultsAreValid) {
  EXPECT_TRUE(ValidatePopulationConfig(PopulationConfig{}).ok());
  const auto k = CreditConfig::DefaultCreditKernel();
  for (const auto& row : k) {
    EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(DatagenConfigTest, ReportsAllViolationsAtOnce) {
  PopulationConfig c;
  c.demographics.male_share = 1.5;
  c.credit.kernel[2][2] = 0.5;
  c.credit.persistence = -0.1;
  const absl::Status s = ValidatePopulationConfig(c);
  EXPECT_EQ(s.code(), absl::StatusCode::kInvalidArgument);
  EXPECT_THAT(s.message(), HasSubstr("demographics.male_share"));
  EXPECT_THAT(s.message(), HasSubstr("credit.kernel[2]"));
  EXPECT_THAT(s.message(), HasSubstr("credit.persistence"));
}

TEST(DatagenConfigTest, JsonOverridesAndUnknownKeys) {
  auto c = PopulationConfigFromJson(nlohmann::json::parse(
      R"({"seed": 5, "credit": {"n_cards": 10, "persistence": 1.0}})"));
  ASSERT_TRUE(c.ok()) << c.status();
  EXPECT_EQ(c->seed, 5u);
  EXPECT_EQ(c->credit.n_cards, 10);
  EXPECT_EQ(c->credit.persistence, 1.0);
  EXPECT_EQ(c->fi.n_individuals, FiConfig{}.n_individuals);

  auto bad = PopulationConfigFromJson(nlohmann::json::parse(
      R"({"credit": {"n_cardz": 10, "persistence": "high"}})"));
  EXPECT_FALSE(bad.ok());
  EXPECT_THAT(bad.status().message(), HasSubstr("unknown key 'n_cardz'"));
  EXPECT_THAT(bad.status().message(), HasSubstr("credit.persistence"));
}

TEST(DatagenConfigTest, GeneratorsRejectInvalidConfig) {
  PopulationConfig c;
  c.fi.banked_by_age = {0.5};
  Rng rng(1);
  EXPECT_FALSE(GenerateFiPopulation(c, rng).ok());
}

}  // namespace
}  // namespace bsynth
