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

#ifndef BSYNTH_DATAGEN_H_
#define BSYNTH_DATAGEN_H_

// Seeded ground-truth populations with planted parameters.
//
// Draw order is part of the contract: each generator consumes the generator
// record by record, in the order documented on the function, so fixtures
// stay stable for a given standard library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "bsynth/nss.h"
#include "bsynth/privacy.h"
#include "bsynth/status.h"
#include "bsynth/table.h"
#include "bsynth/usage_index.h"
#include "nlohmann/json.hpp"

namespace bsynth {

// Reference amounts in guaranies: the deposit capital unit and the minimum
// wage used for debt bands.
inline constexpr double kCapitalUnit = 200e6;
inline constexpr double kMinimumWage = 2.1e6;

// Per age band (see ReportingAgeEdges); the last band draws ages 75-95.
struct DemographicsConfig {
  std::vector<double> age_band_weights = {0.15, 0.22, 0.20, 0.16,
                                          0.12, 0.09, 0.06};
  double male_share = 0.5;
};

// Financial inclusion population. Dependencies form a tree:
//   age -> banked, age -> nFI, nFI -> {savings, loans, cards},
//   savings -> nNZS, loans -> {duration, collateral}.
// Period is uniform and independent of everything else. Banking probability
// is banked_by_age[band] * (female ? female_factor : 1), so among banked
// individuals age and gender stay independent.
struct FiConfig {
  int64_t n_individuals = 100000;
  std::vector<std::string> periods = {"2017", "2018", "2019",
                                      "2020", "2021", "2022"};
  std::vector<double> banked_by_age = {0.55, 0.80, 0.85, 0.85,
                                       0.80, 0.70, 0.60};
  double female_factor = 0.95;
  // nFI = 1 + Binomial(9, nfi_p_by_age[band]).
  std::vector<double> nfi_p_by_age = {0.10, 0.18, 0.22, 0.22, 0.20, 0.15, 0.10};
  // P(any product) = base + slope * (nFI - 1), capped at 0.95.
  double savings_base = 0.45;
  double savings_slope = 0.08;
  double loan_base = 0.25;
  double loan_slope = 0.05;
  double card_base = 0.10;
  double card_slope = 0.05;
  double nzs_rate = 0.7;
  double collateral_base = 0.2;
  double loan_duration_median = 600;  // days
};

// Term deposits. The rate is a Nelson-Siegel-Svensson curve in the term plus
// a capital discount, optional currency and type offsets and Gaussian noise,
// clipped to [rate_floor, rate_cap]. Terms mix a log-uniform draw on
// [min_term, max_term] with a uniform draw on [min_term, short_term_max].
struct DepositConfig {
  int64_t n_deposits = 10000;
  std::vector<std::string> periods = {"2019", "2020", "2021", "2022", "2023"};
  double bank_share = 0.5;
  double local_currency_share = 0.5;
  double capital_log_sd = 0.7;
  // Median capital in units of kCapitalUnit, by institution type.
  double bank_capital_median = 4.0;
  double nonbank_capital_median = 1.0;
  double min_term = 7;
  double max_term = 5400;
  double short_term_share = 0.5;
  double short_term_max = 730;
  NssParams curve = {6.5, -4.0, 1.0, 0.5, 180, 1000};
  double foreign_currency_offset = 0.0;
  double nonbank_offset = 0.0;
  double capital_slope = -0.05;  // per doubling of capital
  double noise_sd = 0.15;
  double rate_floor = 0.05;
  double rate_cap = 7.45;
};

// Credit cards over two periods. Delinquency states follow the bands
// delinquency_edges; 2021 states are drawn from `kernel` given 2020 states.
// Debt follows a log-normal multiplicative walk.
struct CreditConfig {
  int64_t n_cards = 100000;
  std::vector<double> delinquency_edges = {0, 61, 91, 151, 181, 271, 366};
  std::vector<double> male_state_probs = {0.30, 0.14, 0.14, 0.14, 0.14, 0.14};
  std::vector<double> female_state_probs = {0.65, 0.07, 0.07, 0.07, 0.07, 0.07};
  std::vector<std::vector<double>> kernel = DefaultCreditKernel();
  // log Debt ~ N(log(debt_median * kMinimumWage) + age_slope * (band - 2),
  //             debt_log_sd).
  double debt_median = 4.0;
  double debt_log_sd = 1.0;
  double debt_age_slope = 0.1;
  double walk_drift = 0.0;
  double walk_sd = 0.25;
  double persistence = 0.8;
  double new_card_fraction = 0.1;

  // 0.85 on the diagonal, the rest split with weight 2^-|i-j|.
  static std::vector<std::vector<double>> DefaultCreditKernel(int n = 6) {
    std::vector<std::vector<double>> k(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) {
      double total = 0;
      for (int j = 0; j < n; ++j) {
        if (j != i) total += std::pow(0.5, std::abs(i - j));
      }
      for (int j = 0; j < n; ++j) {
        k[i][j] = j == i ? 0.85 : 0.15 * std::pow(0.5, std::abs(i - j)) / total;
      }
    }
    return k;
  }
};

struct PopulationConfig {
  DemographicsConfig demographics;
  FiConfig fi;
  DepositConfig deposits;
  CreditConfig credit;
  uint64_t seed = 20260101;
};

namespace internal {

inline void CheckProbability(double p, const std::string& field,
                             std::vector<std::string>& errors) {
  if (!(p >= 0 && p <= 1)) {
    errors.push_back(absl::StrCat(field, ": ", p, " is not in [0, 1]"));
  }
}

inline void CheckDistribution(const std::vector<double>& p, std::size_t size,
                              const std::string& field,
                              std::vector<std::string>& errors) {
  if (size > 0 && p.size() != size) {
    errors.push_back(
        absl::StrCat(field, ": expected ", size, " entries, got ", p.size()));
    return;
  }
  double total = 0;
  for (double v : p) {
    CheckProbability(v, field, errors);
    total += v;
  }
  if (std::abs(total - 1) > 1e-9) {
    errors.push_back(absl::StrCat(field, ": sums to ", total, ", not 1"));
  }
}

inline void CheckPositive(double v, const std::string& field,
                          std::vector<std::string>& errors) {
  if (!(v > 0) || !std::isfinite(v)) {
    errors.push_back(absl::StrCat(field, ": must be positive, got ", v));
  }
}

}  // namespace internal

// Reports every violation at once.
inline absl::Status ValidatePopulationConfig(const PopulationConfig& c) {
  using internal::CheckDistribution;
  using internal::CheckPositive;
  using internal::CheckProbability;
  std::vector<std::string> errors;
  const std::size_t bands = ReportingAgeEdges().size() - 1;

  CheckDistribution(c.demographics.age_band_weights, bands,
                    "demographics.age_band_weights", errors);
  CheckProbability(c.demographics.male_share, "demographics.male_share",
                   errors);

  const FiConfig& fi = c.fi;
  if (fi.n_individuals < 0) errors.push_back("fi.n_individuals: negative");
  if (fi.periods.empty()) errors.push_back("fi.periods: empty");
  if (fi.banked_by_age.size() != bands) {
    errors.push_back(
        absl::StrCat("fi.banked_by_age: expected ", bands, " entries"));
  }
  for (double p : fi.banked_by_age) {
    CheckProbability(p, "fi.banked_by_age", errors);
    CheckProbability(p * fi.female_factor, "fi.banked_by_age*female_factor",
                     errors);
  }
  if (fi.nfi_p_by_age.size() != bands) {
    errors.push_back(
        absl::StrCat("fi.nfi_p_by_age: expected ", bands, " entries"));
  }
  for (double p : fi.nfi_p_by_age) {
    CheckProbability(p, "fi.nfi_p_by_age", errors);
  }
  for (auto [v, name] : {std::pair{fi.savings_base, "fi.savings_base"},
                         {fi.loan_base, "fi.loan_base"},
                         {fi.card_base, "fi.card_base"},
                         {fi.nzs_rate, "fi.nzs_rate"},
                         {fi.collateral_base, "fi.collateral_base"}}) {
    CheckProbability(v, name, errors);
  }
  for (auto [v, name] : {std::pair{fi.savings_slope, "fi.savings_slope"},
                         {fi.loan_slope, "fi.loan_slope"},
                         {fi.card_slope, "fi.card_slope"}}) {
    if (!(v >= 0 && v <= 1)) {
      errors.push_back(absl::StrCat(name, ": must be in [0, 1]"));
    }
  }
  CheckPositive(fi.loan_duration_median, "fi.loan_duration_median", errors);

  const DepositConfig& d = c.deposits;
  if (d.n_deposits < 0) errors.push_back("deposits.n_deposits: negative");
  if (d.periods.empty()) errors.push_back("deposits.periods: empty");
  CheckProbability(d.bank_share, "deposits.bank_share", errors);
  CheckProbability(d.local_currency_share, "deposits.local_currency_share",
                   errors);
  CheckPositive(d.bank_capital_median, "deposits.bank_capital_median", errors);
  CheckPositive(d.nonbank_capital_median, "deposits.nonbank_capital_median",
                errors);
  if (!(d.capital_log_sd >= 0)) {
    errors.push_back("deposits.capital_log_sd: negative");
  }
  CheckPositive(d.min_term, "deposits.min_term", errors);
  CheckProbability(d.short_term_share, "deposits.short_term_share", errors);
  if (!(d.short_term_max > d.min_term)) {
    errors.push_back("deposits.short_term_max: must exceed min_term");
  }
  if (!(d.max_term > d.min_term)) {
    errors.push_back("deposits.max_term: must exceed min_term");
  }
  CheckPositive(d.curve.tau1, "deposits.curve.tau1", errors);
  CheckPositive(d.curve.tau2, "deposits.curve.tau2", errors);
  if (!(d.noise_sd >= 0)) errors.push_back("deposits.noise_sd: negative");
  if (!(d.rate_cap > d.rate_floor)) {
    errors.push_back("deposits.rate_cap: must exceed rate_floor");
  }

  const CreditConfig& cr = c.credit;
  if (cr.n_cards < 0) errors.push_back("credit.n_cards: negative");
  const std::size_t states =
      cr.delinquency_edges.empty() ? 0 : cr.delinquency_edges.size() - 1;
  if (states < 1) {
    errors.push_back("credit.delinquency_edges: need at least two edges");
  }
  for (std::size_t i = 1; i < cr.delinquency_edges.size(); ++i) {
    if (!(cr.delinquency_edges[i] > cr.delinquency_edges[i - 1])) {
      errors.push_back("credit.delinquency_edges: must increase strictly");
      break;
    }
  }
  CheckDistribution(cr.male_state_probs, states, "credit.male_state_probs",
                    errors);
  CheckDistribution(cr.female_state_probs, states, "credit.female_state_probs",
                    errors);
  if (cr.kernel.size() != states) {
    errors.push_back(absl::StrCat("credit.kernel: expected ", states, " rows"));
  }
  for (std::size_t i = 0; i < cr.kernel.size(); ++i) {
    CheckDistribution(cr.kernel[i], states,
                      absl::StrCat("credit.kernel[", i, "]"), errors);
  }
  CheckPositive(cr.debt_median, "credit.debt_median", errors);
  if (!(cr.debt_log_sd >= 0)) errors.push_back("credit.debt_log_sd: negative");
  if (!(cr.walk_sd >= 0)) errors.push_back("credit.walk_sd: negative");
  CheckProbability(cr.persistence, "credit.persistence", errors);
  if (!(cr.new_card_fraction >= 0)) {
    errors.push_back("credit.new_card_fraction: negative");
  }

  if (errors.empty()) return absl::OkStatus();
  return absl::InvalidArgumentError(absl::StrJoin(errors, "; "));
}

namespace internal {

// Copies `json[key]` into `out` when present, recording type errors.
template <typename T>
void ReadOptional(const nlohmann::json& json, const char* key,
                  const std::string& prefix, T& out,
                  std::vector<std::string>& errors) {
  if (!json.contains(key)) return;
  try {
    out = json.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    errors.push_back(absl::StrCat(prefix, key, ": ", e.what()));
  }
}

inline void CheckKeys(const nlohmann::json& json, const std::string& section,
                      std::initializer_list<const char*> allowed,
                      std::vector<std::string>& errors) {
  for (const auto& [key, value] : json.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) {
      errors.push_back(absl::StrCat(section, ": unknown key '", key, "'"));
    }
  }
}

}  // namespace internal

// Reads a population section; missing keys keep their defaults.
inline absl::StatusOr<PopulationConfig> PopulationConfigFromJson(
    const nlohmann::json& json) {
  using internal::CheckKeys;
  using internal::ReadOptional;
  PopulationConfig c;
  std::vector<std::string> errors;
  if (!json.is_object()) {
    return absl::InvalidArgumentError("population: must be an object");
  }
  CheckKeys(json, "population",
            {"demographics", "fi", "deposits", "credit", "seed"}, errors);
  ReadOptional(json, "seed", "population.", c.seed, errors);
  if (json.contains("demographics")) {
    const auto& j = json["demographics"];
    const std::string p = "demographics.";
    CheckKeys(j, "demographics", {"age_band_weights", "male_share"}, errors);
    ReadOptional(j, "age_band_weights", p, c.demographics.age_band_weights,
                 errors);
    ReadOptional(j, "male_share", p, c.demographics.male_share, errors);
  }
  if (json.contains("fi")) {
    const auto& j = json["fi"];
    const std::string p = "fi.";
    FiConfig& f = c.fi;
    CheckKeys(j, "fi",
              {"n_individuals", "periods", "banked_by_age", "female_factor",
               "nfi_p_by_age", "savings_base", "savings_slope", "loan_base",
               "loan_slope", "card_base", "card_slope", "nzs_rate",
               "collateral_base", "loan_duration_median"},
              errors);
    ReadOptional(j, "n_individuals", p, f.n_individuals, errors);
    ReadOptional(j, "periods", p, f.periods, errors);
    ReadOptional(j, "banked_by_age", p, f.banked_by_age, errors);
    ReadOptional(j, "female_factor", p, f.female_factor, errors);
    ReadOptional(j, "nfi_p_by_age", p, f.nfi_p_by_age, errors);
    ReadOptional(j, "savings_base", p, f.savings_base, errors);
    ReadOptional(j, "savings_slope", p, f.savings_slope, errors);
    ReadOptional(j, "loan_base", p, f.loan_base, errors);
    ReadOptional(j, "loan_slope", p, f.loan_slope, errors);
    ReadOptional(j, "card_base", p, f.card_base, errors);
    ReadOptional(j, "card_slope", p, f.card_slope, errors);
    ReadOptional(j, "nzs_rate", p, f.nzs_rate, errors);
    ReadOptional(j, "collateral_base", p, f.collateral_base, errors);
    ReadOptional(j, "loan_duration_median", p, f.loan_duration_median, errors);
  }
  if (json.contains("deposits")) {
    const auto& j = json["deposits"];
    const std::string p = "deposits.";
    DepositConfig& d = c.deposits;
    CheckKeys(
        j, "deposits",
        {"n_deposits", "periods", "bank_share", "local_currency_share",
         "capital_log_sd", "bank_capital_median", "nonbank_capital_median",
         "min_term", "max_term", "short_term_share", "short_term_max", "curve",
         "foreign_currency_offset", "nonbank_offset", "capital_slope",
         "noise_sd", "rate_floor", "rate_cap"},
        errors);
    ReadOptional(j, "n_deposits", p, d.n_deposits, errors);
    ReadOptional(j, "periods", p, d.periods, errors);
    ReadOptional(j, "bank_share", p, d.bank_share, errors);
    ReadOptional(j, "local_currency_share", p, d.local_currency_share, errors);
    ReadOptional(j, "capital_log_sd", p, d.capital_log_sd, errors);
    ReadOptional(j, "bank_capital_median", p, d.bank_capital_median, errors);
    ReadOptional(j, "nonbank_capital_median", p, d.nonbank_capital_median,
                 errors);
    ReadOptional(j, "min_term", p, d.min_term, errors);
    ReadOptional(j, "max_term", p, d.max_term, errors);
    ReadOptional(j, "short_term_share", p, d.short_term_share, errors);
    ReadOptional(j, "short_term_max", p, d.short_term_max, errors);
    if (j.contains("curve")) {
      const auto& cj = j["curve"];
      const std::string cp = "deposits.curve.";
      CheckKeys(cj, "deposits.curve",
                {"beta0", "beta1", "beta2", "beta3", "tau1", "tau2"}, errors);
      ReadOptional(cj, "beta0", cp, d.curve.beta0, errors);
      ReadOptional(cj, "beta1", cp, d.curve.beta1, errors);
      ReadOptional(cj, "beta2", cp, d.curve.beta2, errors);
      ReadOptional(cj, "beta3", cp, d.curve.beta3, errors);
      ReadOptional(cj, "tau1", cp, d.curve.tau1, errors);
      ReadOptional(cj, "tau2", cp, d.curve.tau2, errors);
    }
    ReadOptional(j, "foreign_currency_offset", p, d.foreign_currency_offset,
                 errors);
    ReadOptional(j, "nonbank_offset", p, d.nonbank_offset, errors);
    ReadOptional(j, "capital_slope", p, d.capital_slope, errors);
    ReadOptional(j, "noise_sd", p, d.noise_sd, errors);
    ReadOptional(j, "rate_floor", p, d.rate_floor, errors);
    ReadOptional(j, "rate_cap", p, d.rate_cap, errors);
  }
  if (json.contains("credit")) {
    const auto& j = json["credit"];
    const std::string p = "credit.";
    CreditConfig& cr = c.credit;
    CheckKeys(j, "credit",
              {"n_cards", "delinquency_edges", "male_state_probs",
               "female_state_probs", "kernel", "debt_median", "debt_log_sd",
               "debt_age_slope", "walk_drift", "walk_sd", "persistence",
               "new_card_fraction"},
              errors);
    ReadOptional(j, "n_cards", p, cr.n_cards, errors);
    ReadOptional(j, "delinquency_edges", p, cr.delinquency_edges, errors);
    ReadOptional(j, "male_state_probs", p, cr.male_state_probs, errors);
    ReadOptional(j, "female_state_probs", p, cr.female_state_probs, errors);
    ReadOptional(j, "kernel", p, cr.kernel, errors);
    ReadOptional(j, "debt_median", p, cr.debt_median, errors);
    ReadOptional(j, "debt_log_sd", p, cr.debt_log_sd, errors);
    ReadOptional(j, "debt_age_slope", p, cr.debt_age_slope, errors);
    ReadOptional(j, "walk_drift", p, cr.walk_drift, errors);
    ReadOptional(j, "walk_sd", p, cr.walk_sd, errors);
    ReadOptional(j, "persistence", p, cr.persistence, errors);
    ReadOptional(j, "new_card_fraction", p, cr.new_card_fraction, errors);
  }
  if (!errors.empty()) {
    return absl::InvalidArgumentError(absl::StrJoin(errors, "; "));
  }
  BSYNTH_RETURN_IF_ERROR(ValidatePopulationConfig(c));
  return c;
}

inline nlohmann::ordered_json PopulationConfigToJson(
    const PopulationConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["demographics"] = {{"age_band_weights", c.demographics.age_band_weights},
                       {"male_share", c.demographics.male_share}};
  const FiConfig& f = c.fi;
  j["fi"] = {{"n_individuals", f.n_individuals},
             {"periods", f.periods},
             {"banked_by_age", f.banked_by_age},
             {"female_factor", f.female_factor},
             {"nfi_p_by_age", f.nfi_p_by_age},
             {"savings_base", f.savings_base},
             {"savings_slope", f.savings_slope},
             {"loan_base", f.loan_base},
             {"loan_slope", f.loan_slope},
             {"card_base", f.card_base},
             {"card_slope", f.card_slope},
             {"nzs_rate", f.nzs_rate},
             {"collateral_base", f.collateral_base},
             {"loan_duration_median", f.loan_duration_median}};
  const DepositConfig& d = c.deposits;
  j["deposits"] = {{"n_deposits", d.n_deposits},
                   {"periods", d.periods},
                   {"bank_share", d.bank_share},
                   {"local_currency_share", d.local_currency_share},
                   {"capital_log_sd", d.capital_log_sd},
                   {"bank_capital_median", d.bank_capital_median},
                   {"nonbank_capital_median", d.nonbank_capital_median},
                   {"min_term", d.min_term},
                   {"max_term", d.max_term},
                   {"short_term_share", d.short_term_share},
                   {"short_term_max", d.short_term_max},
                   {"curve",
                    {{"beta0", d.curve.beta0},
                     {"beta1", d.curve.beta1},
                     {"beta2", d.curve.beta2},
                     {"beta3", d.curve.beta3},
                     {"tau1", d.curve.tau1},
                     {"tau2", d.curve.tau2}}},
                   {"foreign_currency_offset", d.foreign_currency_offset},
                   {"nonbank_offset", d.nonbank_offset},
                   {"capital_slope", d.capital_slope},
                   {"noise_sd", d.noise_sd},
                   {"rate_floor", d.rate_floor},
                   {"rate_cap", d.rate_cap}};
  const CreditConfig& cr = c.credit;
  j["credit"] = {{"n_cards", cr.n_cards},
                 {"delinquency_edges", cr.delinquency_edges},
                 {"male_state_probs", cr.male_state_probs},
                 {"female_state_probs", cr.female_state_probs},
                 {"kernel", cr.kernel},
                 {"debt_median", cr.debt_median},
                 {"debt_log_sd", cr.debt_log_sd},
                 {"debt_age_slope", cr.debt_age_slope},
                 {"walk_drift", cr.walk_drift},
                 {"walk_sd", cr.walk_sd},
                 {"persistence", cr.persistence},
                 {"new_card_fraction", cr.new_card_fraction}};
  return j;
}

namespace internal {

struct Person {
  int band = 0;
  double age = 0;
  int gender = 0;  // 0 = M, 1 = F
};

// Draws: age band, age within band, gender.
inline Person DrawPerson(const DemographicsConfig& demo, Rng& rng) {
  const auto& edges = ReportingAgeEdges();
  std::discrete_distribution<int> band_dist(demo.age_band_weights.begin(),
                                            demo.age_band_weights.end());
  Person p;
  p.band = band_dist(rng);
  const int lo = static_cast<int>(edges[p.band]);
  const int hi = p.band + 2 == static_cast<int>(edges.size())
                     ? 95
                     : static_cast<int>(edges[p.band + 1]) - 1;
  p.age = std::uniform_int_distribution<int>(lo, hi)(rng);
  p.gender = std::bernoulli_distribution(demo.male_share)(rng) ? 0 : 1;
  return p;
}

inline bool Coin(double p, Rng& rng) {
  return std::bernoulli_distribution(std::clamp(p, 0.0, 1.0))(rng);
}

inline int Binomial(int trials, double p, Rng& rng) {
  return std::binomial_distribution<int>(trials, std::clamp(p, 0.0, 1.0))(rng);
}

inline const std::vector<std::string>& GenderLevels() {
  static const std::vector<std::string> levels = {"M", "F"};
  return levels;
}

}  // namespace internal

struct FiPopulation {
  Dataset data;  // banked individuals only
  UnbankedCounts unbanked;
};

// Per individual: period, person (band, age, gender), banked flag; banked
// individuals then draw nFI, savings flag and count, nNZS, loan flag and
// count, loan duration, collateral and card count, in that order.
inline absl::StatusOr<FiPopulation> GenerateFiPopulation(
    const PopulationConfig& config, Rng& rng) {
  BSYNTH_RETURN_IF_ERROR(ValidatePopulationConfig(config));
  using internal::Binomial;
  using internal::Coin;
  const FiConfig& fi = config.fi;
  const auto& genders = internal::GenderLevels();
  std::vector<ColumnSpec> schema = {
      ColumnSpec::Categorical("Period", fi.periods),
      ColumnSpec::Numeric("Age", "years"),
      ColumnSpec::Categorical("Gender", genders),
      ColumnSpec::Numeric("nCCards"),
      ColumnSpec::Numeric("hasCollateral"),
      ColumnSpec::Numeric("nLoans"),
      ColumnSpec::Numeric("loanMaxDuration", "days"),
      ColumnSpec::Numeric("nFI"),
      ColumnSpec::Numeric("nNZS"),
      ColumnSpec::Numeric("nSavings")};
  std::vector<std::vector<double>> cols(schema.size());
  FiPopulation out;
  std::uniform_int_distribution<int> period_dist(
      0, static_cast<int>(fi.periods.size()) - 1);
  for (int64_t i = 0; i < fi.n_individuals; ++i) {
    const int period = period_dist(rng);
    const internal::Person person =
        internal::DrawPerson(config.demographics, rng);
    const double banked_p = fi.banked_by_age[person.band] *
                            (person.gender == 1 ? fi.female_factor : 1.0);
    if (!Coin(banked_p, rng)) {
      BSYNTH_ASSIGN_OR_RETURN(std::string band, AgeBandLabel(person.age));
      ++out.unbanked[GroupKey{fi.periods[period], band,
                              genders[person.gender]}];
      continue;
    }
    const int nfi = 1 + Binomial(9, fi.nfi_p_by_age[person.band], rng);
    const int extra = nfi - 1;
    int n_savings = 0;
    if (Coin(std::min(0.95, fi.savings_base + fi.savings_slope * extra), rng)) {
      n_savings = 1 + Binomial(5, 0.15 + 0.03 * std::min(extra, 5), rng);
    }
    const int nzs = Binomial(n_savings, fi.nzs_rate, rng);
    int n_loans = 0;
    if (Coin(std::min(0.95, fi.loan_base + fi.loan_slope * extra), rng)) {
      n_loans = 1 + Binomial(4, 0.2, rng);
    }
    double duration = 0;
    if (n_loans > 0) {
      std::normal_distribution<double> log_days(
          std::log(fi.loan_duration_median) + 0.15 * (n_loans - 1), 0.7);
      duration = std::round(std::clamp(std::exp(log_days(rng)), 30.0, 3650.0));
    }
    const int collateral =
        n_loans > 0 && Coin(fi.collateral_base + 0.1 * (n_loans - 1), rng) ? 1
                                                                           : 0;
    const int cards = Binomial(
        5, std::min(0.95, fi.card_base + fi.card_slope * std::min(extra, 4)),
        rng);
    const double row[] = {static_cast<double>(period),
                          person.age,
                          static_cast<double>(person.gender),
                          static_cast<double>(cards),
                          static_cast<double>(collateral),
                          static_cast<double>(n_loans),
                          duration,
                          static_cast<double>(nfi),
                          static_cast<double>(nzs),
                          static_cast<double>(n_savings)};
    for (std::size_t c = 0; c < cols.size(); ++c) cols[c].push_back(row[c]);
  }
  BSYNTH_ASSIGN_OR_RETURN(
      out.data,
      Dataset::FromColumns(std::move(schema), std::move(cols), "datagen:fi"));
  return out;
}

// The noiseless mean rate for a deposit, before clipping.
inline double PlantedDepositRate(const DepositConfig& d, double term,
                                 bool foreign, bool nonbank, double capital) {
  return NssEval(d.curve, term) + (foreign ? d.foreign_currency_offset : 0.0) +
         (nonbank ? d.nonbank_offset : 0.0) +
         d.capital_slope * std::log2(capital / kCapitalUnit);
}

// Per deposit: type, period, currency, log capital, term component, term,
// rate noise.
inline absl::StatusOr<Dataset> GenerateTermDeposits(
    const PopulationConfig& config, Rng& rng) {
  BSYNTH_RETURN_IF_ERROR(ValidatePopulationConfig(config));
  const DepositConfig& d = config.deposits;
  std::vector<ColumnSpec> schema = {
      ColumnSpec::Categorical("typeFI", {"Bank", "Nonbank"}),
      ColumnSpec::Categorical("Period", d.periods),
      ColumnSpec::Categorical("Currency", {"PYG", "USD"}),
      ColumnSpec::Numeric("Capital", "PYG"),
      ColumnSpec::Numeric("Term", "days"),
      ColumnSpec::Numeric("InterestRate", "percent")};
  std::vector<std::vector<double>> cols(schema.size());
  std::uniform_int_distribution<int> period_dist(
      0, static_cast<int>(d.periods.size()) - 1);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  std::uniform_real_distribution<double> log_term(std::log(d.min_term),
                                                  std::log(d.max_term));
  std::uniform_real_distribution<double> short_term(d.min_term,
                                                    d.short_term_max);
  for (int64_t i = 0; i < d.n_deposits; ++i) {
    const bool nonbank = !internal::Coin(d.bank_share, rng);
    const int period = period_dist(rng);
    const bool foreign = !internal::Coin(d.local_currency_share, rng);
    const double median =
        (nonbank ? d.nonbank_capital_median : d.bank_capital_median) *
        kCapitalUnit;
    const double capital =
        std::round(median * std::exp(d.capital_log_sd * std_normal(rng)));
    const bool short_draw = internal::Coin(d.short_term_share, rng);
    const double term =
        std::round(short_draw ? short_term(rng) : std::exp(log_term(rng)));
    const double mean =
        PlantedDepositRate(d, term, foreign, nonbank, std::max(capital, 1.0));
    const double rate = std::clamp(mean + d.noise_sd * std_normal(rng),
                                   d.rate_floor, d.rate_cap);
    const double row[] = {nonbank ? 1.0 : 0.0,
                          static_cast<double>(period),
                          foreign ? 1.0 : 0.0,
                          std::max(capital, 1.0),
                          term,
                          std::round(rate * 100) / 100};
    for (std::size_t c = 0; c < cols.size(); ++c) cols[c].push_back(row[c]);
  }
  return Dataset::FromColumns(std::move(schema), std::move(cols),
                              "datagen:deposits");
}

struct CreditSnapshots {
  Dataset first;   // 2020
  Dataset second;  // 2021
};

inline std::vector<ColumnSpec> CardSnapshotSchema() {
  return {ColumnSpec::Numeric("CardId"),
          ColumnSpec::Categorical("Gender", internal::GenderLevels()),
          ColumnSpec::Numeric("Age", "years"),
          ColumnSpec::Numeric("Debt", "PYG"),
          ColumnSpec::Numeric("Delinquency", "days")};
}

// First pass, per card: person, delinquency state, days within the state,
// log debt. Second pass, per card: persistence flag; persisting cards then
// draw the next state, days and debt step. Finally new cards repeat the
// first-pass draws.
inline absl::StatusOr<CreditSnapshots> GenerateCreditCards(
    const PopulationConfig& config, Rng& rng) {
  BSYNTH_RETURN_IF_ERROR(ValidatePopulationConfig(config));
  const CreditConfig& cr = config.credit;
  const auto& edges = cr.delinquency_edges;
  std::normal_distribution<double> std_normal(0.0, 1.0);
  std::discrete_distribution<int> male_state(cr.male_state_probs.begin(),
                                             cr.male_state_probs.end());
  std::discrete_distribution<int> female_state(cr.female_state_probs.begin(),
                                               cr.female_state_probs.end());
  std::vector<std::discrete_distribution<int>> kernel;
  for (const auto& row : cr.kernel) kernel.emplace_back(row.begin(), row.end());
  auto days_in = [&](int state) {
    return static_cast<double>(std::uniform_int_distribution<int>(
        static_cast<int>(edges[state]),
        static_cast<int>(edges[state + 1]) - 1)(rng));
  };
  const double log_median = std::log(cr.debt_median * kMinimumWage);

  struct Card {
    double id, gender, age, debt, days;
    int state;
  };
  auto fresh_card = [&](double id) {
    const internal::Person p = internal::DrawPerson(config.demographics, rng);
    Card c;
    c.id = id;
    c.gender = p.gender;
    c.age = p.age;
    c.state = p.gender == 0 ? male_state(rng) : female_state(rng);
    c.days = days_in(c.state);
    c.debt = std::round(std::exp(log_median + cr.debt_age_slope * (p.band - 2) +
                                 cr.debt_log_sd * std_normal(rng)));
    return c;
  };

  std::vector<Card> first, second;
  first.reserve(cr.n_cards);
  for (int64_t i = 0; i < cr.n_cards; ++i) {
    first.push_back(fresh_card(static_cast<double>(i + 1)));
  }
  for (const Card& c : first) {
    if (!internal::Coin(cr.persistence, rng)) continue;
    Card next = c;
    next.age = c.age + 1;
    next.state = kernel[c.state](rng);
    next.days = days_in(next.state);
    next.debt = std::round(
        c.debt * std::exp(cr.walk_drift + cr.walk_sd * std_normal(rng)));
    second.push_back(next);
  }
  const auto n_new = static_cast<int64_t>(
      std::llround(cr.new_card_fraction * static_cast<double>(cr.n_cards)));
  for (int64_t i = 0; i < n_new; ++i) {
    second.push_back(fresh_card(static_cast<double>(cr.n_cards + i + 1)));
  }

  auto to_dataset = [](const std::vector<Card>& cards, const char* provenance) {
    std::vector<std::vector<double>> cols(5);
    for (const Card& c : cards) {
      cols[0].push_back(c.id);
      cols[1].push_back(c.gender);
      cols[2].push_back(c.age);
      cols[3].push_back(std::max(c.debt, 1.0));
      cols[4].push_back(c.days);
    }
    return Dataset::FromColumns(CardSnapshotSchema(), std::move(cols),
                                provenance);
  };
  CreditSnapshots out;
  BSYNTH_ASSIGN_OR_RETURN(out.first, to_dataset(first, "datagen:cards2020"));
  BSYNTH_ASSIGN_OR_RETURN(out.second, to_dataset(second, "datagen:cards2021"));
  return out;
}

}  // namespace bsynth

#endif  // BSYNTH_DATAGEN_H_
