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

#ifndef BSYNTH_STRATEGIES_H_
#define BSYNTH_STRATEGIES_H_

// Pre-processing strategies: regulator cut-offs ("cbp") and data-driven
// binning ("data_driven") for each of the three applications.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "bsynth/binning.h"
#include "bsynth/datagen.h"
#include "bsynth/encode.h"
#include "bsynth/status.h"
#include "bsynth/table.h"

namespace bsynth {

enum class Application { kFi, kYield, kCredit };
enum class Strategy { kCbp, kDataDriven };

inline const char* ApplicationName(Application app) {
  switch (app) {
    case Application::kFi:
      return "fi";
    case Application::kYield:
      return "yield";
    case Application::kCredit:
      return "credit";
  }
  return "unknown";
}

inline absl::StatusOr<Application> ParseApplication(const std::string& name) {
  for (Application a :
       {Application::kFi, Application::kYield, Application::kCredit}) {
    if (name == ApplicationName(a)) return a;
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown application '", name, "' (allowed: fi, yield, credit)"));
}

inline const char* StrategyName(Strategy s) {
  return s == Strategy::kCbp ? "cbp" : "data_driven";
}

inline absl::StatusOr<Strategy> ParseStrategy(const std::string& name) {
  if (name == "cbp") return Strategy::kCbp;
  if (name == "data_driven") return Strategy::kDataDriven;
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown strategy '", name, "' (allowed: cbp, data_driven)"));
}

namespace internal {

inline double ColumnMax(const Dataset& data, const std::string& name) {
  double m = -std::numeric_limits<double>::infinity();
  if (auto c = data.ColumnIndex(name)) {
    for (double v : data.column(*c)) m = std::max(m, v);
  }
  return m;
}

inline double ColumnMin(const Dataset& data, const std::string& name) {
  double m = std::numeric_limits<double>::infinity();
  if (auto c = data.ColumnIndex(name)) {
    for (double v : data.column(*c)) m = std::min(m, v);
  }
  return m;
}

// Explicit cut-offs whose final entry is replaced by an open-ended top that
// covers every observed value in `columns`.
inline BinningRule ExplicitWithTop(const Dataset& data,
                                   std::initializer_list<const char*> columns,
                                   std::vector<double> cutoffs,
                                   std::optional<double> lower,
                                   bool log = false) {
  double observed = -std::numeric_limits<double>::infinity();
  for (const char* c : columns)
    observed = std::max(observed, ColumnMax(data, c));
  const double prev =
      cutoffs.size() > 1 ? cutoffs[cutoffs.size() - 2] : (lower ? *lower : 0.0);
  cutoffs.back() = std::max({cutoffs.back(), observed, prev + 1});
  if (!lower) {
    // Default lower edge: one bin-width below the first cut-off, or the
    // smallest observed value.
    double lo = std::numeric_limits<double>::infinity();
    for (const char* c : columns) lo = std::min(lo, ColumnMin(data, c));
    if (cutoffs.size() > 1) {
      lower = log ? std::min(lo, cutoffs[0] * cutoffs[0] / cutoffs[1])
                  : std::min(lo, 2 * cutoffs[0] - cutoffs[1]);
    }
  }
  BinningRule rule = BinningRule::Explicit(std::move(cutoffs), lower);
  rule.log_pretransform = log;
  return rule;
}

inline std::vector<double> AgeCutoffs() {
  return {25, 35, 45, 55, 65, 75, 110};
}

// Fits `rule` on the pooled values of two columns and freezes the result as
// explicit cut-offs, so both columns share one state space.
inline absl::StatusOr<BinningRule> PooledRule(const Dataset& data,
                                              const std::string& a,
                                              const std::string& b,
                                              const BinningRule& rule) {
  BSYNTH_ASSIGN_OR_RETURN(std::size_t ca, data.RequireColumn(a));
  BSYNTH_ASSIGN_OR_RETURN(std::size_t cb, data.RequireColumn(b));
  std::vector<double> pooled(data.column(ca).begin(), data.column(ca).end());
  pooled.insert(pooled.end(), data.column(cb).begin(), data.column(cb).end());
  ColumnSpec spec = ColumnSpec::Numeric(a);
  std::vector<int> codes;
  BSYNTH_ASSIGN_OR_RETURN(ColumnCodebook column,
                          FitColumn(spec, pooled, rule, codes));
  std::vector<double> edges = column.edges;
  if (rule.log_pretransform) {
    for (double& e : edges) e = std::exp(e);
  }
  const auto [lo, hi] = std::minmax_element(pooled.begin(), pooled.end());
  edges.front() = std::min(edges.front(), *lo);
  edges.back() = std::max(edges.back(), *hi);
  BinningRule out = BinningRule::Explicit(
      std::vector<double>(edges.begin() + 1, edges.end()), edges.front());
  out.log_pretransform = rule.log_pretransform;
  return out;
}

}  // namespace internal

// Binning rules for every numeric column an application uses. Rules are
// resolved against `data` only where a strategy needs the observed range
// (open-ended top bins, pooled transition states).
inline absl::StatusOr<BinningRules> StrategyRules(Application app,
                                                  Strategy strategy,
                                                  const Dataset& data) {
  using internal::ExplicitWithTop;
  BinningRules rules;
  const bool cbp = strategy == Strategy::kCbp;
  switch (app) {
    case Application::kFi: {
      const BinningRule collateral =
          ExplicitWithTop(data, {"hasCollateral"}, {1, 2}, 0.0);
      rules["hasCollateral"] = collateral;
      if (cbp) {
        rules["Age"] = BinningRule::Explicit(internal::AgeCutoffs(), 18.0);
        for (const char* c : {"nCCards", "nLoans", "nNZS", "nSavings"}) {
          rules[c] = ExplicitWithTop(data, {c}, {1, 2, 3, 4, 5}, 0.0);
        }
        rules["loanMaxDuration"] = ExplicitWithTop(
            data, {"loanMaxDuration"}, {1, 400, 740, 1100, 1850, 1851}, 0.0);
        rules["nFI"] = ExplicitWithTop(data, {"nFI"}, {2, 3, 4, 5}, 1.0);
      } else {
        rules["Age"] = BinningRule::UniformWidth(17);
        rules["nCCards"] = BinningRule::KMeans(5);
        rules["nLoans"] = BinningRule::KMeans(5);
        rules["loanMaxDuration"] = BinningRule::KMeans(4);
        rules["nFI"] = BinningRule::KMeans(7);
        rules["nNZS"] = BinningRule::EqualFrequency(4);
        rules["nSavings"] = BinningRule::KMeans(5);
      }
      break;
    }
    case Application::kYield: {
      if (cbp) {
        std::vector<double> capital;
        for (int n = -1; n <= 7; ++n) {
          capital.push_back(kCapitalUnit * std::ldexp(1.0, n));
        }
        rules["Capital"] =
            ExplicitWithTop(data, {"Capital"}, capital, std::nullopt, true);
        std::vector<double> term;
        for (int t = 30; t <= 450; t += 30) term.push_back(t);
        for (double t : {540, 630, 720, 900, 1080, 1260, 1440, 1800, 2160, 2520,
                         2880, 3600, 7200}) {
          term.push_back(t);
        }
        rules["Term"] = ExplicitWithTop(data, {"Term"}, term, 0.0);
        std::vector<double> rate;
        for (int i = 1; i <= 15; ++i) rate.push_back(0.5 * i);
        rate.push_back(15);
        rules["InterestRate"] =
            ExplicitWithTop(data, {"InterestRate"}, rate, 0.0);
      } else {
        rules["Capital"] = BinningRule::EqualFrequency(5, true);
        rules["Term"] = BinningRule::EqualFrequency(5);
        rules["InterestRate"] = BinningRule::KMeans(5);
      }
      break;
    }
    case Application::kCredit: {
      if (cbp) {
        rules["Age2020"] = BinningRule::Explicit(internal::AgeCutoffs(), 18.0);
        std::vector<double> debt;
        for (int n = 0; n <= 7; ++n) {
          debt.push_back(kMinimumWage * std::ldexp(1.0, n));
        }
        const BinningRule debt_rule = ExplicitWithTop(
            data, {"Debt2020", "Debt2021"}, debt, std::nullopt, true);
        rules["Debt2020"] = debt_rule;
        rules["Debt2021"] = debt_rule;
        const BinningRule delinquency =
            ExplicitWithTop(data, {"Delinquency2020", "Delinquency2021"},
                            {61, 91, 151, 181, 271, 272}, 0.0);
        rules["Delinquency2020"] = delinquency;
        rules["Delinquency2021"] = delinquency;
      } else {
        rules["Age2020"] = BinningRule::KMeans(6);
        BSYNTH_ASSIGN_OR_RETURN(
            BinningRule debt,
            internal::PooledRule(data, "Debt2020", "Debt2021",
                                 BinningRule::KMeans(7, true)));
        rules["Debt2020"] = debt;
        rules["Debt2021"] = debt;
        BSYNTH_ASSIGN_OR_RETURN(
            BinningRule delinquency,
            internal::PooledRule(data, "Delinquency2020", "Delinquency2021",
                                 BinningRule::KMeans(6)));
        rules["Delinquency2020"] = delinquency;
        rules["Delinquency2021"] = delinquency;
      }
      break;
    }
  }
  for (auto it = rules.begin(); it != rules.end();) {
    it = data.ColumnIndex(it->first) ? std::next(it) : rules.erase(it);
  }
  return rules;
}

}  // namespace bsynth

#endif  // BSYNTH_STRATEGIES_H_
