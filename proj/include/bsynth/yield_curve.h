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

#ifndef BSYNTH_YIELD_CURVE_H_
#define BSYNTH_YIELD_CURVE_H_

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "bsynth/binning.h"
#include "bsynth/status.h"
#include "bsynth/table.h"

namespace bsynth {

// Capital-weighted average rate; nullopt for an empty group.
inline absl::StatusOr<std::optional<double>> WeightedAverageRate(
    std::span<const double> capital, std::span<const double> rate) {
  if (capital.size() != rate.size()) {
    return absl::InvalidArgumentError("capital and rate differ in length");
  }
  if (capital.empty()) return std::optional<double>();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < capital.size(); ++i) {
    if (!(capital[i] > 0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("capital must be positive, got ", capital[i]));
    }
    num += capital[i] * rate[i];
    den += capital[i];
  }
  return std::optional<double>(num / den);
}

struct CurveKey {
  std::string period;
  std::string currency;
  std::string type;

  friend auto operator<=>(const CurveKey&, const CurveKey&) = default;
  friend bool operator==(const CurveKey&, const CurveKey&) = default;
};

struct CurvePoint {
  bool present = false;
  double wai = 0;
  double total_capital = 0;
  int64_t count = 0;
};

// One point per term bin; absent bins carry present = false.
struct YieldCurve {
  CurveKey key;
  std::vector<CurvePoint> points;

  std::size_t num_present() const {
    return static_cast<std::size_t>(std::count_if(
        points.begin(), points.end(), [](const auto& p) { return p.present; }));
  }
};

// Groups rows by (Period, Currency, typeFI) and term bin. Capital and
// InterestRate are taken as given, so callers decode synthetic data first.
inline absl::StatusOr<std::vector<YieldCurve>> BuildYieldCurves(
    const Dataset& data, std::span<const double> term_edges) {
  BSYNTH_RETURN_IF_ERROR(ValidateEdges(term_edges));
  BSYNTH_ASSIGN_OR_RETURN(std::size_t type, data.RequireColumn("typeFI"));
  BSYNTH_ASSIGN_OR_RETURN(std::size_t period, data.RequireColumn("Period"));
  BSYNTH_ASSIGN_OR_RETURN(std::size_t currency, data.RequireColumn("Currency"));
  BSYNTH_ASSIGN_OR_RETURN(std::size_t capital, data.RequireColumn("Capital"));
  BSYNTH_ASSIGN_OR_RETURN(std::size_t term, data.RequireColumn("Term"));
  BSYNTH_ASSIGN_OR_RETURN(std::size_t rate, data.RequireColumn("InterestRate"));
  const int bins = static_cast<int>(term_edges.size()) - 1;
  struct Sums {
    double capital = 0, weighted = 0;
    int64_t count = 0;
  };
  std::map<CurveKey, std::vector<Sums>> groups;
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    const double c = data.cell(r, capital);
    if (!(c > 0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("row ", r + 1, ": capital must be positive"));
    }
    auto bin = AssignBin(data.cell(r, term), term_edges);
    if (!bin.ok()) {
      return Annotate(bin.status(),
                      absl::StrCat("row ", r + 1, ", column 'Term'"));
    }
    auto& sums = groups[{data.label(r, period), data.label(r, currency),
                         data.label(r, type)}];
    if (sums.empty()) sums.resize(bins);
    Sums& s = sums[*bin];
    s.capital += c;
    s.weighted += c * data.cell(r, rate);
    ++s.count;
  }
  std::vector<YieldCurve> curves;
  for (const auto& [key, sums] : groups) {
    YieldCurve curve;
    curve.key = key;
    curve.points.resize(bins);
    for (int b = 0; b < bins; ++b) {
      if (sums[b].count == 0) continue;
      curve.points[b] = {true, sums[b].weighted / sums[b].capital,
                         sums[b].capital, sums[b].count};
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

struct RmseReport {
  // Largest per-period RMSE.
  double upsilon = 0;
  std::map<std::string, double> per_period;
  // Bins present in exactly one of the two curves.
  std::size_t excluded_bins = 0;
};

// Both lists hold one curve per period for the same (currency, type) series.
inline absl::StatusOr<RmseReport> YieldRmse(
    const std::vector<YieldCurve>& synthetic,
    const std::vector<YieldCurve>& original) {
  std::map<std::string, const YieldCurve*> s, o;
  for (const auto& c : synthetic) s[c.key.period] = &c;
  for (const auto& c : original) o[c.key.period] = &c;
  if (s.size() != o.size()) {
    return absl::InvalidArgumentError("period sets differ");
  }
  RmseReport report;
  for (const auto& [period, cs] : s) {
    const auto it = o.find(period);
    if (it == o.end()) {
      return absl::InvalidArgumentError(
          absl::StrCat("period '", period, "' missing from original curves"));
    }
    const YieldCurve& co = *it->second;
    if (cs->points.size() != co.points.size()) {
      return absl::InvalidArgumentError("curves use different term bins");
    }
    double ss = 0;
    std::size_t overlap = 0;
    for (std::size_t b = 0; b < cs->points.size(); ++b) {
      const bool ps = cs->points[b].present;
      const bool po = co.points[b].present;
      if (ps && po) {
        const double d = cs->points[b].wai - co.points[b].wai;
        ss += d * d;
        ++overlap;
      } else if (ps != po) {
        ++report.excluded_bins;
      }
    }
    if (overlap == 0) {
      return absl::FailedPreconditionError(
          absl::StrCat("period '", period, "' has no overlapping term bins"));
    }
    const double rmse = std::sqrt(ss / static_cast<double>(overlap));
    report.per_period[period] = rmse;
    report.upsilon = std::max(report.upsilon, rmse);
  }
  return report;
}

}  // namespace bsynth

#endif  // BSYNTH_YIELD_CURVE_H_
