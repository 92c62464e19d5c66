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

#ifndef BSYNTH_USAGE_INDEX_H_
#define BSYNTH_USAGE_INDEX_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "bsynth/binning.h"
#include "bsynth/csv.h"
#include "bsynth/encode.h"
#include "bsynth/status.h"
#include "bsynth/table.h"

namespace bsynth {

// Demographic age bands used for usage reporting.
inline const std::vector<double>& ReportingAgeEdges() {
  static const std::vector<double> edges = {18, 25, 35, 45, 55, 65, 75, 110};
  return edges;
}

inline absl::StatusOr<std::string> AgeBandLabel(double age) {
  const auto& edges = ReportingAgeEdges();
  BSYNTH_ASSIGN_OR_RETURN(int band, AssignBin(age, edges));
  return absl::StrCat(edges[band], "-", edges[band + 1]);
}

struct GroupKey {
  std::string period;
  std::string age_band;
  std::string gender;

  friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
  friend bool operator==(const GroupKey&, const GroupKey&) = default;
};

// alpha, beta, gamma: population shares with at least one institution,
// savings account and loan.
struct UsageIndicators {
  GroupKey key;
  double alpha = 0;
  double beta = 0;
  double gamma = 0;
  int64_t population = 0;
};

using UnbankedCounts = std::map<GroupKey, int64_t>;

// CSV with header period,age_band,gender,count.
inline absl::StatusOr<UnbankedCounts> ParseUnbankedCsv(std::string_view text) {
  BSYNTH_ASSIGN_OR_RETURN(std::vector<CsvRecord> records, ParseCsv(text));
  const CsvRecord header = {"period", "age_band", "gender", "count"};
  if (records.empty() || records[0] != header) {
    return absl::InvalidArgumentError(
        "unbanked CSV header must be period,age_band,gender,count");
  }
  UnbankedCounts out;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const CsvRecord& r = records[i];
    if (r.size() != 4) {
      return absl::InvalidArgumentError(
          absl::StrCat("unbanked CSV row ", i, " has ", r.size(), " fields"));
    }
    auto count = ParseNumber(r[3]);
    if (!count.ok() || *count < 0 || *count != std::floor(*count)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "unbanked CSV row ", i, ": count must be a non-negative integer"));
    }
    out[{r[0], r[1], r[2]}] += static_cast<int64_t>(*count);
  }
  return out;
}

inline std::string FormatUnbankedCsv(const UnbankedCounts& counts) {
  std::string out = FormatCsvRecord({"period", "age_band", "gender", "count"});
  for (const auto& [key, n] : counts) {
    out += FormatCsvRecord(
        {key.period, key.age_band, key.gender, std::to_string(n)});
  }
  return out;
}

// Per (period, age band, gender) shares. Every microdata row is a banked
// individual; unbanked people enter only the denominators.
inline absl::StatusOr<std::vector<UsageIndicators>> BuildUsageIndicators(
    const Dataset& data, const UnbankedCounts& unbanked) {
  BSYNTH_ASSIGN_OR_RETURN(std::size_t period, data.RequireColumn("Period"));
  BSYNTH_ASSIGN_OR_RETURN(std::size_t age, data.RequireColumn("Age"));
  BSYNTH_ASSIGN_OR_RETURN(std::size_t gender, data.RequireColumn("Gender"));
  BSYNTH_ASSIGN_OR_RETURN(std::size_t nfi, data.RequireColumn("nFI"));
  BSYNTH_ASSIGN_OR_RETURN(std::size_t nsav, data.RequireColumn("nSavings"));
  BSYNTH_ASSIGN_OR_RETURN(std::size_t nloans, data.RequireColumn("nLoans"));
  for (std::size_t c : {period, gender}) {
    if (data.schema()[c].kind != ColumnKind::kCategorical) {
      return absl::InvalidArgumentError(absl::StrCat(
          "column '", data.schema()[c].name, "' must be categorical"));
    }
  }
  struct Tally {
    int64_t banked = 0, fi = 0, savings = 0, loans = 0;
  };
  std::map<GroupKey, Tally> tallies;
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    auto band = AgeBandLabel(data.cell(r, age));
    if (!band.ok()) {
      return Annotate(band.status(),
                      absl::StrCat("row ", r + 1, ", column 'Age'"));
    }
    Tally& t = tallies[{data.label(r, period), *band, data.label(r, gender)}];
    ++t.banked;
    t.fi += data.cell(r, nfi) > 0;
    t.savings += data.cell(r, nsav) > 0;
    t.loans += data.cell(r, nloans) > 0;
  }
  for (const auto& [key, n] : unbanked) tallies[key];
  std::vector<UsageIndicators> out;
  for (const auto& [key, t] : tallies) {
    const auto it = unbanked.find(key);
    const int64_t population =
        t.banked + (it == unbanked.end() ? 0 : it->second);
    if (population <= 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("group (", key.period, ", ", key.age_band, ", ",
                       key.gender, ") has zero population"));
    }
    const double p = static_cast<double>(population);
    out.push_back({key, t.fi / p, t.savings / p, t.loans / p, population});
  }
  return out;
}

struct UsageComponent {
  std::array<double, 3> psi{};
  // Share of standardized variance the first component leaves unexplained.
  double residual = 0;
  std::vector<GroupKey> keys;
  std::vector<double> values;
  std::vector<std::string> warnings;

  std::map<GroupKey, double> AsMap() const {
    std::map<GroupKey, double> out;
    for (std::size_t i = 0; i < keys.size(); ++i) out[keys[i]] = values[i];
    return out;
  }
};

// First principal component of the standardized indicator matrix, turned
// into non-negative weights summing to one and applied to raw indicators.
inline absl::StatusOr<UsageComponent> PcaUsageComponent(
    const std::vector<UsageIndicators>& indicators) {
  const int n = static_cast<int>(indicators.size());
  if (n < 3) {
    return absl::InvalidArgumentError(
        absl::StrCat("PCA needs at least 3 groups, got ", n));
  }
  Eigen::MatrixXd x(n, 3);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = indicators[i].alpha;
    x(i, 1) = indicators[i].beta;
    x(i, 2) = indicators[i].gamma;
  }
  UsageComponent result;
  std::vector<int> live;
  static constexpr const char* kNames[] = {"alpha", "beta", "gamma"};
  for (int j = 0; j < 3; ++j) {
    const double mean = x.col(j).mean();
    x.col(j).array() -= mean;
    const double sd = std::sqrt(x.col(j).squaredNorm() / (n - 1));
    if (sd <= 1e-12) {
      result.warnings.push_back(absl::StrCat(
          "indicator ", kNames[j], " has zero variance; equal-share weight"));
      result.psi[j] = 1.0 / 3.0;
      continue;
    }
    x.col(j) /= sd;
    live.push_back(j);
  }
  const double live_share = static_cast<double>(live.size()) / 3.0;
  if (!live.empty()) {
    const int m = static_cast<int>(live.size());
    Eigen::MatrixXd z(n, m);
    for (int k = 0; k < m; ++k) z.col(k) = x.col(live[k]);
    const Eigen::MatrixXd corr = (z.transpose() * z) / (n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(corr);
    if (solver.info() != Eigen::Success) {
      return absl::InternalError("eigen decomposition failed");
    }
    Eigen::VectorXd v = solver.eigenvectors().col(m - 1);
    const double lambda = solver.eigenvalues()(m - 1);
    result.residual = 1.0 - lambda / m;
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    v = v.cwiseAbs();
    // Identical standardized columns carry identical loadings.
    for (int a = 0; a < m; ++a) {
      std::vector<int> same{a};
      for (int b = 0; b < m; ++b) {
        if (b != a && z.col(a) == z.col(b)) same.push_back(b);
      }
      if (same.size() > 1) {
        double avg = 0;
        for (int s : same) avg += v(s);
        avg /= static_cast<double>(same.size());
        for (int s : same) v(s) = avg;
      }
    }
    const double total = v.sum();
    for (int k = 0; k < m; ++k) {
      result.psi[live[k]] =
          total > 0 ? live_share * v(k) / total : live_share / m;
    }
  }
  for (const auto& g : indicators) {
    result.keys.push_back(g.key);
    result.values.push_back(result.psi[0] * g.alpha + result.psi[1] * g.beta +
                            result.psi[2] * g.gamma);
  }
  return result;
}

// Demographic cell (age band, gender) across all periods.
using DemographicKey = std::pair<std::string, std::string>;

struct TauResult {
  std::map<DemographicKey, double> per_group;
  double overall = 0;
};

inline absl::StatusOr<TauResult> TauMetric(
    const std::map<GroupKey, double>& synthetic,
    const std::map<GroupKey, double>& original) {
  if (synthetic.size() != original.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "group keys differ: ", synthetic.size(), " vs ", original.size()));
  }
  TauResult result;
  for (const auto& [key, s] : synthetic) {
    const auto it = original.find(key);
    if (it == original.end()) {
      return absl::InvalidArgumentError(
          absl::StrCat("group (", key.period, ", ", key.age_band, ", ",
                       key.gender, ") missing from original"));
    }
    double& tau = result.per_group[{key.age_band, key.gender}];
    tau = std::max(tau, std::abs(s - it->second));
    result.overall = std::max(result.overall, tau);
  }
  return result;
}

// Aligns two indicator sets on the union of keys; groups missing on one side
// get zero shares there (population unknown is reported as 1 to stay valid).
inline void AlignIndicators(std::vector<UsageIndicators>& a,
                            std::vector<UsageIndicators>& b) {
  std::map<GroupKey, UsageIndicators> ma, mb;
  for (const auto& g : a) ma[g.key] = g;
  for (const auto& g : b) mb[g.key] = g;
  for (const auto& [k, g] : ma) {
    if (!mb.contains(k)) mb[k] = {k, 0, 0, 0, 1};
  }
  for (const auto& [k, g] : mb) {
    if (!ma.contains(k)) ma[k] = {k, 0, 0, 0, 1};
  }
  a.clear();
  b.clear();
  for (const auto& [k, g] : ma) a.push_back(g);
  for (const auto& [k, g] : mb) b.push_back(g);
}

enum class UsageLevel { kLow = 0, kMedium = 1, kHigh = 2 };

inline const char* UsageLevelName(int level) {
  static constexpr const char* kNames[] = {"low", "medium", "high"};
  return kNames[level];
}

// Shares of the banked population per indicator and level; a feature's code
// range is split into contiguous thirds.
struct UsageLevelShares {
  std::map<std::string, std::array<double, 3>> shares;
};

inline absl::StatusOr<UsageLevelShares> UsageLevels(
    const EncodedDataset& data) {
  UsageLevelShares out;
  for (const std::string name : {"nFI", "nSavings", "nLoans"}) {
    BSYNTH_ASSIGN_OR_RETURN(std::size_t c, data.codebook().RequireColumn(name));
    const int domain = data.codebook().columns[c].domain_size();
    if (domain < 3) {
      return absl::InvalidArgumentError(absl::StrCat(
          "column '", name, "' needs at least 3 codes for usage levels, has ",
          domain));
    }
    std::array<double, 3> counts{};
    double total = 0;
    for (std::size_t r = 0; r < data.num_rows(); ++r) {
      const int code = data.code(r, c);
      if (code == EncodedDataset::kSuppressed) continue;
      counts[static_cast<std::size_t>(code) * 3 / domain] += 1;
      total += 1;
    }
    if (total > 0) {
      for (double& v : counts) v /= total;
    }
    out.shares[name] = counts;
  }
  return out;
}

}  // namespace bsynth

#endif  // BSYNTH_USAGE_INDEX_H_
