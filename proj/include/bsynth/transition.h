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

#ifndef BSYNTH_TRANSITION_H_
#define BSYNTH_TRANSITION_H_

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "bsynth/csv.h"
#include "bsynth/encode.h"
#include "bsynth/status.h"
#include "bsynth/table.h"

namespace bsynth {

// Row-stochastic state transition estimate between two periods. Rows with
// no records are undefined and carry zero probabilities.
struct TransitionMatrix {
  std::vector<std::string> states;
  std::vector<std::vector<int64_t>> counts;
  std::vector<std::vector<double>> probs;
  std::vector<bool> defined;

  std::size_t size() const { return states.size(); }
};

inline absl::StatusOr<TransitionMatrix> ComputeTransitionMatrix(
    std::span<const int> from, std::span<const int> to,
    std::vector<std::string> states) {
  const int n = static_cast<int>(states.size());
  if (from.size() != to.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "state lists differ in length: ", from.size(), " vs ", to.size()));
  }
  if (n < 1) return absl::InvalidArgumentError("no states");
  TransitionMatrix m;
  m.states = std::move(states);
  m.counts.assign(n, std::vector<int64_t>(n, 0));
  m.probs.assign(n, std::vector<double>(n, 0.0));
  m.defined.assign(n, false);
  for (std::size_t r = 0; r < from.size(); ++r) {
    if (from[r] == EncodedDataset::kSuppressed ||
        to[r] == EncodedDataset::kSuppressed) {
      continue;
    }
    if (from[r] < 0 || from[r] >= n || to[r] < 0 || to[r] >= n) {
      return absl::OutOfRangeError(
          absl::StrCat("record ", r + 1, ": state outside [0, ", n, ")"));
    }
    ++m.counts[from[r]][to[r]];
  }
  for (int i = 0; i < n; ++i) {
    int64_t total = 0;
    for (int64_t c : m.counts[i]) total += c;
    if (total == 0) continue;
    m.defined[i] = true;
    for (int j = 0; j < n; ++j) {
      m.probs[i][j] = static_cast<double>(m.counts[i][j]) / total;
    }
  }
  return m;
}

inline absl::StatusOr<TransitionMatrix> ComputeTransitionMatrix(
    std::span<const int> from, std::span<const int> to, int n_states) {
  std::vector<std::string> states;
  for (int i = 0; i < n_states; ++i) states.push_back(std::to_string(i));
  return ComputeTransitionMatrix(from, to, std::move(states));
}

// Bin labels of a codebook column: "[a, b)" intervals or level names.
inline std::vector<std::string> StateLabels(const ColumnCodebook& column) {
  if (!column.is_numeric()) return column.labels;
  std::vector<std::string> out;
  for (int b = 0; b < column.domain_size(); ++b) {
    double lo = column.edges[b], hi = column.edges[b + 1];
    if (column.log_flag) {
      lo = std::exp(lo);
      hi = std::exp(hi);
    }
    out.push_back(absl::StrCat(FormatNumber(lo), "-", FormatNumber(hi)));
  }
  return out;
}

// Transition matrix between two encoded columns sharing a state space.
inline absl::StatusOr<TransitionMatrix> TransitionFromColumns(
    const EncodedDataset& data, const std::string& from_column,
    const std::string& to_column) {
  BSYNTH_ASSIGN_OR_RETURN(std::size_t a,
                          data.codebook().RequireColumn(from_column));
  BSYNTH_ASSIGN_OR_RETURN(std::size_t b,
                          data.codebook().RequireColumn(to_column));
  const ColumnCodebook& ca = data.codebook().columns[a];
  const ColumnCodebook& cb = data.codebook().columns[b];
  if (ca.domain_size() != cb.domain_size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("columns '", from_column, "' and '", to_column,
                     "' have different state counts"));
  }
  const std::vector<int> from = data.column(a);
  const std::vector<int> to = data.column(b);
  return ComputeTransitionMatrix(from, to, StateLabels(ca));
}

struct FrobeniusResult {
  double norm = 0;
  std::size_t excluded_rows = 0;
};

// Norm of the difference over all entries of rows defined in both matrices.
inline absl::StatusOr<FrobeniusResult> FrobeniusError(
    const TransitionMatrix& synthetic, const TransitionMatrix& original) {
  if (synthetic.states != original.states) {
    return absl::InvalidArgumentError(
        "transition matrices use different states");
  }
  FrobeniusResult result;
  double ss = 0;
  for (std::size_t i = 0; i < synthetic.size(); ++i) {
    if (!synthetic.defined[i] || !original.defined[i]) {
      ++result.excluded_rows;
      continue;
    }
    for (std::size_t j = 0; j < synthetic.size(); ++j) {
      const double d = synthetic.probs[i][j] - original.probs[i][j];
      ss += d * d;
    }
  }
  result.norm = std::sqrt(ss);
  return result;
}

// Norm of a matrix over its defined rows.
inline double FrobeniusNorm(const TransitionMatrix& m) {
  double ss = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m.defined[i]) continue;
    for (double p : m.probs[i]) ss += p * p;
  }
  return std::sqrt(ss);
}

inline std::string FormatTransitionCsv(const TransitionMatrix& m) {
  CsvRecord header = {"from"};
  header.insert(header.end(), m.states.begin(), m.states.end());
  std::string out = FormatCsvRecord(header);
  for (std::size_t i = 0; i < m.size(); ++i) {
    CsvRecord row = {m.states[i]};
    for (std::size_t j = 0; j < m.size(); ++j) {
      row.push_back(m.defined[i] ? FormatNumber(m.probs[i][j]) : "");
    }
    out += FormatCsvRecord(row);
  }
  return out;
}

// Per (age band, gender) share of records whose delinquency code is above
// the lowest band; nullopt where the group has no records.
using DelinquencyRates =
    std::map<std::pair<std::string, std::string>, std::optional<double>>;

inline absl::StatusOr<DelinquencyRates> DelinquencyRate(
    const EncodedDataset& data, const std::string& delinquency,
    const std::string& age, const std::string& gender) {
  const Codebook& book = data.codebook();
  BSYNTH_ASSIGN_OR_RETURN(std::size_t d, book.RequireColumn(delinquency));
  BSYNTH_ASSIGN_OR_RETURN(std::size_t a, book.RequireColumn(age));
  BSYNTH_ASSIGN_OR_RETURN(std::size_t g, book.RequireColumn(gender));
  const std::vector<std::string> ages = StateLabels(book.columns[a]);
  const std::vector<std::string> genders = StateLabels(book.columns[g]);
  std::map<std::pair<int, int>, std::pair<int64_t, int64_t>> tally;
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    const int dc = data.code(r, d), ac = data.code(r, a), gc = data.code(r, g);
    if (dc < 0 || ac < 0 || gc < 0) continue;
    auto& t = tally[{ac, gc}];
    ++t.second;
    t.first += dc > 0;
  }
  DelinquencyRates out;
  for (std::size_t i = 0; i < ages.size(); ++i) {
    for (std::size_t j = 0; j < genders.size(); ++j) {
      const auto it = tally.find({static_cast<int>(i), static_cast<int>(j)});
      std::optional<double> rate;
      if (it != tally.end() && it->second.second > 0) {
        rate = static_cast<double>(it->second.first) / it->second.second;
      }
      out[{ages[i], genders[j]}] = rate;
    }
  }
  return out;
}

struct JoinedCards {
  Dataset data;
  double count_coverage = 0;
  double debt_coverage = 0;
};

// Inner join of two period snapshots on CardId. Each snapshot carries
// CardId, Gender, Age, Debt and Delinquency; the join keeps the first
// period's demographics.
inline absl::StatusOr<JoinedCards> ActiveBothFilter(const Dataset& first,
                                                    const Dataset& second) {
  std::vector<std::size_t> fc, sc;
  for (const char* name : {"CardId", "Gender", "Age", "Debt", "Delinquency"}) {
    BSYNTH_ASSIGN_OR_RETURN(std::size_t c1, first.RequireColumn(name));
    BSYNTH_ASSIGN_OR_RETURN(std::size_t c2, second.RequireColumn(name));
    fc.push_back(c1);
    sc.push_back(c2);
  }
  std::map<double, std::size_t> index;
  for (std::size_t r = 0; r < second.num_rows(); ++r) {
    if (!index.emplace(second.cell(r, sc[0]), r).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate CardId ", FormatNumber(second.cell(r, sc[0])),
                       " in the second period"));
    }
  }
  std::set<double> seen;
  std::vector<std::vector<double>> cols(6);
  double debt_total = 0, debt_kept = 0;
  for (std::size_t r = 0; r < first.num_rows(); ++r) {
    const double id = first.cell(r, fc[0]);
    if (!seen.insert(id).second) {
      return absl::InvalidArgumentError(absl::StrCat(
          "duplicate CardId ", FormatNumber(id), " in the first period"));
    }
    debt_total += first.cell(r, fc[3]);
    const auto it = index.find(id);
    if (it == index.end()) continue;
    debt_kept += first.cell(r, fc[3]);
    cols[0].push_back(first.cell(r, fc[1]));
    cols[1].push_back(first.cell(r, fc[2]));
    cols[2].push_back(first.cell(r, fc[3]));
    cols[3].push_back(second.cell(it->second, sc[3]));
    cols[4].push_back(first.cell(r, fc[4]));
    cols[5].push_back(second.cell(it->second, sc[4]));
  }
  JoinedCards out;
  out.count_coverage =
      first.num_rows() > 0
          ? static_cast<double>(cols[0].size()) / first.num_rows()
          : 0.0;
  out.debt_coverage = debt_total > 0 ? debt_kept / debt_total : 0.0;
  const ColumnSpec& g = first.schema()[fc[1]];
  BSYNTH_ASSIGN_OR_RETURN(
      out.data,
      Dataset::FromColumns(
          {g, ColumnSpec::Numeric("Age2020", first.schema()[fc[2]].units),
           ColumnSpec::Numeric("Debt2020", first.schema()[fc[3]].units),
           ColumnSpec::Numeric("Debt2021", first.schema()[fc[3]].units),
           ColumnSpec::Numeric("Delinquency2020", "days"),
           ColumnSpec::Numeric("Delinquency2021", "days")},
          std::move(cols), "joined"));
  return out;
}

}  // namespace bsynth

#endif  // BSYNTH_TRANSITION_H_
