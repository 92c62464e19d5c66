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

#ifndef BSYNTH_TABLE_H_
#define BSYNTH_TABLE_H_

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "bsynth/status.h"

namespace bsynth {

enum class ColumnKind { kNumeric, kCategorical };

inline const char* ColumnKindName(ColumnKind kind) {
  return kind == ColumnKind::kNumeric ? "numeric" : "categorical";
}

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  // Ordered level labels; categorical columns only.
  std::vector<std::string> levels;
  std::string units;

  static ColumnSpec Numeric(std::string name, std::string units = "") {
    return ColumnSpec{
        std::move(name), ColumnKind::kNumeric, {}, std::move(units)};
  }
  static ColumnSpec Categorical(std::string name,
                                std::vector<std::string> levels) {
    return ColumnSpec{std::move(name), ColumnKind::kCategorical,
                      std::move(levels), ""};
  }

  friend bool operator==(const ColumnSpec&, const ColumnSpec&) = default;
};

inline absl::Status ValidateSchema(std::span<const ColumnSpec> schema) {
  std::unordered_set<std::string> names;
  for (const ColumnSpec& column : schema) {
    if (column.name.empty()) {
      return absl::InvalidArgumentError("column with empty name");
    }
    if (!names.insert(column.name).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate column name '", column.name, "'"));
    }
    if (column.kind == ColumnKind::kNumeric && !column.levels.empty()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "numeric column '", column.name, "' must not declare levels"));
    }
    if (column.kind == ColumnKind::kCategorical) {
      if (column.levels.empty()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "categorical column '", column.name, "' has no levels"));
      }
      std::unordered_set<std::string> labels;
      for (const std::string& level : column.levels) {
        if (!labels.insert(level).second) {
          return absl::InvalidArgumentError(absl::StrCat(
              "duplicate level '", level, "' in column '", column.name, "'"));
        }
      }
    }
  }
  return absl::OkStatus();
}

// Immutable column-typed table. Numeric cells hold the value; categorical
// cells hold the level index (stored exactly as a double).
class Dataset {
 public:
  Dataset() = default;

  // Validates and takes ownership of column-major cell storage.
  static absl::StatusOr<Dataset> FromColumns(
      std::vector<ColumnSpec> schema, std::vector<std::vector<double>> columns,
      std::string provenance = "") {
    BSYNTH_RETURN_IF_ERROR(ValidateSchema(schema));
    if (columns.size() != schema.size()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "expected ", schema.size(), " columns, got ", columns.size()));
    }
    const std::size_t n = columns.empty() ? 0 : columns.front().size();
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (columns[c].size() != n) {
        return absl::InvalidArgumentError(
            absl::StrCat("column '", schema[c].name, "' has ",
                         columns[c].size(), " cells, expected ", n));
      }
      for (std::size_t r = 0; r < n; ++r) {
        const double v = columns[c][r];
        if (!std::isfinite(v)) {
          return absl::InvalidArgumentError(
              absl::StrCat("non-finite value at row ", r + 1, ", column '",
                           schema[c].name, "'"));
        }
        if (schema[c].kind == ColumnKind::kCategorical) {
          if (v < 0 || v != std::floor(v) ||
              v >= static_cast<double>(schema[c].levels.size())) {
            return absl::InvalidArgumentError(
                absl::StrCat("level index ", v, " out of range at row ", r + 1,
                             ", column '", schema[c].name, "'"));
          }
        }
      }
    }
    Dataset d;
    d.schema_ = std::move(schema);
    d.columns_ = std::move(columns);
    d.num_rows_ = n;
    d.provenance_ = std::move(provenance);
    return d;
  }

  std::size_t num_rows() const { return num_rows_; }
  std::size_t num_columns() const { return schema_.size(); }
  const std::vector<ColumnSpec>& schema() const { return schema_; }
  const std::string& provenance() const { return provenance_; }

  std::span<const double> column(std::size_t c) const { return columns_[c]; }
  double cell(std::size_t row, std::size_t c) const { return columns_[c][row]; }
  int level(std::size_t row, std::size_t c) const {
    return static_cast<int>(columns_[c][row]);
  }

  std::optional<std::size_t> ColumnIndex(const std::string& name) const {
    for (std::size_t c = 0; c < schema_.size(); ++c) {
      if (schema_[c].name == name) return c;
    }
    return std::nullopt;
  }

  absl::StatusOr<std::size_t> RequireColumn(const std::string& name) const {
    auto index = ColumnIndex(name);
    if (!index) {
      return absl::NotFoundError(
          absl::StrCat("dataset has no column '", name, "'"));
    }
    return *index;
  }

  // Label of a categorical cell.
  const std::string& label(std::size_t row, std::size_t c) const {
    return schema_[c].levels[level(row, c)];
  }

  // Rows listed in `rows` (in that order), same schema.
  Dataset SelectRows(std::span<const std::size_t> rows) const {
    std::vector<std::vector<double>> columns(num_columns());
    for (std::size_t c = 0; c < num_columns(); ++c) {
      columns[c].reserve(rows.size());
      for (std::size_t r : rows) columns[c].push_back(columns_[c][r]);
    }
    Dataset d;
    d.schema_ = schema_;
    d.columns_ = std::move(columns);
    d.num_rows_ = rows.size();
    d.provenance_ = provenance_;
    return d;
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.schema_ == b.schema_ && a.columns_ == b.columns_;
  }

 private:
  std::vector<ColumnSpec> schema_;
  std::vector<std::vector<double>> columns_;
  std::size_t num_rows_ = 0;
  std::string provenance_;
};

// Inclusive range predicate on a numeric column.
struct RangePredicate {
  std::string column;
  double min = -INFINITY;
  double max = INFINITY;
};

struct FilterResult {
  Dataset dataset;
  std::size_t dropped = 0;
};

// Drops rows for which any predicate fails.
inline absl::StatusOr<FilterResult> FilterRows(
    const Dataset& data, std::span<const RangePredicate> predicates) {
  std::vector<std::pair<std::size_t, const RangePredicate*>> resolved;
  for (const RangePredicate& p : predicates) {
    BSYNTH_ASSIGN_OR_RETURN(std::size_t c, data.RequireColumn(p.column));
    resolved.emplace_back(c, &p);
  }
  std::vector<std::size_t> keep;
  keep.reserve(data.num_rows());
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    bool ok = true;
    for (const auto& [c, p] : resolved) {
      const double v = data.cell(r, c);
      if (v < p->min || v > p->max) {
        ok = false;
        break;
      }
    }
    if (ok) keep.push_back(r);
  }
  FilterResult result;
  result.dropped = data.num_rows() - keep.size();
  result.dataset = data.SelectRows(keep);
  return result;
}

}  // namespace bsynth

#endif  // BSYNTH_TABLE_H_
