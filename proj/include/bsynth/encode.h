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

#ifndef BSYNTH_ENCODE_H_
#define BSYNTH_ENCODE_H_

#include <cmath>
#include <cstddef>
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
#include "bsynth/csv.h"
#include "bsynth/status.h"
#include "bsynth/table.h"
#include "nlohmann/json.hpp"

namespace bsynth {

enum class BinningMethod {
  kCategorical,  // pass-through of an already categorical column
  kExplicitCutoffs,
  kEqualFrequency,
  kUniformWidth,
  kKMeans1d,
};

inline const char* BinningMethodName(BinningMethod method) {
  switch (method) {
    case BinningMethod::kCategorical:
      return "categorical";
    case BinningMethod::kExplicitCutoffs:
      return "explicit_cutoffs";
    case BinningMethod::kEqualFrequency:
      return "equal_frequency";
    case BinningMethod::kUniformWidth:
      return "uniform_width";
    case BinningMethod::kKMeans1d:
      return "kmeans_1d";
  }
  return "unknown";
}

inline absl::StatusOr<BinningMethod> ParseBinningMethod(
    const std::string& name) {
  for (BinningMethod m :
       {BinningMethod::kCategorical, BinningMethod::kExplicitCutoffs,
        BinningMethod::kEqualFrequency, BinningMethod::kUniformWidth,
        BinningMethod::kKMeans1d}) {
    if (name == BinningMethodName(m)) return m;
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown binning method '", name,
      "' (allowed: explicit_cutoffs, equal_frequency, uniform_width, "
      "kmeans_1d)"));
}

struct BinningRule {
  BinningMethod method = BinningMethod::kExplicitCutoffs;
  // Upper bounds of successive bins, in raw units (explicit only).
  std::vector<double> cutoffs;
  // Left edge of the first explicit bin, raw units.
  std::optional<double> lower;
  int k = 0;
  bool log_pretransform = false;

  static BinningRule Explicit(std::vector<double> cutoffs,
                              std::optional<double> lower = std::nullopt) {
    BinningRule r;
    r.method = BinningMethod::kExplicitCutoffs;
    r.cutoffs = std::move(cutoffs);
    r.lower = lower;
    return r;
  }
  static BinningRule EqualFrequency(int k, bool log = false) {
    return BinningRule{
        BinningMethod::kEqualFrequency, {}, std::nullopt, k, log};
  }
  static BinningRule UniformWidth(int k, bool log = false) {
    return BinningRule{BinningMethod::kUniformWidth, {}, std::nullopt, k, log};
  }
  static BinningRule KMeans(int k, bool log = false) {
    return BinningRule{BinningMethod::kKMeans1d, {}, std::nullopt, k, log};
  }
};

struct ColumnCodebook {
  std::string name;
  BinningMethod method = BinningMethod::kCategorical;
  // Numeric columns: bin edges, in log space when log_flag is set.
  std::vector<double> edges;
  // Categorical columns: level labels.
  std::vector<std::string> labels;
  bool log_flag = false;
  std::string units;

  bool is_numeric() const { return method != BinningMethod::kCategorical; }
  int domain_size() const {
    return is_numeric() ? static_cast<int>(edges.size()) - 1
                        : static_cast<int>(labels.size());
  }

  friend bool operator==(const ColumnCodebook&,
                         const ColumnCodebook&) = default;
};

struct Codebook {
  std::vector<ColumnCodebook> columns;

  std::vector<int> domain_sizes() const {
    std::vector<int> sizes;
    for (const auto& c : columns) sizes.push_back(c.domain_size());
    return sizes;
  }

  std::optional<std::size_t> ColumnIndex(const std::string& name) const {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (columns[c].name == name) return c;
    }
    return std::nullopt;
  }

  absl::StatusOr<std::size_t> RequireColumn(const std::string& name) const {
    auto index = ColumnIndex(name);
    if (!index) {
      return absl::NotFoundError(
          absl::StrCat("codebook has no column '", name, "'"));
    }
    return *index;
  }

  // Schema of the decoded (numeric-restored) dataset.
  std::vector<ColumnSpec> DecodedSchema() const {
    std::vector<ColumnSpec> schema;
    for (const auto& c : columns) {
      if (c.is_numeric()) {
        schema.push_back(ColumnSpec::Numeric(c.name, c.units));
      } else {
        schema.push_back(ColumnSpec::Categorical(c.name, c.labels));
      }
    }
    return schema;
  }

  friend bool operator==(const Codebook&, const Codebook&) = default;
};

// Persisted as {column: {method, edges, log_flag, labels}} in column order.
inline nlohmann::ordered_json CodebookToJson(const Codebook& codebook) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& c : codebook.columns) {
    nlohmann::ordered_json entry;
    entry["method"] = BinningMethodName(c.method);
    entry["edges"] = c.edges;
    entry["log_flag"] = c.log_flag;
    entry["labels"] = c.labels;
    if (!c.units.empty()) entry["units"] = c.units;
    doc[c.name] = std::move(entry);
  }
  return doc;
}

inline absl::StatusOr<Codebook> CodebookFromJson(
    const nlohmann::ordered_json& doc) {
  if (!doc.is_object()) {
    return absl::InvalidArgumentError("codebook must be a JSON object");
  }
  Codebook codebook;
  for (const auto& [name, entry] : doc.items()) {
    ColumnCodebook c;
    c.name = name;
    BSYNTH_ASSIGN_OR_RETURN(c.method,
                            ParseBinningMethod(entry.value("method", "")));
    c.edges = entry.value("edges", std::vector<double>{});
    c.labels = entry.value("labels", std::vector<std::string>{});
    c.log_flag = entry.value("log_flag", false);
    c.units = entry.value("units", "");
    if (c.is_numeric()) {
      BSYNTH_RETURN_IF_ERROR(Annotate(ValidateEdges(c.edges), name));
    } else if (c.labels.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("codebook column '", name, "' has no labels"));
    }
    codebook.columns.push_back(std::move(c));
  }
  return codebook;
}

// Row-major matrix of category codes plus the codebook to interpret them.
// Cells holding kSuppressed mark attributes a synthesizer could not resolve.
class EncodedDataset {
 public:
  static constexpr int kSuppressed = -1;

  EncodedDataset() = default;

  static absl::StatusOr<EncodedDataset> Create(std::vector<int32_t> codes,
                                               std::size_t num_rows,
                                               Codebook codebook) {
    const std::size_t cols = codebook.columns.size();
    if (codes.size() != num_rows * cols) {
      return absl::InvalidArgumentError(
          absl::StrCat("code matrix has ", codes.size(), " cells, expected ",
                       num_rows, " x ", cols));
    }
    const std::vector<int> domains = codebook.domain_sizes();
    for (std::size_t r = 0; r < num_rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const int32_t code = codes[r * cols + c];
        if (code != kSuppressed && (code < 0 || code >= domains[c])) {
          return absl::OutOfRangeError(absl::StrCat(
              "code ", code, " out of domain [0, ", domains[c], ") at row ",
              r + 1, ", column '", codebook.columns[c].name, "'"));
        }
      }
    }
    EncodedDataset d;
    d.codes_ = std::move(codes);
    d.num_rows_ = num_rows;
    d.codebook_ = std::move(codebook);
    return d;
  }

  std::size_t num_rows() const { return num_rows_; }
  std::size_t num_columns() const { return codebook_.columns.size(); }
  const Codebook& codebook() const { return codebook_; }
  std::vector<int> domain_sizes() const { return codebook_.domain_sizes(); }

  int32_t code(std::size_t row, std::size_t col) const {
    return codes_[row * num_columns() + col];
  }
  std::span<const int32_t> row(std::size_t r) const {
    return std::span<const int32_t>(codes_).subspan(r * num_columns(),
                                                    num_columns());
  }
  std::vector<int> column(std::size_t c) const {
    std::vector<int> out(num_rows_);
    for (std::size_t r = 0; r < num_rows_; ++r) out[r] = code(r, c);
    return out;
  }
  const std::vector<int32_t>& codes() const { return codes_; }

  bool HasSuppressed() const {
    for (int32_t c : codes_) {
      if (c == kSuppressed) return true;
    }
    return false;
  }

  friend bool operator==(const EncodedDataset& a, const EncodedDataset& b) {
    return a.num_rows_ == b.num_rows_ && a.codes_ == b.codes_ &&
           a.codebook_ == b.codebook_;
  }

 private:
  std::vector<int32_t> codes_;
  std::size_t num_rows_ = 0;
  Codebook codebook_;
};

namespace internal {

inline absl::StatusOr<std::vector<double>> MaybeLog(
    std::span<const double> values, bool log) {
  if (!log) return std::vector<double>(values.begin(), values.end());
  return LogPretransform(values);
}

inline absl::StatusOr<ColumnCodebook> FitColumn(const ColumnSpec& spec,
                                                std::span<const double> raw,
                                                const BinningRule& rule,
                                                std::vector<int>& codes) {
  ColumnCodebook column;
  column.name = spec.name;
  column.units = spec.units;
  column.method = rule.method;
  column.log_flag = rule.log_pretransform;
  BSYNTH_ASSIGN_OR_RETURN(std::vector<double> values,
                          MaybeLog(raw, rule.log_pretransform));
  BinnedColumn binned;
  switch (rule.method) {
    case BinningMethod::kExplicitCutoffs: {
      std::vector<double> cutoffs = rule.cutoffs;
      std::optional<double> lower = rule.lower;
      if (rule.log_pretransform) {
        BSYNTH_ASSIGN_OR_RETURN(cutoffs, LogPretransform(cutoffs));
        if (lower) {
          if (!(*lower > 0)) {
            return absl::InvalidArgumentError(
                "log-transformed explicit bins need a positive lower bound");
          }
          lower = std::log(*lower);
        }
      }
      BSYNTH_ASSIGN_OR_RETURN(binned, ExplicitBins(values, cutoffs, lower));
      break;
    }
    case BinningMethod::kEqualFrequency: {
      BSYNTH_ASSIGN_OR_RETURN(binned, EqualFrequencyBins(values, rule.k));
      break;
    }
    case BinningMethod::kUniformWidth: {
      BSYNTH_ASSIGN_OR_RETURN(binned, UniformWidthBins(values, rule.k));
      break;
    }
    case BinningMethod::kKMeans1d: {
      BSYNTH_ASSIGN_OR_RETURN(KMeansResult km, KMeans1d(values, rule.k));
      binned = std::move(km.binned);
      break;
    }
    case BinningMethod::kCategorical:
      return absl::InvalidArgumentError(
          "numeric column needs a binning rule, not 'categorical'");
  }
  column.edges = std::move(binned.edges);
  codes = std::move(binned.codes);
  return column;
}

}  // namespace internal

using BinningRules = std::map<std::string, BinningRule>;

// Encodes every numeric column with its rule; categorical columns pass
// through with their level labels.
inline absl::StatusOr<EncodedDataset> EncodeDataset(const Dataset& data,
                                                    const BinningRules& rules) {
  for (const auto& [name, rule] : rules) {
    if (!data.ColumnIndex(name)) {
      return absl::InvalidArgumentError(
          absl::StrCat("binning rule for unknown column '", name, "'"));
    }
  }
  const std::size_t n = data.num_rows();
  const std::size_t cols = data.num_columns();
  Codebook codebook;
  std::vector<int32_t> codes(n * cols);
  for (std::size_t c = 0; c < cols; ++c) {
    const ColumnSpec& spec = data.schema()[c];
    std::vector<int> column_codes;
    if (spec.kind == ColumnKind::kCategorical) {
      if (rules.count(spec.name)) {
        return absl::InvalidArgumentError(absl::StrCat(
            "column '", spec.name, "' is categorical and takes no rule"));
      }
      ColumnCodebook column;
      column.name = spec.name;
      column.method = BinningMethod::kCategorical;
      column.labels = spec.levels;
      column.units = spec.units;
      codebook.columns.push_back(std::move(column));
      for (std::size_t r = 0; r < n; ++r)
        codes[r * cols + c] = data.level(r, c);
      continue;
    }
    auto it = rules.find(spec.name);
    if (it == rules.end()) {
      return absl::InvalidArgumentError(
          absl::StrCat("numeric column '", spec.name, "' has no binning rule"));
    }
    auto column =
        internal::FitColumn(spec, data.column(c), it->second, column_codes);
    if (!column.ok()) {
      return Annotate(column.status(),
                      absl::StrCat("column '", spec.name, "'"));
    }
    codebook.columns.push_back(*std::move(column));
    for (std::size_t r = 0; r < n; ++r) codes[r * cols + c] = column_codes[r];
  }
  return EncodedDataset::Create(std::move(codes), n, std::move(codebook));
}

// Encodes with a fixed codebook (no refitting); used to check that decoded
// values land back in their source bins.
inline absl::StatusOr<EncodedDataset> EncodeWithCodebook(
    const Dataset& data, const Codebook& codebook) {
  const std::size_t n = data.num_rows();
  const std::size_t cols = codebook.columns.size();
  std::vector<int32_t> codes(n * cols);
  for (std::size_t c = 0; c < cols; ++c) {
    const ColumnCodebook& book = codebook.columns[c];
    BSYNTH_ASSIGN_OR_RETURN(std::size_t src, data.RequireColumn(book.name));
    for (std::size_t r = 0; r < n; ++r) {
      if (!book.is_numeric()) {
        codes[r * cols + c] = data.level(r, src);
        continue;
      }
      double v = data.cell(r, src);
      if (book.log_flag) {
        if (!(v > 0)) {
          return absl::InvalidArgumentError(
              absl::StrCat("row ", r + 1, ", column '", book.name,
                           "': log-flagged value must be positive"));
        }
        v = std::log(v);
      }
      auto code = AssignBin(v, book.edges);
      if (!code.ok()) {
        return Annotate(code.status(), absl::StrCat("row ", r + 1, ", column '",
                                                    book.name, "'"));
      }
      codes[r * cols + c] = *code;
    }
  }
  return EncodedDataset::Create(std::move(codes), n, codebook);
}

// Encoded CSV: header of column names, integer codes (-1 = suppressed).
inline std::string FormatEncoded(const EncodedDataset& data) {
  std::string out;
  CsvRecord header;
  for (const auto& c : data.codebook().columns) header.push_back(c.name);
  out += FormatCsvRecord(header);
  CsvRecord record(data.num_columns());
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    for (std::size_t c = 0; c < data.num_columns(); ++c) {
      record[c] = std::to_string(data.code(r, c));
    }
    out += FormatCsvRecord(record);
  }
  return out;
}

inline absl::StatusOr<EncodedDataset> ParseEncoded(std::string_view text,
                                                   Codebook codebook) {
  BSYNTH_ASSIGN_OR_RETURN(std::vector<CsvRecord> records, ParseCsv(text));
  if (records.empty()) return absl::InvalidArgumentError("missing header row");
  const std::size_t cols = codebook.columns.size();
  CsvRecord expected;
  for (const auto& c : codebook.columns) expected.push_back(c.name);
  if (records.front() != expected) {
    return absl::InvalidArgumentError(
        "encoded CSV header does not match the codebook");
  }
  std::vector<int32_t> codes;
  std::size_t rows = 0;
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() == 1 && records[r][0].empty()) continue;
    if (records[r].size() != cols) {
      return absl::InvalidArgumentError(
          absl::StrCat("row ", r, ": expected ", cols, " fields"));
    }
    for (const std::string& field : records[r]) {
      int32_t code = 0;
      auto [ptr, ec] =
          std::from_chars(field.data(), field.data() + field.size(), code);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        return absl::InvalidArgumentError(
            absl::StrCat("row ", r, ": bad code '", field, "'"));
      }
      codes.push_back(code);
    }
    ++rows;
  }
  return EncodedDataset::Create(std::move(codes), rows, std::move(codebook));
}

}  // namespace bsynth

#endif  // BSYNTH_ENCODE_H_
