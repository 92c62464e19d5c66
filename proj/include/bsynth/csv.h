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

#ifndef BSYNTH_CSV_H_
#define BSYNTH_CSV_H_

// CSV dialect: comma separator, double-quote quoting with doubled quotes as
// escapes, UTF-8, mandatory header row.

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "bsynth/status.h"
#include "bsynth/table.h"
#include "nlohmann/json.hpp"

namespace bsynth {

using CsvRecord = std::vector<std::string>;

inline absl::StatusOr<std::vector<CsvRecord>> ParseCsv(std::string_view text) {
  std::vector<CsvRecord> records;
  CsvRecord record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    records.push_back(std::move(record));
    record.clear();
    field_started = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field.empty()) {
          return absl::InvalidArgumentError(
              absl::StrCat("stray quote on line ", line));
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) {
    return absl::InvalidArgumentError("unterminated quoted field");
  }
  if (field_started || !record.empty()) end_record();
  return records;
}

inline std::string QuoteCsvField(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

inline std::string FormatCsvRecord(const CsvRecord& record) {
  std::string line;
  for (std::size_t i = 0; i < record.size(); ++i) {
    if (i > 0) line.push_back(',');
    line += QuoteCsvField(record[i]);
  }
  line.push_back('\n');
  return line;
}

// Fewest significant digits, from 15 up, that parse back to `value`.
inline std::string FormatNumber(double value) {
  char buffer[32];
  for (int digits = 15; digits < 17; ++digits) {
    std::snprintf(buffer, sizeof(buffer), "%.*g", digits, value);
    if (std::strtod(buffer, nullptr) == value) return buffer;
  }
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

inline absl::StatusOr<double> ParseNumber(std::string_view text) {
  double value = 0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    return absl::InvalidArgumentError(
        absl::StrCat("cannot parse '", std::string(text), "' as a number"));
  }
  return value;
}

inline absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(absl::StrCat("cannot open '", path, "'"));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline absl::Status WriteFile(const std::string& path,
                              std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot write '", path, "'"));
  }
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) {
    return absl::DataLossError(absl::StrCat("write failed for '", path, "'"));
  }
  return absl::OkStatus();
}

// Parses CSV text against `schema`. Rows are reported 1-based, counting data
// rows only (the header is not a row).
inline absl::StatusOr<Dataset> ParseDataset(std::string_view text,
                                            std::vector<ColumnSpec> schema,
                                            std::string provenance = "") {
  BSYNTH_RETURN_IF_ERROR(ValidateSchema(schema));
  BSYNTH_ASSIGN_OR_RETURN(std::vector<CsvRecord> records, ParseCsv(text));
  if (records.empty()) {
    return absl::InvalidArgumentError("missing header row");
  }
  const CsvRecord& header = records.front();
  std::vector<std::string> expected;
  for (const ColumnSpec& c : schema) expected.push_back(c.name);
  if (header != expected) {
    return absl::InvalidArgumentError(absl::StrCat(
        "header mismatch: expected [", absl::StrJoin(expected, ","), "], got [",
        absl::StrJoin(header, ","), "]"));
  }
  std::vector<std::vector<double>> columns(schema.size());
  for (std::size_t r = 1; r < records.size(); ++r) {
    const CsvRecord& rec = records[r];
    if (rec.size() == 1 && rec[0].empty()) continue;  // blank line
    if (rec.size() != schema.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("row ", r, ": expected ", schema.size(), " fields, got ",
                       rec.size()));
    }
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const std::string& cell = rec[c];
      if (cell.empty()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "row ", r, ", column '", schema[c].name, "': missing value"));
      }
      if (schema[c].kind == ColumnKind::kNumeric) {
        auto value = ParseNumber(cell);
        if (!value.ok()) {
          return absl::InvalidArgumentError(
              absl::StrCat("row ", r, ", column '", schema[c].name,
                           "': ", value.status().message()));
        }
        columns[c].push_back(*value);
      } else {
        const auto& levels = schema[c].levels;
        std::size_t index = 0;
        while (index < levels.size() && levels[index] != cell) ++index;
        if (index == levels.size()) {
          return absl::InvalidArgumentError(
              absl::StrCat("row ", r, ", column '", schema[c].name,
                           "': unknown level '", cell, "'"));
        }
        columns[c].push_back(static_cast<double>(index));
      }
    }
  }
  return Dataset::FromColumns(std::move(schema), std::move(columns),
                              std::move(provenance));
}

inline absl::StatusOr<Dataset> ReadCsv(const std::string& path,
                                       std::vector<ColumnSpec> schema) {
  BSYNTH_ASSIGN_OR_RETURN(std::string text, ReadFile(path));
  auto dataset = ParseDataset(text, std::move(schema), path);
  if (!dataset.ok()) return Annotate(dataset.status(), path);
  return dataset;
}

inline std::string FormatDataset(const Dataset& data) {
  std::string out;
  CsvRecord header;
  for (const ColumnSpec& c : data.schema()) header.push_back(c.name);
  out += FormatCsvRecord(header);
  CsvRecord record(data.num_columns());
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    for (std::size_t c = 0; c < data.num_columns(); ++c) {
      record[c] = data.schema()[c].kind == ColumnKind::kNumeric
                      ? FormatNumber(data.cell(r, c))
                      : data.label(r, c);
    }
    out += FormatCsvRecord(record);
  }
  return out;
}

inline absl::Status WriteCsv(const Dataset& data, const std::string& path) {
  return WriteFile(path, FormatDataset(data));
}

// Schema documents are JSON arrays of {name, kind, levels?, units?}.
inline nlohmann::ordered_json SchemaToJson(std::span<const ColumnSpec> schema) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const ColumnSpec& c : schema) {
    nlohmann::ordered_json col;
    col["name"] = c.name;
    col["kind"] = ColumnKindName(c.kind);
    if (c.kind == ColumnKind::kCategorical) col["levels"] = c.levels;
    if (!c.units.empty()) col["units"] = c.units;
    doc.push_back(std::move(col));
  }
  return doc;
}

inline absl::StatusOr<std::vector<ColumnSpec>> SchemaFromJson(
    const nlohmann::json& doc) {
  if (!doc.is_array()) {
    return absl::InvalidArgumentError("schema document must be an array");
  }
  std::vector<ColumnSpec> schema;
  for (const auto& col : doc) {
    if (!col.is_object() || !col.contains("name") || !col.contains("kind") ||
        !col["name"].is_string() || !col["kind"].is_string()) {
      return absl::InvalidArgumentError(
          "schema entries need string fields 'name' and 'kind'");
    }
    ColumnSpec spec;
    spec.name = col["name"].get<std::string>();
    const std::string kind = col["kind"].get<std::string>();
    if (kind == "numeric") {
      spec.kind = ColumnKind::kNumeric;
    } else if (kind == "categorical") {
      spec.kind = ColumnKind::kCategorical;
    } else {
      return absl::InvalidArgumentError(
          absl::StrCat("column '", spec.name, "': unknown kind '", kind,
                       "' (allowed: numeric, categorical)"));
    }
    if (col.contains("levels")) {
      for (const auto& level : col["levels"]) {
        spec.levels.push_back(level.is_string() ? level.get<std::string>()
                                                : level.dump());
      }
    }
    if (col.contains("units")) spec.units = col["units"].get<std::string>();
    schema.push_back(std::move(spec));
  }
  BSYNTH_RETURN_IF_ERROR(ValidateSchema(schema));
  return schema;
}

inline absl::StatusOr<std::vector<ColumnSpec>> ReadSchema(
    const std::string& path) {
  BSYNTH_ASSIGN_OR_RETURN(std::string text, ReadFile(path));
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    return absl::InvalidArgumentError(
        absl::StrCat("'", path, "' is not valid JSON"));
  }
  return SchemaFromJson(doc);
}

}  // namespace bsynth

#endif  // BSYNTH_CSV_H_
