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

#ifndef BSYNTH_DECODE_H_
#define BSYNTH_DECODE_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "bsynth/binning.h"
#include "bsynth/encode.h"
#include "bsynth/privacy.h"
#include "bsynth/status.h"
#include "bsynth/table.h"

namespace bsynth {

enum class DecodeMode { kLeftEdge, kMidpoint, kKde };

inline const char* DecodeModeName(DecodeMode mode) {
  switch (mode) {
    case DecodeMode::kLeftEdge:
      return "left_edge";
    case DecodeMode::kMidpoint:
      return "midpoint";
    case DecodeMode::kKde:
      return "kde";
  }
  return "left_edge";
}

inline absl::StatusOr<DecodeMode> ParseDecodeMode(const std::string& name) {
  for (DecodeMode m :
       {DecodeMode::kLeftEdge, DecodeMode::kMidpoint, DecodeMode::kKde}) {
    if (name == DecodeModeName(m)) return m;
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown decode mode '", name, "'; expected left_edge, midpoint or kde"));
}

// Gaussian KDE settings. An unset bandwidth selects Scott's rule.
struct KdeSpec {
  std::optional<double> bandwidth;
  int grid_points = 512;
};

struct ColumnDecodeReport {
  std::string column;
  double bandwidth = 0;
  std::size_t fallbacks = 0;
};

namespace internal {

inline double ToModelSpace(const ColumnCodebook& column, double raw) {
  return column.log_flag ? std::log(raw) : raw;
}

inline double FromModelSpace(const ColumnCodebook& column, double value) {
  return column.log_flag ? std::exp(value) : value;
}

inline absl::Status CheckCode(const ColumnCodebook& column, int code) {
  if (code < 0 || code >= column.domain_size()) {
    return absl::OutOfRangeError(
        absl::StrCat("code ", code, " outside domain [0, ",
                     column.domain_size(), ") of column '", column.name, "'"));
  }
  return absl::OkStatus();
}

// Moves a raw value by ulps until re-encoding yields `code`; absorbs
// exp/log round-off at bin edges.
inline double SnapToBin(const ColumnCodebook& column, double raw, int code) {
  for (int step = 0; step < 64; ++step) {
    const double t = ToModelSpace(column, raw);
    auto got = AssignBin(t, column.edges);
    int direction = 0;
    if (!got.ok()) {
      direction = t < column.edges.front() ? 1 : -1;
    } else if (*got < code) {
      direction = 1;
    } else if (*got > code) {
      direction = -1;
    }
    if (direction == 0) return raw;
    raw = std::nextafter(raw, direction > 0
                                  ? std::numeric_limits<double>::infinity()
                                  : -std::numeric_limits<double>::infinity());
  }
  return raw;
}

}  // namespace internal

inline absl::StatusOr<std::vector<double>> DecodeLeftEdge(
    std::span<const int> codes, const ColumnCodebook& column) {
  std::vector<double> out;
  out.reserve(codes.size());
  for (int code : codes) {
    BSYNTH_RETURN_IF_ERROR(internal::CheckCode(column, code));
    out.push_back(internal::SnapToBin(
        column, internal::FromModelSpace(column, column.edges[code]), code));
  }
  return out;
}

// Bin midpoints in the codebook's space (geometric means for log columns).
// Edges are always finite, so every bin has a midpoint.
inline absl::StatusOr<std::vector<double>> DecodeMidpoint(
    std::span<const int> codes, const ColumnCodebook& column) {
  std::vector<double> out;
  out.reserve(codes.size());
  for (int code : codes) {
    BSYNTH_RETURN_IF_ERROR(internal::CheckCode(column, code));
    const double mid = 0.5 * (column.edges[code] + column.edges[code + 1]);
    out.push_back(internal::SnapToBin(
        column, internal::FromModelSpace(column, mid), code));
  }
  return out;
}

inline double ScottBandwidth(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  if (n < 2) return 0;
  double mean = 0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= n - 1;
  return std::sqrt(var) * std::pow(n, -0.2);
}

// Samples each value from a Gaussian KDE of `original`, evaluated on a grid
// with a random phase offset and restricted to the code's bin.
inline absl::StatusOr<std::vector<double>> DecodeKde(
    std::span<const int> codes, const ColumnCodebook& column,
    std::span<const double> original, const KdeSpec& spec, Rng& rng,
    ColumnDecodeReport* report = nullptr) {
  if (original.empty()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "KDE decoding of '", column.name, "' needs original values"));
  }
  if (spec.grid_points < 16) {
    return absl::InvalidArgumentError(
        absl::StrCat("grid_points must be >= 16, got ", spec.grid_points));
  }
  if (spec.bandwidth && !(*spec.bandwidth > 0)) {
    return absl::InvalidArgumentError("KDE bandwidth must be positive");
  }
  std::vector<double> source;
  source.reserve(original.size());
  for (double v : original) {
    if (column.log_flag && !(v > 0)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "column '", column.name, "': log-flagged value must be positive"));
    }
    source.push_back(internal::ToModelSpace(column, v));
  }
  const auto [min_it, max_it] =
      std::minmax_element(source.begin(), source.end());
  const double lo = *min_it;
  const double hi = *max_it;
  const int g = spec.grid_points;
  const double step = (hi - lo) / g;
  double bandwidth = spec.bandwidth.value_or(ScottBandwidth(source));
  if (!(bandwidth > 0)) bandwidth = step > 0 ? step / 4 : 1.0;
  if (report != nullptr) {
    report->column = column.name;
    report->bandwidth = bandwidth;
  }

  // Grid with random phase, then density at each point.
  std::vector<double> grid(g), density(g, 0.0);
  const double phase = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  for (int i = 0; i < g; ++i) grid[i] = lo + (i + phase) * step;
  if (step == 0) grid.assign(g, lo);
  const double inv = 1.0 / bandwidth;
  for (double s : source) {
    for (int i = 0; i < g; ++i) {
      const double z = (grid[i] - s) * inv;
      if (z < 8.5 && z > -8.5) density[i] += std::exp(-0.5 * z * z);
    }
  }

  const int bins = column.domain_size();
  std::vector<std::vector<int>> points(bins);
  for (int i = 0; i < g; ++i) {
    auto code = AssignBin(grid[i], column.edges);
    if (code.ok()) points[*code].push_back(i);
  }
  std::vector<std::optional<std::discrete_distribution<int>>> per_bin(bins);
  std::vector<double> weights;
  for (int b = 0; b < bins; ++b) {
    weights.clear();
    double total = 0;
    for (int i : points[b]) {
      weights.push_back(density[i]);
      total += density[i];
    }
    if (total > 0) per_bin[b].emplace(weights.begin(), weights.end());
  }

  std::vector<double> out;
  out.reserve(codes.size());
  for (int code : codes) {
    BSYNTH_RETURN_IF_ERROR(internal::CheckCode(column, code));
    double value;
    if (per_bin[code]) {
      value = grid[points[code][(*per_bin[code])(rng)]];
    } else {
      // No grid support: left edge clamped into the observed range when the
      // clamp stays inside the bin.
      value = column.edges[code];
      const double clamped = std::clamp(value, lo, hi);
      auto c = AssignBin(clamped, column.edges);
      if (c.ok() && *c == code) value = clamped;
      if (report != nullptr) ++report->fallbacks;
    }
    out.push_back(internal::SnapToBin(
        column, internal::FromModelSpace(column, value), code));
  }
  return out;
}

struct DecodeResult {
  Dataset data;
  std::size_t dropped_rows = 0;
  std::vector<ColumnDecodeReport> columns;
};

// Decodes every column; rows holding a suppressed cell are dropped. KDE mode
// needs the original dataset for the per-feature fit.
inline absl::StatusOr<DecodeResult> DecodeDataset(const EncodedDataset& data,
                                                  DecodeMode mode,
                                                  const Dataset* original,
                                                  const KdeSpec& spec,
                                                  Rng& rng) {
  if (mode == DecodeMode::kKde && original == nullptr) {
    return absl::InvalidArgumentError("KDE decoding needs the original data");
  }
  const Codebook& book = data.codebook();
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    const auto row = data.row(r);
    if (std::find(row.begin(), row.end(), EncodedDataset::kSuppressed) ==
        row.end()) {
      keep.push_back(r);
    }
  }
  DecodeResult result;
  result.dropped_rows = data.num_rows() - keep.size();
  std::vector<std::vector<double>> columns;
  std::vector<int> codes(keep.size());
  for (std::size_t c = 0; c < book.columns.size(); ++c) {
    const ColumnCodebook& column = book.columns[c];
    for (std::size_t i = 0; i < keep.size(); ++i) {
      codes[i] = data.code(keep[i], c);
    }
    if (!column.is_numeric()) {
      columns.emplace_back(codes.begin(), codes.end());
      continue;
    }
    absl::StatusOr<std::vector<double>> values;
    switch (mode) {
      case DecodeMode::kLeftEdge:
        values = DecodeLeftEdge(codes, column);
        break;
      case DecodeMode::kMidpoint:
        values = DecodeMidpoint(codes, column);
        break;
      case DecodeMode::kKde: {
        BSYNTH_ASSIGN_OR_RETURN(std::size_t src,
                                original->RequireColumn(column.name));
        ColumnDecodeReport report;
        const auto source = original->column(src);
        values = DecodeKde(codes, column, source, spec, rng, &report);
        result.columns.push_back(report);
        break;
      }
    }
    if (!values.ok()) {
      return Annotate(values.status(),
                      absl::StrCat("decoding column '", column.name, "'"));
    }
    columns.push_back(*std::move(values));
  }
  BSYNTH_ASSIGN_OR_RETURN(result.data,
                          Dataset::FromColumns(book.DecodedSchema(),
                                               std::move(columns), "decoded"));
  return result;
}

}  // namespace bsynth

#endif  // BSYNTH_DECODE_H_
