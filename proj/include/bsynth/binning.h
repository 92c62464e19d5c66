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

#ifndef BSYNTH_BINNING_H_
#define BSYNTH_BINNING_H_

// Discretization of numeric features. All bins are half-open [a, b) except
// the final bin, which is closed at the last edge.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "bsynth/status.h"

namespace bsynth {

struct BinnedColumn {
  std::vector<int> codes;
  // Strictly increasing; number of bins is edges.size() - 1.
  std::vector<double> edges;
};

inline absl::Status ValidateEdges(std::span<const double> edges) {
  if (edges.size() < 2) {
    return absl::InvalidArgumentError("bin edges need at least two values");
  }
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      return absl::InvalidArgumentError(
          absl::StrCat("bin edges must be strictly increasing (edge ", i, " = ",
                       edges[i], " after ", edges[i - 1], ")"));
    }
  }
  return absl::OkStatus();
}

// Bin index of `value`; values outside [edges.front(), edges.back()] are
// out of domain.
inline absl::StatusOr<int> AssignBin(double value,
                                     std::span<const double> edges) {
  if (!(value >= edges.front()) || !(value <= edges.back())) {
    return absl::OutOfRangeError(
        absl::StrCat("value ", value, " outside bin domain [", edges.front(),
                     ", ", edges.back(), "]"));
  }
  // Interior edges <= value.
  auto interior_begin = edges.begin() + 1;
  auto interior_end = edges.end() - 1;
  return static_cast<int>(
      std::upper_bound(interior_begin, interior_end, value) - interior_begin);
}

inline absl::StatusOr<std::vector<int>> AssignBins(
    std::span<const double> values, std::span<const double> edges) {
  std::vector<int> codes;
  codes.reserve(values.size());
  for (double v : values) {
    BSYNTH_ASSIGN_OR_RETURN(int code, AssignBin(v, edges));
    codes.push_back(code);
  }
  return codes;
}

// Cut-offs are the upper bounds of successive bins: the first bin runs from
// `lower` up to cutoffs[0], the last is closed at cutoffs.back(). Without an
// explicit `lower`, the first bin is given the width of the second (or the
// observed minimum, if smaller).
inline absl::StatusOr<BinnedColumn> ExplicitBins(
    std::span<const double> values, std::span<const double> cutoffs,
    std::optional<double> lower = std::nullopt) {
  if (cutoffs.empty()) {
    return absl::InvalidArgumentError("explicit binning needs cut-offs");
  }
  for (std::size_t i = 1; i < cutoffs.size(); ++i) {
    if (!(cutoffs[i] > cutoffs[i - 1])) {
      return absl::InvalidArgumentError(
          "explicit cut-offs must be strictly increasing");
    }
  }
  double low;
  if (lower) {
    low = *lower;
  } else {
    low = cutoffs.size() > 1 ? cutoffs[0] - (cutoffs[1] - cutoffs[0])
                             : cutoffs[0] - 1.0;
    for (double v : values) low = std::min(low, v);
  }
  if (!(low < cutoffs[0])) {
    return absl::InvalidArgumentError(absl::StrCat(
        "lower bound ", low, " must be below the first cut-off ", cutoffs[0]));
  }
  BinnedColumn out;
  out.edges.push_back(low);
  out.edges.insert(out.edges.end(), cutoffs.begin(), cutoffs.end());
  out.codes.reserve(values.size());
  for (double v : values) {
    if (v > cutoffs.back()) {
      return absl::OutOfRangeError(absl::StrCat(
          "value ", v, " exceeds the final cut-off ", cutoffs.back()));
    }
    if (v < low) {
      return absl::OutOfRangeError(
          absl::StrCat("value ", v, " is below the lower bound ", low));
    }
    BSYNTH_ASSIGN_OR_RETURN(int code, AssignBin(v, out.edges));
    out.codes.push_back(code);
  }
  return out;
}

namespace internal {

inline std::vector<double> SortedDistinct(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  return sorted;
}

inline absl::Status CheckBinCount(int k, std::size_t distinct) {
  if (k < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("bin count must be >= 1, got ", k));
  }
  if (static_cast<std::size_t>(k) > distinct) {
    return absl::InvalidArgumentError(absl::StrCat(
        "bin count ", k, " exceeds the ", distinct,
        " distinct values; use k <= ", std::max<std::size_t>(distinct, 1)));
  }
  return absl::OkStatus();
}

// Edges for a single bin over constant data get a unit width.
inline std::vector<double> SingleBinEdges(double min, double max) {
  return {min, max > min ? max : min + 1.0};
}

}  // namespace internal

// Splits sorted values at nearest-rank quantiles. Ties never straddle a
// boundary (they stay in the lower bin); boundaries sit midway between the
// last value of one bin and the first value of the next.
inline absl::StatusOr<BinnedColumn> EqualFrequencyBins(
    std::span<const double> values, int k) {
  if (values.empty()) {
    return absl::InvalidArgumentError("equal-frequency binning of no values");
  }
  const std::vector<double> distinct = internal::SortedDistinct(values);
  BSYNTH_RETURN_IF_ERROR(internal::CheckBinCount(k, distinct.size()));
  BinnedColumn out;
  if (k == 1) {
    out.edges = internal::SingleBinEdges(distinct.front(), distinct.back());
  } else {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(distinct.size());
    out.edges.push_back(distinct.front());
    std::ptrdiff_t previous = -1;
    for (int j = 1; j < k; ++j) {
      // Nearest rank ceil(j n / k), 1-based.
      const std::size_t rank = (static_cast<std::size_t>(j) * n + k - 1) / k;
      const double top = sorted[rank - 1];
      std::ptrdiff_t idx =
          std::lower_bound(distinct.begin(), distinct.end(), top) -
          distinct.begin();
      idx = std::clamp<std::ptrdiff_t>(idx, previous + 1, m - 1 - (k - j));
      out.edges.push_back(0.5 * (distinct[idx] + distinct[idx + 1]));
      previous = idx;
    }
    out.edges.push_back(distinct.back());
  }
  BSYNTH_ASSIGN_OR_RETURN(out.codes, AssignBins(values, out.edges));
  return out;
}

inline absl::StatusOr<BinnedColumn> UniformWidthBins(
    std::span<const double> values, int k) {
  if (values.empty()) {
    return absl::InvalidArgumentError("uniform-width binning of no values");
  }
  const std::vector<double> distinct = internal::SortedDistinct(values);
  BSYNTH_RETURN_IF_ERROR(internal::CheckBinCount(k, distinct.size()));
  BinnedColumn out;
  const double lo = distinct.front();
  const double hi = distinct.back();
  if (k == 1) {
    out.edges = internal::SingleBinEdges(lo, hi);
  } else {
    const double width = (hi - lo) / k;
    for (int i = 0; i < k; ++i) out.edges.push_back(lo + i * width);
    out.edges.push_back(hi);
  }
  BSYNTH_ASSIGN_OR_RETURN(out.codes, AssignBins(values, out.edges));
  return out;
}

struct KMeansResult {
  BinnedColumn binned;
  // Sum over clusters of (1/|S|) * sum_{x,y in S} (x - y)^2, ordered pairs.
  double cost = 0;
};

// Within-cluster cost of one contiguous cluster, via its centered second
// moment: (1/|S|) sum_{x,y} (x - y)^2 = 2 sum (x - mean)^2.
inline double ClusterPairCost(std::span<const double> sorted_values) {
  if (sorted_values.empty()) return 0;
  const double mean =
      std::accumulate(sorted_values.begin(), sorted_values.end(), 0.0) /
      static_cast<double>(sorted_values.size());
  double ss = 0;
  for (double v : sorted_values) ss += (v - mean) * (v - mean);
  return 2.0 * ss;
}

// Globally optimal 1-D k-means. Optimal clusters of scalars are contiguous
// in sorted order, so the partition is found by dynamic programming over
// sorted distinct values (weighted by multiplicity), with the divide-and-
// conquer speedup that the monotone split points of the SSE cost allow.
// Equal-cost splits resolve to the leftmost split point.
inline absl::StatusOr<KMeansResult> KMeans1d(std::span<const double> values,
                                             int k) {
  if (values.empty()) {
    return absl::InvalidArgumentError("k-means binning of no values");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct;
  std::vector<double> weight;
  for (double v : sorted) {
    if (distinct.empty() || v != distinct.back()) {
      distinct.push_back(v);
      weight.push_back(1.0);
    } else {
      weight.back() += 1.0;
    }
  }
  BSYNTH_RETURN_IF_ERROR(internal::CheckBinCount(k, distinct.size()));
  const std::size_t m = distinct.size();

  // Center and scale for well-conditioned prefix sums.
  const double center = 0.5 * (distinct.front() + distinct.back());
  const double scale =
      std::max(1e-300, 0.5 * (distinct.back() - distinct.front()));
  std::vector<double> pw(m + 1, 0.0), p1(m + 1, 0.0), p2(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double x = (distinct[i] - center) / scale;
    pw[i + 1] = pw[i] + weight[i];
    p1[i + 1] = p1[i] + weight[i] * x;
    p2[i + 1] = p2[i] + weight[i] * x * x;
  }
  // SSE of distinct points [i, j] inclusive.
  auto sse = [&](std::size_t i, std::size_t j) {
    const double w = pw[j + 1] - pw[i];
    const double s = p1[j + 1] - p1[i];
    const double q = p2[j + 1] - p2[i];
    return std::max(0.0, q - s * s / w);
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // cost[c][j]: best cost of c+1 clusters over points [0, j].
  // split[c][j]: first point of the last cluster.
  std::vector<std::vector<double>> cost(k, std::vector<double>(m, kInf));
  std::vector<std::vector<std::size_t>> split(k,
                                              std::vector<std::size_t>(m, 0));
  for (std::size_t j = 0; j < m; ++j) cost[0][j] = sse(0, j);

  for (int c = 1; c < k; ++c) {
    const std::vector<double>& prev = cost[c - 1];
    std::vector<double>& cur = cost[c];
    std::vector<std::size_t>& arg = split[c];
    // Solve for j in [jlo, jhi] knowing the split lies in [ilo, ihi].
    auto solve = [&](auto&& self, std::ptrdiff_t jlo, std::ptrdiff_t jhi,
                     std::size_t ilo, std::size_t ihi) -> void {
      if (jlo > jhi) return;
      const std::ptrdiff_t jmid = jlo + (jhi - jlo) / 2;
      const std::size_t j = static_cast<std::size_t>(jmid);
      double best = kInf;
      std::size_t best_i = std::max<std::size_t>(ilo, c);
      const std::size_t upper = std::min(ihi, j);
      for (std::size_t i = std::max<std::size_t>(ilo, c); i <= upper; ++i) {
        const double v = prev[i - 1] + sse(i, j);
        if (v < best) {
          best = v;
          best_i = i;
        }
      }
      cur[j] = best;
      arg[j] = best_i;
      self(self, jlo, jmid - 1, ilo, best_i);
      self(self, jmid + 1, jhi, best_i, ihi);
    };
    solve(solve, c, static_cast<std::ptrdiff_t>(m) - 1, c, m - 1);
  }

  // Backtrack cluster starts.
  std::vector<std::size_t> starts(k);
  std::size_t end = m - 1;
  for (int c = k - 1; c >= 1; --c) {
    starts[c] = split[c][end];
    end = starts[c] - 1;
  }
  starts[0] = 0;

  KMeansResult result;
  BinnedColumn& out = result.binned;
  if (k == 1) {
    out.edges = internal::SingleBinEdges(distinct.front(), distinct.back());
  } else {
    out.edges.push_back(distinct.front());
    for (int c = 1; c < k; ++c) {
      out.edges.push_back(0.5 *
                          (distinct[starts[c] - 1] + distinct[starts[c]]));
    }
    out.edges.push_back(distinct.back());
  }
  BSYNTH_ASSIGN_OR_RETURN(out.codes, AssignBins(values, out.edges));

  // Exact cost on the original scale.
  std::size_t pos = 0;
  for (int c = 0; c < k; ++c) {
    const std::size_t stop = c + 1 < k ? starts[c + 1] : m;
    std::size_t count = 0;
    for (std::size_t i = starts[c]; i < stop; ++i) {
      count += static_cast<std::size_t>(weight[i]);
    }
    result.cost +=
        ClusterPairCost(std::span<const double>(sorted).subspan(pos, count));
    pos += count;
  }
  return result;
}

// Natural log of strictly positive values. Rows are reported 1-based.
inline absl::StatusOr<std::vector<double>> LogPretransform(
    std::span<const double> values) {
  std::vector<double> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("log transform needs positive values; row ", i + 1,
                       " has ", values[i]));
    }
    out.push_back(std::log(values[i]));
  }
  return out;
}

}  // namespace bsynth

#endif  // BSYNTH_BINNING_H_
