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

#ifndef BSYNTH_MARGINAL_H_
#define BSYNTH_MARGINAL_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "bsynth/encode.h"
#include "bsynth/privacy.h"

namespace bsynth {

// Row-major flattening: the last attribute varies fastest.
inline std::size_t FlatIndex(std::span<const int> shape,
                             std::span<const int> values) {
  std::size_t index = 0;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    index = index * shape[i] + values[i];
  }
  return index;
}

inline std::size_t TableSize(std::span<const int> shape) {
  std::size_t size = 1;
  for (int s : shape) size *= static_cast<std::size_t>(s);
  return size;
}

// Exact contingency table over a sorted attribute tuple.
struct Marginal {
  std::vector<int> attrs;
  std::vector<int> shape;
  std::vector<int64_t> counts;

  int64_t total() const {
    return std::accumulate(counts.begin(), counts.end(), int64_t{0});
  }
  std::vector<double> AsDouble() const {
    return std::vector<double>(counts.begin(), counts.end());
  }
};

struct NoisyMarginal {
  std::vector<int> attrs;
  std::vector<int> shape;
  std::vector<double> counts;
  double sigma = 0;
};

inline absl::Status ValidateAttributes(std::span<const int> attrs,
                                       std::size_t num_columns) {
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (attrs[i] < 0 || static_cast<std::size_t>(attrs[i]) >= num_columns) {
      return absl::OutOfRangeError(absl::StrCat(
          "attribute ", attrs[i], " outside [0, ", num_columns, ")"));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (attrs[i] == attrs[j]) {
        return absl::InvalidArgumentError(
            absl::StrCat("duplicate attribute ", attrs[i]));
      }
    }
  }
  return absl::OkStatus();
}

// Counts records per cell. Rows with a suppressed code in any of the
// attributes are skipped.
inline absl::StatusOr<Marginal> ComputeMarginal(const EncodedDataset& data,
                                                std::vector<int> attrs) {
  BSYNTH_RETURN_IF_ERROR(ValidateAttributes(attrs, data.num_columns()));
  std::sort(attrs.begin(), attrs.end());
  Marginal m;
  const std::vector<int> domains = data.domain_sizes();
  for (int a : attrs) m.shape.push_back(domains[a]);
  m.attrs = std::move(attrs);
  m.counts.assign(TableSize(m.shape), 0);
  std::vector<int> values(m.attrs.size());
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    bool skip = false;
    for (std::size_t i = 0; i < m.attrs.size(); ++i) {
      values[i] = data.code(r, m.attrs[i]);
      if (values[i] == EncodedDataset::kSuppressed) skip = true;
    }
    if (!skip) ++m.counts[FlatIndex(m.shape, values)];
  }
  return m;
}

inline NoisyMarginal MeasureMarginal(const Marginal& exact, double sigma,
                                     Rng& rng) {
  NoisyMarginal noisy;
  noisy.attrs = exact.attrs;
  noisy.shape = exact.shape;
  noisy.sigma = sigma;
  noisy.counts = AddGaussianNoise(exact.AsDouble(), sigma, rng);
  return noisy;
}

// Plug-in mutual information (nats) of a rows x cols table of non-negative
// weights; 0 log 0 = 0.
inline double MutualInformation(std::span<const double> table, int rows,
                                int cols) {
  double total = 0;
  std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double v = table[static_cast<std::size_t>(i) * cols + j];
      row_sum[i] += v;
      col_sum[j] += v;
      total += v;
    }
  }
  if (total <= 0) return 0;
  double mi = 0;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double v = table[static_cast<std::size_t>(i) * cols + j];
      if (v <= 0) continue;
      mi += (v / total) * std::log(v * total / (row_sum[i] * col_sum[j]));
    }
  }
  return std::max(0.0, mi);
}

inline absl::StatusOr<double> MutualInformation(const EncodedDataset& data,
                                                int a, int b) {
  if (a == b) {
    return absl::InvalidArgumentError(
        "mutual information needs two distinct attributes");
  }
  BSYNTH_ASSIGN_OR_RETURN(Marginal m, ComputeMarginal(data, {a, b}));
  return MutualInformation(m.AsDouble(), m.shape[0], m.shape[1]);
}

// Clips negatives to zero and normalizes; an all-zero input becomes uniform.
inline std::vector<double> ClipAndNormalize(std::span<const double> counts) {
  std::vector<double> p(counts.size());
  double total = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    p[i] = std::max(0.0, counts[i]);
    total += p[i];
  }
  if (total <= 0) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
    return p;
  }
  for (double& v : p) v /= total;
  return p;
}

// Total-variation distance between two tables after normalization.
inline double TotalVariation(std::span<const double> a,
                             std::span<const double> b) {
  const std::vector<double> p = ClipAndNormalize(a);
  const std::vector<double> q = ClipAndNormalize(b);
  double tv = 0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

}  // namespace bsynth

#endif  // BSYNTH_MARGINAL_H_
