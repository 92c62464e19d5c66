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

#ifndef BSYNTH_TESTS_ORACLES_H_
#define BSYNTH_TESTS_ORACLES_H_

// Slow, independent reference computations shared by the unit tests and the
// acceptance binary.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "bsynth/encode.h"
#include "bsynth/spanning_tree.h"
#include "bsynth/usage_index.h"

namespace bsynth::testing {

// Exact reference: plain O(k n^2) DP over sorted values, with the pairwise
// cost (1/|S|) sum_{x,y} (x-y)^2 written as 2 (sum x^2 - (sum x)^2 / |S|).
inline double KMeansOracleCost(std::vector<double> values, int k) {
  std::sort(values.begin(), values.end());
  const int n = static_cast<int>(values.size());
  // Running sums per left end; long double keeps the identity stable.
  std::vector<std::vector<double>> seg(n, std::vector<double>(n, 0));
  for (int i = 0; i < n; ++i) {
    long double s = 0, q = 0;
    for (int j = i; j < n; ++j) {
      s += values[j];
      q += static_cast<long double>(values[j]) * values[j];
      const long double size = j - i + 1;
      seg[i][j] =
          static_cast<double>(std::max<long double>(0, 2 * (q - s * s / size)));
    }
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best(k + 1, std::vector<double>(n + 1, inf));
  best[0][0] = 0;
  for (int c = 1; c <= k; ++c)
    for (int j = 1; j <= n; ++j)
      for (int i = c - 1; i < j; ++i)
        if (best[c - 1][i] < inf)
          best[c][j] = std::min(best[c][j], best[c - 1][i] + seg[i][j - 1]);
  return best[k][n];
}

// Best total over every (d-1)-edge acyclic subset.
inline double ExhaustiveBestTree(int d, const PairWeights& w) {
  std::vector<std::pair<std::pair<int, int>, double>> all(w.begin(), w.end());
  const int m = static_cast<int>(all.size());
  double best = -1e300;
  for (uint32_t mask = 0; mask < (1u << m); ++mask) {
    if (std::popcount(mask) != d - 1) continue;
    DisjointSets sets(d);
    bool acyclic = true;
    double total = 0;
    for (int i = 0; i < m && acyclic; ++i) {
      if (!(mask >> i & 1)) continue;
      acyclic = sets.Union(all[i].first.first, all[i].first.second);
      total += all[i].second;
    }
    if (acyclic) best = std::max(best, total);
  }
  return best;
}

// Leading eigenvector by power iteration on the correlation matrix.
inline std::array<double, 3> PowerIterationPsi(
    const std::vector<UsageIndicators>& in) {
  const std::size_t n = in.size();
  std::vector<std::array<double, 3>> z(n);
  for (std::size_t i = 0; i < n; ++i)
    z[i] = {in[i].alpha, in[i].beta, in[i].gamma};
  for (int j = 0; j < 3; ++j) {
    double mean = 0, ss = 0;
    for (auto& r : z) mean += r[j];
    mean /= n;
    for (auto& r : z) ss += (r[j] - mean) * (r[j] - mean);
    const double sd = std::sqrt(ss / (n - 1));
    for (auto& r : z) r[j] = (r[j] - mean) / sd;
  }
  double c[3][3] = {};
  for (auto& r : z) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) c[a][b] += r[a] * r[b] / (n - 1);
    }
  }
  std::array<double, 3> v = {1, 0.5, 0.25};
  for (int it = 0; it < 5000; ++it) {
    std::array<double, 3> w{};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) w[a] += c[a][b] * v[b];
    }
    const double norm = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
    for (int a = 0; a < 3; ++a) v[a] = w[a] / norm;
  }
  double total = 0;
  for (double& x : v) total += (x = std::abs(x));
  for (double& x : v) x /= total;
  return v;
}

// Records matching `values` on `attrs`, counted row by row.
inline int64_t BruteForceCount(const EncodedDataset& data,
                               const std::vector<int>& attrs,
                               const std::vector<int>& values) {
  int64_t tally = 0;
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    bool match = true;
    for (std::size_t i = 0; i < attrs.size() && match; ++i) {
      match = data.code(r, attrs[i]) == values[i];
    }
    tally += match;
  }
  return tally;
}

}  // namespace bsynth::testing

#endif  // BSYNTH_TESTS_ORACLES_H_
