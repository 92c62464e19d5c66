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

#ifndef BSYNTH_LOWESS_H_
#define BSYNTH_LOWESS_H_

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"

namespace bsynth {

struct LowessOptions {
  double frac = 2.0 / 3.0;
  int iters = 3;
};

namespace internal {

inline double Tricube(double u) {
  u = std::abs(u);
  if (u >= 1) return 0;
  const double v = 1 - u * u * u;
  return v * v * v;
}

inline double Bisquare(double u) {
  u = std::abs(u);
  if (u >= 1) return 0;
  const double v = 1 - u * u;
  return v * v;
}

inline double Median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + mid));
}

}  // namespace internal

// Locally weighted linear regression with tricube neighbourhood weights over
// the ceil(frac * n) nearest points and bisquare robustness passes.
// `x` must be sorted ascending.
inline absl::StatusOr<std::vector<double>> Lowess(
    std::span<const double> x, std::span<const double> y,
    const LowessOptions& options = {}) {
  const std::size_t n = x.size();
  if (y.size() != n) {
    return absl::InvalidArgumentError("x and y differ in length");
  }
  if (n < 3)
    return absl::InvalidArgumentError("LOWESS needs at least 3 points");
  if (!(options.frac > 0 && options.frac <= 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("frac must lie in (0, 1], got ", options.frac));
  }
  if (options.iters < 0) {
    return absl::InvalidArgumentError("iters must be >= 0");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] < x[i - 1]) return absl::InvalidArgumentError("x must be sorted");
  }
  if (x.front() == x.back()) {
    return absl::InvalidArgumentError("all x values are equal");
  }
  const std::size_t r = static_cast<std::size_t>(
      std::ceil(options.frac * static_cast<double>(n)));
  if (r < 2) return absl::InvalidArgumentError("frac * n must be >= 2");

  std::vector<double> fitted(n), robustness(n, 1.0), residual(n);
  for (int pass = 0; pass <= options.iters; ++pass) {
    std::size_t lo = 0;
    for (std::size_t i = 0; i < n; ++i) {
      // Slide the r-point window towards x[i] while that brings it closer.
      while (lo + r < n && x[i] - x[lo] > x[lo + r] - x[i]) ++lo;
      const double h = std::max(x[i] - x[lo], x[lo + r - 1] - x[i]);
      double sw = 0, sx = 0, sy = 0;
      std::vector<double> w(r);
      for (std::size_t k = 0; k < r; ++k) {
        const std::size_t j = lo + k;
        const double base = h > 0 ? internal::Tricube((x[j] - x[i]) / h) : 1.0;
        w[k] = base * robustness[j];
        sw += w[k];
        sx += w[k] * x[j];
        sy += w[k] * y[j];
      }
      if (sw <= 0) {
        fitted[i] = y[i];
        continue;
      }
      const double mx = sx / sw;
      const double my = sy / sw;
      double sxx = 0, sxy = 0;
      for (std::size_t k = 0; k < r; ++k) {
        const std::size_t j = lo + k;
        sxx += w[k] * (x[j] - mx) * (x[j] - mx);
        sxy += w[k] * (x[j] - mx) * (y[j] - my);
      }
      const double range = x[lo + r - 1] - x[lo];
      if (sxx > 1e-12 * range * range * sw) {
        fitted[i] = my + sxy / sxx * (x[i] - mx);
      } else {
        fitted[i] = my;
      }
    }
    if (pass == options.iters) break;
    for (std::size_t i = 0; i < n; ++i)
      residual[i] = std::abs(y[i] - fitted[i]);
    const double s = internal::Median(residual);
    if (s <= 0) break;
    for (std::size_t i = 0; i < n; ++i) {
      robustness[i] = internal::Bisquare(residual[i] / (6 * s));
    }
  }
  return fitted;
}

}  // namespace bsynth

#endif  // BSYNTH_LOWESS_H_
