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

#ifndef BSYNTH_NSS_H_
#define BSYNTH_NSS_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"

namespace bsynth {

// Svensson parameters; maturities and decay times in days.
struct NssParams {
  double beta0 = 0;
  double beta1 = 0;
  double beta2 = 0;
  double beta3 = 0;
  double tau1 = 1;
  double tau2 = 1;
};

namespace internal {

// (1 - e^-x) / x with its x -> 0 limit.
inline double NssSlope(double x) {
  if (x < 1e-8) return 1.0 - 0.5 * x;
  return -std::expm1(-x) / x;
}

inline double NssHump(double x) {
  if (std::isinf(x)) return 0;
  return NssSlope(x) - std::exp(-x);
}

}  // namespace internal

inline double NssEval(const NssParams& p, double t) {
  if (std::isinf(t)) return p.beta0;
  const double x1 = t / p.tau1;
  const double x2 = t / p.tau2;
  return p.beta0 + p.beta1 * internal::NssSlope(x1) +
         p.beta2 * internal::NssHump(x1) + p.beta3 * internal::NssHump(x2);
}

struct NssPoint {
  double term = 0;
  double rate = 0;
  double weight = 1;
};

struct NssFit {
  NssParams params;
  double objective = 0;  // weighted mean squared residual
  double rmse = 0;       // unweighted
  bool svensson_term = true;
  std::vector<std::string> warnings;
};

inline std::vector<double> DefaultNssGrid() {
  std::vector<double> grid;
  for (int i = 0; i < 8; ++i) grid.push_back(15.0 * (1 << i));
  grid.push_back(3600);
  return grid;
}

namespace internal {

struct ProfiledFit {
  NssParams params;
  double objective = std::numeric_limits<double>::infinity();
  bool rank_deficient = false;
};

// Betas by weighted least squares for fixed decay times. With `svensson`
// false the fourth basis column is left out.
inline ProfiledFit ProfileBetas(const std::vector<NssPoint>& points,
                                double tau1, double tau2, bool svensson) {
  const int n = static_cast<int>(points.size());
  const int cols = svensson ? 4 : 3;
  Eigen::MatrixXd a(n, cols);
  Eigen::VectorXd b(n);
  double wsum = 0;
  for (int i = 0; i < n; ++i) {
    const double sw = std::sqrt(points[i].weight);
    const double x1 = points[i].term / tau1;
    a(i, 0) = sw;
    a(i, 1) = sw * NssSlope(x1);
    a(i, 2) = sw * NssHump(x1);
    if (svensson) a(i, 3) = sw * NssHump(points[i].term / tau2);
    b(i) = sw * points[i].rate;
    wsum += points[i].weight;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  ProfiledFit fit;
  if (qr.rank() < cols) {
    fit.rank_deficient = true;
    return fit;
  }
  const Eigen::VectorXd beta = qr.solve(b);
  fit.params = {beta(0), beta(1),
                beta(2), svensson ? beta(3) : 0.0,
                tau1,    svensson ? tau2 : tau1};
  fit.objective = (a * beta - b).squaredNorm() / wsum;
  return fit;
}

// Nelder-Mead over log decay times with profiled betas.
template <typename F>
std::vector<double> NelderMead(F&& f, std::vector<double> start, double step,
                               int max_iter) {
  const std::size_t d = start.size();
  std::vector<std::vector<double>> s(d + 1, start);
  for (std::size_t i = 0; i < d; ++i) s[i + 1][i] += step;
  std::vector<double> fs(d + 1);
  for (std::size_t i = 0; i <= d; ++i) fs[i] = f(s[i]);
  for (int it = 0; it < max_iter; ++it) {
    std::vector<std::size_t> order(d + 1);
    for (std::size_t i = 0; i <= d; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    std::vector<std::vector<double>> s2;
    std::vector<double> f2;
    for (std::size_t i : order) {
      s2.push_back(s[i]);
      f2.push_back(fs[i]);
    }
    s = std::move(s2);
    fs = std::move(f2);
    double spread = 0;
    for (std::size_t i = 1; i <= d; ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        spread = std::max(spread, std::abs(s[i][k] - s[0][k]));
      }
    }
    if (spread < 1e-10) break;
    std::vector<double> centroid(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t k = 0; k < d; ++k) centroid[k] += s[i][k] / d;
    }
    auto along = [&](double coef) {
      std::vector<double> p(d);
      for (std::size_t k = 0; k < d; ++k) {
        p[k] = centroid[k] + coef * (s[d][k] - centroid[k]);
      }
      return p;
    };
    const std::vector<double> reflected = along(-1.0);
    const double fr = f(reflected);
    if (fr < fs[0]) {
      const std::vector<double> expanded = along(-2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        s[d] = expanded;
        fs[d] = fe;
      } else {
        s[d] = reflected;
        fs[d] = fr;
      }
    } else if (fr < fs[d - 1]) {
      s[d] = reflected;
      fs[d] = fr;
    } else {
      const std::vector<double> contracted =
          fr < fs[d] ? along(-0.5) : along(0.5);
      const double fc = f(contracted);
      if (fc < std::min(fr, fs[d])) {
        s[d] = contracted;
        fs[d] = fc;
      } else {
        for (std::size_t i = 1; i <= d; ++i) {
          for (std::size_t k = 0; k < d; ++k) {
            s[i][k] = s[0][k] + 0.5 * (s[i][k] - s[0][k]);
          }
          fs[i] = f(s[i]);
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i <= d; ++i) {
    if (fs[i] < fs[best]) best = i;
  }
  return s[best];
}

inline double UnweightedRmse(const std::vector<NssPoint>& points,
                             const NssParams& p) {
  double ss = 0;
  for (const auto& pt : points) {
    const double r = NssEval(p, pt.term) - pt.rate;
    ss += r * r;
  }
  return std::sqrt(ss / static_cast<double>(points.size()));
}

}  // namespace internal

// Profile search over a decay-time grid, local refinement from the best
// cells, and a nested Nelson-Siegel fit kept whenever it does better.
inline absl::StatusOr<NssFit> FitNss(std::vector<NssPoint> points,
                                     std::vector<double> grid = {}) {
  if (grid.empty()) grid = DefaultNssGrid();
  if (points.size() < 6) {
    return absl::InvalidArgumentError(
        absl::StrCat("NSS fit needs at least 6 points, got ", points.size()));
  }
  std::set<double> terms;
  double wsum = 0;
  for (const auto& p : points) {
    if (!(p.term > 0) || !std::isfinite(p.rate) || !(p.weight > 0)) {
      return absl::InvalidArgumentError(
          "NSS points need positive terms and weights and finite rates");
    }
    terms.insert(p.term);
    wsum += p.weight;
  }
  if (terms.size() < 3) {
    return absl::InvalidArgumentError(
        "NSS fit needs at least 3 distinct terms");
  }
  for (double g : grid) {
    if (!(g > 0)) return absl::InvalidArgumentError("grid values must be > 0");
  }
  // Weights relative to their mean keep the normal equations well scaled.
  const double mean_w = wsum / static_cast<double>(points.size());
  for (auto& p : points) p.weight /= mean_w;

  NssFit result;
  std::vector<internal::ProfiledFit> cells;
  bool any_rank_deficient = false;
  for (double t1 : grid) {
    for (double t2 : grid) {
      if (t1 == t2) continue;
      auto fit = internal::ProfileBetas(points, t1, t2, true);
      if (fit.rank_deficient) {
        any_rank_deficient = true;
        continue;
      }
      cells.push_back(fit);
    }
  }
  std::vector<internal::ProfiledFit> ns_cells;
  for (double t1 : grid) {
    auto fit = internal::ProfileBetas(points, t1, t1, false);
    if (!fit.rank_deficient) ns_cells.push_back(fit);
  }
  if (ns_cells.empty() && cells.empty()) {
    return absl::InvalidArgumentError("every grid cell is rank deficient");
  }
  auto by_objective = [](const auto& a, const auto& b) {
    return a.objective < b.objective;
  };
  std::stable_sort(cells.begin(), cells.end(), by_objective);
  std::stable_sort(ns_cells.begin(), ns_cells.end(), by_objective);

  internal::ProfiledFit best_nss;
  const std::size_t starts = std::min<std::size_t>(3, cells.size());
  for (std::size_t s = 0; s < starts; ++s) {
    auto objective = [&](const std::vector<double>& v) {
      const double t1 = std::exp(v[0]), t2 = std::exp(v[1]);
      if (t1 < 1e-3 || t2 < 1e-3 || t1 > 1e6 || t2 > 1e6) {
        return std::numeric_limits<double>::infinity();
      }
      return internal::ProfileBetas(points, t1, t2, true).objective;
    };
    const auto v = internal::NelderMead(
        objective,
        {std::log(cells[s].params.tau1), std::log(cells[s].params.tau2)}, 0.3,
        2000);
    auto refined =
        internal::ProfileBetas(points, std::exp(v[0]), std::exp(v[1]), true);
    const auto& pick =
        refined.objective < cells[s].objective ? refined : cells[s];
    if (pick.objective < best_nss.objective) best_nss = pick;
  }

  internal::ProfiledFit best_ns;
  if (!ns_cells.empty()) {
    auto objective = [&](const std::vector<double>& v) {
      const double t1 = std::exp(v[0]);
      if (t1 < 1e-3 || t1 > 1e6) return std::numeric_limits<double>::infinity();
      return internal::ProfileBetas(points, t1, t1, false).objective;
    };
    const auto v = internal::NelderMead(
        objective, {std::log(ns_cells[0].params.tau1)}, 0.3, 2000);
    auto refined =
        internal::ProfileBetas(points, std::exp(v[0]), std::exp(v[0]), false);
    best_ns = refined.objective < ns_cells[0].objective ? refined : ns_cells[0];
  }

  if (any_rank_deficient) {
    result.warnings.push_back(
        "collinear basis on part of the grid; fourth term dropped there");
  }
  if (best_ns.objective <= best_nss.objective) {
    result.params = best_ns.params;
    result.objective = best_ns.objective;
    result.svensson_term = false;
  } else {
    result.params = best_nss.params;
    result.objective = best_nss.objective;
  }
  result.rmse = internal::UnweightedRmse(points, result.params);
  return result;
}

}  // namespace bsynth

#endif  // BSYNTH_NSS_H_
