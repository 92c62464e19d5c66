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

#ifndef BSYNTH_PRIVACY_H_
#define BSYNTH_PRIVACY_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"

namespace bsynth {

// All randomness flows through explicitly passed generators of this type.
using Rng = std::mt19937_64;

// A validated (epsilon, delta) pair: epsilon > 0, 0 < delta < 1.
class PrivacyParams {
 public:
  static absl::StatusOr<PrivacyParams> Create(double epsilon, double delta) {
    if (!(epsilon > 0) || !std::isfinite(epsilon)) {
      return absl::InvalidArgumentError(
          absl::StrCat("epsilon must be positive and finite, got ", epsilon));
    }
    if (!(delta > 0 && delta < 1)) {
      return absl::InvalidArgumentError(
          absl::StrCat("delta must lie in (0, 1), got ", delta));
    }
    return PrivacyParams(epsilon, delta);
  }

  double epsilon() const { return epsilon_; }
  double delta() const { return delta_; }

 private:
  PrivacyParams(double epsilon, double delta)
      : epsilon_(epsilon), delta_(delta) {}
  double epsilon_;
  double delta_;
};

// Unvalidated budget share; a zero share is legal here.
struct PrivacyBudget {
  double epsilon = 0;
  double delta = 0;
};

// Gaussian noise scale for one measurement of unit sensitivity:
//   sigma = (sqrt(ln(1/delta)) + sqrt(ln(1/delta) + epsilon)) / epsilon.
inline double GaussianSigma(const PrivacyParams& params) {
  const double log_term = std::log(1.0 / params.delta());
  return (std::sqrt(log_term) + std::sqrt(log_term + params.epsilon())) /
         params.epsilon();
}

inline absl::StatusOr<double> GaussianSigma(const PrivacyBudget& budget) {
  auto params = PrivacyParams::Create(budget.epsilon, budget.delta);
  if (!params.ok()) return params.status();
  return GaussianSigma(*params);
}

// Adds independent N(0, sigma^2) noise to every cell. sigma == 0 returns the
// counts unchanged and draws nothing from `rng`.
inline std::vector<double> AddGaussianNoise(std::span<const double> counts,
                                            double sigma, Rng& rng) {
  std::vector<double> noisy(counts.begin(), counts.end());
  if (sigma == 0) return noisy;
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& cell : noisy) cell += noise(rng);
  return noisy;
}

struct BudgetSplit {
  PrivacyBudget selection;
  PrivacyBudget per_measurement;
  int measurements = 1;
};

// Basic composition: the selection phase takes fraction f of (epsilon,
// delta); the remainder is divided equally over `measurements`.
inline absl::StatusOr<BudgetSplit> SplitBudget(const PrivacyParams& params,
                                               int measurements,
                                               double selection_fraction) {
  if (measurements < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("measurement count must be >= 1, got ", measurements));
  }
  if (!(selection_fraction >= 0 && selection_fraction < 1)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "selection fraction must lie in [0, 1), got ", selection_fraction));
  }
  BudgetSplit split;
  split.measurements = measurements;
  split.selection = {params.epsilon() * selection_fraction,
                     params.delta() * selection_fraction};
  const double rest = 1.0 - selection_fraction;
  split.per_measurement = {params.epsilon() * rest / measurements,
                           params.delta() * rest / measurements};
  return split;
}

// Standard Gumbel draw, used for report-noisy-max style selection.
inline double GumbelNoise(double scale, Rng& rng) {
  if (scale == 0) return 0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  while (x <= 0) x = u(rng);
  return -scale * std::log(-std::log(x));
}

}  // namespace bsynth

#endif  // BSYNTH_PRIVACY_H_
