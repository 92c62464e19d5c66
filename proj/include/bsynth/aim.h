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

#ifndef BSYNTH_AIM_H_
#define BSYNTH_AIM_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "bsynth/encode.h"
#include "bsynth/marginal.h"
#include "bsynth/privacy.h"
#include "bsynth/spanning_tree.h"
#include "bsynth/status.h"
#include "bsynth/tree_model.h"

namespace bsynth {

// One workload marginal with an optional priority weight.
struct WorkloadQuery {
  std::vector<int> attrs;
  double weight = 1.0;
};

struct AimOptions {
  int rounds = 10;
  double selection_fraction = 0.1;
  bool noiseless = false;
};

// Workload queries of one or two attributes are candidates as given; larger
// queries contribute their attribute pairs. Weights of duplicates add up.
inline absl::StatusOr<std::map<std::vector<int>, double>> AimCandidates(
    const std::vector<WorkloadQuery>& workload, int num_attributes) {
  if (workload.empty()) return absl::InvalidArgumentError("workload is empty");
  std::map<std::vector<int>, double> out;
  for (const WorkloadQuery& q : workload) {
    if (q.attrs.empty()) {
      return absl::InvalidArgumentError("workload query has no attributes");
    }
    if (!(q.weight > 0) || !std::isfinite(q.weight)) {
      return absl::InvalidArgumentError(
          absl::StrCat("workload weight must be positive, got ", q.weight));
    }
    BSYNTH_RETURN_IF_ERROR(Annotate(
        ValidateAttributes(q.attrs, static_cast<std::size_t>(num_attributes)),
        "invalid workload attribute"));
    std::vector<int> attrs = q.attrs;
    std::sort(attrs.begin(), attrs.end());
    if (attrs.size() <= 2) {
      out[attrs] += q.weight;
      continue;
    }
    for (std::size_t i = 0; i < attrs.size(); ++i) {
      for (std::size_t j = i + 1; j < attrs.size(); ++j) {
        out[{attrs[i], attrs[j]}] += q.weight;
      }
    }
  }
  return out;
}

namespace internal {

inline absl::StatusOr<TreeModel> FitFromMeasured(
    const std::vector<int>& domains, const MeasurementSet& set) {
  PairWeights weights;
  for (const auto& [e, counts] : set.two_way) {
    const std::vector<double> p = ClipAndNormalize(counts);
    weights[{e.a, e.b}] = MutualInformation(p, domains[e.a], domains[e.b]);
  }
  std::vector<Edge> forest =
      MaximumSpanningForest(static_cast<int>(domains.size()), weights);
  MeasurementSet used;
  used.one_way = set.one_way;
  for (const Edge& e : forest) used.two_way[e] = set.two_way.at(e);
  return FitTreeModel(domains, forest, used);
}

inline absl::StatusOr<std::vector<double>> ModelEstimate(
    const TreeModel& model, const std::vector<std::vector<double>>& nodes,
    const std::vector<int>& attrs) {
  if (attrs.size() == 1) return nodes[attrs[0]];
  return PairMarginal(model, attrs[0], attrs[1], nodes);
}

}  // namespace internal

inline absl::StatusOr<SynthesisResult> AimSynthesize(
    const EncodedDataset& data, const std::vector<WorkloadQuery>& workload,
    const PrivacyParams& params, std::size_t n_out, Rng& rng,
    const AimOptions& options = {}) {
  const int d = static_cast<int>(data.num_columns());
  if (d < 1) return absl::InvalidArgumentError("no attributes to synthesize");
  if (options.rounds < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("rounds must be >= 1, got ", options.rounds));
  }
  if (data.HasSuppressed()) {
    return absl::InvalidArgumentError("input contains suppressed cells");
  }
  BSYNTH_ASSIGN_OR_RETURN(auto candidates, AimCandidates(workload, d));
  if (options.noiseless && data.num_rows() == 0) {
    return absl::InvalidArgumentError("noiseless mode needs a non-empty input");
  }

  double sigma = 0;
  double round_selection_epsilon = 0;
  SynthesisLog log;
  log.mechanism = "aim";
  if (!options.noiseless) {
    if (!(options.selection_fraction > 0)) {
      return absl::InvalidArgumentError(
          "selection_fraction must be positive outside noiseless mode");
    }
    BSYNTH_ASSIGN_OR_RETURN(
        BudgetSplit split,
        SplitBudget(params, options.rounds, options.selection_fraction));
    log.selection_epsilon = split.selection.epsilon;
    round_selection_epsilon = split.selection.epsilon / options.rounds;
    BSYNTH_ASSIGN_OR_RETURN(sigma, GaussianSigma(split.per_measurement));
  }

  double max_weight = 0;
  std::map<std::vector<int>, Marginal> exact;
  for (const auto& [attrs, w] : candidates) {
    max_weight = std::max(max_weight, w);
    BSYNTH_ASSIGN_OR_RETURN(exact[attrs], ComputeMarginal(data, attrs));
  }
  const std::vector<int> domains = data.domain_sizes();
  const double n = static_cast<double>(data.num_rows());
  const double penalty = std::sqrt(2.0 / std::numbers::pi) * sigma;

  MeasurementSet set;
  BSYNTH_ASSIGN_OR_RETURN(TreeModel model, FitTreeModel(domains, {}, set));
  for (int round = 0; round < options.rounds; ++round) {
    const std::vector<std::vector<double>> nodes = NodeMarginals(model);
    const std::vector<int>* best = nullptr;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const auto& [attrs, w] : candidates) {
      const bool measured =
          attrs.size() == 1
              ? set.one_way.contains(attrs[0])
              : set.two_way.contains(Edge::Of(attrs[0], attrs[1]));
      if (measured) continue;
      BSYNTH_ASSIGN_OR_RETURN(std::vector<double> estimate,
                              internal::ModelEstimate(model, nodes, attrs));
      const Marginal& m = exact.at(attrs);
      double gap = 0;
      for (std::size_t i = 0; i < estimate.size(); ++i) {
        gap += std::abs(static_cast<double>(m.counts[i]) - n * estimate[i]);
      }
      double score = w * (gap - penalty * static_cast<double>(m.counts.size()));
      if (!options.noiseless) {
        score += GumbelNoise(2.0 * max_weight / round_selection_epsilon, rng);
      }
      if (score > best_score) {
        best_score = score;
        best = &attrs;
      }
    }
    if (best == nullptr) break;
    const NoisyMarginal noisy = MeasureMarginal(exact.at(*best), sigma, rng);
    if (best->size() == 1) {
      set.one_way[(*best)[0]] = noisy.counts;
    } else {
      set.two_way[Edge::Of((*best)[0], (*best)[1])] = noisy.counts;
    }
    log.measurements.push_back({*best, sigma});
    BSYNTH_ASSIGN_OR_RETURN(model, internal::FitFromMeasured(domains, set));
  }
  log.edges = model.edges;
  std::vector<int32_t> codes = SampleTreeModel(model, n_out, rng);
  BSYNTH_ASSIGN_OR_RETURN(EncodedDataset out,
                          WrapCodes(std::move(codes), n_out, data.codebook()));
  return SynthesisResult{std::move(out), std::move(log)};
}

}  // namespace bsynth

#endif  // BSYNTH_AIM_H_
