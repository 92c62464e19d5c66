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

#ifndef BSYNTH_MST_H_
#define BSYNTH_MST_H_

#include <cmath>
#include <cstdint>
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

struct MstOptions {
  double selection_fraction = 1.0 / 3.0;
  // Diagnostic mode: no selection noise and sigma = 0.
  bool noiseless = false;
};

// Sensitivity bound used for the n * MI selection score.
inline double MutualInformationSensitivity(std::size_t n) {
  return 2.0 * std::log(static_cast<double>(n) + 1.0) + 2.0;
}

struct MstFit {
  TreeModel model;
  SynthesisLog log;
};

inline absl::StatusOr<MstFit> MstFitModel(const EncodedDataset& data,
                                          const PrivacyParams& params, Rng& rng,
                                          const MstOptions& options = {}) {
  const int d = static_cast<int>(data.num_columns());
  if (d < 1) return absl::InvalidArgumentError("no attributes to synthesize");
  if (options.noiseless && data.num_rows() == 0) {
    return absl::InvalidArgumentError("noiseless mode needs a non-empty input");
  }
  if (data.HasSuppressed()) {
    return absl::InvalidArgumentError("input contains suppressed cells");
  }
  const int measurements = d;
  double selection_epsilon = 0;
  double sigma = 0;
  if (!options.noiseless) {
    if (d > 1 && !(options.selection_fraction > 0)) {
      return absl::InvalidArgumentError(
          "selection_fraction must be positive outside noiseless mode");
    }
    BSYNTH_ASSIGN_OR_RETURN(
        BudgetSplit split,
        SplitBudget(params, measurements,
                    d > 1 ? options.selection_fraction : 0.0));
    selection_epsilon = split.selection.epsilon;
    BSYNTH_ASSIGN_OR_RETURN(sigma, GaussianSigma(split.per_measurement));
  }

  SynthesisLog log;
  log.mechanism = "mst";
  log.selection_epsilon = selection_epsilon;
  const int root = 0;
  std::vector<Edge> edges;
  if (d > 1) {
    const double n = static_cast<double>(data.num_rows());
    const double scale =
        options.noiseless
            ? 0.0
            : 2.0 * MutualInformationSensitivity(data.num_rows()) * (d - 1) /
                  selection_epsilon;
    PairWeights weights;
    for (int a = 0; a < d; ++a) {
      for (int b = a + 1; b < d; ++b) {
        BSYNTH_ASSIGN_OR_RETURN(double mi, MutualInformation(data, a, b));
        weights[{a, b}] = n * mi + GumbelNoise(scale, rng);
      }
    }
    BSYNTH_ASSIGN_OR_RETURN(edges, MaximumSpanningTree(d, weights));
  }

  MeasurementSet set;
  BSYNTH_ASSIGN_OR_RETURN(Marginal root_exact, ComputeMarginal(data, {root}));
  set.one_way[root] = MeasureMarginal(root_exact, sigma, rng).counts;
  log.measurements.push_back({{root}, sigma});
  for (const Edge& e : edges) {
    BSYNTH_ASSIGN_OR_RETURN(Marginal exact, ComputeMarginal(data, {e.a, e.b}));
    set.two_way[e] = MeasureMarginal(exact, sigma, rng).counts;
    log.measurements.push_back({{e.a, e.b}, sigma});
  }
  BSYNTH_ASSIGN_OR_RETURN(TreeModel model,
                          FitTreeModel(data.domain_sizes(), edges, set));
  log.edges = edges;
  return MstFit{std::move(model), std::move(log)};
}

inline absl::StatusOr<SynthesisResult> MstSynthesize(
    const EncodedDataset& data, const PrivacyParams& params, std::size_t n_out,
    Rng& rng, const MstOptions& options = {}) {
  BSYNTH_ASSIGN_OR_RETURN(MstFit fit, MstFitModel(data, params, rng, options));
  std::vector<int32_t> codes = SampleTreeModel(fit.model, n_out, rng);
  BSYNTH_ASSIGN_OR_RETURN(EncodedDataset out,
                          WrapCodes(std::move(codes), n_out, data.codebook()));
  return SynthesisResult{std::move(out), std::move(fit.log)};
}

}  // namespace bsynth

#endif  // BSYNTH_MST_H_
