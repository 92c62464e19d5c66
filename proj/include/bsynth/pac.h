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

#ifndef BSYNTH_PAC_H_
#define BSYNTH_PAC_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "boost/math/distributions/normal.hpp"
#include "bsynth/encode.h"
#include "bsynth/privacy.h"
#include "bsynth/status.h"
#include "bsynth/tree_model.h"

namespace bsynth {

struct PacConfig {
  int k = 3;
  double eta = 0.01;
  int delta_k = 3;
  // Negative: derive from the privacy budget.
  double sigma_k = -1;
};

inline absl::Status ValidatePacConfig(const PacConfig& config) {
  if (config.k < 1 || config.k > 4) {
    return absl::InvalidArgumentError(
        absl::StrCat("reporting length k must lie in [1, 4], got ", config.k));
  }
  if (!(config.eta > 0 && config.eta < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("eta must lie in (0, 1), got ", config.eta));
  }
  if (config.delta_k < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta_k must be >= 1, got ", config.delta_k));
  }
  return absl::OkStatus();
}

inline double StandardNormalQuantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

inline double StandardNormalCdf(double x) {
  return boost::math::cdf(boost::math::normal_distribution<double>(), x);
}

// Suppression threshold for tuples of one length, given the number of
// survivors one level down and the number of candidate tuples.
inline double PacThreshold(const PacConfig& config, double s_prev, double v_k) {
  const double ratio = v_k > 0 ? std::min(1.0, s_prev / v_k) : 1.0;
  return std::sqrt(static_cast<double>(config.delta_k)) * config.sigma_k *
         StandardNormalQuantile(1.0 - config.eta * ratio);
}

// Probability that a tuple absent from the data clears the threshold.
inline double SpuriousInclusionProbability(double rho, double sigma,
                                           int delta_k) {
  const double scale = sigma * std::sqrt(static_cast<double>(delta_k));
  if (scale <= 0) return rho > 0 ? 0.0 : 1.0;
  return 1.0 - StandardNormalCdf(rho / scale);
}

// Tuples of up to four (attribute, value) items, items sorted by attribute
// and packed 16 bits apiece.
using TupleKey = uint64_t;
using TupleItem = std::pair<int, int>;

inline TupleKey PackTuple(std::span<const TupleItem> items) {
  TupleKey key = 0;
  for (const auto& [attr, value] : items) {
    key = (key << 16) | (static_cast<TupleKey>(attr) << 10) |
          static_cast<TupleKey>(value);
  }
  return key;
}

inline std::vector<TupleItem> UnpackTuple(TupleKey key, int length) {
  std::vector<TupleItem> items(length);
  for (int i = length - 1; i >= 0; --i) {
    const auto item = static_cast<int>(key & 0xFFFF);
    items[i] = {item >> 10, item & 0x3FF};
    key >>= 16;
  }
  return items;
}

// Noisy counts of surviving tuples, one map per length.
struct PacAggregates {
  std::vector<std::map<TupleKey, double>> levels;
  std::vector<PacLevelRecord> records;

  bool Survives(std::span<const TupleItem> items) const {
    const std::size_t len = items.size();
    if (len == 0 || len > levels.size()) return false;
    return levels[len - 1].contains(PackTuple(items));
  }
};

namespace internal {

// Calls f(indices) for every increasing index combination of size r from n.
template <typename F>
void ForEachCombination(int n, int r, F&& f) {
  if (r > n || r < 0) return;
  std::vector<int> idx(r);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    f(std::span<const int>(idx));
    int i = r - 1;
    while (i >= 0 && idx[i] == n - r + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < r; ++j) idx[j] = idx[j - 1] + 1;
  }
}

inline bool AllSubtuplesSurvive(std::span<const TupleItem> items,
                                const std::map<TupleKey, double>& prev) {
  std::vector<TupleItem> sub(items.size() - 1);
  for (std::size_t drop = 0; drop < items.size(); ++drop) {
    std::size_t w = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i != drop) sub[w++] = items[i];
    }
    if (!prev.contains(PackTuple(sub))) return false;
  }
  return true;
}

// Candidate tuples of length `len`: every item at length one, otherwise the
// apriori join of survivors one level down.
inline std::vector<TupleKey> CandidateTuples(
    int len, const std::vector<int>& domains,
    const std::map<TupleKey, double>* prev) {
  std::vector<TupleKey> out;
  if (len == 1) {
    for (int a = 0; a < static_cast<int>(domains.size()); ++a) {
      for (int v = 0; v < domains[a]; ++v) {
        const TupleItem item{a, v};
        out.push_back(PackTuple(std::span<const TupleItem>(&item, 1)));
      }
    }
    return out;
  }
  // Group survivors by their first len-2 items.
  std::map<TupleKey, std::vector<TupleItem>> groups;
  for (const auto& [key, value] : *prev) {
    groups[key >> 16].push_back(UnpackTuple(key & 0xFFFF, 1)[0]);
  }
  for (const auto& [prefix_key, lasts] : groups) {
    std::vector<TupleItem> items = UnpackTuple(prefix_key, len - 2);
    items.resize(len);
    for (std::size_t i = 0; i < lasts.size(); ++i) {
      for (std::size_t j = i + 1; j < lasts.size(); ++j) {
        if (lasts[i].first == lasts[j].first) continue;
        items[len - 2] = std::min(lasts[i], lasts[j]);
        items[len - 1] = std::max(lasts[i], lasts[j]);
        if (AllSubtuplesSurvive(items, *prev)) out.push_back(PackTuple(items));
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Draw from N(0, scale^2) conditioned on exceeding rho.
inline double TailDraw(double rho, double scale, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double lo = StandardNormalCdf(rho / scale);
  double p = lo + u(rng) * (1.0 - lo);
  p = std::clamp(p, 1e-300, 1.0 - 1e-16);
  return std::max(rho, scale * StandardNormalQuantile(p));
}

}  // namespace internal

// Noisy, thresholded tuple counts for lengths 1..k. `sigma` is the per-level
// noise multiplier; each record contributes at most delta_k tuples per level.
inline absl::StatusOr<PacAggregates> PacExtract(const EncodedDataset& data,
                                                const PacConfig& config,
                                                Rng& rng) {
  BSYNTH_RETURN_IF_ERROR(ValidatePacConfig(config));
  const int d = static_cast<int>(data.num_columns());
  if (config.k > d) {
    return absl::InvalidArgumentError(absl::StrCat(
        "reporting length ", config.k, " exceeds attribute count ", d));
  }
  if (d > 63) return absl::InvalidArgumentError("at most 63 attributes");
  const std::vector<int> domains = data.domain_sizes();
  for (int s : domains) {
    if (s > 1023) {
      return absl::InvalidArgumentError("domain sizes above 1023 unsupported");
    }
  }
  if (data.HasSuppressed()) {
    return absl::InvalidArgumentError("input contains suppressed cells");
  }
  if (!(config.sigma_k >= 0)) {
    return absl::InvalidArgumentError("sigma_k must be resolved and >= 0");
  }
  const double sigma = config.sigma_k;
  const double scale = sigma * std::sqrt(static_cast<double>(config.delta_k));

  PacAggregates agg;
  double s_prev = 0;
  std::vector<TupleItem> items(d), chosen;
  std::vector<TupleKey> record_candidates;
  for (int len = 1; len <= config.k; ++len) {
    const std::map<TupleKey, double>* prev =
        len == 1 ? nullptr : &agg.levels[len - 2];
    const std::vector<TupleKey> candidates =
        internal::CandidateTuples(len, domains, prev);
    if (len == 1) s_prev = static_cast<double>(candidates.size());

    std::unordered_map<TupleKey, int64_t> counts;
    for (std::size_t r = 0; r < data.num_rows(); ++r) {
      for (int a = 0; a < d; ++a) items[a] = {a, data.code(r, a)};
      record_candidates.clear();
      internal::ForEachCombination(d, len, [&](std::span<const int> idx) {
        chosen.clear();
        for (int i : idx) chosen.push_back(items[i]);
        if (len > 1 && !internal::AllSubtuplesSurvive(chosen, *prev)) return;
        record_candidates.push_back(PackTuple(chosen));
      });
      std::size_t take = record_candidates.size();
      if (take > static_cast<std::size_t>(config.delta_k)) {
        take = config.delta_k;
        for (std::size_t i = 0; i < take; ++i) {
          std::uniform_int_distribution<std::size_t> pick(
              i, record_candidates.size() - 1);
          std::swap(record_candidates[i], record_candidates[pick(rng)]);
        }
      }
      for (std::size_t i = 0; i < take; ++i) ++counts[record_candidates[i]];
    }

    PacConfig level_config = config;
    level_config.sigma_k = sigma;
    const double rho = PacThreshold(level_config, s_prev,
                                    static_cast<double>(candidates.size()));
    PacLevelRecord record;
    record.length = len;
    record.sigma = sigma;
    record.threshold = rho;
    record.candidates = candidates.size();

    std::map<TupleKey, double> survivors;
    std::vector<TupleKey> unobserved;
    std::normal_distribution<double> noise(0.0, scale > 0 ? scale : 1.0);
    for (TupleKey key : candidates) {
      auto it = counts.find(key);
      if (it == counts.end()) {
        unobserved.push_back(key);
        continue;
      }
      const double noisy =
          static_cast<double>(it->second) + (scale > 0 ? noise(rng) : 0.0);
      if (noisy >= rho) {
        survivors[key] = noisy;
        ++record.observed_survivors;
      }
    }
    if (scale > 0 && !unobserved.empty()) {
      const double q = SpuriousInclusionProbability(rho, sigma, config.delta_k);
      std::binomial_distribution<std::size_t> draws(unobserved.size(), q);
      const std::size_t m = draws(rng);
      for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i,
                                                        unobserved.size() - 1);
        std::swap(unobserved[i], unobserved[pick(rng)]);
        survivors[unobserved[i]] = internal::TailDraw(rho, scale, rng);
      }
      record.spurious = m;
    }
    s_prev = static_cast<double>(survivors.size());
    agg.levels.push_back(std::move(survivors));
    agg.records.push_back(record);
  }
  return agg;
}

// Attribute synthesis order: descending surviving one-way mass, ties by
// attribute index.
inline std::vector<int> PacAttributeOrder(const PacAggregates& agg, int d) {
  std::vector<double> mass(d, 0.0);
  for (const auto& [key, value] : agg.levels[0]) {
    mass[UnpackTuple(key, 1)[0].first] += std::max(0.0, value);
  }
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return mass[x] > mass[y]; });
  return order;
}

// Greedy row synthesis from surviving aggregates. An attribute is drawn
// with weight equal to the smallest noisy count among surviving tuples that
// pair the value with already fixed attributes, backing off to shorter
// tuples when no value has support.
inline std::vector<int32_t> PacSampleRows(const PacAggregates& agg,
                                          const std::vector<int>& domains,
                                          std::size_t n, Rng& rng) {
  const int d = static_cast<int>(domains.size());
  const int k = static_cast<int>(agg.levels.size());
  const std::vector<int> order = PacAttributeOrder(agg, d);
  std::vector<int32_t> codes(n * d, EncodedDataset::kSuppressed);
  // Value distribution per fixed prefix; empty means suppressed.
  std::map<std::vector<int32_t>, std::discrete_distribution<int>> memo;
  std::map<std::vector<int32_t>, bool> has_support;
  std::vector<int32_t> prefix;
  std::vector<TupleItem> fixed, tuple;
  std::vector<double> weights;
  for (std::size_t r = 0; r < n; ++r) {
    prefix.clear();
    for (int t = 0; t < d; ++t) {
      const int a = order[t];
      auto support = has_support.find(prefix);
      if (support == has_support.end()) {
        fixed.clear();
        for (int i = 0; i < t; ++i) {
          if (prefix[i] != EncodedDataset::kSuppressed) {
            fixed.emplace_back(order[i], prefix[i]);
          }
        }
        std::sort(fixed.begin(), fixed.end());
        const int top = std::min(k, static_cast<int>(fixed.size()) + 1);
        bool found = false;
        for (int len = top; len >= 1 && !found; --len) {
          const auto& level = agg.levels[len - 1];
          weights.assign(domains[a], 0.0);
          double total = 0;
          for (int v = 0; v < domains[a]; ++v) {
            double w = std::numeric_limits<double>::infinity();
            internal::ForEachCombination(
                static_cast<int>(fixed.size()), len - 1,
                [&](std::span<const int> idx) {
                  if (w == 0) return;
                  tuple.clear();
                  for (int i : idx) tuple.push_back(fixed[i]);
                  tuple.emplace_back(a, v);
                  std::sort(tuple.begin(), tuple.end());
                  auto it = level.find(PackTuple(tuple));
                  w = it == level.end()
                          ? 0.0
                          : std::min(w, std::max(0.0, it->second));
                });
            weights[v] = std::isfinite(w) ? w : 0.0;
            total += weights[v];
          }
          if (total > 0) {
            memo[prefix] =
                std::discrete_distribution<int>(weights.begin(), weights.end());
            found = true;
          }
        }
        support = has_support.emplace(prefix, found).first;
      }
      const int32_t value =
          support->second ? memo[prefix](rng) : EncodedDataset::kSuppressed;
      codes[r * d + a] = value;
      prefix.push_back(value);
    }
  }
  return codes;
}

inline absl::StatusOr<double> PacSigma(const PacConfig& config,
                                       const PrivacyParams& params) {
  BSYNTH_ASSIGN_OR_RETURN(BudgetSplit split, SplitBudget(params, config.k, 0));
  return GaussianSigma(split.per_measurement);
}

inline absl::StatusOr<SynthesisResult> PacSynthesize(
    const EncodedDataset& data, PacConfig config, const PrivacyParams& params,
    std::size_t n_out, Rng& rng) {
  BSYNTH_RETURN_IF_ERROR(ValidatePacConfig(config));
  if (config.sigma_k < 0) {
    BSYNTH_ASSIGN_OR_RETURN(config.sigma_k, PacSigma(config, params));
  }
  BSYNTH_ASSIGN_OR_RETURN(PacAggregates agg, PacExtract(data, config, rng));
  std::vector<int32_t> codes =
      PacSampleRows(agg, data.domain_sizes(), n_out, rng);
  SynthesisLog log;
  log.mechanism = "pac";
  log.pac_levels = agg.records;
  log.suppressed_cells = static_cast<std::size_t>(
      std::count(codes.begin(), codes.end(), EncodedDataset::kSuppressed));
  BSYNTH_ASSIGN_OR_RETURN(EncodedDataset out,
                          WrapCodes(std::move(codes), n_out, data.codebook()));
  return SynthesisResult{std::move(out), std::move(log)};
}

}  // namespace bsynth

#endif  // BSYNTH_PAC_H_
