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

#ifndef BSYNTH_TREE_MODEL_H_
#define BSYNTH_TREE_MODEL_H_

#include <algorithm>
#include <cstdint>
#include <map>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "bsynth/encode.h"
#include "bsynth/marginal.h"
#include "bsynth/privacy.h"
#include "bsynth/spanning_tree.h"

namespace bsynth {

// Noisy measurements a forest model is fitted from. Pair tables are indexed
// [a][b] with a < b, matching Edge.
struct MeasurementSet {
  std::map<int, std::vector<double>> one_way;
  std::map<Edge, std::vector<double>> two_way;
};

// Directed forest over attributes: each component has a root distribution
// and every other node a conditional given its parent.
struct TreeModel {
  std::vector<int> domain_sizes;
  std::vector<Edge> edges;
  std::vector<int> roots;
  std::vector<int> parent;
  std::vector<int> order;
  // Indexed by node; only roots carry an entry.
  std::vector<std::vector<double>> root_distribution;
  // Indexed by child; row-major [parent value][child value].
  std::vector<std::vector<double>> conditional;

  int num_attributes() const { return static_cast<int>(domain_sizes.size()); }
};

namespace internal {

// Clipped pair table oriented as [from][to].
inline std::vector<double> OrientedTable(const std::vector<double>& table,
                                         int from, int to, int from_size,
                                         int to_size) {
  std::vector<double> out(static_cast<std::size_t>(from_size) * to_size);
  for (int i = 0; i < from_size; ++i) {
    for (int j = 0; j < to_size; ++j) {
      const double v = from < to
                           ? table[static_cast<std::size_t>(i) * to_size + j]
                           : table[static_cast<std::size_t>(j) * from_size + i];
      out[static_cast<std::size_t>(i) * to_size + j] = std::max(0.0, v);
    }
  }
  return out;
}

}  // namespace internal

inline absl::StatusOr<TreeModel> FitTreeModel(
    const std::vector<int>& domain_sizes, const std::vector<Edge>& edges,
    const MeasurementSet& measurements) {
  const int d = static_cast<int>(domain_sizes.size());
  for (int s : domain_sizes) {
    if (s < 1) return absl::InvalidArgumentError("domain sizes must be >= 1");
  }
  std::vector<std::vector<int>> adjacent(d);
  DisjointSets sets(d);
  for (const Edge& e : edges) {
    if (e.a < 0 || e.b >= d || e.a >= e.b) {
      return absl::InvalidArgumentError(
          absl::StrCat("malformed edge (", e.a, ", ", e.b, ")"));
    }
    if (!sets.Union(e.a, e.b)) {
      return absl::InvalidArgumentError("edge set contains a cycle");
    }
    if (!measurements.two_way.contains(e)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "edge (", e.a, ", ", e.b, ") has no two-way measurement"));
    }
    if (measurements.two_way.at(e).size() !=
        static_cast<std::size_t>(domain_sizes[e.a]) * domain_sizes[e.b]) {
      return absl::InvalidArgumentError(absl::StrCat(
          "measurement for (", e.a, ", ", e.b, ") has the wrong size"));
    }
    adjacent[e.a].push_back(e.b);
    adjacent[e.b].push_back(e.a);
  }
  for (const auto& [node, counts] : measurements.one_way) {
    if (node < 0 || node >= d ||
        counts.size() != static_cast<std::size_t>(domain_sizes[node])) {
      return absl::InvalidArgumentError(
          absl::StrCat("bad one-way measurement for attribute ", node));
    }
  }

  TreeModel model;
  model.domain_sizes = domain_sizes;
  model.edges = edges;
  std::sort(model.edges.begin(), model.edges.end());
  model.parent.assign(d, -1);
  model.root_distribution.assign(d, {});
  model.conditional.assign(d, {});

  // Root choice: smallest measured-one-way node in the component, otherwise
  // the smallest node.
  std::map<int, int> component_root;
  for (int v = 0; v < d; ++v) {
    const int c = sets.Find(v);
    auto it = component_root.find(c);
    const bool measured = measurements.one_way.contains(v);
    if (it == component_root.end()) {
      component_root[c] = v;
    } else if (measured && !measurements.one_way.contains(it->second)) {
      it->second = v;
    }
  }
  for (int v = 0; v < d; ++v) {
    if (component_root[sets.Find(v)] == v) model.roots.push_back(v);
  }

  for (int root : model.roots) {
    const int size = domain_sizes[root];
    if (measurements.one_way.contains(root)) {
      model.root_distribution[root] =
          ClipAndNormalize(measurements.one_way.at(root));
    } else if (!adjacent[root].empty()) {
      const int other =
          *std::min_element(adjacent[root].begin(), adjacent[root].end());
      const std::vector<double> t = internal::OrientedTable(
          measurements.two_way.at(Edge::Of(root, other)), root, other, size,
          domain_sizes[other]);
      std::vector<double> sums(size, 0.0);
      for (int i = 0; i < size; ++i) {
        for (int j = 0; j < domain_sizes[other]; ++j) {
          sums[i] += t[static_cast<std::size_t>(i) * domain_sizes[other] + j];
        }
      }
      model.root_distribution[root] = ClipAndNormalize(sums);
    } else {
      model.root_distribution[root].assign(size, 1.0 / size);
    }

    std::queue<int> frontier;
    frontier.push(root);
    while (!frontier.empty()) {
      const int p = frontier.front();
      frontier.pop();
      model.order.push_back(p);
      std::vector<int> children = adjacent[p];
      std::sort(children.begin(), children.end());
      for (int c : children) {
        if (c == model.parent[p] || c == root) continue;
        model.parent[c] = p;
        const int ps = domain_sizes[p];
        const int cs = domain_sizes[c];
        std::vector<double> t = internal::OrientedTable(
            measurements.two_way.at(Edge::Of(p, c)), p, c, ps, cs);
        std::vector<double> column(cs, 0.0);
        for (int i = 0; i < ps; ++i) {
          for (int j = 0; j < cs; ++j) {
            column[j] += t[static_cast<std::size_t>(i) * cs + j];
          }
        }
        const std::vector<double> fallback = ClipAndNormalize(column);
        for (int i = 0; i < ps; ++i) {
          std::span<double> row(t.data() + static_cast<std::size_t>(i) * cs,
                                cs);
          double total = 0;
          for (double v : row) total += v;
          if (total <= 0) {
            std::copy(fallback.begin(), fallback.end(), row.begin());
          } else {
            for (double& v : row) v /= total;
          }
        }
        model.conditional[c] = std::move(t);
        frontier.push(c);
      }
    }
  }
  return model;
}

// Exact one-way marginals of every node.
inline std::vector<std::vector<double>> NodeMarginals(const TreeModel& model) {
  const int d = model.num_attributes();
  std::vector<std::vector<double>> out(d);
  for (int v : model.order) {
    if (model.parent[v] < 0) {
      out[v] = model.root_distribution[v];
      continue;
    }
    const int p = model.parent[v];
    const int ps = model.domain_sizes[p];
    const int cs = model.domain_sizes[v];
    out[v].assign(cs, 0.0);
    for (int i = 0; i < ps; ++i) {
      for (int j = 0; j < cs; ++j) {
        out[v][j] += out[p][i] *
                     model.conditional[v][static_cast<std::size_t>(i) * cs + j];
      }
    }
  }
  return out;
}

// Exact joint distribution of attributes a < b, row-major [a][b].
inline absl::StatusOr<std::vector<double>> PairMarginal(
    const TreeModel& model, int a, int b,
    const std::vector<std::vector<double>>& node_marginals) {
  const int d = model.num_attributes();
  if (a == b || a < 0 || b < 0 || a >= d || b >= d) {
    return absl::InvalidArgumentError(
        absl::StrCat("invalid attribute pair (", a, ", ", b, ")"));
  }
  if (a > b) std::swap(a, b);
  const int sa = model.domain_sizes[a];
  const int sb = model.domain_sizes[b];

  // Ancestor chains locate the path through the lowest common ancestor.
  auto chain = [&](int v) {
    std::vector<int> out{v};
    while (model.parent[out.back()] >= 0)
      out.push_back(model.parent[out.back()]);
    return out;
  };
  const std::vector<int> up_a = chain(a);
  const std::vector<int> up_b = chain(b);
  std::vector<double> joint(static_cast<std::size_t>(sa) * sb, 0.0);
  if (up_a.back() != up_b.back()) {
    for (int i = 0; i < sa; ++i) {
      for (int j = 0; j < sb; ++j) {
        joint[static_cast<std::size_t>(i) * sb + j] =
            node_marginals[a][i] * node_marginals[b][j];
      }
    }
    return joint;
  }
  int lca = -1;
  std::size_t ia = 0, ib = 0;
  for (ia = 0; ia < up_a.size() && lca < 0; ++ia) {
    for (ib = 0; ib < up_b.size(); ++ib) {
      if (up_a[ia] == up_b[ib]) {
        lca = up_a[ia];
        break;
      }
    }
  }
  --ia;
  std::vector<int> path(up_a.begin(), up_a.begin() + ia + 1);
  for (std::size_t k = ib; k-- > 0;) path.push_back(up_b[k]);

  // Rows: values of a. Columns: values of the current path node.
  int current = a;
  std::vector<double> m(static_cast<std::size_t>(sa) * sa, 0.0);
  for (int i = 0; i < sa; ++i)
    m[static_cast<std::size_t>(i) * sa + i] = node_marginals[a][i];
  int cols = sa;
  for (std::size_t k = 1; k < path.size(); ++k) {
    const int next = path[k];
    const int ns = model.domain_sizes[next];
    // Transition P(next | current).
    std::vector<double> step(static_cast<std::size_t>(cols) * ns, 0.0);
    if (model.parent[next] == current) {
      step = model.conditional[next];
    } else {
      const std::vector<double>& cond = model.conditional[current];
      for (int x = 0; x < cols; ++x) {
        const double px = node_marginals[current][x];
        for (int y = 0; y < ns; ++y) {
          const double v = node_marginals[next][y] *
                           cond[static_cast<std::size_t>(y) * cols + x];
          step[static_cast<std::size_t>(x) * ns + y] = px > 0 ? v / px : 0;
        }
      }
    }
    std::vector<double> product(static_cast<std::size_t>(sa) * ns, 0.0);
    for (int i = 0; i < sa; ++i) {
      for (int x = 0; x < cols; ++x) {
        const double w = m[static_cast<std::size_t>(i) * cols + x];
        if (w == 0) continue;
        for (int y = 0; y < ns; ++y) {
          product[static_cast<std::size_t>(i) * ns + y] +=
              w * step[static_cast<std::size_t>(x) * ns + y];
        }
      }
    }
    m = std::move(product);
    cols = ns;
    current = next;
  }
  return m;
}

// Ancestral sampling in topological order; returns row-major codes.
inline std::vector<int32_t> SampleTreeModel(const TreeModel& model,
                                            std::size_t n, Rng& rng) {
  const int d = model.num_attributes();
  std::vector<int32_t> codes(n * d, 0);
  if (n == 0 || d == 0) return codes;
  std::vector<std::discrete_distribution<int>> roots(d);
  std::vector<std::vector<std::discrete_distribution<int>>> rows(d);
  for (int v = 0; v < d; ++v) {
    if (model.parent[v] < 0) {
      const auto& p = model.root_distribution[v];
      roots[v] = std::discrete_distribution<int>(p.begin(), p.end());
    } else {
      const int ps = model.domain_sizes[model.parent[v]];
      const int cs = model.domain_sizes[v];
      for (int i = 0; i < ps; ++i) {
        auto begin =
            model.conditional[v].begin() + static_cast<std::ptrdiff_t>(i) * cs;
        rows[v].emplace_back(begin, begin + cs);
      }
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    int32_t* row = codes.data() + r * d;
    for (int v : model.order) {
      const int p = model.parent[v];
      row[v] = p < 0 ? roots[v](rng) : rows[v][row[p]](rng);
    }
  }
  return codes;
}

// What a mechanism measured, for run manifests.
struct MeasurementRecord {
  std::vector<int> attrs;
  double sigma = 0;
};

struct PacLevelRecord {
  int length = 0;
  double sigma = 0;
  double threshold = 0;
  std::size_t candidates = 0;
  std::size_t observed_survivors = 0;
  std::size_t spurious = 0;
};

struct SynthesisLog {
  std::string mechanism;
  std::vector<Edge> edges;
  std::vector<MeasurementRecord> measurements;
  std::vector<PacLevelRecord> pac_levels;
  double selection_epsilon = 0;
  std::size_t suppressed_cells = 0;
};

struct SynthesisResult {
  EncodedDataset data;
  SynthesisLog log;
};

inline absl::StatusOr<EncodedDataset> WrapCodes(std::vector<int32_t> codes,
                                                std::size_t n,
                                                const Codebook& codebook) {
  return EncodedDataset::Create(std::move(codes), n, codebook);
}

}  // namespace bsynth

#endif  // BSYNTH_TREE_MODEL_H_
