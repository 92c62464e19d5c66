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

#ifndef BSYNTH_SPANNING_TREE_H_
#define BSYNTH_SPANNING_TREE_H_

#include <algorithm>
#include <map>
#include <numeric>
#include <tuple>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"

namespace bsynth {

// Undirected attribute pair, stored with a < b.
struct Edge {
  int a = 0;
  int b = 0;

  static Edge Of(int x, int y) { return x < y ? Edge{x, y} : Edge{y, x}; }
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

using PairWeights = std::map<std::pair<int, int>, double>;

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int Find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  bool Union(int x, int y) {
    x = Find(x);
    y = Find(y);
    if (x == y) return false;
    parent_[std::max(x, y)] = std::min(x, y);
    return true;
  }

 private:
  std::vector<int> parent_;
};

// Kruskal on descending weight; equal weights resolve by lexicographic edge
// order. Returns a maximum-weight spanning forest over whatever pairs are
// present.
inline std::vector<Edge> MaximumSpanningForest(int num_nodes,
                                               const PairWeights& weights) {
  std::vector<std::tuple<double, Edge>> candidates;
  for (const auto& [pair, w] : weights) {
    if (pair.first == pair.second) continue;
    candidates.emplace_back(w, Edge::Of(pair.first, pair.second));
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& x, const auto& y) {
                     if (std::get<0>(x) != std::get<0>(y)) {
                       return std::get<0>(x) > std::get<0>(y);
                     }
                     return std::get<1>(x) < std::get<1>(y);
                   });
  DisjointSets sets(num_nodes);
  std::vector<Edge> tree;
  for (const auto& [w, e] : candidates) {
    if (sets.Union(e.a, e.b)) tree.push_back(e);
  }
  std::sort(tree.begin(), tree.end());
  return tree;
}

inline absl::StatusOr<std::vector<Edge>> MaximumSpanningTree(
    int num_nodes, const PairWeights& weights) {
  if (num_nodes < 2) {
    return absl::InvalidArgumentError(
        "a spanning tree needs at least two attributes");
  }
  for (const auto& [pair, w] : weights) {
    if (pair.first < 0 || pair.second < 0 || pair.first >= num_nodes ||
        pair.second >= num_nodes) {
      return absl::OutOfRangeError(
          absl::StrCat("weight for pair (", pair.first, ", ", pair.second,
                       ") outside the ", num_nodes, " attributes"));
    }
  }
  std::vector<Edge> tree = MaximumSpanningForest(num_nodes, weights);
  if (static_cast<int>(tree.size()) != num_nodes - 1) {
    return absl::InvalidArgumentError(
        "weight map is disconnected; no spanning tree exists");
  }
  return tree;
}

}  // namespace bsynth

#endif  // BSYNTH_SPANNING_TREE_H_
