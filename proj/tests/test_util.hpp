// Copyright 2026 The S3GNN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Shared fixtures for the unit tests.

#ifndef S3GNN_TESTS_TEST_UTIL_HPP_
#define S3GNN_TESTS_TEST_UTIL_HPP_

#include <vector>

#include "s3gnn/graph.hpp"
#include "s3gnn/rng.hpp"
#include "s3gnn/tensor.hpp"

namespace s3gnn::testing {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(-scale, scale);
  return m;
}

inline Graph random_graph(int n, double prob, Rng& rng) {
  return generate(ErdosRenyiParams{n, prob}, rng.next_u64());
}

/// Every graph on up to 4 nodes plus random graphs up to 12 nodes, many of
/// them disconnected.
inline std::vector<Graph> graph_corpus(std::uint64_t seed, int random_count) {
  std::vector<Graph> out;
  for (int n = 1; n <= 4; ++n) {
    std::vector<Edge> all;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v) all.emplace_back(u, v);
    for (unsigned mask = 0; mask < (1u << all.size()); ++mask) {
      std::vector<Edge> pick;
      for (std::size_t e = 0; e < all.size(); ++e)
        if (mask & (1u << e)) pick.push_back(all[e]);
      out.push_back(Graph::from_edge_list(n, pick));
    }
  }
  Rng rng(seed);
  for (int k = 0; k < random_count; ++k) {
    const int n = rng.range(2, 12);
    out.push_back(random_graph(n, rng.uniform(0.05, 0.6), rng));
  }
  return out;
}

}  // namespace s3gnn::testing

#endif  // S3GNN_TESTS_TEST_UTIL_HPP_
