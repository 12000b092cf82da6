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

#ifndef S3GNN_GRAPH_HPP_
#define S3GNN_GRAPH_HPP_

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "s3gnn/tensor.hpp"

namespace s3gnn {

using Edge = std::pair<int, int>;

/// Immutable, unweighted, undirected graph in CSR form. Neighbor lists are
/// sorted and free of self-loops and duplicates.
class Graph {
 public:
  Graph() = default;

  /// Symmetrizes and deduplicates `pairs`. Throws on out-of-range endpoints
  /// and self-loops.
  static Graph from_edge_list(int n, std::span<const Edge> pairs);

  int num_nodes() const { return n_; }
  /// Undirected edge count.
  int num_edges() const { return static_cast<int>(col_idx_.size() / 2); }
  int degree(int u) const { return row_ptr_[u + 1] - row_ptr_[u]; }
  std::span<const int> neighbors(int u) const {
    return {col_idx_.data() + row_ptr_[u], static_cast<std::size_t>(degree(u))};
  }
  std::span<const int> row_ptr() const { return row_ptr_; }
  std::span<const int> col_idx() const { return col_idx_; }

  /// Each undirected edge once, as (u, v) with u < v, in lexicographic order.
  std::vector<Edge> edges() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  int n_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_idx_;
};

// Synthetic families. Parameters are validated by generate().
struct BarbellParams {
  int clique = 3;  // nodes per clique
  int path = 1;    // bridge nodes between the two attachment nodes
};
struct PathParams {
  int n = 2;
};
struct CycleParams {
  int n = 3;
};
struct ErdosRenyiParams {
  int n = 10;
  double prob = 0.1;
};
struct BarabasiAlbertParams {
  int n = 10;
  int attach = 1;
};
struct CaterpillarParams {
  int spine = 5;
  int legs = 5;  // leaves, each hung on a uniformly chosen spine node
};

using GraphSpec = std::variant<BarbellParams, PathParams, CycleParams, ErdosRenyiParams,
                               BarabasiAlbertParams, CaterpillarParams>;

/// Deterministic in (spec, seed). Barbell nodes are laid out as
/// [clique A | bridge path | clique B]; node clique-1 and node clique+path are
/// the attachment nodes.
Graph generate(const GraphSpec& spec, std::uint64_t seed = 0);

std::string family_name(const GraphSpec& spec);

struct ComponentStructure {
  std::vector<int> component_of;  // node -> component index
  std::vector<int> sizes;         // n_r
  std::vector<int> edge_counts;   // undirected edges inside each component

  int count() const { return static_cast<int>(sizes.size()); }
  int num_nodes() const { return static_cast<int>(component_of.size()); }
};

/// Components are numbered in order of their smallest node id.
ComponentStructure connected_components(const Graph& g);

enum class LaplacianKind { unnormalized, normalized };

struct GraphOperators {
  Vector degrees;
  SparseMatrix norm_adj;   // D^{-1/2} A D^{-1/2}; zero rows for isolated nodes
  SparseMatrix laplacian;  // D - A or I - norm_adj, per `kind`
  LaplacianKind kind = LaplacianKind::unnormalized;
};

/// With `self_loops`, A + I is normalized instead of A (GCN renormalization).
GraphOperators operators(const Graph& g, bool normalized, bool self_loops = false);

SparseMatrix adjacency(const Graph& g);
SparseMatrix normalized_adjacency(const Graph& g, bool self_loops = false);

/// Broadcasts per-component coefficients; a single coefficient is tied across
/// all components.
Vector expand_coefficients(const Vector& coefficients, int component_count);

/// P h with P = sum_r alpha_r v_r v_r^T, computed as a scaled mean per
/// component in O(n d).
Matrix global_mix_apply(const ComponentStructure& comps, const Vector& alphas, const Matrix& h);

/// Per-component column sums of h (k x d). Shared by the mixing backward pass.
Matrix component_sums(const ComponentStructure& comps, const Matrix& h);

/// Dense P built from the zero eigenvectors of the unnormalized Laplacian.
/// Eigenvalues with |lambda| < zero_tol count as zero.
Matrix projector_dense_oracle(const Graph& g, const Vector& alphas, double zero_tol = 1e-8);

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

std::vector<int> bfs_distances(const Graph& g, int source);

enum class GraphProperty { diameter, eccentricity, sssp };

/// Per-node eccentricities; throws on disconnected input.
std::vector<int> eccentricities(const Graph& g);
int diameter(const Graph& g);
/// graph_property(g, diameter) yields a single value; the other two yield
/// one value per node.
std::vector<int> graph_property(const Graph& g, GraphProperty which, int source = 0);

// Edge-list text format: "N M" header, then M lines "u v".
Graph read_edge_list(std::istream& in);
Graph read_edge_list(const std::string& path);
void write_edge_list(std::ostream& out, const Graph& g);
void write_edge_list(const std::string& path, const Graph& g);

}  // namespace s3gnn

#endif  // S3GNN_GRAPH_HPP_
