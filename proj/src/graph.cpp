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

#include "s3gnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>

#include "s3gnn/rng.hpp"

namespace s3gnn {

Graph Graph::from_edge_list(int n, std::span<const Edge> pairs) {
  if (n < 0) throw InvalidArgument("from_edge_list: negative node count");
  std::vector<Edge> arcs;
  arcs.reserve(pairs.size() * 2);
  for (const auto& [u, v] : pairs) {
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw InvalidArgument("from_edge_list: pair (" + std::to_string(u) + "," + std::to_string(v) +
                            ") out of range for n=" + std::to_string(n));
    }
    if (u == v) {
      throw InvalidArgument("from_edge_list: self-loop (" + std::to_string(u) + "," +
                            std::to_string(v) + ")");
    }
    arcs.emplace_back(u, v);
    arcs.emplace_back(v, u);
  }
  std::sort(arcs.begin(), arcs.end());
  arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());

  Graph g;
  g.n_ = n;
  g.row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
  g.col_idx_.reserve(arcs.size());
  for (const auto& [u, v] : arcs) {
    ++g.row_ptr_[u + 1];
    g.col_idx_.push_back(v);
  }
  for (int i = 0; i < n; ++i) g.row_ptr_[i + 1] += g.row_ptr_[i];
  return g;
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(col_idx_.size() / 2);
  for (int u = 0; u < n_; ++u)
    for (int v : neighbors(u))
      if (u < v) out.emplace_back(u, v);
  return out;
}

namespace {

Graph barbell(const BarbellParams& p) {
  if (p.clique < 2 || p.path < 0) {
    throw InvalidArgument("barbell: need clique >= 2 and path >= 0");
  }
  const int m = p.clique;
  const int n = 2 * m + p.path;
  std::vector<Edge> e;
  auto clique = [&](int base) {
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) e.emplace_back(base + i, base + j);
  };
  clique(0);
  clique(m + p.path);
  // chain: attachment A, bridge nodes, attachment B
  for (int u = m - 1; u < m + p.path; ++u) e.emplace_back(u, u + 1);
  return Graph::from_edge_list(n, e);
}

Graph path_graph(int n) {
  if (n < 1) throw InvalidArgument("path: need n >= 1");
  std::vector<Edge> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return Graph::from_edge_list(n, e);
}

Graph cycle_graph(int n) {
  if (n < 3) throw InvalidArgument("cycle: need n >= 3");
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return Graph::from_edge_list(n, e);
}

Graph erdos_renyi(const ErdosRenyiParams& p, Rng& rng) {
  if (p.n < 1) throw InvalidArgument("erdos_renyi: need n >= 1");
  if (!(p.prob >= 0.0 && p.prob <= 1.0)) {
    throw InvalidArgument("erdos_renyi: prob must lie in [0, 1]");
  }
  std::vector<Edge> e;
  for (int i = 0; i < p.n; ++i)
    for (int j = i + 1; j < p.n; ++j)
      if (rng.uniform() < p.prob) e.emplace_back(i, j);
  return Graph::from_edge_list(p.n, e);
}

// Preferential attachment seeded with a star on attach+1 nodes.
Graph barabasi_albert(const BarabasiAlbertParams& p, Rng& rng) {
  if (p.attach < 1 || p.attach >= p.n) {
    throw InvalidArgument("barabasi_albert: need 1 <= attach < n");
  }
  std::vector<Edge> e;
  std::vector<int> repeated;
  for (int i = 1; i <= p.attach; ++i) {
    e.emplace_back(0, i);
    repeated.push_back(0);
    repeated.push_back(i);
  }
  for (int v = p.attach + 1; v < p.n; ++v) {
    std::vector<int> targets;
    while (static_cast<int>(targets.size()) < p.attach) {
      const int t = repeated[rng.below(repeated.size())];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    for (int t : targets) {
      e.emplace_back(v, t);
      repeated.push_back(t);
      repeated.push_back(v);
    }
  }
  return Graph::from_edge_list(p.n, e);
}

Graph caterpillar(const CaterpillarParams& p, Rng& rng) {
  if (p.spine < 1 || p.legs < 0) {
    throw InvalidArgument("caterpillar: need spine >= 1 and legs >= 0");
  }
  std::vector<Edge> e;
  for (int i = 0; i + 1 < p.spine; ++i) e.emplace_back(i, i + 1);
  for (int leaf = 0; leaf < p.legs; ++leaf) {
    e.emplace_back(static_cast<int>(rng.below(p.spine)), p.spine + leaf);
  }
  return Graph::from_edge_list(p.spine + p.legs, e);
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

Graph generate(const GraphSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return std::visit(Overloaded{
                        [](const BarbellParams& p) { return barbell(p); },
                        [](const PathParams& p) { return path_graph(p.n); },
                        [](const CycleParams& p) { return cycle_graph(p.n); },
                        [&](const ErdosRenyiParams& p) { return erdos_renyi(p, rng); },
                        [&](const BarabasiAlbertParams& p) { return barabasi_albert(p, rng); },
                        [&](const CaterpillarParams& p) { return caterpillar(p, rng); },
                    },
                    spec);
}

std::string family_name(const GraphSpec& spec) {
  static constexpr const char* kNames[] = {"barbell",         "path",       "cycle", "erdos_renyi",
                                           "barabasi_albert", "caterpillar"};
  return kNames[spec.index()];
}

ComponentStructure connected_components(const Graph& g) {
  const int n = g.num_nodes();
  ComponentStructure comps;
  comps.component_of.assign(static_cast<std::size_t>(n), -1);
  std::vector<int> stack;
  for (int start = 0; start < n; ++start) {
    if (comps.component_of[start] >= 0) continue;
    const int label = comps.count();
    comps.sizes.push_back(0);
    comps.edge_counts.push_back(0);
    comps.component_of[start] = label;
    stack.push_back(start);
    int arcs = 0;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      ++comps.sizes[label];
      arcs += g.degree(u);
      for (int v : g.neighbors(u)) {
        if (comps.component_of[v] < 0) {
          comps.component_of[v] = label;
          stack.push_back(v);
        }
      }
    }
    comps.edge_counts[label] = arcs / 2;
  }
  return comps;
}

SparseMatrix adjacency(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(g.col_idx().size());
  for (int u = 0; u < n; ++u)
    for (int v : g.neighbors(u)) t.emplace_back(u, v, 1.0);
  SparseMatrix a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

SparseMatrix normalized_adjacency(const Graph& g, bool self_loops) {
  const int n = g.num_nodes();
  const double loop = self_loops ? 1.0 : 0.0;
  std::vector<double> inv_sqrt(static_cast<std::size_t>(n));
  for (int u = 0; u < n; ++u) {
    const double d = g.degree(u) + loop;
    inv_sqrt[u] = d > 0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(g.col_idx().size() + (self_loops ? n : 0));
  for (int u = 0; u < n; ++u) {
    if (self_loops) t.emplace_back(u, u, inv_sqrt[u] * inv_sqrt[u]);
    for (int v : g.neighbors(u)) t.emplace_back(u, v, inv_sqrt[u] * inv_sqrt[v]);
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

GraphOperators operators(const Graph& g, bool normalized, bool self_loops) {
  const int n = g.num_nodes();
  GraphOperators ops;
  ops.degrees.resize(n);
  for (int u = 0; u < n; ++u) ops.degrees(u) = g.degree(u);
  ops.norm_adj = normalized_adjacency(g, self_loops);
  SparseMatrix identity(n, n);
  identity.setIdentity();
  if (normalized) {
    ops.kind = LaplacianKind::normalized;
    ops.laplacian = identity - ops.norm_adj;
  } else {
    ops.kind = LaplacianKind::unnormalized;
    SparseMatrix deg(n, n);
    std::vector<Eigen::Triplet<double>> t;
    for (int u = 0; u < n; ++u) t.emplace_back(u, u, ops.degrees(u));
    deg.setFromTriplets(t.begin(), t.end());
    ops.laplacian = deg - adjacency(g);
  }
  return ops;
}

Vector expand_coefficients(const Vector& coefficients, int component_count) {
  if (coefficients.size() == component_count) return coefficients;
  if (coefficients.size() == 1) return Vector::Constant(component_count, coefficients(0));
  throw DimensionError("mixing coefficients: got " + std::to_string(coefficients.size()) +
                       " values for " + std::to_string(component_count) + " components");
}

Matrix component_sums(const ComponentStructure& comps, const Matrix& h) {
  if (h.rows() != comps.num_nodes()) {
    throw DimensionError("component_sums: features have " + std::to_string(h.rows()) +
                         " rows, graph has " + std::to_string(comps.num_nodes()) + " nodes");
  }
  Matrix sums = Matrix::Zero(comps.count(), h.cols());
  for (Eigen::Index i = 0; i < h.rows(); ++i) sums.row(comps.component_of[i]) += h.row(i);
  return sums;
}

Matrix global_mix_apply(const ComponentStructure& comps, const Vector& alphas, const Matrix& h) {
  if (alphas.size() != comps.count()) {
    throw DimensionError("global_mix_apply: " + std::to_string(alphas.size()) +
                         " coefficients for " + std::to_string(comps.count()) + " components");
  }
  Matrix means = component_sums(comps, h);
  for (int r = 0; r < comps.count(); ++r) means.row(r) *= alphas(r) / comps.sizes[r];
  Matrix out(h.rows(), h.cols());
  for (Eigen::Index i = 0; i < h.rows(); ++i) out.row(i) = means.row(comps.component_of[i]);
  return out;
}

Matrix projector_dense_oracle(const Graph& g, const Vector& alphas, double zero_tol) {
  const int n = g.num_nodes();
  if (n > kDenseEigCap) {
    throw CapExceeded("projector_dense_oracle: n=" + std::to_string(n) +
                      " exceeds the dense eigensolve cap");
  }
  const Matrix lap = Matrix(operators(g, false).laplacian);
  const auto eig = sym_eig(lap);
  Matrix null_projector = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    if (std::abs(eig.values(k)) < zero_tol) {
      null_projector += eig.vectors.col(k) * eig.vectors.col(k).transpose();
    }
  }
  // The null-space projector is block diagonal over components, so scaling
  // rows by the owning component's coefficient yields sum_r alpha_r v_r v_r^T.
  const auto comps = connected_components(g);
  const Vector per_component = expand_coefficients(alphas, comps.count());
  Vector row_scale(n);
  for (int i = 0; i < n; ++i) row_scale(i) = per_component(comps.component_of[i]);
  return row_scale.asDiagonal() * null_projector;
}

std::vector<int> bfs_distances(const Graph& g, int source) {
  if (source < 0 || source >= g.num_nodes()) {
    throw InvalidArgument("bfs_distances: source " + std::to_string(source) + " out of range");
  }
  std::vector<int> dist(static_cast<std::size_t>(g.num_nodes()), kUnreachable);
  std::queue<int> frontier;
  dist[source] = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : g.neighbors(u)) {
      if (dist[v] == kUnreachable) {
        dist[v] = dist[u] + 1;
        frontier.push(v);
      }
    }
  }
  return dist;
}

std::vector<int> eccentricities(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<int> ecc(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    const auto dist = bfs_distances(g, i);
    const int far = *std::max_element(dist.begin(), dist.end());
    if (far == kUnreachable) {
      throw InvalidArgument("eccentricity/diameter: graph is disconnected");
    }
    ecc[i] = far;
  }
  return ecc;
}

int diameter(const Graph& g) {
  if (g.num_nodes() == 0) throw InvalidArgument("diameter: empty graph");
  const auto ecc = eccentricities(g);
  return *std::max_element(ecc.begin(), ecc.end());
}

std::vector<int> graph_property(const Graph& g, GraphProperty which, int source) {
  switch (which) {
    case GraphProperty::diameter:
      return {diameter(g)};
    case GraphProperty::eccentricity:
      return eccentricities(g);
    case GraphProperty::sssp:
      return bfs_distances(g, source);
  }
  throw InvalidArgument("graph_property: unknown property");
}

Graph read_edge_list(std::istream& in) {
  long long n = 0, m = 0;
  if (!(in >> n >> m) || n < 0 || m < 0) {
    throw InvalidArgument("edge list: malformed header, expected \"N M\"");
  }
  std::vector<Edge> pairs;
  pairs.reserve(static_cast<std::size_t>(m));
  for (long long k = 0; k < m; ++k) {
    int u = 0, v = 0;
    if (!(in >> u >> v)) {
      throw InvalidArgument("edge list: expected " + std::to_string(m) + " edges, read " +
                            std::to_string(k));
    }
    pairs.emplace_back(u, v);
  }
  return Graph::from_edge_list(static_cast<int>(n), pairs);
}

Graph read_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("edge list: cannot open " + path);
  return read_edge_list(in);
}

void write_edge_list(std::ostream& out, const Graph& g) {
  const auto e = g.edges();
  out << g.num_nodes() << ' ' << e.size() << '\n';
  for (const auto& [u, v] : e) out << u << ' ' << v << '\n';
}

void write_edge_list(const std::string& path, const Graph& g) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("edge list: cannot write " + path);
  write_edge_list(out, g);
}

}  // namespace s3gnn
