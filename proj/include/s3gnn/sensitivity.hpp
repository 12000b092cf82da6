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

// Jacobian energies, pairwise influence and the lower bounds they are
// compared against.
//
// Conventions: vec() stacks columns, so vec(S H W) = kron(W^T, S) vec(H) and
// entry (a, b) of the influence block J_is is dH_{i,a}(l) / dH_{s,b}(0).
// Influence is always measured on the propagation layers, heads bypassed.

#ifndef S3GNN_SENSITIVITY_HPP_
#define S3GNN_SENSITIVITY_HPP_

#include <optional>
#include <string>
#include <vector>

#include "s3gnn/model.hpp"

namespace s3gnn {

enum class InfluenceNorm { frobenius, spectral, l1 };

std::string to_string(InfluenceNorm norm);
InfluenceNorm parse_influence_norm(const std::string& name);
double matrix_norm(const Matrix& m, InfluenceNorm norm);

/// A_tot of a linear layer, dense (Nd x Nd).
Matrix layer_operator_dense(const ModelStack& stack, const PropagationContext& ctx, int layer,
                            Eigen::Index cap = kDefaultKronCap);
/// Explicit vec-Jacobian of one layer: [I +] step * A_tot.
Matrix layer_jacobian_dense(const ModelStack& stack, const PropagationContext& ctx, int layer,
                            Eigen::Index cap = kDefaultKronCap);

struct JacobianRecord {
  int layer = 0;
  double lambda_max = 0;              // largest eigenvalue of A_tot^T A_tot
  double energy_closed_form = 0;      // sqrt(1 + step^2 lambda_max); NaN where not exact
  double energy_power_iteration = 0;  // ||J||_2 from the layer map itself
  bool power_converged = true;
  std::optional<double> identity_residual;
};

JacobianRecord jacobian_energy(const ModelStack& stack, const PropagationContext& ctx, int layer);

/// One record per layer; the identity residual is filled in where it applies.
std::vector<JacobianRecord> jacobian_report(const ModelStack& stack, const PropagationContext& ctx);

struct EnergyIdentityCheck {
  double residual = 0;  // ||J^T J - I - step^2 A_tot^T A_tot||_F
  bool passed = false;
};

/// Throws NotApplicable unless the layer is residual with antisymmetric
/// weights and no dissipation.
EnergyIdentityCheck verify_energy_identity(const ModelStack& stack, const PropagationContext& ctx,
                                           int layer, double tol = 1e-10);
bool energy_identity_applicable(const ModelConfig& config);

/// d x d block dh_i(ell)/dx_s.
Matrix influence_block(const ModelStack& stack, const PropagationContext& ctx, int i, int s,
                       int ell);
double influence(const ModelStack& stack, const PropagationContext& ctx, int i, int s, int ell,
                 InfluenceNorm norm = InfluenceNorm::frobenius);

/// Product over the first ell layers of eps * alpha_r / n_r * sigma_min(W).
/// Zero when any alpha is non-positive.
double mixing_bound(const ModelStack& stack, const ComponentStructure& comps, int component,
                    int ell);

/// C^ell / (2 |E_r|).
double edge_bound(double c_theta, int ell, int edges_in_component);
/// Influence of the connected diag-filter dynamic: C^ell / n * ||I_d||.
double diag_closed_form(double c_theta, int ell, int n, int d,
                        InfluenceNorm norm = InfluenceNorm::frobenius);

/// Entry (i, s) of the product P(ell-1) ... P(0) of the dense mixing operators.
double mixing_chain_entry(const ModelStack& stack, const PropagationContext& ctx, int i, int s,
                          int ell);

struct InfluenceRecord {
  int i = 0;
  int s = 0;
  int distance = kUnreachable;
  double measured = 0;
  double bound_mixing = 0;  // NaN when not applicable
  double bound_edges = 0;   // NaN when not applicable
};

struct BoundSummary {
  int pairs = 0;  // pairs where the bound applies
  int above = 0;  // measured >= bound (relative slack 1e-12)
  int below = 0;
  double fraction_above() const { return pairs ? static_cast<double>(above) / pairs : 0.0; }
};

struct InfluenceReport {
  DynamicsKind kind = DynamicsKind::s3gnn;
  InfluenceNorm norm = InfluenceNorm::frobenius;
  int layer = 0;
  std::vector<InfluenceRecord> records;  // sorted by (i, s)
  BoundSummary mixing;
  BoundSummary edges;
  BoundSummary closed_form;  // diag filter only
};

inline constexpr int kInfluenceNodeCap = 512;

InfluenceReport influence_distribution(const ModelStack& stack, const Graph& g,
                                       const PropagationContext& ctx, int ell,
                                       InfluenceNorm norm = InfluenceNorm::frobenius,
                                       int node_cap = kInfluenceNodeCap);

struct HistogramBin {
  double lo = 0;  // log10 bounds
  double hi = 0;
  int count = 0;
};
/// log10 histogram of the strictly positive measured values.
std::vector<HistogramBin> influence_histogram(const InfluenceReport& report, int bins = 30);

/// Mean alpha (over components) of every layer.
std::vector<double> alpha_by_layer(const ModelStack& stack);

}  // namespace s3gnn

#endif  // S3GNN_SENSITIVITY_HPP_
