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

#include "s3gnn/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "s3gnn/rng.hpp"

namespace s3gnn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPowerTol = 1e-14;
constexpr int kPowerMaxIter = 100000;

// Fixed pseudo-random start. The all-ones vector can sit exactly inside an
// invariant subspace of these structured operators and miss the top
// eigenvalue.
Vector start_vector(Eigen::Index dim) {
  Rng rng(0x6a09e667f3bcc908ULL);
  Vector v(dim);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

void check_layer(const ModelStack& stack, int layer) {
  if (layer < 0 || layer >= stack.config.layers) {
    throw InvalidArgument("layer index " + std::to_string(layer) + " out of range [0, " +
                          std::to_string(stack.config.layers) + ")");
  }
}

// A_tot v without materializing the Kronecker product.
Vector apply_a_tot(const LinearLayer& lin, const Vector& v, Eigen::Index n, Eigen::Index d) {
  const Matrix h = unvec(v, n, d);
  Matrix out = Matrix::Zero(n, d);
  for (const auto& t : lin.terms) out.noalias() += t.node_op * h * t.weight;
  return vec(out);
}

Vector apply_a_tot_transpose(const LinearLayer& lin, const Vector& v, Eigen::Index n,
                             Eigen::Index d) {
  const Matrix h = unvec(v, n, d);
  Matrix out = Matrix::Zero(n, d);
  for (const auto& t : lin.terms) out.noalias() += t.node_op.transpose() * h * t.weight.transpose();
  return vec(out);
}

double largest_eigenvalue(const Matrix& sym) {
  if (sym.rows() <= kDenseEigCap) return sym_eig(sym).values.maxCoeff();
  auto apply = [&](const Vector& in, Vector& out) { out.noalias() = sym * in; };
  return power_iteration<double>(apply, start_vector(sym.rows()), kPowerTol, kPowerMaxIter).value;
}

// lambda_max(A_tot^T A_tot) through the factor structure where possible.
double a_tot_lambda_max(const LinearLayer& lin, Eigen::Index n, Eigen::Index d) {
  if (lin.terms.empty()) return 0.0;
  if (lin.terms.size() == 1) {
    // (W^T (x) S)^T (W^T (x) S) = (W W^T) (x) (S^T S)
    const auto& t = lin.terms.front();
    const Matrix wwt = t.weight * t.weight.transpose();
    const Matrix sts = t.node_op.transpose() * t.node_op;
    return std::max(0.0, largest_eigenvalue(wwt)) * std::max(0.0, largest_eigenvalue(sts));
  }
  if (n * d <= kDenseEigCap) {
    Matrix a = Matrix::Zero(n * d, n * d);
    for (const auto& t : lin.terms) a += kron(Matrix(t.weight.transpose()), t.node_op);
    return std::max(0.0, sym_eig(Matrix(a.transpose() * a)).values.maxCoeff());
  }
  auto apply = [&](const Vector& in, Vector& out) {
    out = apply_a_tot_transpose(lin, apply_a_tot(lin, in, n, d), n, d);
  };
  return std::max(
      0.0, power_iteration<double>(apply, start_vector(n * d), kPowerTol, kPowerMaxIter).value);
}

double dense_spectral_norm_of_block(const Matrix& m) {
  const Matrix gram = m.transpose() * m;
  return std::sqrt(std::max(0.0, sym_eig(gram).values.maxCoeff()));
}

}  // namespace

std::string to_string(InfluenceNorm norm) {
  switch (norm) {
    case InfluenceNorm::frobenius:
      return "frobenius";
    case InfluenceNorm::spectral:
      return "spectral";
    case InfluenceNorm::l1:
      return "l1";
  }
  return "unknown";
}

InfluenceNorm parse_influence_norm(const std::string& name) {
  if (name == "frobenius" || name == "fro") return InfluenceNorm::frobenius;
  if (name == "spectral" || name == "2") return InfluenceNorm::spectral;
  if (name == "l1" || name == "entrywise-l1") return InfluenceNorm::l1;
  throw InvalidArgument("unknown influence norm '" + name + "'");
}

double matrix_norm(const Matrix& m, InfluenceNorm norm) {
  switch (norm) {
    case InfluenceNorm::frobenius:
      return m.norm();
    case InfluenceNorm::spectral:
      return m.size() ? dense_spectral_norm_of_block(m) : 0.0;
    case InfluenceNorm::l1:
      return m.cwiseAbs().sum();
  }
  return 0.0;
}

Matrix layer_operator_dense(const ModelStack& stack, const PropagationContext& ctx, int layer,
                            Eigen::Index cap) {
  check_layer(stack, layer);
  const Eigen::Index nd = static_cast<Eigen::Index>(ctx.n) * stack.config.width;
  if (nd > cap) {
    throw CapExceeded("layer Jacobian would be " + shape_string(nd, nd) + " (cap " +
                      std::to_string(cap) +
                      "); use jacobian_energy, which works on the implicit operator");
  }
  const LinearLayer lin = linear_layer(stack, ctx, layer);
  Matrix a = Matrix::Zero(nd, nd);
  for (const auto& t : lin.terms) a += kron(Matrix(t.weight.transpose()), t.node_op, cap);
  return a;
}

Matrix layer_jacobian_dense(const ModelStack& stack, const PropagationContext& ctx, int layer,
                            Eigen::Index cap) {
  const Matrix a = layer_operator_dense(stack, ctx, layer, cap);
  const LinearLayer lin = linear_layer(stack, ctx, layer);
  Matrix j = lin.step * a;
  if (lin.identity) j.diagonal().array() += 1.0;
  return j;
}

bool energy_identity_applicable(const ModelConfig& c) {
  const bool residual_kind =
      (c.kind == DynamicsKind::s3gnn && c.residual) || c.kind == DynamicsKind::stable_chebnet;
  return residual_kind && c.mode == WeightMode::antisymmetric && c.gamma == 0.0;
}

JacobianRecord jacobian_energy(const ModelStack& stack, const PropagationContext& ctx, int layer) {
  check_layer(stack, layer);
  const Eigen::Index n = ctx.n;
  const Eigen::Index d = stack.config.width;
  const LinearLayer lin = linear_layer(stack, ctx, layer);

  JacobianRecord rec;
  rec.layer = layer;
  rec.lambda_max = a_tot_lambda_max(lin, n, d);
  const double scaled = lin.step * lin.step * rec.lambda_max;
  // sqrt(1 + step^2 lambda_max) is ||J|| only when the cross term
  // step (A + A^T) vanishes; without the identity it is always exact.
  if (!lin.identity) {
    rec.energy_closed_form = std::sqrt(scaled);
  } else if (energy_identity_applicable(stack.config)) {
    rec.energy_closed_form = std::sqrt(1.0 + scaled);
  } else {
    rec.energy_closed_form = kNaN;
  }

  // Independent route: power iteration on J^T J through the layer map itself
  // (sparse A_hat and mean aggregation), shifted by I for residual layers so
  // the iteration resolves the O(step^2) part instead of the identity.
  const ModelStack transposed = transposed_stack(stack);
  auto apply_j = [&](const ModelStack& s, const Vector& v) {
    return vec(apply_layer(s, ctx, layer, unvec(v, n, d)));
  };
  auto run = [&](double shift) {
    auto op = [&](const Vector& in, Vector& out) {
      out = apply_j(transposed, apply_j(stack, in));
      if (shift != 0.0) out -= shift * in;
    };
    return power_iteration<double>(op, start_vector(n * d), kPowerTol, kPowerMaxIter);
  };
  double shift = lin.identity ? 1.0 : 0.0;
  auto result = run(shift);
  if (shift != 0.0 && result.value < 0.0) {
    // The dominant eigenvalue of J^T J - I is negative; fall back to J^T J.
    shift = 0.0;
    result = run(shift);
  }
  rec.power_converged = result.converged;
  rec.energy_power_iteration = std::sqrt(std::max(0.0, result.value + shift));
  return rec;
}

std::vector<JacobianRecord> jacobian_report(const ModelStack& stack,
                                            const PropagationContext& ctx) {
  std::vector<JacobianRecord> out;
  const Eigen::Index nd = static_cast<Eigen::Index>(ctx.n) * stack.config.width;
  for (int l = 0; l < stack.config.layers; ++l) {
    auto rec = jacobian_energy(stack, ctx, l);
    if (energy_identity_applicable(stack.config) && nd <= kDefaultKronCap) {
      rec.identity_residual = verify_energy_identity(stack, ctx, l).residual;
    }
    out.push_back(rec);
  }
  return out;
}

EnergyIdentityCheck verify_energy_identity(const ModelStack& stack, const PropagationContext& ctx,
                                           int layer, double tol) {
  if (!energy_identity_applicable(stack.config)) {
    throw NotApplicable(
        "verify_energy_identity: identity not applicable (needs a residual layer with "
        "antisymmetric "
        "weights and gamma = 0; got kind=" +
        to_string(stack.config.kind) + ", mode=" + to_string(stack.config.mode) +
        ", gamma=" + std::to_string(stack.config.gamma) + ")");
  }
  const Matrix a = layer_operator_dense(stack, ctx, layer);
  const double step = stack.config.epsilon;
  Matrix j = step * a;
  j.diagonal().array() += 1.0;
  Matrix residual = j.transpose() * j;
  residual.diagonal().array() -= 1.0;
  residual -= (step * step) * (a.transpose() * a);
  EnergyIdentityCheck check;
  check.residual = residual.norm();
  check.passed = check.residual <= tol;
  return check;
}

Matrix influence_block(const ModelStack& stack, const PropagationContext& ctx, int i, int s,
                       int ell) {
  if (i < 0 || s < 0 || i >= ctx.n || s >= ctx.n) {
    throw InvalidArgument("influence: node index out of range");
  }
  if (ell < 0 || ell > stack.config.layers) {
    throw InvalidArgument("influence: layer " + std::to_string(ell) + " exceeds depth " +
                          std::to_string(stack.config.layers));
  }
  if (stack.config.kind == DynamicsKind::gcn) {
    throw NotApplicable("influence: GCN layers are nonlinear");
  }
  const int d = stack.config.width;
  Matrix block(d, d);
  for (int b = 0; b < d; ++b) {
    Matrix h = Matrix::Zero(ctx.n, d);
    h(s, b) = 1.0;
    for (int l = 0; l < ell; ++l) h = apply_layer(stack, ctx, l, h);
    block.col(b) = h.row(i).transpose();
  }
  return block;
}

double influence(const ModelStack& stack, const PropagationContext& ctx, int i, int s, int ell,
                 InfluenceNorm norm) {
  return matrix_norm(influence_block(stack, ctx, i, s, ell), norm);
}

double mixing_bound(const ModelStack& stack, const ComponentStructure& comps, int component,
                    int ell) {
  const auto& c = stack.config;
  if (c.kind != DynamicsKind::s3gnn) {
    throw NotApplicable("mixing_bound: defined for s3gnn stacks only");
  }
  if (component < 0 || component >= comps.count()) {
    throw InvalidArgument("mixing_bound: component index out of range");
  }
  if (ell < 0 || ell > c.layers) throw InvalidArgument("mixing_bound: layer out of range");
  const bool singular = c.mode == WeightMode::antisymmetric && c.gamma == 0.0 && c.width % 2 == 1;
  double bound = 1.0;
  for (int p = 0; p < ell; ++p) {
    const auto& layer = stack.params.layers[p];
    const double alpha = expand_coefficients(layer.alpha, comps.count())(component);
    if (!(alpha > 0)) return 0.0;
    const double sigma =
        singular ? 0.0 : min_singular_value(effective_weight(layer.weights[0], c.mode, c.gamma));
    bound *= c.epsilon * alpha / comps.sizes[component] * sigma;
  }
  return bound;
}

double edge_bound(double c_theta, int ell, int edges_in_component) {
  if (!(c_theta > 0)) throw InvalidArgument("edge_bound: filter coefficient must be positive");
  if (edges_in_component < 1) throw InvalidArgument("edge_bound: component has no edges");
  return std::pow(c_theta, ell) / (2.0 * edges_in_component);
}

double diag_closed_form(double c_theta, int ell, int n, int d, InfluenceNorm norm) {
  if (!(c_theta > 0)) {
    throw InvalidArgument("diag_closed_form: filter coefficient must be positive");
  }
  if (n < 1 || d < 1) throw InvalidArgument("diag_closed_form: n and d must be positive");
  return std::pow(c_theta, ell) / n * matrix_norm(Matrix::Identity(d, d), norm);
}

double mixing_chain_entry(const ModelStack& stack, const PropagationContext& ctx, int i, int s,
                          int ell) {
  Matrix chain = Matrix::Identity(ctx.n, ctx.n);
  for (int p = 0; p < ell; ++p) {
    chain = dense_mixing_operator(stack, ctx, p) * chain;
  }
  return chain(i, s);
}

InfluenceReport influence_distribution(const ModelStack& stack, const Graph& g,
                                       const PropagationContext& ctx, int ell, InfluenceNorm norm,
                                       int node_cap) {
  if (ctx.n > node_cap) {
    throw CapExceeded("influence_distribution: n=" + std::to_string(ctx.n) +
                      " exceeds the all-pairs cap of " + std::to_string(node_cap));
  }
  if (stack.config.kind == DynamicsKind::gcn) {
    throw NotApplicable("influence_distribution: GCN layers are nonlinear");
  }
  if (ell < 0 || ell > stack.config.layers) {
    throw InvalidArgument("influence_distribution: layer out of range");
  }
  const auto& c = stack.config;
  const auto& comps = ctx.comps;
  const int n = ctx.n;
  const int d = c.width;

  std::vector<double> mixing(static_cast<std::size_t>(comps.count()), kNaN);
  std::vector<double> edges(static_cast<std::size_t>(comps.count()), kNaN);
  std::vector<double> closed(static_cast<std::size_t>(comps.count()), kNaN);
  for (int r = 0; r < comps.count(); ++r) {
    if (c.kind == DynamicsKind::s3gnn) mixing[r] = mixing_bound(stack, comps, r, ell);
    if (c.kind == DynamicsKind::diag_filter) {
      double product = 1.0;
      for (int p = 0; p < ell; ++p) {
        product *=
            std::exp(expand_coefficients(stack.params.layers[p].log_filter, comps.count())(r));
      }
      if (comps.edge_counts[r] >= 1) edges[r] = product / (2.0 * comps.edge_counts[r]);
      closed[r] = product / comps.sizes[r] * matrix_norm(Matrix::Identity(d, d), norm);
    }
  }

  InfluenceReport report;
  report.kind = c.kind;
  report.norm = norm;
  report.layer = ell;
  report.records.resize(static_cast<std::size_t>(n) * n);

  auto tally = [](BoundSummary& summary, double measured, double bound) {
    if (std::isnan(bound)) return;
    ++summary.pairs;
    if (measured >= bound * (1.0 - 1e-12)) {
      ++summary.above;
    } else {
      ++summary.below;
    }
  };

  // One batch of d seeds per source node yields the blocks for every target.
  for (int s = 0; s < n; ++s) {
    const auto dist = bfs_distances(g, s);
    std::vector<Matrix> blocks(static_cast<std::size_t>(n), Matrix(d, d));
    for (int b = 0; b < d; ++b) {
      Matrix h = Matrix::Zero(n, d);
      h(s, b) = 1.0;
      for (int l = 0; l < ell; ++l) h = apply_layer(stack, ctx, l, h);
      for (int i = 0; i < n; ++i) blocks[i].col(b) = h.row(i).transpose();
    }
    for (int i = 0; i < n; ++i) {
      auto& rec = report.records[static_cast<std::size_t>(i) * n + s];
      rec.i = i;
      rec.s = s;
      rec.distance = dist[i];
      rec.measured = matrix_norm(blocks[i], norm);
      const bool same = comps.component_of[i] == comps.component_of[s];
      const int r = comps.component_of[i];
      rec.bound_mixing = same ? mixing[r] : kNaN;
      rec.bound_edges = same ? edges[r] : kNaN;
      tally(report.mixing, rec.measured, rec.bound_mixing);
      tally(report.edges, rec.measured, rec.bound_edges);
      tally(report.closed_form, rec.measured, same ? closed[r] : kNaN);
    }
  }
  return report;
}

std::vector<HistogramBin> influence_histogram(const InfluenceReport& report, int bins) {
  if (bins < 1) throw InvalidArgument("influence_histogram: need at least one bin");
  std::vector<double> logs;
  for (const auto& r : report.records)
    if (r.measured > 0) logs.push_back(std::log10(r.measured));
  std::vector<HistogramBin> out;
  if (logs.empty()) return out;
  const auto [mn, mx] = std::minmax_element(logs.begin(), logs.end());
  double lo = *mn;
  double hi = *mx;
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / bins;
  for (int b = 0; b < bins; ++b) out.push_back({lo + b * width, lo + (b + 1) * width, 0});
  for (double v : logs) {
    int b = static_cast<int>((v - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    ++out[b].count;
  }
  return out;
}

std::vector<double> alpha_by_layer(const ModelStack& stack) {
  std::vector<double> out;
  for (const auto& layer : stack.params.layers) {
    if (layer.alpha.size() > 0) {
      out.push_back(layer.alpha.mean());
    } else if (layer.log_filter.size() > 0) {
      out.push_back(layer.log_filter.array().exp().mean());
    } else {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return out;
}

}  // namespace s3gnn
