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

#include <gtest/gtest.h>

#include <cmath>

#include "s3gnn/errors.hpp"
#include "s3gnn/sensitivity.hpp"
#include "test_util.hpp"

namespace s3gnn {
namespace {

using testing::random_matrix;

ModelConfig bare(DynamicsKind kind, int d, int layers) {
  ModelConfig c;
  c.kind = kind;
  c.width = d;
  c.layers = layers;
  c.heads = false;
  return c;
}

Graph single_edge() {
  const std::vector<Edge> e{{0, 1}};
  return Graph::from_edge_list(2, e);
}

ModelStack two_node_stack(double eps) {
  auto c = bare(DynamicsKind::s3gnn, 2, 1);
  c.epsilon = eps;
  auto stack = init_model(c, 0);
  stack.params.layers[0].weights[0] << 0, 1, 0, 0;
  return stack;
}

ModelStack random_antisymmetric(const Graph& g, int d, double eps, int layers, Rng& rng) {
  auto c = bare(DynamicsKind::s3gnn, d, layers);
  c.epsilon = eps;
  c.alpha_slots = connected_components(g).count();
  auto stack = init_model(c, rng.next_u64());
  for (auto& layer : stack.params.layers)
    for (auto& a : layer.alpha) a = rng.uniform(-2, 2);
  return stack;
}

// Dense Jacobian of the layer map by central differences.
Matrix fd_jacobian(const ModelStack& stack, const PropagationContext& ctx, int layer, double h) {
  const int n = ctx.n;
  const int d = stack.config.width;
  Matrix j(n * d, n * d);
  Vector base = Vector::Zero(n * d);
  for (int k = 0; k < n * d; ++k) {
    Vector up = base, down = base;
    up(k) += h;
    down(k) -= h;
    j.col(k) = (vec(apply_layer(stack, ctx, layer, unvec(up, n, d))) -
                vec(apply_layer(stack, ctx, layer, unvec(down, n, d)))) /
               (2 * h);
  }
  return j;
}

TEST(LayerJacobian, ZeroStepIsIdentity) {
  const auto stack = two_node_stack(0.0);
  const auto ctx = make_context(single_edge(), stack.config);
  EXPECT_EQ(layer_jacobian_dense(stack, ctx, 0), Matrix(Matrix::Identity(4, 4)));
}

TEST(LayerJacobian, MatchesFiniteDifferences) {
  const auto stack = two_node_stack(0.1);
  const auto ctx = make_context(single_edge(), stack.config);
  const Matrix j = layer_jacobian_dense(stack, ctx, 0);
  EXPECT_LE((j - fd_jacobian(stack, ctx, 0, 1e-6)).cwiseAbs().maxCoeff(), 1e-7);

  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = testing::random_graph(rng.range(2, 8), 0.3, rng);
    ModelConfig c = bare(static_cast<DynamicsKind>(trial % 5 == 1 ? 0 : trial % 5), 3, 1);
    c.mode = static_cast<WeightMode>(trial % 3);
    c.share_weights = trial % 2 == 0;
    c.cheb_order = 3;
    c.gamma = trial == 4 ? 0.1 : 0.0;
    const auto s = init_model(c, trial);
    const auto cx = make_context(g, c);
    EXPECT_LE((layer_jacobian_dense(s, cx, 0) - fd_jacobian(s, cx, 0, 1e-6)).cwiseAbs().maxCoeff(),
              1e-6)
        << to_string(c.kind);
  }
}

TEST(LayerJacobian, AntisymmetricOffsetAndCap) {
  Rng rng(2);
  const Graph g = testing::random_graph(7, 0.3, rng);
  const auto stack = random_antisymmetric(g, 4, 0.3, 1, rng);
  const auto ctx = make_context(g, stack.config);
  Matrix off = layer_jacobian_dense(stack, ctx, 0);
  off.diagonal().array() -= 1.0;
  EXPECT_LE((off + off.transpose()).norm(), 1e-12);
  EXPECT_THROW(layer_jacobian_dense(stack, ctx, 0, 16), CapExceeded);
  EXPECT_THROW(layer_jacobian_dense(stack, ctx, 3), InvalidArgument);
}

TEST(JacobianEnergy, Examples) {
  const auto zero = two_node_stack(0.0);
  const auto ctx0 = make_context(single_edge(), zero.config);
  EXPECT_EQ(jacobian_energy(zero, ctx0, 0).energy_closed_form, 1.0);

  const auto stack = two_node_stack(0.1);
  const auto ctx = make_context(single_edge(), stack.config);
  const auto rec = jacobian_energy(stack, ctx, 0);
  EXPECT_NEAR(rec.lambda_max, 4.0, 1e-12);
  EXPECT_NEAR(rec.energy_closed_form, 1.0198039027185569, 1e-12);
  EXPECT_NEAR(rec.energy_power_iteration, rec.energy_closed_form, 1e-10);
  // independent: dense Kronecker eigensolve
  const Matrix a = layer_operator_dense(stack, ctx, 0);
  EXPECT_NEAR(sym_eig(Matrix(a.transpose() * a)).values.maxCoeff(), 4.0, 1e-12);
}

TEST(JacobianEnergy, ClosedFormMatchesPowerIterationAndIsSecondOrder) {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Graph g = testing::random_graph(rng.range(2, 12), rng.uniform(0.1, 0.5), rng);
    const int d = 2 * rng.range(1, 3);
    const double eps = std::vector<double>{0.01, 0.1, 0.5}[trial % 3];
    auto stack = random_antisymmetric(g, d, eps, 1, rng);
    if (trial % 4 == 0) {
      stack.config.share_weights = false;
      stack = init_model(stack.config, trial);
    }
    const auto ctx = make_context(g, stack.config);
    const auto rec = jacobian_energy(stack, ctx, 0);
    EXPECT_NEAR(rec.energy_closed_form, rec.energy_power_iteration, 1e-8) << "trial " << trial;
    EXPECT_GE(rec.energy_closed_form, 1.0);
    EXPECT_LE(rec.energy_closed_form - 1.0, eps * eps * rec.lambda_max / 2 + 1e-12);
  }
}

TEST(JacobianEnergy, MonotoneInStep) {
  Rng rng(4);
  const Graph g = testing::random_graph(8, 0.4, rng);
  auto stack = random_antisymmetric(g, 4, 0.0, 1, rng);
  double previous = 0;
  for (double eps : {0.0, 0.01, 0.05, 0.1, 0.3, 0.5, 1.0}) {
    stack.config.epsilon = eps;
    const auto ctx = make_context(g, stack.config);
    const double e = jacobian_energy(stack, ctx, 0).energy_closed_form;
    EXPECT_GE(e, previous);
    previous = e;
  }
}

TEST(JacobianEnergy, OtherKinds) {
  Rng rng(5);
  const Graph g = testing::random_graph(6, 0.4, rng);
  for (auto kind :
       {DynamicsKind::chebnet, DynamicsKind::stable_chebnet, DynamicsKind::diag_filter}) {
    auto c = bare(kind, 2, 1);
    c.mode = kind == DynamicsKind::stable_chebnet ? WeightMode::antisymmetric : WeightMode::free;
    c.cheb_order = 2;
    const auto stack = init_model(c, 1);
    const auto ctx = make_context(g, c);
    const auto rec = jacobian_energy(stack, ctx, 0);
    const double dense = spectral_norm(layer_jacobian_dense(stack, ctx, 0), 1e-14, 100000);
    EXPECT_NEAR(rec.energy_closed_form, dense, 1e-8) << to_string(kind);
    EXPECT_NEAR(rec.energy_power_iteration, dense, 1e-8) << to_string(kind);
  }
  // residual layers without the antisymmetric structure: only the power route is exact
  for (auto mode : {WeightMode::free, WeightMode::cayley_orthogonal}) {
    auto c = bare(DynamicsKind::s3gnn, 2, 1);
    c.mode = mode;
    c.epsilon = 0.3;
    const auto stack = init_model(c, 2);
    const auto ctx = make_context(g, c);
    const auto rec = jacobian_energy(stack, ctx, 0);
    EXPECT_TRUE(std::isnan(rec.energy_closed_form));
    EXPECT_NEAR(rec.energy_power_iteration,
                spectral_norm(layer_jacobian_dense(stack, ctx, 0), 1e-14, 100000), 1e-8);
  }
  auto gcn = bare(DynamicsKind::gcn, 2, 1);
  const auto gs = init_model(gcn, 1);
  EXPECT_THROW(jacobian_energy(gs, make_context(g, gcn), 0), NotApplicable);
}

TEST(EnergyIdentity, IdentityHolds) {
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const Graph g = testing::random_graph(rng.range(2, 12), rng.uniform(0.1, 0.5), rng);
    const auto stack = random_antisymmetric(g, 2 * rng.range(1, 3), rng.uniform(0.01, 0.5), 2, rng);
    const auto ctx = make_context(g, stack.config);
    for (int l = 0; l < 2; ++l) {
      const auto check = verify_energy_identity(stack, ctx, l);
      EXPECT_TRUE(check.passed) << check.residual;
      EXPECT_LE(check.residual, 1e-10);
    }
  }
  const auto zero = two_node_stack(0.0);
  EXPECT_EQ(verify_energy_identity(zero, make_context(single_edge(), zero.config), 0).residual,
            0.0);
}

TEST(EnergyIdentity, NotApplicableOutsideItsAssumptions) {
  auto c = bare(DynamicsKind::s3gnn, 2, 1);
  c.mode = WeightMode::free;
  auto stack = init_model(c, 0);
  stack.params.layers[0].weights[0] = Matrix::Identity(2, 2);
  const auto ctx = make_context(single_edge(), c);
  try {
    verify_energy_identity(stack, ctx, 0);
    FAIL();
  } catch (const NotApplicable& e) {
    EXPECT_NE(std::string(e.what()).find("not applicable"), std::string::npos);
  }
  // the linear term really is nonzero here
  const Matrix a = layer_operator_dense(stack, ctx, 0);
  EXPECT_GT((a + a.transpose()).norm(), 0.1);
  c.mode = WeightMode::antisymmetric;
  c.gamma = 0.1;
  EXPECT_FALSE(energy_identity_applicable(c));
  EXPECT_EQ(jacobian_report(init_model(c, 0), make_context(single_edge(), c))[0].identity_residual,
            std::nullopt);
}

TEST(Influence, BaseCase) {
  Rng rng(7);
  const Graph g = generate(PathParams{4});
  const auto stack = random_antisymmetric(g, 3, 0.1, 2, rng);
  const auto ctx = make_context(g, stack.config);
  EXPECT_NEAR(influence(stack, ctx, 1, 1, 0), std::sqrt(3.0), 1e-15);
  EXPECT_EQ(influence(stack, ctx, 1, 2, 0), 0.0);
  EXPECT_THROW(influence(stack, ctx, 4, 0, 1), InvalidArgument);
  EXPECT_THROW(influence(stack, ctx, 0, 0, 3), InvalidArgument);
}

TEST(Influence, DiagFilterClosedForm) {
  auto c = bare(DynamicsKind::diag_filter, 2, 2);
  c.filter_init = 0.8;
  const auto stack = init_model(c, 0);
  const Graph g = generate(PathParams{3});
  const auto ctx = make_context(g, c);
  for (int i = 0; i < 3; ++i)
    for (int s = 0; s < 3; ++s)
      EXPECT_NEAR(influence(stack, ctx, i, s, 2), 0.3016988933062603, 1e-10);
  EXPECT_NEAR(diag_closed_form(0.8, 2, 3, 2), 0.64 * std::sqrt(2.0) / 3.0, 1e-15);
  EXPECT_NEAR(diag_closed_form(0.8, 2, 3, 2, InfluenceNorm::spectral), 0.64 / 3.0, 1e-15);
  EXPECT_NEAR(diag_closed_form(0.8, 2, 3, 2, InfluenceNorm::l1), 1.28 / 3.0, 1e-15);
  EXPECT_THROW(diag_closed_form(0.0, 2, 3, 2), InvalidArgument);
}

TEST(Influence, MixingOnlyProofForm) {
  Rng rng(8);
  auto c = bare(DynamicsKind::s3gnn, 3, 2);
  c.residual = false;
  c.spatial_term = false;
  c.mode = WeightMode::free;
  c.alpha_init = 1.5;
  c.epsilon = 0.1;
  const auto stack = init_model(c, 4);
  const Graph g = generate(PathParams{3});
  const auto ctx = make_context(g, c);
  const Matrix w01 = stack.params.layers[0].weights[0] * stack.params.layers[1].weights[0];
  // (P^2)_is = alpha^2 / n for the scaled ones-matrix P = (alpha / n) 1 1^T
  const double scale = 0.1 * 0.1 * 1.5 * 1.5 / 3.0;
  const double bound = mixing_bound(stack, ctx.comps, 0, 2);
  for (int i = 0; i < 3; ++i) {
    for (int s = 0; s < 3; ++s) {
      const Matrix block = influence_block(stack, ctx, i, s, 2);
      EXPECT_LE((block - scale * w01.transpose()).norm(), 1e-15);
      EXPECT_GE(block.norm(), bound);
      EXPECT_NEAR(mixing_chain_entry(stack, ctx, i, s, 2), 1.5 * 1.5 / 3.0, 1e-15);
    }
  }
}

TEST(Influence, BlocksMatchDenseJacobianProduct) {
  Rng rng(9);
  for (int trial = 0; trial < 8; ++trial) {
    const Graph g = testing::random_graph(rng.range(2, 8), 0.35, rng);
    const int n = g.num_nodes();
    const int d = rng.range(1, 3);
    auto stack = random_antisymmetric(g, d, 0.2, 3, rng);
    if (trial % 2) {
      stack.config.kind = DynamicsKind::stable_chebnet;
      stack.config.cheb_order = 2;
      stack = init_model(stack.config, trial);
    }
    const auto ctx = make_context(g, stack.config);
    Matrix product = Matrix::Identity(n * d, n * d);
    for (int l = 0; l < 3; ++l) product = layer_jacobian_dense(stack, ctx, l) * product;
    for (int i = 0; i < n; ++i) {
      for (int s = 0; s < n; ++s) {
        const Matrix block = influence_block(stack, ctx, i, s, 3);
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b)
            EXPECT_NEAR(block(a, b), product(a * n + i, b * n + s), 1e-10);
      }
    }
  }
}

TEST(Bounds, Examples) {
  auto c = bare(DynamicsKind::s3gnn, 2, 2);
  c.alpha_init = 1.5;
  c.epsilon = 0.1;
  c.mode = WeightMode::free;
  auto stack = init_model(c, 0);
  for (auto& layer : stack.params.layers) {
    layer.weights[0] = Matrix::Zero(2, 2);
    layer.weights[0].diagonal() << 0.9, 1.7;
  }
  ComponentStructure comps = connected_components(generate(PathParams{3}));
  EXPECT_NEAR(mixing_bound(stack, comps, 0, 2), 0.002025, 1e-15);
  stack.params.layers[1].alpha(0) = 0.0;
  EXPECT_EQ(mixing_bound(stack, comps, 0, 2), 0.0);
  EXPECT_NEAR(mixing_bound(stack, comps, 0, 1), 0.1 * 0.5 * 0.9, 1e-15);

  auto odd = bare(DynamicsKind::s3gnn, 3, 2);
  EXPECT_EQ(mixing_bound(init_model(odd, 0), comps, 0, 2), 0.0);
  EXPECT_FALSE(config_warnings(odd).empty());

  EXPECT_NEAR(edge_bound(0.8, 3, 10), 0.0256, 1e-15);
  EXPECT_EQ(edge_bound(1.0, 5, 1), 0.5);
  EXPECT_THROW(edge_bound(-1.0, 3, 10), InvalidArgument);
  EXPECT_THROW(edge_bound(0.8, 3, 0), InvalidArgument);
}

TEST(Distribution, DiagFilterIsConstant) {
  auto c = bare(DynamicsKind::diag_filter, 2, 3);
  c.filter_init = 0.8;
  const auto stack = init_model(c, 0);
  Rng rng(10);
  Graph g;
  do {
    g = testing::random_graph(10, 0.3, rng);
  } while (connected_components(g).count() != 1);
  const auto ctx = make_context(g, c);
  const auto report = influence_distribution(stack, g, ctx, 3);
  ASSERT_EQ(report.records.size(), 100u);
  const double closed = diag_closed_form(0.8, 3, 10, 2);
  for (const auto& r : report.records) EXPECT_NEAR(r.measured, closed, 1e-10);
  EXPECT_EQ(report.closed_form.pairs, 100);
  EXPECT_EQ(report.closed_form.above + report.closed_form.below, 100);
  EXPECT_NEAR(report.records[0].bound_edges, edge_bound(0.8, 3, g.num_edges()), 1e-15);
  EXPECT_TRUE(std::isnan(report.records[0].bound_mixing));
  EXPECT_EQ(report.records[1].distance, bfs_distances(g, 1)[0]);
}

TEST(Distribution, EdgelessZeroAlpha) {
  auto c = bare(DynamicsKind::s3gnn, 2, 2);
  c.alpha_init = 0.0;
  const auto stack = init_model(c, 0);
  const Graph g = Graph::from_edge_list(4, {});
  const auto report = influence_distribution(stack, g, make_context(g, c), 2);
  for (const auto& r : report.records) {
    if (r.i != r.s) {
      EXPECT_EQ(r.measured, 0.0);
      EXPECT_TRUE(std::isnan(r.bound_mixing));
      EXPECT_EQ(r.distance, kUnreachable);
    }
  }
  EXPECT_THROW(influence_distribution(stack, g, make_context(g, c), 2, InfluenceNorm::frobenius, 3),
               CapExceeded);
}

TEST(Distribution, HistogramAndAlpha) {
  Rng rng(11);
  const Graph g = generate(BarbellParams{4, 2});
  const auto stack = random_antisymmetric(g, 4, 0.1, 3, rng);
  const auto report = influence_distribution(stack, g, make_context(g, stack.config), 3);
  const auto bins = influence_histogram(report, 12);
  ASSERT_EQ(bins.size(), 12u);
  int total = 0;
  for (const auto& b : bins) total += b.count;
  int positive = 0;
  for (const auto& r : report.records) positive += r.measured > 0;
  EXPECT_EQ(total, positive);
  EXPECT_EQ(alpha_by_layer(stack).size(), 3u);
  EXPECT_EQ(report.mixing.pairs, 100);
}

TEST(Norms, ParseAndEvaluate) {
  Matrix m(2, 2);
  m << 3, 0, 0, -4;
  EXPECT_NEAR(matrix_norm(m, InfluenceNorm::frobenius), 5.0, 1e-15);
  EXPECT_NEAR(matrix_norm(m, InfluenceNorm::spectral), 4.0, 1e-12);
  EXPECT_NEAR(matrix_norm(m, InfluenceNorm::l1), 7.0, 1e-15);
  EXPECT_EQ(parse_influence_norm("spectral"), InfluenceNorm::spectral);
  EXPECT_THROW(parse_influence_norm("max"), InvalidArgument);
}

}  // namespace
}  // namespace s3gnn
