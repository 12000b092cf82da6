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

// Layer dynamics and heads.
//
// All propagation kinds except GCN are linear in the node features; the only
// nonlinearity of those models is the tanh hidden layer of the decoder. Every
// layer keeps the width d fixed, so a stack is
//
//   x --encoder--> H(0) --layer 0--> ... --layer L-1--> H(L) --decoder--> y
//
// with the encoder/decoder optional (`heads = false` makes H(0) = x and y = H(L)).

#ifndef S3GNN_MODEL_HPP_
#define S3GNN_MODEL_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "s3gnn/graph.hpp"
#include "s3gnn/tensor.hpp"

namespace s3gnn {

enum class DynamicsKind { s3gnn, gcn, chebnet, stable_chebnet, diag_filter };
enum class WeightMode { free, antisymmetric, cayley_orthogonal };

std::string to_string(DynamicsKind kind);
std::string to_string(WeightMode mode);
DynamicsKind parse_dynamics_kind(std::string_view name);
WeightMode parse_weight_mode(std::string_view name);

struct ModelConfig {
  DynamicsKind kind = DynamicsKind::s3gnn;
  WeightMode mode = WeightMode::antisymmetric;
  int layers = 4;
  int width = 32;
  int cheb_order = 2;  // K, polynomial degree for the Chebyshev kinds
  double epsilon = 0.1;
  double gamma = 0.0;  // dissipation: W_eff = map(W_raw) - gamma I
  double alpha_init = 1.0;
  double filter_init = 1.0;   // diag filter C at initialization
  bool share_weights = true;  // one weight for mixing and spatial terms
  int alpha_slots = 1;        // 1 = tied across components, else one per component
  bool residual = true;       // off: H' = eps (P + A_hat) H W_eff
  bool spatial_term = true;   // off: drop the A_hat H W term (mixing only)
  bool heads = true;
  int input_dim = 3;
  int output_dim = 1;
  int decoder_hidden = 32;
  bool graph_level = false;     // mean readout before the decoder
  bool gcn_self_loops = false;  // GCN only
  bool cheb_normalized = true;  // Chebyshev kinds: L_hat (lambda_max = 2) or L

  void validate() const;
};

/// Non-fatal configuration issues, e.g. odd width with antisymmetric weights
/// (every odd-order antisymmetric matrix is singular).
std::vector<std::string> config_warnings(const ModelConfig& config);

struct LayerParams {
  std::vector<Matrix> weights;  // raw d x d weights; meaning depends on kind
  Vector alpha;                 // s3gnn mixing coefficients
  Vector log_filter;            // diag filter: C = exp(log_filter)
};

struct HeadParams {
  Matrix encoder_w;  // input_dim x d
  Vector encoder_b;
  Matrix decoder_w1;  // d x hidden
  Vector decoder_b1;
  Matrix decoder_w2;  // hidden x output_dim
  Vector decoder_b2;
};

/// Every trainable tensor of a model. Gradients use the same type.
struct Parameters {
  std::vector<LayerParams> layers;
  HeadParams heads;

  /// Visits each tensor as (name, contiguous storage) in a fixed order.
  void for_each(const std::function<void(const std::string&, std::span<double>)>& fn);
  void for_each(const std::function<void(const std::string&, std::span<const double>)>& fn) const;

  Parameters zeros_like() const;
  std::size_t scalar_count() const;
  double squared_norm() const;
  /// this += scale * other (same shapes).
  void axpy(double scale, const Parameters& other);
};

struct ModelStack {
  ModelConfig config;
  Parameters params;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases; alpha and the
/// diag filter start from their configured values.
ModelStack init_model(const ModelConfig& config, std::uint64_t seed);

std::size_t param_count(const ModelStack& stack);

Matrix antisymmetrize(const Matrix& w_raw);
/// Q = (I - S)(I + S)^{-1} for antisymmetric S.
Matrix cayley_orthogonal(const Matrix& s);

/// The weight a layer actually multiplies by, after the mode map and
/// dissipation.
Matrix effective_weight(const Matrix& w_raw, WeightMode mode, double gamma);
/// Gradient w.r.t. the raw weight given the gradient w.r.t. the effective one.
Matrix weight_pullback(const Matrix& w_raw, WeightMode mode, const Matrix& grad_effective);

/// Per-graph operators needed by every propagation kind.
struct PropagationContext {
  int n = 0;
  int edges = 0;
  ComponentStructure comps;
  SparseMatrix norm_adj;  // A_hat, no self-loops
  SparseMatrix gcn_adj;   // A_hat with self-loops when configured
  SparseMatrix cheb_op;   // rescaled Laplacian (2 / lambda_max) L - I
  // Dense copies of the operators above, kept for graphs of at most
  // kDenseOperatorNodes nodes where dense products are faster. Empty otherwise.
  Matrix norm_adj_dense;
  Matrix gcn_adj_dense;
  Matrix cheb_op_dense;
};

inline constexpr int kDenseOperatorNodes = 256;

PropagationContext make_context(const Graph& g, const ModelConfig& config);
PropagationContext make_context(const Graph& g, const ComponentStructure& comps,
                                const ModelConfig& config);

/// Per-layer values retained for the backward pass.
struct LayerCache {
  Matrix mixed;               // s3gnn: P H
  Matrix spatial;             // s3gnn: A_hat H; gcn: A_hat H
  std::vector<Matrix> cheb;   // T_p(L~) H, p = 0..K
  std::vector<Matrix> w_eff;  // effective weights used by the layer
  Vector coefficients;        // per-component alpha or C actually applied
};

struct ForwardTrace {
  Matrix input;                // x
  std::vector<Matrix> states;  // H(0..L)
  std::vector<LayerCache> caches;
  Matrix readout;  // decoder input (H(L) or its row mean)
  Matrix hidden;   // tanh activations of the decoder
  Matrix output;
};

ForwardTrace forward(const ModelStack& stack, const PropagationContext& ctx, const Matrix& x);
ForwardTrace s3_forward(const ModelStack& stack, const Graph& g, const ComponentStructure& comps,
                        const Matrix& x);
ForwardTrace baseline_forward(const ModelStack& stack, const Graph& g,
                              const ComponentStructure& comps, const Matrix& x);

/// One propagation layer applied to H (no heads).
Matrix apply_layer(const ModelStack& stack, const PropagationContext& ctx, int layer,
                   const Matrix& h, LayerCache* cache = nullptr);

/// Reverse pass. `grad_output` has the shape of trace.output.
Parameters backward(const ForwardTrace& trace, const ModelStack& stack,
                    const PropagationContext& ctx, const Matrix& grad_output);

/// Node-operator / weight pairs whose sum defines a linear layer:
///   H' = [H +] step * sum_t node_op_t H weight_t.
/// In vec form the layer Jacobian is [I +] step * A_tot with
/// A_tot = sum_t kron(weight_t^T, node_op_t).
struct LinearTerm {
  Matrix node_op;  // dense n x n, symmetric for every supported kind
  Matrix weight;   // effective d x d
};
struct LinearLayer {
  bool identity = false;
  double step = 1.0;
  std::vector<LinearTerm> terms;
};
/// Throws NotApplicable for GCN, whose layers are nonlinear.
LinearLayer linear_layer(const ModelStack& stack, const PropagationContext& ctx, int layer);

/// Same stack with every raw weight transposed. For the symmetric node
/// operators used here this realizes the transposed layer map J^T, in every
/// weight mode.
ModelStack transposed_stack(const ModelStack& stack);

/// Dense node operator of a layer without weights (P_theta + A_hat for s3gnn).
Matrix dense_mixing_operator(const ModelStack& stack, const PropagationContext& ctx, int layer);

}  // namespace s3gnn

#endif  // S3GNN_MODEL_HPP_
