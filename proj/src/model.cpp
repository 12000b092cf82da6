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

#include "s3gnn/model.hpp"

#include <cmath>

#include "s3gnn/rng.hpp"

namespace s3gnn {

namespace {

bool is_chebyshev(DynamicsKind kind) {
  return kind == DynamicsKind::chebnet || kind == DynamicsKind::stable_chebnet;
}

int weights_per_layer(const ModelConfig& c) {
  switch (c.kind) {
    case DynamicsKind::s3gnn:
      return (c.share_weights || !c.spatial_term) ? 1 : 2;
    case DynamicsKind::gcn:
      return 1;
    case DynamicsKind::chebnet:
    case DynamicsKind::stable_chebnet:
      return c.cheb_order + 1;
    case DynamicsKind::diag_filter:
      return 0;
  }
  return 0;
}

void fill_uniform(Eigen::Ref<Matrix> m, double bound, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
}

Vector column_sums(const Matrix& m) { return m.colwise().sum().transpose(); }

Matrix add_bias(Matrix m, const Vector& b) {
  m.rowwise() += b.transpose();
  return m;
}

void check_dims(const ModelStack& stack, const PropagationContext& ctx, const Matrix& x) {
  const auto& c = stack.config;
  if (x.rows() != ctx.n) {
    throw DimensionError("forward: input has " + std::to_string(x.rows()) + " rows, graph has " +
                         std::to_string(ctx.n) + " nodes");
  }
  const Eigen::Index expected = c.heads ? c.input_dim : c.width;
  if (x.cols() != expected) {
    throw DimensionError("forward: input has " + std::to_string(x.cols()) +
                         " columns, model expects " + std::to_string(expected));
  }
  if (static_cast<int>(stack.params.layers.size()) != c.layers) {
    throw DimensionError("forward: parameter stack does not match the configured depth");
  }
}

// Dense P_theta built directly from the component structure.
Matrix dense_projector(const ComponentStructure& comps, const Vector& coefficients) {
  const int n = comps.num_nodes();
  Matrix p = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (comps.component_of[i] == comps.component_of[j]) {
        const int r = comps.component_of[i];
        p(i, j) = coefficients(r) / comps.sizes[r];
      }
  return p;
}

// d/d(coefficient_r) of sum_i <g_i, (coef_r / n_r) sum_{j in r} h_j>.
Vector mixing_coefficient_grad(const ComponentStructure& comps, const Matrix& grad_mixed,
                               const Matrix& h) {
  const Matrix gs = component_sums(comps, grad_mixed);
  const Matrix hs = component_sums(comps, h);
  Vector out(comps.count());
  for (int r = 0; r < comps.count(); ++r) out(r) = gs.row(r).dot(hs.row(r)) / comps.sizes[r];
  return out;
}

// Folds per-component gradients back onto the stored slots.
Vector fold_coefficients(const Vector& per_component, Eigen::Index slots) {
  if (slots == per_component.size()) return per_component;
  return Vector::Constant(1, per_component.sum());
}

// Prefers the dense copy when make_context kept one.
Matrix apply_op(const SparseMatrix& sparse, const Matrix& dense, const Matrix& h) {
  if (dense.size()) return dense * h;
  return sparse * h;
}

Matrix apply_op_t(const SparseMatrix& sparse, const Matrix& dense, const Matrix& h) {
  if (dense.size()) return dense.transpose() * h;
  return sparse.transpose() * h;
}

}  // namespace

std::string to_string(DynamicsKind kind) {
  switch (kind) {
    case DynamicsKind::s3gnn:
      return "s3gnn";
    case DynamicsKind::gcn:
      return "gcn";
    case DynamicsKind::chebnet:
      return "chebnet";
    case DynamicsKind::stable_chebnet:
      return "stable_chebnet";
    case DynamicsKind::diag_filter:
      return "diag_filter";
  }
  return "unknown";
}

std::string to_string(WeightMode mode) {
  switch (mode) {
    case WeightMode::free:
      return "free";
    case WeightMode::antisymmetric:
      return "antisymmetric";
    case WeightMode::cayley_orthogonal:
      return "cayley";
  }
  return "unknown";
}

DynamicsKind parse_dynamics_kind(std::string_view name) {
  if (name == "s3gnn" || name == "s3") return DynamicsKind::s3gnn;
  if (name == "gcn") return DynamicsKind::gcn;
  if (name == "chebnet" || name == "cheb") return DynamicsKind::chebnet;
  if (name == "stable_chebnet" || name == "stable-chebnet") return DynamicsKind::stable_chebnet;
  if (name == "diag_filter" || name == "diag") return DynamicsKind::diag_filter;
  throw InvalidArgument("unknown dynamics kind '" + std::string(name) + "'");
}

WeightMode parse_weight_mode(std::string_view name) {
  if (name == "free") return WeightMode::free;
  if (name == "antisymmetric" || name == "antisym") return WeightMode::antisymmetric;
  if (name == "cayley" || name == "cayley_orthogonal" || name == "orthogonal") {
    return WeightMode::cayley_orthogonal;
  }
  throw InvalidArgument("unknown weight mode '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  if (layers < 0) throw InvalidArgument("model: layers must be >= 0");
  if (width < 1) throw InvalidArgument("model: width must be >= 1");
  if (cheb_order < 0) throw InvalidArgument("model: cheb_order must be >= 0");
  if (!(epsilon >= 0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("model: epsilon must be finite and >= 0");
  }
  if (!(gamma >= 0)) throw InvalidArgument("model: gamma must be >= 0");
  if (!std::isfinite(alpha_init)) throw InvalidArgument("model: alpha_init must be finite");
  if (!(filter_init > 0)) throw InvalidArgument("model: filter_init must be positive");
  if (alpha_slots < 1) throw InvalidArgument("model: alpha_slots must be >= 1");
  if (heads && (input_dim < 1 || output_dim < 1 || decoder_hidden < 1)) {
    throw InvalidArgument("model: head dimensions must be >= 1");
  }
}

std::vector<std::string> config_warnings(const ModelConfig& config) {
  std::vector<std::string> out;
  if (config.mode == WeightMode::antisymmetric && config.width % 2 == 1 &&
      config.kind != DynamicsKind::diag_filter) {
    out.push_back("odd width " + std::to_string(config.width) +
                  " with antisymmetric weights: every layer weight is singular "
                  "(sigma_min = 0), so the non-vanishing influence bound is 0");
  }
  if (config.gamma > 0 && config.mode == WeightMode::antisymmetric) {
    out.push_back("gamma > 0 breaks antisymmetry; the exact Jacobian identity does not apply");
  }
  return out;
}

void Parameters::for_each(const std::function<void(const std::string&, std::span<double>)>& fn) {
  auto visit = [&](const std::string& name, auto& tensor) {
    fn(name, std::span<double>(tensor.data(), static_cast<std::size_t>(tensor.size())));
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    for (std::size_t w = 0; w < layers[l].weights.size(); ++w) {
      visit(prefix + "w" + std::to_string(w), layers[l].weights[w]);
    }
    if (layers[l].alpha.size() > 0) visit(prefix + "alpha", layers[l].alpha);
    if (layers[l].log_filter.size() > 0) visit(prefix + "log_filter", layers[l].log_filter);
  }
  if (heads.encoder_w.size() > 0) {
    visit("encoder.w", heads.encoder_w);
    visit("encoder.b", heads.encoder_b);
    visit("decoder.w1", heads.decoder_w1);
    visit("decoder.b1", heads.decoder_b1);
    visit("decoder.w2", heads.decoder_w2);
    visit("decoder.b2", heads.decoder_b2);
  }
}

void Parameters::for_each(
    const std::function<void(const std::string&, std::span<const double>)>& fn) const {
  const_cast<Parameters*>(this)->for_each(
      [&](const std::string& name, std::span<double> s) { fn(name, s); });
}

Parameters Parameters::zeros_like() const {
  Parameters out = *this;
  out.for_each([](const std::string&, std::span<double> s) { std::fill(s.begin(), s.end(), 0.0); });
  return out;
}

std::size_t Parameters::scalar_count() const {
  std::size_t total = 0;
  for_each([&](const std::string&, std::span<const double> s) { total += s.size(); });
  return total;
}

double Parameters::squared_norm() const {
  double total = 0;
  for_each([&](const std::string&, std::span<const double> s) {
    for (double v : s) total += v * v;
  });
  return total;
}

void Parameters::axpy(double scale, const Parameters& other) {
  std::vector<std::span<const double>> src;
  other.for_each([&](const std::string&, std::span<const double> s) { src.push_back(s); });
  std::size_t k = 0;
  for_each([&](const std::string& name, std::span<double> s) {
    if (k >= src.size() || src[k].size() != s.size()) {
      throw DimensionError("Parameters::axpy: shape mismatch at " + name);
    }
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += scale * src[k][i];
    ++k;
  });
}

ModelStack init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ModelStack stack;
  stack.config = config;
  const int d = config.width;
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  const int count = weights_per_layer(config);
  for (int l = 0; l < config.layers; ++l) {
    LayerParams layer;
    for (int w = 0; w < count; ++w) {
      Matrix m(d, d);
      fill_uniform(m, bound, rng);
      layer.weights.push_back(std::move(m));
    }
    if (config.kind == DynamicsKind::s3gnn) {
      layer.alpha = Vector::Constant(config.alpha_slots, config.alpha_init);
    }
    if (config.kind == DynamicsKind::diag_filter) {
      layer.log_filter = Vector::Constant(config.alpha_slots, std::log(config.filter_init));
    }
    stack.params.layers.push_back(std::move(layer));
  }
  if (config.heads) {
    auto& h = stack.params.heads;
    const double enc = 1.0 / std::sqrt(static_cast<double>(config.input_dim));
    const double dec2 = 1.0 / std::sqrt(static_cast<double>(config.decoder_hidden));
    h.encoder_w.resize(config.input_dim, d);
    h.encoder_b.resize(d);
    h.decoder_w1.resize(d, config.decoder_hidden);
    h.decoder_b1.resize(config.decoder_hidden);
    h.decoder_w2.resize(config.decoder_hidden, config.output_dim);
    h.decoder_b2.resize(config.output_dim);
    fill_uniform(h.encoder_w, enc, rng);
    fill_uniform(h.encoder_b, enc, rng);
    fill_uniform(h.decoder_w1, bound, rng);
    fill_uniform(h.decoder_b1, bound, rng);
    fill_uniform(h.decoder_w2, dec2, rng);
    fill_uniform(h.decoder_b2, dec2, rng);
  }
  return stack;
}

std::size_t param_count(const ModelStack& stack) { return stack.params.scalar_count(); }

Matrix antisymmetrize(const Matrix& w_raw) {
  if (w_raw.rows() != w_raw.cols()) {
    throw DimensionError("antisymmetrize: matrix must be square, got " +
                         shape_string(w_raw.rows(), w_raw.cols()));
  }
  return w_raw - w_raw.transpose();
}

Matrix cayley_orthogonal(const Matrix& s) {
  if (s.rows() != s.cols()) {
    throw DimensionError("cayley_orthogonal: matrix must be square, got " +
                         shape_string(s.rows(), s.cols()));
  }
  const double asym = s.size() ? (s + s.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (asym > 1e-12) {
    throw InvalidArgument("cayley_orthogonal: input is not antisymmetric (max |S+S^T| = " +
                          std::to_string(asym) + ")");
  }
  const Matrix eye = Matrix::Identity(s.rows(), s.cols());
  // (I - S) and (I + S)^{-1} commute, so one solve suffices.
  const Matrix q = Matrix(eye + s).partialPivLu().solve(Matrix(eye - s));
  if (!q.allFinite()) throw Error("cayley_orthogonal: linear solve failed");
  return q;
}

Matrix effective_weight(const Matrix& w_raw, WeightMode mode, double gamma) {
  Matrix w;
  switch (mode) {
    case WeightMode::free:
      w = w_raw;
      break;
    case WeightMode::antisymmetric:
      w = antisymmetrize(w_raw);
      break;
    case WeightMode::cayley_orthogonal:
      w = cayley_orthogonal(antisymmetrize(w_raw));
      break;
  }
  if (gamma != 0.0) w.diagonal().array() -= gamma;
  return w;
}

Matrix weight_pullback(const Matrix& w_raw, WeightMode mode, const Matrix& grad_effective) {
  switch (mode) {
    case WeightMode::free:
      return grad_effective;
    case WeightMode::antisymmetric:
      return grad_effective - grad_effective.transpose();
    case WeightMode::cayley_orthogonal: {
      // dQ = -(I + Q) dS (I + S)^{-1}
      const Matrix s = antisymmetrize(w_raw);
      const Matrix eye = Matrix::Identity(s.rows(), s.cols());
      const Matrix inv = Matrix(eye + s).partialPivLu().inverse();
      const Matrix q = (eye - s) * inv;
      const Matrix grad_s = -(eye + q).transpose() * grad_effective * inv.transpose();
      return grad_s - grad_s.transpose();
    }
  }
  return grad_effective;
}

PropagationContext make_context(const Graph& g, const ModelConfig& config) {
  return make_context(g, connected_components(g), config);
}

PropagationContext make_context(const Graph& g, const ComponentStructure& comps,
                                const ModelConfig& config) {
  if (comps.num_nodes() != g.num_nodes()) {
    throw DimensionError("make_context: component structure does not match graph");
  }
  PropagationContext ctx;
  ctx.n = g.num_nodes();
  ctx.edges = g.num_edges();
  ctx.comps = comps;
  ctx.norm_adj = normalized_adjacency(g, false);
  if (config.kind == DynamicsKind::gcn) {
    ctx.gcn_adj = config.gcn_self_loops ? normalized_adjacency(g, true) : ctx.norm_adj;
  }
  if (is_chebyshev(config.kind)) {
    SparseMatrix eye(ctx.n, ctx.n);
    eye.setIdentity();
    if (config.cheb_normalized) {
      // lambda_max taken as 2, so (2 / 2) (I - A_hat) - I = -A_hat.
      ctx.cheb_op = -ctx.norm_adj;
    } else {
      const SparseMatrix lap = operators(g, false).laplacian;
      Vector tmp(ctx.n);
      auto apply = [&](const Vector& in, Vector& out) {
        tmp = lap * in;
        out = lap * tmp;
      };
      double lambda_max = 0;
      if (ctx.n > 0 && ctx.edges > 0) {
        const auto r = power_iteration<double>(apply, ctx.n, 1e-10, 10000);
        lambda_max = 1.01 * std::sqrt(std::max(0.0, r.value));
      }
      if (lambda_max > 0) {
        ctx.cheb_op = (2.0 / lambda_max) * lap - eye;
      } else {
        ctx.cheb_op = -eye;
      }
    }
  }
  if (ctx.n <= kDenseOperatorNodes) {
    ctx.norm_adj_dense = Matrix(ctx.norm_adj);
    if (config.kind == DynamicsKind::gcn) ctx.gcn_adj_dense = Matrix(ctx.gcn_adj);
    if (is_chebyshev(config.kind)) ctx.cheb_op_dense = Matrix(ctx.cheb_op);
  }
  return ctx;
}

Matrix apply_layer(const ModelStack& stack, const PropagationContext& ctx, int layer,
                   const Matrix& h, LayerCache* cache) {
  const auto& c = stack.config;
  const auto& p = stack.params.layers.at(static_cast<std::size_t>(layer));
  LayerCache local;
  LayerCache& lc = cache ? *cache : local;
  lc.w_eff.clear();
  for (const auto& w : p.weights) lc.w_eff.push_back(effective_weight(w, c.mode, c.gamma));

  switch (c.kind) {
    case DynamicsKind::s3gnn: {
      lc.coefficients = expand_coefficients(p.alpha, ctx.comps.count());
      lc.mixed = global_mix_apply(ctx.comps, lc.coefficients, h);
      Matrix inner;
      if (c.spatial_term) {
        lc.spatial = apply_op(ctx.norm_adj, ctx.norm_adj_dense, h);
        if (lc.w_eff.size() == 1) {
          inner = (lc.mixed + lc.spatial) * lc.w_eff[0];
        } else {
          inner = lc.mixed * lc.w_eff[0] + lc.spatial * lc.w_eff[1];
        }
      } else {
        inner = lc.mixed * lc.w_eff[0];
      }
      return c.residual ? Matrix(h + c.epsilon * inner) : Matrix(c.epsilon * inner);
    }
    case DynamicsKind::gcn: {
      lc.spatial = apply_op(ctx.gcn_adj, ctx.gcn_adj_dense, h);
      return (lc.spatial * lc.w_eff[0]).array().tanh().matrix();
    }
    case DynamicsKind::chebnet:
    case DynamicsKind::stable_chebnet: {
      lc.cheb.clear();
      lc.cheb.push_back(h);
      if (c.cheb_order >= 1) lc.cheb.push_back(apply_op(ctx.cheb_op, ctx.cheb_op_dense, h));
      for (int k = 2; k <= c.cheb_order; ++k) {
        lc.cheb.push_back(2.0 * apply_op(ctx.cheb_op, ctx.cheb_op_dense, lc.cheb[k - 1]) -
                          lc.cheb[k - 2]);
      }
      Matrix inner = Matrix::Zero(h.rows(), h.cols());
      for (int k = 0; k <= c.cheb_order; ++k) inner.noalias() += lc.cheb[k] * lc.w_eff[k];
      if (c.kind == DynamicsKind::stable_chebnet) return h + c.epsilon * inner;
      return inner;
    }
    case DynamicsKind::diag_filter: {
      lc.coefficients = expand_coefficients(p.log_filter, ctx.comps.count()).array().exp();
      return global_mix_apply(ctx.comps, lc.coefficients, h);
    }
  }
  throw InvalidArgument("apply_layer: unknown dynamics kind");
}

ForwardTrace forward(const ModelStack& stack, const PropagationContext& ctx, const Matrix& x) {
  check_dims(stack, ctx, x);
  const auto& c = stack.config;
  const auto& heads = stack.params.heads;
  ForwardTrace trace;
  trace.input = x;
  trace.states.reserve(static_cast<std::size_t>(c.layers) + 1);
  trace.caches.resize(static_cast<std::size_t>(c.layers));
  trace.states.push_back(c.heads ? add_bias(x * heads.encoder_w, heads.encoder_b) : x);
  for (int l = 0; l < c.layers; ++l) {
    trace.states.push_back(apply_layer(stack, ctx, l, trace.states.back(), &trace.caches[l]));
  }
  const Matrix& last = trace.states.back();
  trace.readout = c.graph_level ? Matrix(last.colwise().mean()) : last;
  if (c.heads) {
    trace.hidden =
        add_bias(trace.readout * heads.decoder_w1, heads.decoder_b1).array().tanh().matrix();
    trace.output = add_bias(trace.hidden * heads.decoder_w2, heads.decoder_b2);
  } else {
    trace.output = trace.readout;
  }
  return trace;
}

ForwardTrace s3_forward(const ModelStack& stack, const Graph& g, const ComponentStructure& comps,
                        const Matrix& x) {
  if (stack.config.kind != DynamicsKind::s3gnn) {
    throw InvalidArgument("s3_forward: stack kind is " + to_string(stack.config.kind));
  }
  return forward(stack, make_context(g, comps, stack.config), x);
}

ForwardTrace baseline_forward(const ModelStack& stack, const Graph& g,
                              const ComponentStructure& comps, const Matrix& x) {
  if (stack.config.kind == DynamicsKind::s3gnn) {
    throw InvalidArgument("baseline_forward: stack kind is s3gnn");
  }
  return forward(stack, make_context(g, comps, stack.config), x);
}

Parameters backward(const ForwardTrace& trace, const ModelStack& stack,
                    const PropagationContext& ctx, const Matrix& grad_output) {
  const auto& c = stack.config;
  const auto& heads = stack.params.heads;
  if (trace.states.size() != static_cast<std::size_t>(c.layers) + 1 ||
      trace.caches.size() != static_cast<std::size_t>(c.layers)) {
    throw DimensionError("backward: trace depth does not match the stack");
  }
  if (grad_output.rows() != trace.output.rows() || grad_output.cols() != trace.output.cols()) {
    throw DimensionError(
        "backward: gradient shape " + shape_string(grad_output.rows(), grad_output.cols()) +
        " does not match output " + shape_string(trace.output.rows(), trace.output.cols()));
  }
  Parameters grads = stack.params.zeros_like();

  Matrix grad_readout;
  if (c.heads) {
    auto& g = grads.heads;
    g.decoder_b2 = column_sums(grad_output);
    g.decoder_w2 = trace.hidden.transpose() * grad_output;
    const Matrix grad_pre = ((grad_output * heads.decoder_w2.transpose()).array() *
                             (1.0 - trace.hidden.array().square()))
                                .matrix();
    g.decoder_b1 = column_sums(grad_pre);
    g.decoder_w1 = trace.readout.transpose() * grad_pre;
    grad_readout = grad_pre * heads.decoder_w1.transpose();
  } else {
    grad_readout = grad_output;
  }

  const Eigen::Index n = trace.states.back().rows();
  Matrix grad_h = c.graph_level ? Matrix(Matrix::Ones(n, 1) * grad_readout / static_cast<double>(n))
                                : grad_readout;

  for (int l = c.layers - 1; l >= 0; --l) {
    const auto& lc = trace.caches[l];
    const Matrix& h = trace.states[l];
    const auto& p = stack.params.layers[l];
    auto& gl = grads.layers[l];
    std::vector<Matrix> grad_eff(lc.w_eff.size());
    Matrix grad_in;

    switch (c.kind) {
      case DynamicsKind::s3gnn: {
        const Matrix grad_inner = c.epsilon * grad_h;
        Matrix grad_mixed, grad_spatial;
        if (c.spatial_term && lc.w_eff.size() == 1) {
          grad_eff[0] = (lc.mixed + lc.spatial).transpose() * grad_inner;
          grad_mixed = grad_inner * lc.w_eff[0].transpose();
          grad_spatial = grad_mixed;
        } else if (c.spatial_term) {
          grad_eff[0] = lc.mixed.transpose() * grad_inner;
          grad_eff[1] = lc.spatial.transpose() * grad_inner;
          grad_mixed = grad_inner * lc.w_eff[0].transpose();
          grad_spatial = grad_inner * lc.w_eff[1].transpose();
        } else {
          grad_eff[0] = lc.mixed.transpose() * grad_inner;
          grad_mixed = grad_inner * lc.w_eff[0].transpose();
        }
        grad_in = global_mix_apply(ctx.comps, lc.coefficients, grad_mixed);
        if (c.spatial_term) grad_in += apply_op_t(ctx.norm_adj, ctx.norm_adj_dense, grad_spatial);
        if (c.residual) grad_in += grad_h;
        gl.alpha =
            fold_coefficients(mixing_coefficient_grad(ctx.comps, grad_mixed, h), p.alpha.size());
        break;
      }
      case DynamicsKind::gcn: {
        const Matrix& out = trace.states[l + 1];
        const Matrix grad_pre = (grad_h.array() * (1.0 - out.array().square())).matrix();
        grad_eff[0] = lc.spatial.transpose() * grad_pre;
        grad_in = apply_op_t(ctx.gcn_adj, ctx.gcn_adj_dense, grad_pre * lc.w_eff[0].transpose());
        break;
      }
      case DynamicsKind::chebnet:
      case DynamicsKind::stable_chebnet: {
        const bool stable = c.kind == DynamicsKind::stable_chebnet;
        const Matrix grad_inner = stable ? Matrix(c.epsilon * grad_h) : grad_h;
        const int order = c.cheb_order;
        std::vector<Matrix> grad_t(static_cast<std::size_t>(order) + 1);
        for (int k = 0; k <= order; ++k) {
          grad_eff[k] = lc.cheb[k].transpose() * grad_inner;
          grad_t[k] = grad_inner * lc.w_eff[k].transpose();
        }
        for (int k = order; k >= 2; --k) {
          grad_t[k - 1] += 2.0 * apply_op_t(ctx.cheb_op, ctx.cheb_op_dense, grad_t[k]);
          grad_t[k - 2] -= grad_t[k];
        }
        if (order >= 1) grad_t[0] += apply_op_t(ctx.cheb_op, ctx.cheb_op_dense, grad_t[1]);
        grad_in = grad_t[0];
        if (stable) grad_in += grad_h;
        break;
      }
      case DynamicsKind::diag_filter: {
        const Vector grad_c = mixing_coefficient_grad(ctx.comps, grad_h, h);
        gl.log_filter =
            fold_coefficients(grad_c.cwiseProduct(lc.coefficients), p.log_filter.size());
        grad_in = global_mix_apply(ctx.comps, lc.coefficients, grad_h);
        break;
      }
    }
    for (std::size_t w = 0; w < lc.w_eff.size(); ++w) {
      gl.weights[w] = weight_pullback(p.weights[w], c.mode, grad_eff[w]);
    }
    grad_h = std::move(grad_in);
  }

  if (c.heads) {
    grads.heads.encoder_w = trace.input.transpose() * grad_h;
    grads.heads.encoder_b = column_sums(grad_h);
  }
  return grads;
}

ModelStack transposed_stack(const ModelStack& stack) {
  ModelStack out = stack;
  for (auto& layer : out.params.layers)
    for (auto& w : layer.weights) w.transposeInPlace();
  return out;
}

Matrix dense_mixing_operator(const ModelStack& stack, const PropagationContext& ctx, int layer) {
  const auto& c = stack.config;
  const auto& p = stack.params.layers.at(static_cast<std::size_t>(layer));
  switch (c.kind) {
    case DynamicsKind::s3gnn: {
      Matrix m = dense_projector(ctx.comps, expand_coefficients(p.alpha, ctx.comps.count()));
      if (c.spatial_term) m += Matrix(ctx.norm_adj);
      return m;
    }
    case DynamicsKind::diag_filter:
      return dense_projector(ctx.comps,
                             expand_coefficients(p.log_filter, ctx.comps.count()).array().exp());
    default:
      throw NotApplicable("dense_mixing_operator: defined for s3gnn and diag_filter only");
  }
}

LinearLayer linear_layer(const ModelStack& stack, const PropagationContext& ctx, int layer) {
  const auto& c = stack.config;
  const auto& p = stack.params.layers.at(static_cast<std::size_t>(layer));
  LinearLayer out;
  std::vector<Matrix> w;
  for (const auto& raw : p.weights) w.push_back(effective_weight(raw, c.mode, c.gamma));
  switch (c.kind) {
    case DynamicsKind::s3gnn: {
      out.identity = c.residual;
      out.step = c.epsilon;
      const Matrix proj =
          dense_projector(ctx.comps, expand_coefficients(p.alpha, ctx.comps.count()));
      if (!c.spatial_term) {
        out.terms.push_back({proj, w[0]});
      } else if (w.size() == 1) {
        out.terms.push_back({proj + Matrix(ctx.norm_adj), w[0]});
      } else {
        out.terms.push_back({proj, w[0]});
        out.terms.push_back({Matrix(ctx.norm_adj), w[1]});
      }
      return out;
    }
    case DynamicsKind::chebnet:
    case DynamicsKind::stable_chebnet: {
      const bool stable = c.kind == DynamicsKind::stable_chebnet;
      out.identity = stable;
      out.step = stable ? c.epsilon : 1.0;
      const Matrix op = Matrix(ctx.cheb_op);
      std::vector<Matrix> t{Matrix::Identity(ctx.n, ctx.n)};
      if (c.cheb_order >= 1) t.push_back(op);
      for (int k = 2; k <= c.cheb_order; ++k) t.push_back(2.0 * op * t[k - 1] - t[k - 2]);
      for (int k = 0; k <= c.cheb_order; ++k) out.terms.push_back({t[k], w[k]});
      return out;
    }
    case DynamicsKind::diag_filter:
      out.terms.push_back(
          {dense_mixing_operator(stack, ctx, layer), Matrix::Identity(c.width, c.width)});
      return out;
    case DynamicsKind::gcn:
      break;
  }
  throw NotApplicable("linear_layer: GCN layers are nonlinear");
}

}  // namespace s3gnn
