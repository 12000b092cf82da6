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

#include "s3gnn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "s3gnn/errors.hpp"
#include "s3gnn/rng.hpp"
#include "s3gnn/sensitivity.hpp"

namespace s3gnn {

namespace {

std::vector<std::span<double>> spans_of(Parameters& p) {
  std::vector<std::span<double>> out;
  p.for_each([&](const std::string&, std::span<double> s) { out.push_back(s); });
  return out;
}

std::vector<std::span<const double>> spans_of(const Parameters& p) {
  std::vector<std::span<const double>> out;
  p.for_each([&](const std::string&, std::span<const double> s) { out.push_back(s); });
  return out;
}

double mean_loss(const ModelStack& stack, const Dataset& data,
                 const std::vector<PropagationContext>& contexts, const std::vector<int>& indices) {
  if (indices.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0;
  for (int idx : indices) {
    const Sample& s = data.samples[idx];
    const auto trace = forward(stack, contexts[idx], s.x);
    total += masked_mse(trace.output, s.target, s.mask);
  }
  return total / static_cast<double>(indices.size());
}

std::vector<PropagationContext> build_contexts(const Dataset& data, const ModelConfig& model) {
  std::vector<PropagationContext> out;
  out.reserve(data.samples.size());
  for (const auto& s : data.samples) out.push_back(make_context(s.graph, s.comps, model));
  return out;
}

[[noreturn]] void abort_non_finite(int epoch, const ModelStack& stack, const std::string& where) {
  std::string norms;
  stack.params.for_each([&](const std::string& name, std::span<const double> s) {
    double sq = 0;
    for (double v : s) sq += v * v;
    char buf[96];
    std::snprintf(buf, sizeof buf, " %s=%.6g", name.c_str(), std::sqrt(sq));
    norms += buf;
  });
  throw NumericalAbort("non-finite " + where + " at epoch " + std::to_string(epoch) +
                       "; parameter norms:" + norms);
}

}  // namespace

double masked_mse(const Matrix& pred, const Matrix& target, const Vector& mask) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() ||
      mask.size() != target.rows()) {
    throw DimensionError("loss: pred " + shape_string(pred.rows(), pred.cols()) + ", target " +
                         shape_string(target.rows(), target.cols()) + ", mask length " +
                         std::to_string(mask.size()));
  }
  double total = 0;
  double count = 0;
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    if (mask(r) == 0) continue;
    total += (pred.row(r) - target.row(r)).squaredNorm();
    count += static_cast<double>(pred.cols());
  }
  if (count == 0) throw InvalidArgument("loss: mask selects no entries");
  return total / count;
}

Matrix masked_mse_grad(const Matrix& pred, const Matrix& target, const Vector& mask) {
  masked_mse(pred, target, mask);  // shape and mask checks
  double count = 0;
  for (Eigen::Index r = 0; r < mask.size(); ++r)
    if (mask(r) != 0) count += static_cast<double>(pred.cols());
  Matrix grad = Matrix::Zero(pred.rows(), pred.cols());
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    if (mask(r) != 0) grad.row(r) = 2.0 * (pred.row(r) - target.row(r)) / count;
  }
  return grad;
}

double log10_mse(double mse) {
  if (mse == 0) return -std::numeric_limits<double>::infinity();
  return std::log10(mse);
}

double loss(const Matrix& pred, const Matrix& target, const Vector& mask, LossKind kind) {
  const double mse = masked_mse(pred, target, mask);
  return kind == LossKind::mse ? mse : log10_mse(mse);
}

AdamState adam_init(const Parameters& params) {
  AdamState state;
  state.m = params.zeros_like();
  state.v = params.zeros_like();
  return state;
}

void adam_step(Parameters& params, AdamState& state, const Parameters& grads,
               const AdamConfig& config) {
  auto p = spans_of(params);
  auto g = spans_of(grads);
  auto m = spans_of(state.m);
  auto v = spans_of(state.v);
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
    throw DimensionError("adam_step: parameter, gradient and moment layouts differ");
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (g[k].size() != p[k].size()) throw DimensionError("adam_step: tensor size mismatch");
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      const double grad = g[k][i] + config.weight_decay * p[k][i];
      m[k][i] = config.beta1 * m[k][i] + (1.0 - config.beta1) * grad;
      v[k][i] = config.beta2 * v[k][i] + (1.0 - config.beta2) * grad * grad;
      const double m_hat = m[k][i] / c1;
      const double v_hat = v[k][i] / c2;
      p[k][i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

ModelConfig task_model_config(ModelConfig base, TaskKind task) {
  base.heads = true;
  base.input_dim = kTaskInputDim;
  base.output_dim = 1;
  base.graph_level = is_graph_level(task);
  return base;
}

double evaluate(const ModelStack& stack, const Dataset& data, const std::vector<int>& indices) {
  return mean_loss(stack, data, build_contexts(data, stack.config), indices);
}

TrainReport train(const TrainConfig& config, const Dataset& data) {
  const auto start = std::chrono::steady_clock::now();
  if (config.epochs < 0) throw InvalidArgument("train: epochs must be >= 0");
  if (config.batch_size < 1) throw InvalidArgument("train: batch_size must be >= 1");
  if (!(config.adam.lr > 0)) throw InvalidArgument("train: lr must be positive");
  if (config.alpha_every < 1) throw InvalidArgument("train: alpha_every must be >= 1");
  const auto& mc = config.model;
  if (!mc.heads || mc.input_dim != kTaskInputDim || mc.output_dim != 1 ||
      mc.graph_level != is_graph_level(data.task)) {
    throw InvalidArgument("train: model heads do not match task '" + to_string(data.task) +
                          "' (need input_dim=3, output_dim=1, graph_level=" +
                          (is_graph_level(data.task) ? "true" : "false") + ")");
  }
  if (data.split.train.empty()) throw InvalidArgument("train: empty training split");

  const auto contexts = build_contexts(data, mc);
  const std::vector<int>& val_idx = data.split.val.empty() ? data.split.train : data.split.val;

  TrainReport report;
  report.task = data.task;
  report.seed = config.seed;
  ModelStack stack = init_model(mc, config.seed);
  report.params = param_count(stack);
  AdamState adam = adam_init(stack.params);
  Rng shuffle_rng = Rng(config.seed).fork(0x5348554646ULL);

  EpochRecord initial{0, mean_loss(stack, data, contexts, data.split.train),
                      mean_loss(stack, data, contexts, val_idx)};
  if (!std::isfinite(initial.train_loss) || !std::isfinite(initial.val_loss)) {
    abort_non_finite(0, stack, "loss");
  }
  report.history.push_back(initial);
  report.model = stack;
  report.best_epoch = 0;
  report.best_val = initial.val_loss;
  report.alpha_trace.push_back({0, alpha_by_layer(stack)});

  std::vector<int> order = data.split.train;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<int>(order));
    double epoch_loss = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - begin);
      Parameters grads = stack.params.zeros_like();
      for (std::size_t k = begin; k < end; ++k) {
        const Sample& s = data.samples[order[k]];
        const auto& ctx = contexts[order[k]];
        const auto trace = forward(stack, ctx, s.x);
        const double l = masked_mse(trace.output, s.target, s.mask);
        if (!std::isfinite(l)) abort_non_finite(epoch, stack, "loss");
        epoch_loss += l;
        grads.axpy(scale,
                   backward(trace, stack, ctx, masked_mse_grad(trace.output, s.target, s.mask)));
      }
      adam_step(stack.params, adam, grads, config.adam);
    }
    EpochRecord rec{epoch, epoch_loss / static_cast<double>(order.size()),
                    mean_loss(stack, data, contexts, val_idx)};
    if (!std::isfinite(rec.val_loss)) abort_non_finite(epoch, stack, "validation loss");
    report.history.push_back(rec);
    if (rec.val_loss < report.best_val) {
      report.best_val = rec.val_loss;
      report.best_epoch = epoch;
      report.model = stack;
    }
    if (epoch % config.alpha_every == 0 || epoch == config.epochs) {
      report.alpha_trace.push_back({epoch, alpha_by_layer(stack)});
    }
  }

  const std::vector<int>& test_idx = data.split.test.empty() ? val_idx : data.split.test;
  report.test_mse = mean_loss(report.model, data, contexts, test_idx);
  report.test_log10_mse = log10_mse(report.test_mse);
  report.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

GradCheckResult gradient_check(const ModelStack& stack, const Sample& sample, double h,
                               double floor) {
  const auto ctx = make_context(sample.graph, sample.comps, stack.config);
  const auto trace = forward(stack, ctx, sample.x);
  const Parameters analytic =
      backward(trace, stack, ctx, masked_mse_grad(trace.output, sample.target, sample.mask));
  const auto a_spans = spans_of(analytic);

  ModelStack work = stack;
  auto w_spans = spans_of(work.params);
  std::vector<std::string> names;
  work.params.for_each([&](const std::string& name, std::span<double>) { names.push_back(name); });

  auto eval = [&]() {
    return masked_mse(forward(work, ctx, sample.x).output, sample.target, sample.mask);
  };
  GradCheckResult worst;
  for (std::size_t k = 0; k < w_spans.size(); ++k) {
    for (std::size_t i = 0; i < w_spans[k].size(); ++i) {
      const double saved = w_spans[k][i];
      w_spans[k][i] = saved + h;
      const double up = eval();
      w_spans[k][i] = saved - h;
      const double down = eval();
      w_spans[k][i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = a_spans[k][i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      if (rel > worst.max_rel_error || worst.tensor.empty()) {
        worst = {rel, names[k], i, a, numeric};
      }
    }
  }
  return worst;
}

ModelConfig match_param_count(ModelConfig config, std::size_t target) {
  if (!config.heads) throw InvalidArgument("match_param_count: needs decoder heads");
  config.decoder_hidden = 1;
  const auto c1 = static_cast<double>(param_count(init_model(config, 0)));
  config.decoder_hidden = 2;
  const auto c2 = static_cast<double>(param_count(init_model(config, 0)));
  const double slope = c2 - c1;
  const double hidden = std::round(1.0 + (static_cast<double>(target) - c1) / slope);
  config.decoder_hidden = std::max(1, static_cast<int>(hidden));
  return config;
}

double param_gap(std::size_t a, std::size_t b) {
  const double hi = static_cast<double>(std::max(a, b));
  if (hi == 0) return 0.0;
  return std::abs(static_cast<double>(a) - static_cast<double>(b)) / hi;
}

}  // namespace s3gnn
