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
#include "s3gnn/training.hpp"

namespace s3gnn {
namespace {

TEST(Loss, Examples) {
  const Matrix p = Matrix::Constant(2, 1, 3.0);
  EXPECT_EQ(masked_mse(p, p, Vector::Ones(2)), 0.0);
  EXPECT_EQ(loss(p, p, Vector::Ones(2), LossKind::log10_mse),
            -std::numeric_limits<double>::infinity());
  const Matrix pred = (Matrix(2, 1) << 0, 2).finished();
  const Matrix target = (Matrix(2, 1) << 1, 0).finished();
  EXPECT_EQ(masked_mse(pred, target, Vector::Ones(2)), 2.5);
  EXPECT_EQ(masked_mse(pred, target, (Vector(2) << 0, 1).finished()), 4.0);
  EXPECT_NEAR(log10_mse(0.01), -2.0, 1e-15);
  EXPECT_THROW(masked_mse(pred, target, Vector::Zero(2)), InvalidArgument);
  EXPECT_THROW(masked_mse(pred, Matrix(3, 1), Vector::Ones(2)), DimensionError);
}

TEST(Loss, GradientMatchesDifferences) {
  const Matrix pred = (Matrix(3, 2) << 0.1, -0.4, 2.0, 0.3, -1.0, 0.0).finished();
  const Matrix target = (Matrix(3, 2) << 0.0, 0.2, 1.0, 1.0, 0.5, -0.5).finished();
  const Vector mask = (Vector(3) << 1, 0, 1).finished();
  const Matrix g = masked_mse_grad(pred, target, mask);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 2; ++c) {
      Matrix up = pred, down = pred;
      up(r, c) += 1e-6;
      down(r, c) -= 1e-6;
      const double fd = (masked_mse(up, target, mask) - masked_mse(down, target, mask)) / 2e-6;
      EXPECT_NEAR(g(r, c), fd, 1e-8);
    }
  }
}

Parameters scalar_params(double v) {
  Parameters p;
  p.layers.resize(1);
  p.layers[0].alpha = Vector::Constant(1, v);
  return p;
}

TEST(Adam, FirstStep) {
  Parameters p = scalar_params(0.0);
  AdamState st = adam_init(p);
  AdamConfig cfg;
  cfg.lr = 0.1;
  adam_step(p, st, scalar_params(1.0), cfg);
  // exact: -lr * m_hat / (sqrt(v_hat) + eps) with m_hat = v_hat = 1
  EXPECT_NEAR(p.layers[0].alpha(0), -0.1 / (1.0 + 1e-8), 1e-17);
  EXPECT_NEAR(p.layers[0].alpha(0), -0.0999999999, 1e-9);
  EXPECT_EQ(st.t, 1);
  EXPECT_NEAR(st.m.layers[0].alpha(0), 0.1, 1e-16);
  EXPECT_NEAR(st.v.layers[0].alpha(0), 0.001, 1e-18);
}

TEST(Adam, ZeroGradientKeepsParamsAndDecaysMoments) {
  Parameters p = scalar_params(2.0);
  AdamState st = adam_init(p);
  AdamConfig cfg;
  adam_step(p, st, scalar_params(1.0), cfg);
  const double after_first = p.layers[0].alpha(0);
  const double m1 = st.m.layers[0].alpha(0);
  const double v1 = st.v.layers[0].alpha(0);
  Parameters zero = scalar_params(0.0);
  Parameters q = p;
  AdamState fresh = adam_init(q);
  adam_step(q, fresh, zero, cfg);
  EXPECT_EQ(q.layers[0].alpha(0), after_first);
  adam_step(p, st, zero, cfg);
  EXPECT_NEAR(st.m.layers[0].alpha(0), 0.9 * m1, 1e-17);
  EXPECT_NEAR(st.v.layers[0].alpha(0), 0.999 * v1, 1e-18);
}

TEST(Adam, WeightDecayAddsL2Term) {
  Parameters p = scalar_params(1.0);
  AdamState st = adam_init(p);
  AdamConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 1.0;
  adam_step(p, st, scalar_params(0.0), cfg);  // effective gradient 1
  EXPECT_NEAR(p.layers[0].alpha(0), 1.0 - 0.1 / (1.0 + 1e-8), 1e-16);
}

TrainConfig small_config(TaskKind task) {
  TrainConfig cfg;
  cfg.model = task_model_config(ModelConfig{}, task);
  cfg.model.width = 4;
  cfg.model.layers = 2;
  cfg.model.decoder_hidden = 4;
  cfg.epochs = 5;
  cfg.batch_size = 4;
  cfg.adam.lr = 1e-2;
  cfg.seed = 3;
  cfg.alpha_every = 2;
  return cfg;
}

TEST(Train, ZeroEpochs) {
  const Dataset data = make_barbell_dataset(10, {3, 1}, 1);
  auto cfg = small_config(TaskKind::barbell);
  cfg.epochs = 0;
  const auto report = train(cfg, data);
  ASSERT_EQ(report.history.size(), 1u);
  EXPECT_EQ(report.history[0].epoch, 0);
  EXPECT_EQ(report.best_epoch, 0);
  EXPECT_EQ(report.alpha_trace.size(), 1u);
  EXPECT_EQ(report.test_mse, evaluate(init_model(cfg.model, cfg.seed), data, data.split.test));
}

TEST(Train, DeterministicAndImproves) {
  const Dataset data = make_barbell_dataset(20, {3, 1}, 2);
  auto cfg = small_config(TaskKind::barbell);
  cfg.epochs = 40;
  const auto a = train(cfg, data);
  const auto b = train(cfg, data);
  ASSERT_EQ(a.history.size(), 41u);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].val_loss, b.history[i].val_loss);
  }
  EXPECT_EQ(a.test_mse, b.test_mse);
  EXPECT_LT(a.history.back().train_loss, a.history.front().train_loss);
  EXPECT_LE(a.best_val, a.history.front().val_loss);
  // snapshots at 0, 2, 4, ..., 40
  EXPECT_EQ(a.alpha_trace.size(), 21u);
  EXPECT_EQ(a.alpha_trace.back().alpha.size(), 2u);
}

TEST(Train, GraphLevelTask) {
  const Dataset data =
      make_property_dataset(TaskKind::diameter, 10, {8, 12, {Family::caterpillar}}, 4);
  auto cfg = small_config(TaskKind::diameter);
  const auto r = train(cfg, data);
  EXPECT_TRUE(std::isfinite(r.test_mse));
  EXPECT_EQ(r.params, param_count(r.model));
}

TEST(Train, RejectsMismatchedHeads) {
  const Dataset data =
      make_property_dataset(TaskKind::diameter, 4, {8, 10, {Family::caterpillar}}, 4);
  auto cfg = small_config(TaskKind::sssp);  // node-level heads on a graph-level task
  EXPECT_THROW(train(cfg, data), InvalidArgument);
  cfg = small_config(TaskKind::diameter);
  cfg.adam.lr = 0;
  EXPECT_THROW(train(cfg, data), InvalidArgument);
}

TEST(Train, NonFiniteLossAborts) {
  const Dataset data = make_barbell_dataset(6, {3, 1}, 5);
  auto cfg = small_config(TaskKind::barbell);
  cfg.model.kind = DynamicsKind::stable_chebnet;
  cfg.model.mode = WeightMode::free;
  cfg.model.epsilon = 1e200;
  try {
    train(cfg, data);
    FAIL() << "expected NumericalAbort";
  } catch (const NumericalAbort& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 0"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("layer0.w0"), std::string::npos);
  }
}

TEST(GradientCheck, ExamplesWithHeads) {
  const Sample s = make_barbell_task(3, 1, 7);
  for (auto [kind, mode, tol] :
       {std::tuple{DynamicsKind::s3gnn, WeightMode::antisymmetric, 1e-6},
        std::tuple{DynamicsKind::s3gnn, WeightMode::cayley_orthogonal, 1e-5},
        std::tuple{DynamicsKind::diag_filter, WeightMode::free, 1e-6}}) {
    ModelConfig c = task_model_config(ModelConfig{}, TaskKind::barbell);
    c.kind = kind;
    c.mode = mode;
    c.width = 4;
    c.layers = 3;
    c.decoder_hidden = 3;
    c.filter_init = 0.9;
    const auto r = gradient_check(init_model(c, 11), s);
    EXPECT_LE(r.max_rel_error, tol)
        << to_string(kind) << "/" << to_string(mode) << " at " << r.tensor;
  }
}

TEST(ParamMatching, WithinOnePercent) {
  ModelConfig s3 = task_model_config(ModelConfig{}, TaskKind::barbell);
  s3.width = 32;
  s3.layers = 4;
  const auto target = param_count(init_model(s3, 0));
  ModelConfig cheb = s3;
  cheb.kind = DynamicsKind::stable_chebnet;
  cheb.cheb_order = 10;
  cheb.width = 10;
  const auto matched = match_param_count(cheb, target);
  EXPECT_LE(param_gap(param_count(init_model(matched, 0)), target), 0.01);
  EXPECT_EQ(param_gap(100, 100), 0.0);
  EXPECT_NEAR(param_gap(99, 100), 0.01, 1e-15);
}

}  // namespace
}  // namespace s3gnn
