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

// Losses, Adam, the training loop and finite-difference gradient checks.

#ifndef S3GNN_TRAINING_HPP_
#define S3GNN_TRAINING_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "s3gnn/model.hpp"
#include "s3gnn/tasks.hpp"

namespace s3gnn {

enum class LossKind { mse, log10_mse };

/// Mean squared error over rows with nonzero mask. Throws on an empty mask.
double masked_mse(const Matrix& pred, const Matrix& target, const Vector& mask);
/// d(masked_mse)/d(pred).
Matrix masked_mse_grad(const Matrix& pred, const Matrix& target, const Vector& mask);
/// log10 for reporting; -inf for a zero error.
double log10_mse(double mse);
double loss(const Matrix& pred, const Matrix& target, const Vector& mask, LossKind kind);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // L2 term added to the gradient
};

struct AdamState {
  Parameters m;
  Parameters v;
  long t = 0;
};

AdamState adam_init(const Parameters& params);
/// One bias-corrected update; advances state.t.
void adam_step(Parameters& params, AdamState& state, const Parameters& grads,
               const AdamConfig& config);

struct TrainConfig {
  ModelConfig model;
  AdamConfig adam;
  int epochs = 1000;
  int batch_size = 16;     // graphs accumulated per update
  std::uint64_t seed = 0;  // initialization and shuffling
  int alpha_every = 50;    // epochs between alpha snapshots
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;  // epoch 0: initial loss; later: mean over the epoch's batches
  double val_loss = 0;
};

struct AlphaSnapshot {
  int epoch = 0;
  std::vector<double> alpha;  // per layer
};

struct TrainReport {
  TaskKind task = TaskKind::barbell;
  std::uint64_t seed = 0;
  std::size_t params = 0;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val = 0;
  double test_mse = 0;
  double test_log10_mse = 0;
  std::vector<AlphaSnapshot> alpha_trace;
  ModelStack model;  // best-validation checkpoint
  double wall_clock_s = 0;
};

/// Sets the head dimensions a task needs on top of `base`.
ModelConfig task_model_config(ModelConfig base, TaskKind task);

/// Throws NumericalAbort on a non-finite loss.
TrainReport train(const TrainConfig& config, const Dataset& data);

/// Mean per-sample MSE of `stack` over `indices`.
double evaluate(const ModelStack& stack, const Dataset& data, const std::vector<int>& indices);

struct GradCheckResult {
  double max_rel_error = 0;
  std::string tensor;
  std::size_t index = 0;
  double analytic = 0;
  double numeric = 0;
};

/// Central differences of the masked MSE over every trainable scalar.
/// Relative error is |a - n| / max(|a|, |n|, floor).
GradCheckResult gradient_check(const ModelStack& stack, const Sample& sample, double h = 1e-5,
                               double floor = 1e-6);

/// Decoder hidden width that brings param_count of `config` closest to
/// `target`. Returns the adjusted config.
ModelConfig match_param_count(ModelConfig config, std::size_t target);
/// |a - b| / max(a, b).
double param_gap(std::size_t a, std::size_t b);

}  // namespace s3gnn

#endif  // S3GNN_TRAINING_HPP_
