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

// Run configuration and the experiment drivers shared by the command-line
// tool and the acceptance harness. A run writes plain files only: CSVs, JSON
// summaries, checkpoints and a manifest of content hashes.

#ifndef S3GNN_RUN_HPP_
#define S3GNN_RUN_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "s3gnn/sensitivity.hpp"
#include "s3gnn/training.hpp"

namespace s3gnn {

struct DatasetSection {
  std::string dir;  // load from here when set, otherwise generate
  int count = 100;
  std::uint64_t seed = 0;
  int clique = 23;
  int path = 4;
  int min_n = 25;
  int max_n = 35;
  std::vector<std::string> families{"er", "ba", "caterpillar"};
};

struct AnalysisSection {
  std::string norm = "fro";
  int layer = -1;  // influence depth; -1 means every layer
  int bins = 30;
  double gradcheck_tol = 1e-5;
};

struct RunConfig {
  TaskKind task = TaskKind::barbell;
  DatasetSection data;
  ModelConfig model;             // head shape fields are derived from the task
  std::size_t match_params = 0;  // > 0: resize the decoder to this count
  AdamConfig adam;
  int epochs = 1000;
  int batch_size = 16;
  int alpha_every = 50;
  std::string seeds = "0";
  AnalysisSection analysis;
  std::string out = "runs";
};

/// Overlays a JSON document on `config`. Unknown keys and wrong types throw
/// InvalidArgument.
void apply_config_json(RunConfig& config, const std::string& text);
std::string config_json(const RunConfig& config);
RunConfig load_run_config(const std::string& path);

/// "3", "0..3" or "0,2,5".
std::vector<std::uint64_t> parse_seeds(const std::string& text);

Dataset resolve_dataset(const RunConfig& config);
TrainConfig train_config(const RunConfig& config, std::uint64_t seed);

/// Trains one seed and writes train.csv, alpha.csv, alpha_trace.csv,
/// checkpoint.json and summary.json into `dir`.
TrainReport run_training(const RunConfig& config, const Dataset& data, std::uint64_t seed,
                         const std::string& dir);

struct SeedStats {
  double mean = 0;
  double std = 0;  // sample standard deviation; 0 for one seed
  double median = 0;
};
SeedStats seed_stats(std::vector<double> values);

/// aggregate.json over the seed reports of one configuration.
void write_aggregate(const RunConfig& config, const std::vector<TrainReport>& reports,
                     const std::string& path);

struct AblationRow {
  WeightMode mode = WeightMode::free;
  std::uint64_t seed = 0;
  double test_mse = 0;
  double test_log10_mse = 0;
};

/// Trains every weight mode for every seed under `dir`/<mode>/seed_<n> and
/// writes `dir`/ablation.csv.
std::vector<AblationRow> run_ablation(const RunConfig& config, const Dataset& data,
                                      const std::vector<std::uint64_t>& seeds,
                                      const std::string& dir);

/// manifest.json listing every other file under `dir` with its size and hash.
void write_manifest(const std::string& dir);

}  // namespace s3gnn

#endif  // S3GNN_RUN_HPP_
