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

// Synthetic regression tasks and their on-disk cache.
//
// Every sample carries three input channels. Barbell: (value, source flag,
// target flag). Property tasks: (1, degree, source flag).

#ifndef S3GNN_TASKS_HPP_
#define S3GNN_TASKS_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "s3gnn/graph.hpp"

namespace s3gnn {

enum class TaskKind { barbell, diameter, sssp, eccentricity };

std::string to_string(TaskKind task);
TaskKind parse_task_kind(std::string_view name);
/// Diameter is the only graph-level task.
bool is_graph_level(TaskKind task);

inline constexpr int kTaskInputDim = 3;

struct Sample {
  Graph graph;
  ComponentStructure comps;
  Matrix x;       // n x 3
  Matrix target;  // n x 1, or 1 x 1 for graph-level tasks
  Vector mask;    // one 0/1 weight per target row
};

struct Split {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

enum class Family { erdos_renyi, barabasi_albert, caterpillar };

std::string to_string(Family family);
Family parse_family(std::string_view name);

struct BarbellTaskParams {
  int clique = 23;
  int path = 4;
};

struct PropertyTaskParams {
  int min_n = 25;
  int max_n = 35;
  std::vector<Family> families{Family::erdos_renyi, Family::barabasi_albert, Family::caterpillar};
};

struct Dataset {
  TaskKind task = TaskKind::barbell;
  std::uint64_t seed = 0;
  BarbellTaskParams barbell;
  PropertyTaskParams property;
  std::vector<Sample> samples;
  Split split;
};

/// Source clique values are uniform(-1, 1); every target-clique node regresses
/// their mean. Only the target clique is supervised.
Sample make_barbell_task(int clique, int path, std::uint64_t seed);
/// Same, with explicit source values (one per source-clique node).
Sample make_barbell_task(int clique, int path, const std::vector<double>& source_values);

/// 80/10/10 split over contiguous index ranges; every split is nonempty.
Split make_split(int count);

Dataset make_barbell_dataset(int count, const BarbellTaskParams& params, std::uint64_t seed);

/// Connected graphs only; each sample redraws up to 100 times.
Dataset make_property_dataset(TaskKind task, int count, const PropertyTaskParams& params,
                              std::uint64_t seed);

/// Targets and features for a property task on a given graph (source = node 0).
Sample make_property_sample(TaskKind task, const Graph& g);

/// All-pairs hop distances by Floyd-Warshall; kUnreachable off-component.
std::vector<std::vector<int>> floyd_warshall(const Graph& g);

/// Recomputes every target with the brute-force oracle. Throws on mismatch.
void verify_targets(const Dataset& data);

/// FNV-1a over the canonical text of one sample, and over the sample hashes.
std::uint64_t sample_hash(const Sample& s);
std::uint64_t dataset_hash(const Dataset& data);
std::string hex_hash(std::uint64_t h);

/// Layout: manifest.json plus sample_NNNN.edges / sample_NNNN.targets.
void save_dataset(const Dataset& data, const std::string& dir);
/// Checks per-sample hashes and the target oracle.
Dataset load_dataset(const std::string& dir);

}  // namespace s3gnn

#endif  // S3GNN_TASKS_HPP_
