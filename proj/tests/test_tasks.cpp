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

#include <filesystem>
#include <fstream>

#include "s3gnn/errors.hpp"
#include "s3gnn/tasks.hpp"

namespace s3gnn {
namespace {

std::string temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("s3gnn_test_" + name);
  std::filesystem::remove_all(p);
  return p.string();
}

TEST(Barbell, Examples) {
  const Sample zero = make_barbell_task(3, 1, std::vector<double>{0, 0, 0});
  EXPECT_EQ(zero.target, Matrix::Zero(7, 1));
  const Sample two = make_barbell_task(2, 0, std::vector<double>{0.5, -0.5});
  EXPECT_EQ(two.graph.num_nodes(), 4);
  EXPECT_EQ(two.mask, (Vector(4) << 0, 0, 1, 1).finished());
  EXPECT_EQ(two.target(2, 0), 0.0);
  EXPECT_EQ(two.target(3, 0), 0.0);
  const Sample big = make_barbell_task(23, 4, 1);
  EXPECT_EQ(big.graph.num_nodes(), 50);
  EXPECT_EQ(big.mask.sum(), 23.0);
  double mean = 0;
  for (int i = 0; i < 23; ++i) mean += big.x(i, 0);
  mean /= 23;
  EXPECT_NEAR(big.target(49, 0), mean, 1e-15);
  EXPECT_EQ(big.x(25, 0), 0.0);  // bridge carries no value
  EXPECT_EQ(big.x(30, 2), 1.0);  // target flag
  EXPECT_THROW(make_barbell_task(1, 1, 0), InvalidArgument);
  EXPECT_THROW(make_barbell_task(3, -1, 0), InvalidArgument);
}

TEST(Split, CoversAndIsDisjoint) {
  for (int count : {3, 10, 57, 500}) {
    const Split s = make_split(count);
    EXPECT_FALSE(s.train.empty());
    EXPECT_FALSE(s.val.empty());
    EXPECT_FALSE(s.test.empty());
    std::vector<int> all = s.train;
    all.insert(all.end(), s.val.begin(), s.val.end());
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    ASSERT_EQ(static_cast<int>(all.size()), count);
    for (int i = 0; i < count; ++i) EXPECT_EQ(all[i], i);
  }
  const Split s = make_split(500);
  EXPECT_EQ(s.train.size(), 400u);
  EXPECT_EQ(s.val.size(), 50u);
  EXPECT_THROW(make_split(2), InvalidArgument);
}

TEST(Property, PathEccentricity) {
  const Sample s = make_property_sample(TaskKind::eccentricity, generate(PathParams{5}));
  EXPECT_EQ(Vector(s.target.col(0)), (Vector(5) << 4, 3, 2, 3, 4).finished());
  EXPECT_EQ(s.x(0, 2), 1.0);
  EXPECT_EQ(s.x(1, 1), 2.0);
  const Sample d = make_property_sample(TaskKind::diameter, generate(PathParams{5}));
  EXPECT_EQ(d.target.rows(), 1);
  EXPECT_EQ(d.target(0, 0), 4.0);
}

TEST(Property, DatasetMatchesOracleAndIsDeterministic) {
  for (auto task : {TaskKind::diameter, TaskKind::sssp, TaskKind::eccentricity}) {
    const PropertyTaskParams params;
    const Dataset a = make_property_dataset(task, 30, params, 7);
    EXPECT_NO_THROW(verify_targets(a));
    for (const auto& s : a.samples) {
      EXPECT_GE(s.graph.num_nodes(), 25);
      EXPECT_LE(s.graph.num_nodes(), 35);
      EXPECT_EQ(s.comps.count(), 1);
    }
    const Dataset b = make_property_dataset(task, 30, params, 7);
    EXPECT_EQ(dataset_hash(a), dataset_hash(b));
    EXPECT_NE(dataset_hash(a), dataset_hash(make_property_dataset(task, 30, params, 8)));
  }
  PropertyTaskParams bad;
  bad.min_n = 2;
  EXPECT_THROW(make_property_dataset(TaskKind::sssp, 10, bad, 0), InvalidArgument);
  EXPECT_THROW(make_property_dataset(TaskKind::diameter, 2, {}, 0), InvalidArgument);
}

TEST(Property, CorruptedTargetIsCaught) {
  Dataset d = make_property_dataset(TaskKind::sssp, 5, {}, 1);
  d.samples[2].target(3, 0) += 1;
  EXPECT_THROW(verify_targets(d), InvalidArgument);
}

TEST(DatasetIo, RoundTrip) {
  const std::string dir = temp_dir("roundtrip");
  const Dataset d = make_property_dataset(TaskKind::eccentricity, 6, {}, 3);
  save_dataset(d, dir);
  const Dataset back = load_dataset(dir);
  EXPECT_EQ(dataset_hash(back), dataset_hash(d));
  ASSERT_EQ(back.samples.size(), d.samples.size());
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    EXPECT_EQ(back.samples[i].graph, d.samples[i].graph);
    EXPECT_EQ(back.samples[i].x, d.samples[i].x);
  }
  EXPECT_EQ(back.split.test, d.split.test);

  const std::string bdir = temp_dir("barbell");
  const Dataset bb = make_barbell_dataset(4, {5, 2}, 9);
  save_dataset(bb, bdir);
  const Dataset bback = load_dataset(bdir);
  EXPECT_EQ(bback.samples[1].x, bb.samples[1].x);  // exact doubles
  EXPECT_EQ(bback.barbell.clique, 5);
}

TEST(DatasetIo, TamperingIsDetected) {
  const std::string dir = temp_dir("tamper");
  save_dataset(make_property_dataset(TaskKind::sssp, 4, {}, 3), dir);
  {
    std::ofstream out(std::filesystem::path(dir) / "sample_0001.edges", std::ios::app);
    out << "";
  }
  EXPECT_NO_THROW(load_dataset(dir));
  std::ofstream(std::filesystem::path(dir) / "sample_0001.edges") << "2 1\n0 1\n";
  EXPECT_THROW(load_dataset(dir), Error);
  EXPECT_THROW(load_dataset(temp_dir("missing")), InvalidArgument);
}

TEST(Names, Parse) {
  EXPECT_EQ(parse_task_kind("sssp"), TaskKind::sssp);
  EXPECT_THROW(parse_task_kind("pagerank"), InvalidArgument);
  EXPECT_EQ(parse_family("ba"), Family::barabasi_albert);
  EXPECT_TRUE(is_graph_level(TaskKind::diameter));
  EXPECT_FALSE(is_graph_level(TaskKind::barbell));
}

}  // namespace
}  // namespace s3gnn
