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

#include "s3gnn/tasks.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "s3gnn/errors.hpp"
#include "s3gnn/io.hpp"
#include "s3gnn/rng.hpp"

namespace s3gnn {

namespace {

constexpr int kMaxRedraws = 100;

std::string targets_text(const Sample& s) {
  std::ostringstream out;
  auto block = [&](const char* tag, const Matrix& m) {
    out << tag << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        out << (c ? " " : "") << format_double(m(r, c));
      }
      out << '\n';
    }
  };
  block("features", s.x);
  block("targets", s.target);
  block("mask", s.mask.transpose());
  return out.str();
}

Matrix read_block(std::istream& in, const std::string& tag) {
  std::string got;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  if (!(in >> got >> rows >> cols) || got != tag || rows < 0 || cols < 0) {
    throw InvalidArgument("targets file: expected '" + tag + " ROWS COLS' header");
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      // strtod keeps every %.17g value exact
      std::string tok;
      if (!(in >> tok)) throw InvalidArgument("targets file: truncated '" + tag + "' block");
      m(r, c) = std::strtod(tok.c_str(), nullptr);
    }
  }
  return m;
}

std::string edges_text(const Graph& g) {
  std::ostringstream out;
  write_edge_list(out, g);
  return out.str();
}

Graph draw_connected(Family family, int n, Rng& rng) {
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    const std::uint64_t seed = rng.next_u64();
    Graph g;
    switch (family) {
      case Family::erdos_renyi: {
        const double prob = std::min(1.0, rng.uniform(1.2, 2.0) * std::log(n) / n);
        g = generate(ErdosRenyiParams{n, prob}, seed);
        break;
      }
      case Family::barabasi_albert:
        g = generate(BarabasiAlbertParams{n, rng.range(1, 2)}, seed);
        break;
      case Family::caterpillar: {
        const int spine = rng.range(std::max(1, n / 3), std::max(1, 2 * n / 3));
        g = generate(CaterpillarParams{spine, n - spine}, seed);
        break;
      }
    }
    if (connected_components(g).count() == 1) return g;
  }
  throw InvalidArgument("could not draw a connected " + to_string(family) + " graph with n=" +
                        std::to_string(n) + " in " + std::to_string(kMaxRedraws) + " tries");
}

}  // namespace

std::string to_string(TaskKind task) {
  switch (task) {
    case TaskKind::barbell:
      return "barbell";
    case TaskKind::diameter:
      return "diameter";
    case TaskKind::sssp:
      return "sssp";
    case TaskKind::eccentricity:
      return "eccentricity";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "barbell") return TaskKind::barbell;
  if (name == "diameter") return TaskKind::diameter;
  if (name == "sssp") return TaskKind::sssp;
  if (name == "eccentricity") return TaskKind::eccentricity;
  throw InvalidArgument("unknown task '" + std::string(name) + "'");
}

bool is_graph_level(TaskKind task) { return task == TaskKind::diameter; }

std::string to_string(Family family) {
  switch (family) {
    case Family::erdos_renyi:
      return "erdos_renyi";
    case Family::barabasi_albert:
      return "barabasi_albert";
    case Family::caterpillar:
      return "caterpillar";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "erdos_renyi" || name == "er") return Family::erdos_renyi;
  if (name == "barabasi_albert" || name == "ba") return Family::barabasi_albert;
  if (name == "caterpillar") return Family::caterpillar;
  throw InvalidArgument("unknown graph family '" + std::string(name) + "'");
}

Sample make_barbell_task(int clique, int path, const std::vector<double>& source_values) {
  if (clique < 2 || path < 0) {
    throw InvalidArgument("barbell task needs clique >= 2 and path >= 0, got clique=" +
                          std::to_string(clique) + ", path=" + std::to_string(path));
  }
  if (static_cast<int>(source_values.size()) != clique) {
    throw InvalidArgument("barbell task: expected " + std::to_string(clique) +
                          " source values, got " + std::to_string(source_values.size()));
  }
  Sample s;
  s.graph = generate(BarbellParams{clique, path});
  s.comps = connected_components(s.graph);
  const int n = s.graph.num_nodes();
  s.x = Matrix::Zero(n, kTaskInputDim);
  s.target = Matrix::Zero(n, 1);
  s.mask = Vector::Zero(n);
  double mean = 0;
  for (double v : source_values) mean += v;
  mean /= clique;
  for (int i = 0; i < clique; ++i) {
    s.x(i, 0) = source_values[i];
    s.x(i, 1) = 1.0;
  }
  for (int i = clique + path; i < n; ++i) {
    s.x(i, 2) = 1.0;
    s.target(i, 0) = mean;
    s.mask(i) = 1.0;
  }
  return s;
}

Sample make_barbell_task(int clique, int path, std::uint64_t seed) {
  if (clique < 2) throw InvalidArgument("barbell task needs clique >= 2");
  Rng rng(seed);
  std::vector<double> values(static_cast<std::size_t>(clique));
  for (auto& v : values) v = rng.uniform(-1.0, 1.0);
  return make_barbell_task(clique, path, values);
}

Split make_split(int count) {
  if (count < 3) {
    throw InvalidArgument("dataset needs at least 3 samples to fill train/val/test, got " +
                          std::to_string(count));
  }
  const int val = std::max(1, count / 10);
  const int test = std::max(1, count / 10);
  const int train = count - val - test;
  Split split;
  for (int i = 0; i < count; ++i) {
    if (i < train) {
      split.train.push_back(i);
    } else if (i < train + val) {
      split.val.push_back(i);
    } else {
      split.test.push_back(i);
    }
  }
  return split;
}

Dataset make_barbell_dataset(int count, const BarbellTaskParams& params, std::uint64_t seed) {
  Dataset data;
  data.task = TaskKind::barbell;
  data.seed = seed;
  data.barbell = params;
  data.split = make_split(count);
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    data.samples.push_back(make_barbell_task(params.clique, params.path, rng.next_u64()));
  }
  return data;
}

Sample make_property_sample(TaskKind task, const Graph& g) {
  if (task == TaskKind::barbell) throw InvalidArgument("barbell is not a property task");
  Sample s;
  s.graph = g;
  s.comps = connected_components(g);
  const int n = g.num_nodes();
  s.x = Matrix::Zero(n, kTaskInputDim);
  for (int i = 0; i < n; ++i) {
    s.x(i, 0) = 1.0;
    s.x(i, 1) = g.degree(i);
  }
  s.x(0, 2) = 1.0;
  const auto values = graph_property(g,
                                     task == TaskKind::diameter ? GraphProperty::diameter
                                     : task == TaskKind::sssp   ? GraphProperty::sssp
                                                                : GraphProperty::eccentricity,
                                     0);
  s.target.resize(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i)
    s.target(static_cast<Eigen::Index>(i), 0) = values[i];
  s.mask = Vector::Ones(s.target.rows());
  return s;
}

Dataset make_property_dataset(TaskKind task, int count, const PropertyTaskParams& params,
                              std::uint64_t seed) {
  if (task == TaskKind::barbell) throw InvalidArgument("use make_barbell_dataset for barbell");
  if (params.min_n < 4 || params.max_n > 256 || params.min_n > params.max_n) {
    throw InvalidArgument("size range must lie within [4, 256], got [" +
                          std::to_string(params.min_n) + ", " + std::to_string(params.max_n) + "]");
  }
  if (params.families.empty()) throw InvalidArgument("no graph families given");
  Dataset data;
  data.task = task;
  data.seed = seed;
  data.property = params;
  data.split = make_split(count);
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    Rng local = rng.fork(static_cast<std::uint64_t>(i));
    const Family family = params.families[local.below(params.families.size())];
    const int n = local.range(params.min_n, params.max_n);
    data.samples.push_back(make_property_sample(task, draw_connected(family, n, local)));
  }
  return data;
}

std::vector<std::vector<int>> floyd_warshall(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, kUnreachable));
  for (int i = 0; i < n; ++i) {
    dist[i][i] = 0;
    for (int j : g.neighbors(i)) dist[i][j] = 1;
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      if (dist[i][k] == kUnreachable) continue;
      for (int j = 0; j < n; ++j) {
        if (dist[k][j] == kUnreachable) continue;
        dist[i][j] = std::min(dist[i][j], dist[i][k] + dist[k][j]);
      }
    }
  }
  return dist;
}

void verify_targets(const Dataset& data) {
  for (std::size_t idx = 0; idx < data.samples.size(); ++idx) {
    const Sample& s = data.samples[idx];
    Matrix expected;
    if (data.task == TaskKind::barbell) {
      const int m = data.barbell.clique;
      std::vector<double> values;
      for (int i = 0; i < m; ++i) values.push_back(s.x(i, 0));
      expected = make_barbell_task(m, data.barbell.path, values).target;
    } else {
      const auto dist = floyd_warshall(s.graph);
      const int n = s.graph.num_nodes();
      std::vector<int> ecc(n, 0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) ecc[i] = std::max(ecc[i], dist[i][j]);
      if (data.task == TaskKind::diameter) {
        expected = Matrix::Constant(1, 1, *std::max_element(ecc.begin(), ecc.end()));
      } else {
        expected.resize(n, 1);
        for (int i = 0; i < n; ++i)
          expected(i, 0) = data.task == TaskKind::sssp ? dist[0][i] : ecc[i];
      }
    }
    if (expected.rows() != s.target.rows() || expected != s.target) {
      throw InvalidArgument("sample " + std::to_string(idx) +
                            ": stored targets disagree with the brute-force oracle");
    }
  }
}

std::uint64_t sample_hash(const Sample& s) {
  return fnv1a64(targets_text(s), fnv1a64(edges_text(s.graph)));
}

std::uint64_t dataset_hash(const Dataset& data) {
  std::uint64_t h = fnv1a64(to_string(data.task));
  for (const auto& s : data.samples) h = fnv1a64(hex_hash(sample_hash(s)), h);
  return h;
}

std::string hex_hash(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

void save_dataset(const Dataset& data, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["task"] = to_string(data.task);
  manifest["seed"] = data.seed;
  manifest["count"] = data.samples.size();
  if (data.task == TaskKind::barbell) {
    manifest["barbell"] = {{"clique", data.barbell.clique}, {"path", data.barbell.path}};
  } else {
    std::vector<std::string> families;
    for (auto f : data.property.families) families.push_back(to_string(f));
    manifest["property"] = {
        {"min_n", data.property.min_n}, {"max_n", data.property.max_n}, {"families", families}};
  }
  manifest["split"] = {
      {"train", data.split.train}, {"val", data.split.val}, {"test", data.split.test}};
  auto samples = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "sample_%04zu", i);
    const std::string edges = std::string(stem) + ".edges";
    const std::string targets = std::string(stem) + ".targets";
    std::ofstream(fs::path(dir) / edges) << edges_text(data.samples[i].graph);
    std::ofstream(fs::path(dir) / targets) << targets_text(data.samples[i]);
    samples.push_back(
        {{"edges", edges}, {"targets", targets}, {"hash", hex_hash(sample_hash(data.samples[i]))}});
  }
  manifest["samples"] = samples;
  manifest["hash"] = hex_hash(dataset_hash(data));
  std::ofstream(fs::path(dir) / "manifest.json") << manifest.dump(2) << '\n';
}

Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw InvalidArgument("no manifest.json in '" + dir + "'");
  const auto manifest = nlohmann::json::parse(in);
  Dataset data;
  data.task = parse_task_kind(manifest.at("task").get<std::string>());
  data.seed = manifest.at("seed").get<std::uint64_t>();
  if (manifest.contains("barbell")) {
    data.barbell.clique = manifest["barbell"].at("clique");
    data.barbell.path = manifest["barbell"].at("path");
  }
  if (manifest.contains("property")) {
    data.property.min_n = manifest["property"].at("min_n");
    data.property.max_n = manifest["property"].at("max_n");
    data.property.families.clear();
    for (const auto& f : manifest["property"].at("families"))
      data.property.families.push_back(parse_family(f.get<std::string>()));
  }
  data.split.train = manifest.at("split").at("train").get<std::vector<int>>();
  data.split.val = manifest.at("split").at("val").get<std::vector<int>>();
  data.split.test = manifest.at("split").at("test").get<std::vector<int>>();
  for (const auto& entry : manifest.at("samples")) {
    Sample s;
    s.graph = read_edge_list((fs::path(dir) / entry.at("edges").get<std::string>()).string());
    s.comps = connected_components(s.graph);
    std::ifstream t(fs::path(dir) / entry.at("targets").get<std::string>());
    if (!t) throw InvalidArgument("missing targets file " + entry.at("targets").get<std::string>());
    s.x = read_block(t, "features");
    s.target = read_block(t, "targets");
    s.mask = read_block(t, "mask").transpose();
    if (s.x.rows() != s.graph.num_nodes() || s.mask.size() != s.target.rows()) {
      throw DimensionError("sample " + entry.at("edges").get<std::string>() +
                           ": feature/target rows do not match the graph");
    }
    if (hex_hash(sample_hash(s)) != entry.at("hash").get<std::string>()) {
      throw InvalidArgument("sample " + entry.at("edges").get<std::string>() +
                            ": content hash mismatch");
    }
    data.samples.push_back(std::move(s));
  }
  const std::size_t covered =
      data.split.train.size() + data.split.val.size() + data.split.test.size();
  if (covered != data.samples.size()) {
    throw InvalidArgument("manifest split does not cover the samples");
  }
  verify_targets(data);
  return data;
}

}  // namespace s3gnn
