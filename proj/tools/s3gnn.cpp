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

// s3gnn: dataset generation, training and analysis from the command line.
// Exit codes: 0 success, 1 failed check, 2 usage or config error,
// 3 numerical abort.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "s3gnn/errors.hpp"
#include "s3gnn/io.hpp"
#include "s3gnn/run.hpp"

namespace {

using namespace s3gnn;

constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct Globals {
  std::string config;
  std::optional<std::string> seed;
  std::optional<std::string> out;
  bool quiet = false;
};

struct ModelFlags {
  std::optional<std::string> kind, mode;
  std::optional<int> width, layers, cheb_order, decoder_hidden;
  std::optional<double> epsilon, gamma, filter;
  std::optional<std::size_t> match_params;

  void add(CLI::App* cmd) {
    cmd->add_option("--kind,--model", kind, "s3gnn, gcn, chebnet, stable_chebnet, diag");
    cmd->add_option("--mode", mode, "free, antisymmetric, cayley");
    cmd->add_option("--width", width, "hidden width d");
    cmd->add_option("--layers", layers, "number of layers L");
    cmd->add_option("--cheb-order", cheb_order, "Chebyshev order K");
    cmd->add_option("--epsilon", epsilon, "step size");
    cmd->add_option("--gamma", gamma, "dissipation");
    cmd->add_option("--C", filter, "diag filter value at initialization");
    cmd->add_option("--decoder-hidden", decoder_hidden, "decoder hidden width");
    cmd->add_option("--match-params", match_params, "resize the decoder to this parameter count");
  }

  void apply(RunConfig& c) const {
    if (kind) c.model.kind = parse_dynamics_kind(*kind);
    if (mode) c.model.mode = parse_weight_mode(*mode);
    if (width) c.model.width = *width;
    if (layers) c.model.layers = *layers;
    if (cheb_order) c.model.cheb_order = *cheb_order;
    if (epsilon) c.model.epsilon = *epsilon;
    if (gamma) c.model.gamma = *gamma;
    if (filter) c.model.filter_init = *filter;
    if (decoder_hidden) c.model.decoder_hidden = *decoder_hidden;
    if (match_params) c.match_params = *match_params;
  }
};

struct DataFlags {
  std::optional<std::string> task, dir;
  std::optional<int> count, min_n, max_n, clique, path;
  std::optional<std::uint64_t> data_seed;
  std::vector<std::string> families;

  void add(CLI::App* cmd) {
    cmd->add_option("--task", task, "barbell, diameter, sssp, eccentricity");
    cmd->add_option("--data", dir, "dataset directory written by gen");
    cmd->add_option("--count", count, "number of samples");
    cmd->add_option("--min-n", min_n, "smallest graph");
    cmd->add_option("--max-n", max_n, "largest graph");
    cmd->add_option("--m", clique, "barbell clique size");
    cmd->add_option("--p", path, "barbell path length");
    cmd->add_option("--families", families, "er, ba, caterpillar");
    cmd->add_option("--data-seed", data_seed, "dataset seed when generating in memory");
  }

  void apply(RunConfig& c) const {
    if (task) c.task = parse_task_kind(*task);
    if (dir) c.data.dir = *dir;
    if (count) c.data.count = *count;
    if (min_n) c.data.min_n = *min_n;
    if (max_n) c.data.max_n = *max_n;
    if (clique) c.data.clique = *clique;
    if (path) c.data.path = *path;
    if (!families.empty()) c.data.families = families;
    if (data_seed) c.data.seed = *data_seed;
  }
};

struct OptimFlags {
  std::optional<int> epochs, batch_size;
  std::optional<double> lr, weight_decay;

  void add(CLI::App* cmd) {
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--batch-size", batch_size, "graphs per update");
    cmd->add_option("--lr", lr, "Adam learning rate");
    cmd->add_option("--weight-decay", weight_decay, "L2 coefficient");
  }

  void apply(RunConfig& c) const {
    if (epochs) c.epochs = *epochs;
    if (batch_size) c.batch_size = *batch_size;
    if (lr) c.adam.lr = *lr;
    if (weight_decay) c.adam.weight_decay = *weight_decay;
  }
};

class Log {
 public:
  explicit Log(bool quiet) : quiet_(quiet) {}
  template <typename... Args>
  void operator()(const char* fmt, Args... args) const {
    if (quiet_) return;
    std::printf(fmt, args...);
    std::fflush(stdout);
  }

 private:
  bool quiet_;
};

std::string path_in(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

// Config file first, then command-line overrides.
RunConfig base_config(const Globals& g, const std::string& default_out) {
  RunConfig c;
  c.out = default_out;
  if (!g.config.empty()) apply_config_json(c, read_file(g.config));
  if (g.seed) c.seeds = *g.seed;
  if (g.out) c.out = *g.out;
  return c;
}

void finish(const RunConfig& c) {
  write_file(path_in(c.out, "config.json"), config_json(c));
  write_manifest(c.out);
}

int cmd_gen(const Globals& g, const DataFlags& df) {
  RunConfig c = base_config(g, "");
  df.apply(c);
  if (!df.task && g.config.empty()) throw InvalidArgument("gen: --task is required");
  if (!g.out) c.out = path_in("data", to_string(c.task));
  c.data.dir.clear();
  if (g.seed) c.data.seed = parse_seeds(*g.seed).front();
  const Dataset d = resolve_dataset(c);
  save_dataset(d, c.out);
  const Log log(g.quiet);
  int lo = d.samples.front().graph.num_nodes(), hi = lo;
  for (const auto& s : d.samples) {
    lo = std::min(lo, s.graph.num_nodes());
    hi = std::max(hi, s.graph.num_nodes());
  }
  log("%s: %zu samples, %d..%d nodes, split %zu/%zu/%zu\n", to_string(d.task).c_str(),
      d.samples.size(), lo, hi, d.split.train.size(), d.split.val.size(), d.split.test.size());
  log("dataset hash %s written to %s\n", hex_hash(dataset_hash(d)).c_str(), c.out.c_str());
  return 0;
}

int cmd_train(const Globals& g, const DataFlags& df, const ModelFlags& mf, const OptimFlags& of) {
  RunConfig c = base_config(g, "runs/train");
  df.apply(c);
  mf.apply(c);
  of.apply(c);
  const auto seeds = parse_seeds(c.seeds);
  const Dataset data = resolve_dataset(c);
  const Log log(g.quiet);
  for (const auto& w : config_warnings(task_model_config(c.model, c.task))) {
    log("warning: %s\n", w.c_str());
  }
  std::vector<TrainReport> reports;
  for (auto seed : seeds) {
    const auto dir = path_in(c.out, "seed_" + std::to_string(seed));
    reports.push_back(run_training(c, data, seed, dir));
    const auto& r = reports.back();
    log("seed %llu: params %zu, best epoch %d, test mse %s, log10 %s (%.1f s)\n",
        static_cast<unsigned long long>(seed), r.params, r.best_epoch,
        format_double(r.test_mse).c_str(), format_double(r.test_log10_mse).c_str(), r.wall_clock_s);
  }
  write_aggregate(c, reports, path_in(c.out, "aggregate.json"));
  std::vector<double> logs;
  for (const auto& r : reports) logs.push_back(r.test_log10_mse);
  const SeedStats s = seed_stats(logs);
  log("test log10_mse over %zu seeds: %.4f +- %.4f\n", reports.size(), s.mean, s.std);
  finish(c);
  return 0;
}

// Checkpoint if given, else a fresh propagation stack without heads.
ModelStack analysis_model(const RunConfig& c, const std::string& checkpoint) {
  if (!checkpoint.empty()) return load_checkpoint(checkpoint);
  ModelConfig m = c.model;
  m.heads = false;
  return init_model(m, parse_seeds(c.seeds).front());
}

RunConfig analysis_config(const Globals& g, const ModelFlags& mf, const std::string& out) {
  RunConfig c;
  c.model.width = 2;
  c.model.layers = 2;
  c.out = out;
  if (!g.config.empty()) apply_config_json(c, read_file(g.config));
  if (g.seed) c.seeds = *g.seed;
  if (g.out) c.out = *g.out;
  mf.apply(c);
  return c;
}

int cmd_jacobian(const Globals& g, const ModelFlags& mf, const std::string& checkpoint,
                 const std::string& graph_path) {
  const RunConfig c = analysis_config(g, mf, "runs/jacobian");
  const ModelStack stack = analysis_model(c, checkpoint);
  const Graph graph = read_edge_list(graph_path);
  const auto ctx = make_context(graph, stack.config);
  const auto records = jacobian_report(stack, ctx);
  std::ostringstream csv;
  write_jacobian_csv(csv, records);
  write_file(path_in(c.out, "jacobian.csv"), csv.str());
  const Log log(g.quiet);
  for (const auto& r : records) {
    log("layer %d: lambda_max %s, energy closed %s, power %s, residual %s\n", r.layer,
        format_double(r.lambda_max).c_str(), format_double(r.energy_closed_form).c_str(),
        format_double(r.energy_power_iteration).c_str(),
        r.identity_residual ? format_double(*r.identity_residual).c_str() : "n/a");
  }
  finish(c);
  return 0;
}

int cmd_influence(const Globals& g, const ModelFlags& mf, const std::string& checkpoint,
                  const std::string& graph_path, const std::optional<std::string>& norm,
                  const std::optional<int>& layer) {
  RunConfig c = analysis_config(g, mf, "runs/influence");
  if (norm) c.analysis.norm = *norm;
  if (layer) c.analysis.layer = *layer;
  const ModelStack stack = analysis_model(c, checkpoint);
  const Graph graph = read_edge_list(graph_path);
  const int ell = c.analysis.layer < 0 ? stack.config.layers : c.analysis.layer;
  const auto ctx = make_context(graph, stack.config);
  const auto report =
      influence_distribution(stack, graph, ctx, ell, parse_influence_norm(c.analysis.norm));
  std::ostringstream csv;
  write_influence_csv(csv, report);
  write_file(path_in(c.out, "influence.csv"), csv.str());
  csv.str("");
  write_histogram_csv(csv, influence_histogram(report, c.analysis.bins));
  write_file(path_in(c.out, "influence_hist.csv"), csv.str());
  const Log log(g.quiet);
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& r : report.records) {
    lo = std::min(lo, r.measured);
    hi = std::max(hi, r.measured);
  }
  log("%zu pairs at depth %d, measured in [%.10g, %.10g]\n", report.records.size(), ell, lo, hi);
  auto summary = [&](const char* name, const BoundSummary& s) {
    if (s.pairs) log("%s: %d of %d pairs at or above\n", name, s.above, s.pairs);
  };
  summary("mixing bound", report.mixing);
  summary("edge-count bound", report.edges);
  summary("closed form", report.closed_form);
  finish(c);
  return 0;
}

int cmd_ablate(const Globals& g, const DataFlags& df, const ModelFlags& mf, const OptimFlags& of) {
  RunConfig c = base_config(g, "runs/ablate");
  df.apply(c);
  mf.apply(c);
  of.apply(c);
  const auto seeds = parse_seeds(c.seeds);
  const Dataset data = resolve_dataset(c);
  const auto rows = run_ablation(c, data, seeds, c.out);
  const Log log(g.quiet);
  log("%-14s %-6s %-24s %s\n", "mode", "seed", "test_mse", "test_log10_mse");
  for (const auto& r : rows) {
    log("%-14s %-6llu %-24s %s\n", to_string(r.mode).c_str(),
        static_cast<unsigned long long>(r.seed), format_double(r.test_mse).c_str(),
        format_double(r.test_log10_mse).c_str());
  }
  finish(c);
  return 0;
}

int cmd_gradcheck(const Globals& g, const ModelFlags& mf, std::optional<double> tol) {
  RunConfig c;
  c.model.width = 4;
  c.model.layers = 3;
  c.model.cheb_order = 2;
  c.model.decoder_hidden = 3;
  if (!g.config.empty()) apply_config_json(c, read_file(g.config));
  if (g.seed) c.seeds = *g.seed;
  mf.apply(c);
  if (tol) c.analysis.gradcheck_tol = *tol;
  if (c.model.width > 4 || c.model.layers > 3) {
    throw InvalidArgument("gradcheck: use width <= 4 and layers <= 3");
  }
  const auto seed = parse_seeds(c.seeds).front();
  const Sample sample = make_barbell_task(3, 2, seed);  // 8 nodes
  const ModelConfig m = task_model_config(c.model, TaskKind::barbell);
  const auto r = gradient_check(init_model(m, seed + 1), sample);
  const bool ok = r.max_rel_error <= c.analysis.gradcheck_tol;
  const Log log(g.quiet);
  log("%s/%s: max relative error %.3e at %s[%zu] (analytic %.10g, numeric %.10g), tol %.1e\n",
      to_string(m.kind).c_str(), to_string(m.mode).c_str(), r.max_rel_error, r.tensor.c_str(),
      r.index, r.analytic, r.numeric, c.analysis.gradcheck_tol);
  return ok ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"S3GNN dynamics: datasets, training and Jacobian analysis"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "seed, range A..B or list A,B");
  app.add_option("--out", g.out, "output directory");
  app.add_flag("--quiet", g.quiet, "print nothing on success");

  DataFlags gen_data, train_data, ablate_data;
  ModelFlags train_model, jac_model, inf_model, ablate_model, grad_model;
  OptimFlags train_optim, ablate_optim;
  std::string jac_checkpoint, jac_graph, inf_checkpoint, inf_graph;
  std::optional<std::string> inf_norm;
  std::optional<int> inf_layer;
  std::optional<double> grad_tol;

  auto* gen = app.add_subcommand("gen", "generate a dataset");
  gen_data.add(gen);
  auto* train_cmd = app.add_subcommand("train", "train over one or more seeds");
  train_data.add(train_cmd);
  train_model.add(train_cmd);
  train_optim.add(train_cmd);

  auto* analyze = app.add_subcommand("analyze", "Jacobian, influence, ablation, gradient check");
  analyze->require_subcommand(1);
  auto* jac = analyze->add_subcommand("jacobian", "per-layer Jacobian energy");
  jac_model.add(jac);
  jac->add_option("--checkpoint", jac_checkpoint, "checkpoint.json from train")
      ->check(CLI::ExistingFile);
  jac->add_option("--graph", jac_graph, "edge list")->required()->check(CLI::ExistingFile);
  auto* inf = analyze->add_subcommand("influence", "pairwise influence with bounds");
  inf_model.add(inf);
  inf->add_option("--checkpoint", inf_checkpoint, "checkpoint.json from train")
      ->check(CLI::ExistingFile);
  inf->add_option("--graph", inf_graph, "edge list")->required()->check(CLI::ExistingFile);
  inf->add_option("--norm", inf_norm, "fro, 2 or entrywise-l1");
  inf->add_option("--layer", inf_layer, "depth; default all layers");
  auto* abl = analyze->add_subcommand("ablate", "train every weight mode");
  ablate_data.add(abl);
  ablate_model.add(abl);
  ablate_optim.add(abl);
  auto* grad = analyze->add_subcommand("gradcheck", "finite-difference gradient check");
  grad_model.add(grad);
  grad->add_option("--tol", grad_tol, "maximum relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(g, gen_data);
    if (train_cmd->parsed()) return cmd_train(g, train_data, train_model, train_optim);
    if (jac->parsed()) return cmd_jacobian(g, jac_model, jac_checkpoint, jac_graph);
    if (inf->parsed()) {
      return cmd_influence(g, inf_model, inf_checkpoint, inf_graph, inf_norm, inf_layer);
    }
    if (abl->parsed()) return cmd_ablate(g, ablate_data, ablate_model, ablate_optim);
    if (grad->parsed()) return cmd_gradcheck(g, grad_model, grad_tol);
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConvergenceError& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const CapExceeded& e) {
    std::cerr << "error: " << e.what() << "; try a smaller graph or width\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
