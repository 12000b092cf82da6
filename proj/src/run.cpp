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

#include "s3gnn/run.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <map>
#include <sstream>

#include "s3gnn/errors.hpp"
#include "s3gnn/io.hpp"

namespace s3gnn {

namespace {

using Json = nlohmann::ordered_json;
using FieldMap = std::map<std::string, std::function<void(const Json&)>>;

template <typename T>
std::function<void(const Json&)> set(T& field) {
  return [&field](const Json& v) { field = v.get<T>(); };
}

void read_object(const Json& j, const std::string& where, const FieldMap& fields) {
  if (!j.is_object()) throw InvalidArgument("config: '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    const auto it = fields.find(key);
    if (it == fields.end()) {
      throw InvalidArgument("config: unknown key '" + where + "." + key + "'");
    }
    try {
      it->second(value);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument("config: bad value for '" + where + "." + key + "': " + e.what());
    }
  }
}

// JSON has no NaN or infinity; those are written as their CSV sentinels.
Json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

Json stats_json(const std::vector<double>& values) {
  const SeedStats s = seed_stats(values);
  Json all = Json::array();
  for (double v : values) all.push_back(number(v));
  return Json{{"mean", number(s.mean)},
              {"std", number(s.std)},
              {"median", number(s.median)},
              {"values", all}};
}

std::vector<Family> parse_families(const std::vector<std::string>& names) {
  std::vector<Family> out;
  for (const auto& n : names) out.push_back(parse_family(n));
  return out;
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

void apply_config_json(RunConfig& c, const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: not valid JSON: ") + e.what());
  }
  ModelConfig& m = c.model;
  const FieldMap model_fields{
      {"kind", [&](const Json& v) { m.kind = parse_dynamics_kind(v.get<std::string>()); }},
      {"mode", [&](const Json& v) { m.mode = parse_weight_mode(v.get<std::string>()); }},
      {"layers", set(m.layers)},
      {"width", set(m.width)},
      {"cheb_order", set(m.cheb_order)},
      {"epsilon", set(m.epsilon)},
      {"gamma", set(m.gamma)},
      {"alpha_init", set(m.alpha_init)},
      {"filter_init", set(m.filter_init)},
      {"share_weights", set(m.share_weights)},
      {"alpha_slots", set(m.alpha_slots)},
      {"residual", set(m.residual)},
      {"spatial_term", set(m.spatial_term)},
      {"decoder_hidden", set(m.decoder_hidden)},
      {"gcn_self_loops", set(m.gcn_self_loops)},
      {"cheb_normalized", set(m.cheb_normalized)},
  };
  const FieldMap data_fields{
      {"dir", set(c.data.dir)},     {"count", set(c.data.count)},
      {"seed", set(c.data.seed)},   {"clique", set(c.data.clique)},
      {"path", set(c.data.path)},   {"min_n", set(c.data.min_n)},
      {"max_n", set(c.data.max_n)}, {"families", set(c.data.families)},
  };
  const FieldMap optim_fields{
      {"lr", set(c.adam.lr)},
      {"beta1", set(c.adam.beta1)},
      {"beta2", set(c.adam.beta2)},
      {"eps", set(c.adam.eps)},
      {"weight_decay", set(c.adam.weight_decay)},
      {"epochs", set(c.epochs)},
      {"batch_size", set(c.batch_size)},
      {"alpha_every", set(c.alpha_every)},
  };
  const FieldMap analysis_fields{
      {"norm", set(c.analysis.norm)},
      {"layer", set(c.analysis.layer)},
      {"bins", set(c.analysis.bins)},
      {"gradcheck_tol", set(c.analysis.gradcheck_tol)},
  };
  const FieldMap top{
      {"task", [&](const Json& v) { c.task = parse_task_kind(v.get<std::string>()); }},
      {"data", [&](const Json& v) { read_object(v, "data", data_fields); }},
      {"model", [&](const Json& v) { read_object(v, "model", model_fields); }},
      {"match_params", set(c.match_params)},
      {"optim", [&](const Json& v) { read_object(v, "optim", optim_fields); }},
      {"seeds",
       [&](const Json& v) {
         c.seeds =
             v.is_number_unsigned() ? std::to_string(v.get<std::uint64_t>()) : v.get<std::string>();
       }},
      {"analysis", [&](const Json& v) { read_object(v, "analysis", analysis_fields); }},
      {"out", set(c.out)},
  };
  read_object(j, "config", top);
}

std::string config_json(const RunConfig& c) {
  const ModelConfig& m = c.model;
  Json j;
  j["task"] = to_string(c.task);
  j["data"] = {{"dir", c.data.dir},       {"count", c.data.count},      {"seed", c.data.seed},
               {"clique", c.data.clique}, {"path", c.data.path},        {"min_n", c.data.min_n},
               {"max_n", c.data.max_n},   {"families", c.data.families}};
  j["model"] = {{"kind", to_string(m.kind)},
                {"mode", to_string(m.mode)},
                {"layers", m.layers},
                {"width", m.width},
                {"cheb_order", m.cheb_order},
                {"epsilon", m.epsilon},
                {"gamma", m.gamma},
                {"alpha_init", m.alpha_init},
                {"filter_init", m.filter_init},
                {"share_weights", m.share_weights},
                {"alpha_slots", m.alpha_slots},
                {"residual", m.residual},
                {"spatial_term", m.spatial_term},
                {"decoder_hidden", m.decoder_hidden},
                {"gcn_self_loops", m.gcn_self_loops},
                {"cheb_normalized", m.cheb_normalized}};
  j["match_params"] = c.match_params;
  j["optim"] = {{"lr", c.adam.lr},
                {"beta1", c.adam.beta1},
                {"beta2", c.adam.beta2},
                {"eps", c.adam.eps},
                {"weight_decay", c.adam.weight_decay},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"alpha_every", c.alpha_every}};
  j["seeds"] = c.seeds;
  j["analysis"] = {{"norm", c.analysis.norm},
                   {"layer", c.analysis.layer},
                   {"bins", c.analysis.bins},
                   {"gradcheck_tol", c.analysis.gradcheck_tol}};
  j["out"] = c.out;
  return j.dump(2) + "\n";
}

RunConfig load_run_config(const std::string& path) {
  RunConfig c;
  apply_config_json(c, read_file(path));
  return c;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  auto to_u64 = [&](const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw InvalidArgument("seeds: '" + text + "' is not N, A..B or a comma list");
    }
    return static_cast<std::uint64_t>(std::stoull(s));
  };
  std::vector<std::uint64_t> out;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const auto lo = to_u64(text.substr(0, dots));
    const auto hi = to_u64(text.substr(dots + 2));
    if (hi < lo) throw InvalidArgument("seeds: empty range '" + text + "'");
    if (hi - lo >= 10000) throw InvalidArgument("seeds: range '" + text + "' is too long");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(to_u64(item));
  if (out.empty()) throw InvalidArgument("seeds: empty");
  return out;
}

Dataset resolve_dataset(const RunConfig& c) {
  if (!c.data.dir.empty()) {
    Dataset d = load_dataset(c.data.dir);
    if (d.task != c.task) {
      throw InvalidArgument("config task '" + to_string(c.task) +
                            "' does not match dataset task '" + to_string(d.task) + "' in " +
                            c.data.dir);
    }
    return d;
  }
  if (c.task == TaskKind::barbell) {
    return make_barbell_dataset(c.data.count, {c.data.clique, c.data.path}, c.data.seed);
  }
  return make_property_dataset(c.task, c.data.count,
                               {c.data.min_n, c.data.max_n, parse_families(c.data.families)},
                               c.data.seed);
}

TrainConfig train_config(const RunConfig& c, std::uint64_t seed) {
  TrainConfig t;
  t.model = task_model_config(c.model, c.task);
  if (c.match_params > 0) t.model = match_param_count(t.model, c.match_params);
  t.adam = c.adam;
  t.epochs = c.epochs;
  t.batch_size = c.batch_size;
  t.alpha_every = c.alpha_every;
  t.seed = seed;
  return t;
}

TrainReport run_training(const RunConfig& c, const Dataset& data, std::uint64_t seed,
                         const std::string& dir) {
  const TrainConfig tc = train_config(c, seed);
  TrainReport r = train(tc, data);

  std::ostringstream csv;
  write_train_csv(csv, r.history);
  write_file(join(dir, "train.csv"), csv.str());
  csv.str("");
  write_alpha_csv(csv, alpha_by_layer(r.model));
  write_file(join(dir, "alpha.csv"), csv.str());
  csv.str("");
  write_alpha_trace_csv(csv, r.alpha_trace);
  write_file(join(dir, "alpha_trace.csv"), csv.str());
  save_checkpoint(r.model, join(dir, "checkpoint.json"));

  Json s;
  s["task"] = to_string(r.task);
  s["model"] = to_string(tc.model.kind);
  s["mode"] = to_string(tc.model.mode);
  s["seed"] = r.seed;
  s["params"] = r.params;
  s["test_metric"] = {{"mse", number(r.test_mse)}, {"log10_mse", number(r.test_log10_mse)}};
  s["epochs"] = tc.epochs;
  s["best_epoch"] = r.best_epoch;
  s["best_val_loss"] = number(r.best_val);
  s["initial_losses"] = {{"train", number(r.history.front().train_loss)},
                         {"val", number(r.history.front().val_loss)}};
  s["wall_clock_s"] = r.wall_clock_s;
  write_file(join(dir, "summary.json"), s.dump(2) + "\n");
  return r;
}

SeedStats seed_stats(std::vector<double> values) {
  SeedStats s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1));
  }
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  return s;
}

void write_aggregate(const RunConfig& c, const std::vector<TrainReport>& reports,
                     const std::string& path) {
  std::vector<double> mse, log_mse;
  Json seeds = Json::array();
  for (const auto& r : reports) {
    seeds.push_back(r.seed);
    mse.push_back(r.test_mse);
    log_mse.push_back(r.test_log10_mse);
  }
  Json j;
  j["task"] = to_string(c.task);
  j["model"] = to_string(c.model.kind);
  j["mode"] = to_string(c.model.mode);
  j["params"] = reports.empty() ? 0 : reports.front().params;
  j["seeds"] = seeds;
  j["test_log10_mse"] = stats_json(log_mse);
  j["test_mse"] = stats_json(mse);
  write_file(path, j.dump(2) + "\n");
}

std::vector<AblationRow> run_ablation(const RunConfig& c, const Dataset& data,
                                      const std::vector<std::uint64_t>& seeds,
                                      const std::string& dir) {
  std::vector<AblationRow> rows;
  for (auto mode : {WeightMode::free, WeightMode::antisymmetric, WeightMode::cayley_orthogonal}) {
    RunConfig mc = c;
    mc.model.mode = mode;
    for (auto seed : seeds) {
      const auto sub = join(join(dir, to_string(mode)), "seed_" + std::to_string(seed));
      const TrainReport r = run_training(mc, data, seed, sub);
      rows.push_back({mode, seed, r.test_mse, r.test_log10_mse});
    }
  }
  std::ostringstream csv;
  csv << "mode,seed,test_mse,test_log10_mse\n";
  for (const auto& r : rows) {
    csv << to_string(r.mode) << ',' << r.seed << ',' << format_double(r.test_mse) << ','
        << format_double(r.test_log10_mse) << '\n';
  }
  write_file(join(dir, "ablation.csv"), csv.str());
  return rows;
}

void write_manifest(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir).generic_string();
    if (rel != "manifest.json") files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  Json list = Json::array();
  for (const auto& f : files) {
    const std::string bytes = read_file(join(dir, f));
    list.push_back({{"path", f}, {"bytes", bytes.size()}, {"fnv1a64", hex_hash(fnv1a64(bytes))}});
  }
  write_file(join(dir, "manifest.json"), Json{{"files", list}}.dump(2) + "\n");
}

}  // namespace s3gnn
