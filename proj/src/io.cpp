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

#include "s3gnn/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "s3gnn/errors.hpp"

namespace s3gnn {

namespace {

using Json = nlohmann::ordered_json;

template <typename Derived>
Json tensor_json(const Eigen::MatrixBase<Derived>& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix tensor_from_json(const Json& j, const std::string& name) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw InvalidArgument("checkpoint: tensor '" + name + "' has inconsistent shape");
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  return m;
}

Vector vector_from_json(const Json& j, const std::string& name) {
  const Matrix m = tensor_from_json(j, name);
  if (m.cols() != 1 && m.size() != 0) {
    throw InvalidArgument("checkpoint: '" + name + "' must be a column");
  }
  return Eigen::Map<const Vector>(m.data(), m.size());
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string checkpoint_text(const ModelStack& stack) {
  const auto& c = stack.config;
  Json j;
  j["format"] = "s3gnn-checkpoint-1";
  j["config"] = {{"kind", to_string(c.kind)},
                 {"mode", to_string(c.mode)},
                 {"layers", c.layers},
                 {"width", c.width},
                 {"cheb_order", c.cheb_order},
                 {"epsilon", c.epsilon},
                 {"gamma", c.gamma},
                 {"alpha_init", c.alpha_init},
                 {"filter_init", c.filter_init},
                 {"share_weights", c.share_weights},
                 {"alpha_slots", c.alpha_slots},
                 {"residual", c.residual},
                 {"spatial_term", c.spatial_term},
                 {"heads", c.heads},
                 {"input_dim", c.input_dim},
                 {"output_dim", c.output_dim},
                 {"decoder_hidden", c.decoder_hidden},
                 {"graph_level", c.graph_level},
                 {"gcn_self_loops", c.gcn_self_loops},
                 {"cheb_normalized", c.cheb_normalized}};
  Json layers = Json::array();
  for (const auto& layer : stack.params.layers) {
    Json weights = Json::array();
    for (const auto& w : layer.weights) weights.push_back(tensor_json(w));
    layers.push_back({{"weights", weights},
                      {"alpha", tensor_json(layer.alpha)},
                      {"log_filter", tensor_json(layer.log_filter)}});
  }
  j["layers"] = layers;
  const auto& h = stack.params.heads;
  j["heads"] = {
      {"encoder_w", tensor_json(h.encoder_w)},   {"encoder_b", tensor_json(h.encoder_b)},
      {"decoder_w1", tensor_json(h.decoder_w1)}, {"decoder_b1", tensor_json(h.decoder_b1)},
      {"decoder_w2", tensor_json(h.decoder_w2)}, {"decoder_b2", tensor_json(h.decoder_b2)}};
  return j.dump(1) + "\n";
}

ModelStack parse_checkpoint(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("checkpoint: not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != "s3gnn-checkpoint-1") {
    throw InvalidArgument("checkpoint: unknown format tag");
  }
  ModelStack stack;
  try {
    const auto& jc = j.at("config");
    auto& c = stack.config;
    c.kind = parse_dynamics_kind(jc.at("kind").get<std::string>());
    c.mode = parse_weight_mode(jc.at("mode").get<std::string>());
    c.layers = jc.at("layers");
    c.width = jc.at("width");
    c.cheb_order = jc.at("cheb_order");
    c.epsilon = jc.at("epsilon");
    c.gamma = jc.at("gamma");
    c.alpha_init = jc.at("alpha_init");
    c.filter_init = jc.at("filter_init");
    c.share_weights = jc.at("share_weights");
    c.alpha_slots = jc.at("alpha_slots");
    c.residual = jc.at("residual");
    c.spatial_term = jc.at("spatial_term");
    c.heads = jc.at("heads");
    c.input_dim = jc.at("input_dim");
    c.output_dim = jc.at("output_dim");
    c.decoder_hidden = jc.at("decoder_hidden");
    c.graph_level = jc.at("graph_level");
    c.gcn_self_loops = jc.at("gcn_self_loops");
    c.cheb_normalized = jc.at("cheb_normalized");
    c.validate();
    for (const auto& jl : j.at("layers")) {
      LayerParams layer;
      for (const auto& w : jl.at("weights")) layer.weights.push_back(tensor_from_json(w, "weight"));
      layer.alpha = vector_from_json(jl.at("alpha"), "alpha");
      layer.log_filter = vector_from_json(jl.at("log_filter"), "log_filter");
      stack.params.layers.push_back(std::move(layer));
    }
    const auto& jh = j.at("heads");
    auto& h = stack.params.heads;
    h.encoder_w = tensor_from_json(jh.at("encoder_w"), "encoder_w");
    h.encoder_b = vector_from_json(jh.at("encoder_b"), "encoder_b");
    h.decoder_w1 = tensor_from_json(jh.at("decoder_w1"), "decoder_w1");
    h.decoder_b1 = vector_from_json(jh.at("decoder_b1"), "decoder_b1");
    h.decoder_w2 = tensor_from_json(jh.at("decoder_w2"), "decoder_w2");
    h.decoder_b2 = vector_from_json(jh.at("decoder_b2"), "decoder_b2");
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("checkpoint: ") + e.what());
  }
  // Shapes must agree with a fresh model of the same config.
  const ModelStack fresh = init_model(stack.config, 0);
  std::vector<std::size_t> want;
  std::vector<std::size_t> got;
  fresh.params.for_each(
      [&](const std::string&, std::span<const double> s) { want.push_back(s.size()); });
  stack.params.for_each(
      [&](const std::string&, std::span<const double> s) { got.push_back(s.size()); });
  if (want != got || stack.params.layers.size() != fresh.params.layers.size()) {
    throw InvalidArgument("checkpoint: tensor shapes do not match the stored config");
  }
  return stack;
}

void save_checkpoint(const ModelStack& stack, const std::string& path) {
  write_file(path, checkpoint_text(stack));
}

ModelStack load_checkpoint(const std::string& path) { return parse_checkpoint(read_file(path)); }

void write_jacobian_csv(std::ostream& out, const std::vector<JacobianRecord>& records) {
  out << "layer,lambda_max,energy_closed_form,energy_power_iter,prop2_residual\n";
  for (const auto& r : records) {
    out << r.layer << ',' << format_double(r.lambda_max) << ','
        << format_double(r.energy_closed_form) << ',' << format_double(r.energy_power_iteration)
        << ',' << (r.identity_residual ? format_double(*r.identity_residual) : "nan") << '\n';
  }
}

void write_influence_csv(std::ostream& out, const InfluenceReport& report) {
  out << "i,s,distance,measured,bound_prop1,bound_eq8\n";
  for (const auto& r : report.records) {
    out << r.i << ',' << r.s << ','
        << (r.distance == kUnreachable ? std::string("inf") : std::to_string(r.distance)) << ','
        << format_double(r.measured) << ',' << format_double(r.bound_mixing) << ','
        << format_double(r.bound_edges) << '\n';
  }
}

void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& bins) {
  out << "log10_lo,log10_hi,count\n";
  for (const auto& b : bins) {
    out << format_double(b.lo) << ',' << format_double(b.hi) << ',' << b.count << '\n';
  }
}

void write_alpha_csv(std::ostream& out, const std::vector<double>& alpha) {
  out << "layer,alpha\n";
  for (std::size_t l = 0; l < alpha.size(); ++l) out << l << ',' << format_double(alpha[l]) << '\n';
}

void write_alpha_trace_csv(std::ostream& out, const std::vector<AlphaSnapshot>& trace) {
  out << "epoch,layer,alpha\n";
  for (const auto& snap : trace) {
    for (std::size_t l = 0; l < snap.alpha.size(); ++l) {
      out << snap.epoch << ',' << l << ',' << format_double(snap.alpha[l]) << '\n';
    }
  }
}

void write_train_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,train_loss,val_loss\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.val_loss)
        << '\n';
  }
}

void write_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace s3gnn
