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

// Checkpoints and plot-ready CSV reports. Floats are written with 17
// significant digits; NaN and infinities as "nan", "inf" and "-inf".

#ifndef S3GNN_IO_HPP_
#define S3GNN_IO_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "s3gnn/model.hpp"
#include "s3gnn/sensitivity.hpp"
#include "s3gnn/training.hpp"

namespace s3gnn {

std::string format_double(double v);

/// 64-bit FNV-1a; pass a previous hash to continue it.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

/// JSON document: config keys plus every tensor as {rows, cols, data} with
/// data in row-major order. Round-trips bit-identically.
std::string checkpoint_text(const ModelStack& stack);
ModelStack parse_checkpoint(const std::string& text);
void save_checkpoint(const ModelStack& stack, const std::string& path);
ModelStack load_checkpoint(const std::string& path);

void write_jacobian_csv(std::ostream& out, const std::vector<JacobianRecord>& records);
void write_influence_csv(std::ostream& out, const InfluenceReport& report);
void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& bins);
void write_alpha_csv(std::ostream& out, const std::vector<double>& alpha);
void write_alpha_trace_csv(std::ostream& out, const std::vector<AlphaSnapshot>& trace);
void write_train_csv(std::ostream& out, const std::vector<EpochRecord>& history);

/// Writes `text` to `path`, creating parent directories.
void write_file(const std::string& path, const std::string& text);
std::string read_file(const std::string& path);

}  // namespace s3gnn

#endif  // S3GNN_IO_HPP_
