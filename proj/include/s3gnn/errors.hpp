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

#ifndef S3GNN_ERRORS_HPP_
#define S3GNN_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace s3gnn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Dense path refused because the operand would exceed the configured cap.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

// An identity or bound was requested for a configuration it does not cover.
class NotApplicable : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_estimate)
      : Error(what), last_estimate_(last_estimate) {}
  double last_estimate() const noexcept { return last_estimate_; }

 private:
  double last_estimate_;
};

// Training produced a non-finite loss.
class NumericalAbort : public Error {
 public:
  using Error::Error;
};

}  // namespace s3gnn

#endif  // S3GNN_ERRORS_HPP_
