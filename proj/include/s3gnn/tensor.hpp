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

// Dense kernels shared by every other module. Everything is a free function
// over Eigen expressions, templated on the scalar type.

#ifndef S3GNN_TENSOR_HPP_
#define S3GNN_TENSOR_HPP_

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "s3gnn/errors.hpp"

namespace s3gnn {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = Mat<double>;
using Vector = Vec<double>;
/// CSR storage.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

inline constexpr Eigen::Index kDefaultKronCap = 4096;
inline constexpr Eigen::Index kDenseEigCap = 256;

inline std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <typename DerivedA, typename DerivedB>
auto matmul(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + shape_string(a.rows(), a.cols()) + " by " +
                         shape_string(b.rows(), b.cols()));
  }
  Mat<Scalar> out = a * b;
  return out;
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

/// Result of a symmetric power iteration.
template <typename Scalar>
struct PowerIterationResult {
  Scalar value = 0;  // dominant Rayleigh quotient
  int iterations = 0;
  bool converged = false;
};

/// Power iteration for a symmetric operator given as `apply(in, out)`. Stops when successive
/// Rayleigh quotients differ by less than tol * max(1, |estimate|).
template <typename Scalar, typename Apply>
PowerIterationResult<Scalar> power_iteration(Apply&& apply, const Vec<Scalar>& start, Scalar tol,
                                             int max_iter) {
  PowerIterationResult<Scalar> result;
  const Eigen::Index dim = start.size();
  if (dim == 0 || start.norm() == Scalar(0)) {
    throw InvalidArgument("power_iteration: start vector must be nonzero");
  }
  Vec<Scalar> v = start / start.norm();
  Vec<Scalar> w(dim);
  Scalar previous = 0;
  for (int it = 1; it <= max_iter; ++it) {
    apply(v, w);
    const Scalar estimate = v.dot(w);
    const Scalar norm = w.norm();
    result.value = estimate;
    result.iterations = it;
    if (norm == Scalar(0)) {
      result.converged = true;
      return result;
    }
    if (it > 1 &&
        std::abs(estimate - previous) < tol * std::max<Scalar>(Scalar(1), std::abs(estimate))) {
      result.converged = true;
      return result;
    }
    previous = estimate;
    v = w / norm;
  }
  return result;
}

/// All-ones start. A start vector orthogonal to the dominant eigenspace
/// converges to a smaller eigenvalue; structured operators may need the
/// explicit-start overload.
template <typename Scalar, typename Apply>
PowerIterationResult<Scalar> power_iteration(Apply&& apply, Eigen::Index dim, Scalar tol,
                                             int max_iter) {
  return power_iteration<Scalar>(std::forward<Apply>(apply), Vec<Scalar>(Vec<Scalar>::Ones(dim)),
                                 tol, max_iter);
}

/// Largest singular value via power iteration on m^T m.
template <typename Derived>
typename Derived::Scalar spectral_norm(const Eigen::MatrixBase<Derived>& m,
                                       typename Derived::Scalar tol = 1e-10, int max_iter = 10000) {
  using Scalar = typename Derived::Scalar;
  if (m.size() == 0) throw InvalidArgument("spectral_norm: empty matrix");
  if (!(tol > 0)) throw InvalidArgument("spectral_norm: tol must be positive");
  const Mat<Scalar> dense = m;
  Vec<Scalar> tmp(dense.rows());
  auto apply = [&](const Vec<Scalar>& in, Vec<Scalar>& out) {
    tmp.noalias() = dense * in;
    out.noalias() = dense.transpose() * tmp;
  };
  const auto r = power_iteration<Scalar>(apply, dense.cols(), tol, max_iter);
  const Scalar estimate = std::sqrt(std::max<Scalar>(Scalar(0), r.value));
  if (!r.converged) {
    throw ConvergenceError(
        "spectral_norm: no convergence after " + std::to_string(max_iter) + " iterations",
        estimate);
  }
  return estimate;
}

template <typename Scalar>
struct SymEig {
  Vec<Scalar> values;   // ascending
  Mat<Scalar> vectors;  // orthonormal columns, matching `values`
};

/// Cyclic Jacobi eigensolver for dense symmetric matrices.
template <typename Derived>
SymEig<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& input,
                                         typename Derived::Scalar off_tol = 1e-12) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = input.rows();
  if (input.rows() != input.cols()) {
    throw DimensionError("sym_eig: matrix must be square, got " +
                         shape_string(input.rows(), input.cols()));
  }
  if (n > kDenseEigCap) {
    throw CapExceeded("sym_eig: " + std::to_string(n) + "x" + std::to_string(n) +
                      " exceeds the dense eigensolve cap of " + std::to_string(kDenseEigCap));
  }
  Mat<Scalar> a = input;
  const Scalar asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (n > 0 && asym > Scalar(1e-12)) {
    throw InvalidArgument("sym_eig: input is not symmetric (max asymmetry " + std::to_string(asym) +
                          ")");
  }
  a = Scalar(0.5) * (a + a.transpose()).eval();
  Mat<Scalar> v = Mat<Scalar>::Identity(n, n);

  auto max_off = [&]() {
    Scalar off = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < j; ++i) off = std::max(off, std::abs(a(i, j)));
    return off;
  };

  constexpr int kMaxSweeps = 100;
  int sweep = 0;
  for (; sweep < kMaxSweeps && max_off() >= off_tol; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) /
                         (std::abs(theta) + std::sqrt(theta * theta + Scalar(1)));
        const Scalar c = Scalar(1) / std::sqrt(t * t + Scalar(1));
        const Scalar s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p);
          const Scalar akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k);
          const Scalar aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p);
          const Scalar vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (sweep == kMaxSweeps && max_off() >= off_tol) {
    throw ConvergenceError("sym_eig: Jacobi sweeps did not converge", max_off());
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });
  SymEig<Scalar> out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

/// Kronecker product with the standard block layout: block (i, j) is a(i, j) * b.
template <typename DerivedA, typename DerivedB>
Mat<typename DerivedA::Scalar> kron(const Eigen::MatrixBase<DerivedA>& a,
                                    const Eigen::MatrixBase<DerivedB>& b,
                                    Eigen::Index cap = kDefaultKronCap) {
  using Scalar = typename DerivedA::Scalar;
  const Eigen::Index rows = a.rows() * b.rows();
  const Eigen::Index cols = a.cols() * b.cols();
  if (rows > cap || cols > cap) {
    throw CapExceeded("kron: result " + shape_string(rows, cols) + " exceeds dense cap " +
                      shape_string(cap, cap) + "; use the implicit operator path instead");
  }
  Mat<Scalar> out(rows, cols);
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Column-stacking vectorization; matches Eigen's column-major storage.
template <typename Derived>
Vec<typename Derived::Scalar> vec(const Eigen::MatrixBase<Derived>& m) {
  Mat<typename Derived::Scalar> dense = m;
  return Eigen::Map<const Vec<typename Derived::Scalar>>(dense.data(), dense.size());
}

template <typename Scalar>
Mat<Scalar> unvec(const Vec<Scalar>& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Mat<Scalar>>(v.data(), rows, cols);
}

/// Smallest singular value from the eigenvalues of m^T m (oracle route).
template <typename Derived>
typename Derived::Scalar min_singular_value(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const Mat<Scalar> gram = m.transpose() * m;
  const auto eig = sym_eig(gram);
  return std::sqrt(std::max<Scalar>(Scalar(0), eig.values(0)));
}

}  // namespace s3gnn

#endif  // S3GNN_TENSOR_HPP_
