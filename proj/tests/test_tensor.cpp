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

#include <cmath>

#include "s3gnn/errors.hpp"
#include "s3gnn/rng.hpp"
#include "s3gnn/tensor.hpp"
#include "test_util.hpp"

namespace s3gnn {
namespace {

using testing::random_matrix;

TEST(Matmul, IdentityAndDot) {
  Matrix a(2, 2);
  a << 1, 0, 0, 1;
  Matrix b(2, 2);
  b << 2, 3, 4, 5;
  EXPECT_EQ(matmul(a, b), b);

  Matrix row(1, 2);
  row << 1, 2;
  Matrix col(2, 1);
  col << 3, 4;
  EXPECT_EQ(matmul(row, col)(0, 0), 11.0);
}

TEST(Matmul, MismatchNamesBothShapes) {
  try {
    matmul(Matrix(2, 3), Matrix(2, 3));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("2x3"), std::string::npos) << what;
  }
}

TEST(SpectralNorm, Examples) {
  EXPECT_NEAR(spectral_norm(Matrix(Matrix::Identity(3, 3))), 1.0, 1e-12);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 3;
  d(1, 1) = -5;
  EXPECT_NEAR(spectral_norm(d), 5.0, 1e-9);
}

TEST(SpectralNorm, MatchesJacobiOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = rng.range(1, 20);
    const Matrix m = random_matrix(n, n, rng);
    const double oracle = std::sqrt(sym_eig(Matrix(m.transpose() * m)).values.maxCoeff());
    EXPECT_NEAR(spectral_norm(m, 1e-14, 100000), oracle, 1e-8) << "n=" << n;
  }
}

TEST(SpectralNorm, NonConvergenceCarriesEstimate) {
  Rng rng(3);
  const Matrix m = random_matrix(8, 8, rng);
  try {
    spectral_norm(m, 1e-15, 2);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.last_estimate(), 0.0);
  }
  EXPECT_THROW(spectral_norm(Matrix(0, 0)), InvalidArgument);
}

TEST(SymEig, Diagonal) {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 1, 2, 3;
  const auto e = sym_eig(d);
  EXPECT_EQ(e.values, Vector((Vector(3) << 1, 2, 3).finished()));
  EXPECT_NEAR((e.vectors.cwiseAbs() - Matrix::Identity(3, 3)).norm(), 0.0, 1e-14);
}

TEST(SymEig, Swap) {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  const auto e = sym_eig(m);
  EXPECT_NEAR(e.values(0), -1.0, 1e-14);
  EXPECT_NEAR(e.values(1), 1.0, 1e-14);
}

TEST(SymEig, PathLaplacianNullVector) {
  Matrix l(3, 3);
  l << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  const auto e = sym_eig(l);
  EXPECT_NEAR(e.values(0), 0.0, 1e-12);
  // characteristic polynomial -x (x - 1)(x - 3)
  EXPECT_NEAR(e.values(1), 1.0, 1e-12);
  EXPECT_NEAR(e.values(2), 3.0, 1e-12);
  const Vector v = e.vectors.col(0) * (e.vectors(0, 0) < 0 ? -1.0 : 1.0);
  EXPECT_NEAR((v - Vector::Constant(3, 1.0 / std::sqrt(3.0))).norm(), 0.0, 1e-10);
}

TEST(SymEig, ReconstructionAndOrthonormality) {
  Rng rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = rng.range(1, 24);
    const Matrix a = random_matrix(n, n, rng);
    const Matrix m = a + a.transpose();
    const auto e = sym_eig(m);
    const Matrix rebuilt = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    EXPECT_LE((rebuilt - m).norm(), 1e-10 * std::max(1.0, m.norm()));
    EXPECT_LE((e.vectors.transpose() * e.vectors - Matrix::Identity(n, n)).norm(), 1e-10);
    for (int k = 1; k < n; ++k) EXPECT_LE(e.values(k - 1), e.values(k));
  }
}

TEST(SymEig, RejectsAsymmetric) {
  Matrix m(2, 2);
  m << 0, 1, 0.5, 0;
  EXPECT_THROW(sym_eig(m), InvalidArgument);
  EXPECT_THROW(sym_eig(Matrix(2, 3)), DimensionError);
  EXPECT_THROW(sym_eig(Matrix(Matrix::Identity(kDenseEigCap + 1, kDenseEigCap + 1))), CapExceeded);
}

TEST(Kron, Examples) {
  EXPECT_EQ(kron(Matrix(Matrix::Identity(2, 2)), Matrix(Matrix::Identity(2, 2))),
            Matrix(Matrix::Identity(4, 4)));
  Matrix a(2, 2);
  a << 0, 1, -1, 0;
  Matrix expected(2, 2);
  expected << 0, 2, -2, 0;
  EXPECT_EQ(kron(a, Matrix::Constant(1, 1, 2.0)), expected);
}

TEST(Kron, VecIdentity) {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix s = random_matrix(3, 3, rng);
    const Matrix h = random_matrix(3, 3, rng);
    const Matrix w = random_matrix(3, 3, rng);
    const Vector lhs = kron(Matrix(w.transpose()), s) * vec(h);
    EXPECT_LE((lhs - vec(Matrix(s * h * w))).norm(), 1e-12);
  }
  // rectangular H
  const Matrix s = random_matrix(4, 4, rng);
  const Matrix h = random_matrix(4, 2, rng);
  const Matrix w = random_matrix(2, 2, rng);
  EXPECT_LE((kron(Matrix(w.transpose()), s) * vec(h) - vec(Matrix(s * h * w))).norm(), 1e-12);
}

TEST(Kron, CapIsEnforced) {
  try {
    kron(Matrix::Identity(65, 65), Matrix::Identity(64, 64));
    FAIL() << "expected CapExceeded";
  } catch (const CapExceeded& e) {
    EXPECT_NE(std::string(e.what()).find("implicit"), std::string::npos);
  }
  EXPECT_NO_THROW(kron(Matrix::Identity(4, 4), Matrix::Identity(4, 4), 16));
}

TEST(Kron, AntisymmetricTimesSymmetricIsAntisymmetric) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = rng.range(1, 5);
    const int n = rng.range(1, 6);
    const Matrix r = random_matrix(d, d, rng);
    const Matrix s = r - r.transpose();
    const Matrix q = random_matrix(n, n, rng);
    const Matrix m = q + q.transpose();
    const Matrix k = kron(Matrix(s.transpose()), m);
    EXPECT_EQ((k + k.transpose()).norm(), 0.0);
  }
}

TEST(Vec, RoundTrip) {
  Rng rng(2);
  const Matrix m = random_matrix(3, 4, rng);
  const Vector v = vec(m);
  EXPECT_EQ(v(1), m(1, 0));  // column stacking
  EXPECT_EQ(unvec(v, 3, 4), m);
}

TEST(MinSingularValue, OddAntisymmetricIsSingular) {
  Rng rng(8);
  const Matrix r = random_matrix(3, 3, rng);
  EXPECT_NEAR(min_singular_value(Matrix(r - r.transpose())), 0.0, 1e-7);
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 0.9, 2.0;
  EXPECT_NEAR(min_singular_value(d), 0.9, 1e-12);
}

TEST(Rng, EqualSeedsEqualStreams) {
  Rng a(12345);
  Rng b(12345);
  for (int i = 0; i < 1000000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64()) << "draw " << i;
}

TEST(Rng, KnownFirstDraw) {
  // SplitMix64 reference value for seed 0.
  Rng r(0);
  EXPECT_EQ(r.next_u64(), 0xE220A8397B1DCDAFULL);
}

TEST(Rng, RangesStayInBounds) {
  Rng r(77);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const int k = r.range(-3, 4);
    ASSERT_GE(k, -3);
    ASSERT_LE(k, 4);
    ASSERT_LT(r.below(7), 7u);
  }
}

TEST(Rng, ShuffleIsPermutation) {
  Rng r(4);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  r.shuffle(std::span<int>(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7}));
}

}  // namespace
}  // namespace s3gnn
