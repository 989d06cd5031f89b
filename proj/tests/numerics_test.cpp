// Copyright 2026 The vfbandit Authors. All Rights Reserved.
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
#include <limits>
#include <set>

#include "oracles.hpp"
#include "vfbandit/numerics.hpp"
#include "vfbandit/tolerances.hpp"

namespace vfbandit {
namespace {

Matrix random_spd(std::size_t d, Rng& rng, double eps = 1e-3) {
  Matrix b(d, d);
  for (double& v : b.values()) v = rng.normal();
  return matmul(b, transpose(b)) + Matrix::identity(d, eps);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(a.next_u64(), b.next_u64());
    ASSERT_EQ(a.normal(), b.normal());
  }
}

TEST(Rng, UniformRangeAndMoments) {
  Rng rng(3);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
  EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12.0, 0.002);
}

TEST(Rng, NormalMoments) {
  Rng rng(11);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.015);
}

TEST(Rng, BelowIsInRangeAndCoversAll) {
  Rng rng(5);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto k = rng.below(7);
    ASSERT_LT(k, 7u);
    ++hits[k];
  }
  for (int h : hits) EXPECT_GT(h, 800);
  EXPECT_THROW(rng.below(0), std::invalid_argument);
}

TEST(Rng, ForksAreIndependentOfParentUse) {
  Rng a(9);
  const Rng before = a.fork(4);
  a.next_u64();
  Rng after = a.fork(4);
  Rng copy = before;
  EXPECT_EQ(copy.next_u64(), after.next_u64());
  EXPECT_NE(Rng(9).fork(1).next_u64(), Rng(9).fork(2).next_u64());
}

TEST(MixSeed, DistinctInputsGiveDistinctSeeds) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a) {
    for (std::uint64_t b = 0; b < 20; ++b) seen.insert(mix_seed(0, a, b));
  }
  EXPECT_EQ(seen.size(), 400u);
  EXPECT_EQ(mix_seed(1, 2, 3), mix_seed(1, 2, 3));
  EXPECT_NE(mix_seed(1, 2, 3), mix_seed(1, 3, 2));
}

TEST(RandomOrthogonal, OneByOneIsPlusOrMinusOne) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(s);
    const Matrix q = random_orthogonal(1, rng);
    EXPECT_EQ(std::abs(q(0, 0)), 1.0);
  }
}

TEST(RandomOrthogonal, ThreeBySeedSevenIsOrthogonalEntrywise) {
  Rng rng(7);
  const Matrix q = random_orthogonal(3, rng);
  const auto qd = oracle::dense(q);
  const auto qt = oracle::dense(transpose(q));
  const auto prod = oracle::multiply(qt, qd);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(prod[i][j], i == j ? 1.0 : 0.0, 1e-10);
  }
}

TEST(RandomOrthogonal, DeterminantHasUnitModulus) {
  Rng rng(0);
  const Matrix q = random_orthogonal(100, rng);
  EXPECT_NEAR(std::abs(oracle::determinant(oracle::dense(q))), 1.0, 1e-6);
}

TEST(RandomOrthogonal, SameSeedSameMatrix) {
  Rng a(12), b(12);
  EXPECT_EQ(random_orthogonal(40, a), random_orthogonal(40, b));
}

TEST(RandomOrthogonal, PropertyOrthogonalAndNormPreservingUpTo256) {
  Rng rng(2024);
  for (std::size_t d : {1, 2, 3, 7, 16, 64, 100, 128, 200, 256}) {
    const Matrix q = random_orthogonal(d, rng);
    EXPECT_LE(orthogonality_error(q), kTolerances.orthogonality) << "d=" << d;
    EXPECT_LE(orthogonality_error(transpose(q)), kTolerances.orthogonality) << "d=" << d;
    for (int k = 0; k < 5; ++k) {
      const Vector x = standard_normals(d, rng);
      EXPECT_LE(std::abs(norm2(matvec(q, x)) - norm2(x)), kTolerances.norm_preservation * norm2(x));
    }
  }
}

TEST(RandomOrthogonal, FirstColumnSignsAreBalanced) {
  // A Haar matrix has no preferred sign in any entry.
  int positive = 0;
  for (std::uint64_t s = 0; s < 400; ++s) {
    Rng rng(s);
    if (random_orthogonal(4, rng)(0, 0) > 0) ++positive;
  }
  EXPECT_GT(positive, 160);
  EXPECT_LT(positive, 240);
}

TEST(Cholesky, Identity) {
  EXPECT_EQ(cholesky(Matrix::identity(4)), Matrix::identity(4));
}

TEST(Cholesky, TwoByTwoByHand) {
  const Matrix l = cholesky(Matrix{{4, 2}, {2, 3}});
  EXPECT_DOUBLE_EQ(l(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(l(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(l(1, 0), 1.0);
  EXPECT_NEAR(l(1, 1), std::sqrt(2.0), 1e-15);
}

TEST(Cholesky, IndefiniteIsRejected) {
  EXPECT_THROW(cholesky(Matrix{{1, 2}, {2, 1}}), NotPositiveDefinite);
}

TEST(Cholesky, AsymmetricOrNonSquareIsRejected) {
  EXPECT_THROW(cholesky(Matrix{{1, 0.5}, {0.2, 1}}), DimensionError);
  EXPECT_THROW(cholesky(Matrix(2, 3)), DimensionError);
}

TEST(Cholesky, RoundTripOnRandomSpd) {
  Rng rng(77);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t d = 1 + rng.below(24);
    const Matrix a = random_spd(d, rng);
    const Matrix l = cholesky(a);
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = r + 1; c < d; ++c) ASSERT_EQ(l(r, c), 0.0);
    }
    ASSERT_LE(max_abs_diff(matmul(l, transpose(l)), a), kTolerances.cholesky_reconstruction * max_abs(a));
  }
}

TEST(SpdInverse, ScalarMatrix) {
  EXPECT_LE(max_abs_diff(spd_inverse(Matrix::identity(3, 2.0)), Matrix::identity(3, 0.5)), 1e-15);
}

TEST(SpdInverse, TwoByTwoAnalytic) {
  const Matrix inv = spd_inverse(Matrix{{2, 1}, {1, 2}});
  const Matrix expected = (1.0 / 3.0) * Matrix{{2, -1}, {-1, 2}};
  EXPECT_LE(max_abs_diff(inv, expected), 1e-15);
}

TEST(SpdInverse, RankOneUpdateOfIdentity) {
  const Matrix inv = spd_inverse(Matrix{{2, 0}, {0, 1}});
  EXPECT_LE(max_abs_diff(inv, Matrix{{0.5, 0}, {0, 1}}), 1e-15);
}

TEST(SpdInverse, ResidualAndExactSymmetry) {
  Rng rng(31);
  for (int i = 0; i < 50; ++i) {
    const std::size_t d = 1 + rng.below(30);
    const Matrix a = random_spd(d, rng, 1.0);
    const Matrix inv = spd_inverse(a);
    EXPECT_LE(max_abs_diff(matmul(a, inv), Matrix::identity(d)), kTolerances.inverse_residual);
    EXPECT_EQ(inv, transpose(inv));
    // Column-by-column against the elimination oracle.
    const auto ad = oracle::dense(a);
    for (std::size_t c = 0; c < d; ++c) {
      std::vector<double> e(d, 0.0);
      e[c] = 1.0;
      EXPECT_LE(oracle::max_abs_diff(oracle::solve(ad, e), oracle::dense(inv.column(c))), 1e-8);
    }
  }
}

TEST(LowerTriangularInverse, MatchesOracle) {
  Rng rng(8);
  const Matrix l = cholesky(random_spd(6, rng, 1.0));
  const Matrix inv = lower_triangular_inverse(l);
  EXPECT_LE(max_abs_diff(matmul(l, inv), Matrix::identity(6)), 1e-12);
}

TEST(Mvn, ZeroFactorReturnsMean) {
  Rng rng(1);
  EXPECT_EQ(mvn_sample(Vector(3, 0.0), Matrix(3, 3), rng), Vector(3, 0.0));
  const Vector m{1.0, -2.0};
  EXPECT_EQ(mvn_sample(m, Matrix(2, 2), rng), m);
}

TEST(Mvn, IdentityFactorAddsRawDraw) {
  const Vector m{0.5, -1.0, 2.0};
  Rng a(99), b(99);
  const MvnDraw draw = mvn_draw(m, Matrix::identity(3), a);
  const Vector z = standard_normals(3, b);
  EXPECT_EQ(draw.z, z);
  EXPECT_EQ(draw.sample, m + z);
}

TEST(Mvn, EmpiricalCovariance) {
  const Matrix cov{{2, 1}, {1, 2}};
  const Matrix factor = cholesky(cov);
  Rng rng(123);
  const int n = 10000;
  double s00 = 0, s01 = 0, s11 = 0, m0 = 0, m1 = 0;
  for (int i = 0; i < n; ++i) {
    const Vector x = mvn_sample(Vector(2, 0.0), factor, rng);
    m0 += x[0];
    m1 += x[1];
    s00 += x[0] * x[0];
    s01 += x[0] * x[1];
    s11 += x[1] * x[1];
  }
  m0 /= n;
  m1 /= n;
  EXPECT_NEAR(s00 / n - m0 * m0, 2.0, 0.1);
  EXPECT_NEAR(s01 / n - m0 * m1, 1.0, 0.1);
  EXPECT_NEAR(s11 / n - m1 * m1, 2.0, 0.1);
}

TEST(Mvn, BitwiseReproducible) {
  Rng rng(4);
  const Matrix factor = cholesky(random_spd(10, rng, 1.0));
  const Vector mean = standard_normals(10, rng);
  Rng a(55), b(55);
  for (int i = 0; i < 20; ++i) ASSERT_EQ(mvn_sample(mean, factor, a), mvn_sample(mean, factor, b));
}

TEST(LinearAlgebra, ShapeMismatchThrows) {
  EXPECT_THROW(dot(Vector(2), Vector(3)), DimensionError);
  EXPECT_THROW(matmul(Matrix(2, 3), Matrix(2, 3)), DimensionError);
  EXPECT_THROW(matvec(Matrix(2, 3), Vector(2)), DimensionError);
}

TEST(LinearAlgebra, MatvecTransposedMatchesExplicitTranspose) {
  Rng rng(6);
  Matrix a(5, 3);
  for (double& v : a.values()) v = rng.normal();
  const Vector x = standard_normals(5, rng);
  EXPECT_LE(max_abs_diff(matvec_transposed(a, x), matvec(transpose(a), x)), 1e-15);
}

TEST(LinearAlgebra, QuadraticFormAndSymmetrize) {
  const Matrix a{{2, 1}, {3, 4}};
  const std::vector<double> x{1.0, 2.0};
  EXPECT_DOUBLE_EQ(quadratic_form(a, x), 2 + 2 * 1 + 2 * 3 + 4 * 4);
  EXPECT_EQ(symmetrized(a), (Matrix{{2, 2}, {2, 4}}));
}

}  // namespace
}  // namespace vfbandit
