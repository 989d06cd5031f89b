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
#include <numbers>
#include <sstream>

#include "vfbandit/o3m.hpp"
#include "vfbandit/tolerances.hpp"

namespace vfbandit {
namespace {

std::vector<MaskedContext> mask_all(const Matrix& q, const DimPartition& part, const Vector& x) {
  std::vector<MaskedContext> shares;
  for (const MaskShard& s : partition_mask(q, part)) {
    shares.push_back(mask_local(s, part.local_slice(x.values(), s.owner), 3, 9));
  }
  return shares;
}

TEST(DimPartition, OffsetsAndEvenSplit) {
  const DimPartition p({2, 3, 1});
  EXPECT_EQ(p.total(), 6u);
  EXPECT_EQ(p.offset(0), 0u);
  EXPECT_EQ(p.offset(1), 2u);
  EXPECT_EQ(p.offset(2), 5u);
  EXPECT_EQ(DimPartition::even(10, 3).dims(), (std::vector<std::size_t>{4, 3, 3}));
  EXPECT_EQ(DimPartition::even(100, 5).dims(), (std::vector<std::size_t>(5, 20)));
  EXPECT_THROW(DimPartition({2, 0}), std::invalid_argument);
  EXPECT_THROW(DimPartition::even(2, 3), std::invalid_argument);
}

TEST(PartitionMask, FiveShardsOfTwenty) {
  Rng rng(0);
  const Matrix q = random_orthogonal(100, rng);
  const auto shards = partition_mask(q, DimPartition({20, 20, 20, 20, 20}));
  ASSERT_EQ(shards.size(), 5u);
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_EQ(shards[j].owner, j);
    EXPECT_EQ(shards[j].block.rows(), 100u);
    EXPECT_EQ(shards[j].block.cols(), 20u);
    EXPECT_EQ(shards[j].block, q.column_block(20 * j, 20));
  }
}

TEST(PartitionMask, SingleShardIsWholeMask) {
  Rng rng(1);
  const Matrix q = random_orthogonal(7, rng);
  const auto shards = partition_mask(q, DimPartition({7}));
  ASSERT_EQ(shards.size(), 1u);
  EXPECT_EQ(shards[0].block, q);
}

TEST(PartitionMask, IdentitySlicing) {
  const auto shards = partition_mask(Matrix::identity(4), DimPartition({1, 3}));
  EXPECT_EQ(shards[0].block, (Matrix{{1}, {0}, {0}, {0}}));
  EXPECT_EQ(shards[1].block, (Matrix{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
}

TEST(PartitionMask, ShapeMismatchThrows) {
  EXPECT_THROW(partition_mask(Matrix::identity(4), DimPartition({2, 3})), DimensionError);
}

TEST(PartitionMask, ShardsAreOrthonormal) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + rng.below(63);
    const std::size_t m = 1 + rng.below(std::min<std::size_t>(d, 6));
    const Matrix q = random_orthogonal(d, rng);
    for (const MaskShard& s : partition_mask(q, DimPartition::even(d, m))) {
      EXPECT_LE(max_abs_diff(matmul(transpose(s.block), s.block), Matrix::identity(s.block.cols())),
                kTolerances.orthogonality);
    }
  }
}

TEST(MaskLocal, IdentityColumnsEmbed) {
  const auto shards = partition_mask(Matrix::identity(4), DimPartition({1, 3}));
  const MaskedContext m = mask_local(shards[1], Vector{5, 6, 7}, 2, 11);
  EXPECT_EQ(m.vec, (Vector{0, 5, 6, 7}));
  EXPECT_EQ(m.arm, 2u);
  EXPECT_EQ(m.round, 11u);
  EXPECT_EQ(mask_local(shards[0], Vector{0.0}).vec, Vector(4, 0.0));
}

TEST(MaskLocal, PermutationByHand) {
  const Matrix q{{0, 1}, {1, 0}};
  const DimPartition part({1, 1});
  const auto shards = partition_mask(q, part);
  const MaskedContext a = mask_local(shards[0], Vector{3});
  const MaskedContext b = mask_local(shards[1], Vector{4});
  EXPECT_EQ(a.vec, (Vector{0, 3}));
  EXPECT_EQ(b.vec, (Vector{4, 0}));
  const std::vector<MaskedContext> both{a, b};
  EXPECT_EQ(aggregate(both).vec, (Vector{4, 3}));
  EXPECT_EQ(aggregate(both).vec, matvec(q, Vector{3, 4}));
}

TEST(Aggregate, SingleParticipantIsItsShare) {
  Rng rng(2);
  const Matrix q = random_orthogonal(5, rng);
  const Vector x = standard_normals(5, rng);
  const auto shares = mask_all(q, DimPartition({5}), x);
  EXPECT_EQ(aggregate(shares).vec, shares[0].vec);
}

TEST(Aggregate, IdentityMaskReturnsRawContext) {
  const Vector x{1, 2, 3, 4, 5, 6};
  for (auto dims : {std::vector<std::size_t>{6}, {1, 5}, {2, 2, 2}, {3, 1, 1, 1}}) {
    EXPECT_EQ(aggregate(mask_all(Matrix::identity(6), DimPartition(dims), x)).vec, x);
  }
}

TEST(Aggregate, RejectsMixedRoundsOrArms) {
  const std::vector<MaskedContext> mixed{{Vector{1.0}, 0, 0}, {Vector{1.0}, 1, 0}};
  EXPECT_THROW(aggregate(mixed), std::invalid_argument);
  EXPECT_THROW(aggregate(std::vector<MaskedContext>{}), std::invalid_argument);
}

TEST(Aggregate, PropertyEqualsMaskTimesContext) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + rng.below(64);
    const std::size_t m = 1 + rng.below(std::min<std::size_t>(d, 8));
    // Random composition of d into m positive parts.
    std::vector<std::size_t> dims(m, 1);
    for (std::size_t extra = d - m; extra > 0; --extra) ++dims[rng.below(m)];
    const DimPartition part(dims);
    const Matrix q = random_orthogonal(d, rng);
    const Vector x = standard_normals(d, rng);
    const MaskedContext agg = aggregate(mask_all(q, part, x));
    ASSERT_LE(max_abs_diff(agg.vec, matvec(q, x)), kTolerances.aggregation) << "d=" << d;
    ASSERT_LE(std::abs(norm2(agg.vec) - norm2(x)), kTolerances.norm_preservation * std::max(1.0, norm2(x)));
    ASSERT_EQ(agg.arm, 3u);
    ASSERT_EQ(agg.round, 9u);
  }
}

TEST(PrivacyWitness, OneDimensionalSignFlip) {
  Rng rng(0);
  const PrivacyWitness w = privacy_witness(Matrix{{1}}, Vector{5}, rng);
  EXPECT_EQ(w.q2, (Matrix{{-1}}));
  EXPECT_EQ(w.x2, (Vector{-5}));
}

TEST(PrivacyWitness, QuarterTurnByHand) {
  const double c = std::cos(std::numbers::pi / 2), s = std::sin(std::numbers::pi / 2);
  const Matrix r{{c, -s}, {s, c}};
  Rng rng(3);
  const Matrix q1 = random_orthogonal(2, rng);
  const Vector x1{0.3, -1.2};
  const PrivacyWitness w = privacy_witness_with_rotation(q1, x1, r);
  EXPECT_LE(max_abs_diff(matvec(w.q2, w.x2), matvec(q1, x1)), 1e-15);
  // Rᵀx for a quarter turn: (x₂, −x₁).
  EXPECT_NEAR(w.x2[0], -1.2, 1e-15);
  EXPECT_NEAR(w.x2[1], -0.3, 1e-15);
}

TEST(PrivacyWitness, PropertyReproducesMaskedDataWithDistinctRawData) {
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const Matrix q1 = random_orthogonal(8, rng);
    const Vector x1 = standard_normals(8, rng);
    const PrivacyWitness w = privacy_witness(q1, x1, rng);
    ASSERT_LE(max_abs_diff(matvec(w.q2, w.x2), matvec(q1, x1)), kTolerances.witness);
    ASSERT_GT(max_abs_diff(w.x2, x1), kTolerances.witness_distinct);
    ASSERT_LE(orthogonality_error(w.q2), kTolerances.orthogonality);
  }
}

TEST(PrivacyWitness, RejectsNonOrthogonalRotation) {
  EXPECT_THROW(privacy_witness_with_rotation(Matrix::identity(2), Vector{1, 2}, Matrix{{2, 0}, {0, 1}}),
               std::invalid_argument);
}

TEST(MatrixBinary, RoundTripIsBitExact) {
  Rng rng(6);
  Matrix m(3, 5);
  for (double& v : m.values()) v = rng.normal();
  m(0, 0) = -0.0;
  m(2, 4) = 1e-310;
  std::stringstream buf;
  write_matrix_binary(buf, m);
  EXPECT_EQ(buf.str().size(), 4u + 4u + 8u + 8u + 15u * 8u);
  EXPECT_EQ(buf.str().substr(0, 4), "VFBM");
  const Matrix back = read_matrix_binary(buf);
  ASSERT_EQ(back.rows(), 3u);
  ASSERT_EQ(back.cols(), 5u);
  for (std::size_t i = 0; i < 15; ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back.values()[i]), std::bit_cast<std::uint64_t>(m.values()[i]));
  }
}

TEST(MatrixBinary, RejectsCorruptInput) {
  std::stringstream good;
  write_matrix_binary(good, Matrix::identity(2));
  const std::string bytes = good.str();
  {
    std::stringstream bad("XXXX" + bytes.substr(4));
    EXPECT_THROW(read_matrix_binary(bad), std::runtime_error);
  }
  {
    std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(read_matrix_binary(truncated), std::runtime_error);
  }
  {
    std::string v2 = bytes;
    v2[4] = 2;
    std::stringstream bad(v2);
    EXPECT_THROW(read_matrix_binary(bad), std::runtime_error);
  }
}

}  // namespace
}  // namespace vfbandit
