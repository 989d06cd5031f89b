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

// Orthogonal-matrix mask mechanism (O3M).
//
// A mask generator draws one orthogonal Q (d × d) and splits it by columns
// into shards Q^1..Q^M, one per participant, where participant j owns d_j
// contiguous coordinates of every context. Each participant sends
// Q^j x^j (length d) and the receiver sums the shares: Σ_j Q^j x^j = Q·x.
// Because Q is orthogonal, xᵀΛ⁻¹x and xᵀθ̂ are invariant under the mask, so
// a bandit run entirely on masked contexts makes the same decisions.

#ifndef VFBANDIT_O3M_HPP_
#define VFBANDIT_O3M_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "vfbandit/numerics.hpp"

namespace vfbandit {

/// Per-participant coordinate counts d_1..d_M; shard j covers coordinates
/// [offset(j), offset(j) + dims[j]).
class DimPartition {
 public:
  explicit DimPartition(std::vector<std::size_t> dims);
  /// `parts` nearly equal blocks, larger ones first.
  static DimPartition even(std::size_t d, std::size_t parts);

  std::size_t participants() const { return dims_.size(); }
  std::size_t total() const { return total_; }
  std::size_t dim(std::size_t j) const { return dims_.at(j); }
  std::size_t offset(std::size_t j) const { return offsets_.at(j); }
  const std::vector<std::size_t>& dims() const { return dims_; }

  /// Slice of a global vector owned by participant j.
  Vector local_slice(std::span<const double> global, std::size_t j) const;

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

struct MaskShard {
  std::size_t owner = 0;
  /// d × d_j block of Q.
  Matrix block;
};

struct MaskedContext {
  Vector vec;
  std::size_t arm = 0;
  std::size_t round = 0;
};

/// Shard j takes columns [offset(j), offset(j) + d_j) of q in participant order.
std::vector<MaskShard> partition_mask(const Matrix& q, const DimPartition& part);

/// block · x_local, tagged with (arm, round).
MaskedContext mask_local(const MaskShard& shard, const Vector& x_local, std::size_t arm = 0,
                         std::size_t round = 0);

/// Entrywise sum of shares belonging to one (round, arm).
MaskedContext aggregate(std::span<const MaskedContext> masked);

struct PrivacyWitness {
  Matrix q2;
  Vector x2;
  Matrix rotation;
};

/// Alternative (Q₂, x₂) = (Q₁R, Rᵀx₁) with Q₂x₂ = Q₁x₁ for orthogonal R.
/// R is drawn with random_orthogonal; for d = 1 it is [−1]. A supplied
/// rotation that is not orthogonal throws std::invalid_argument.
PrivacyWitness privacy_witness(const Matrix& q1, const Vector& x1, Rng& rng);
PrivacyWitness privacy_witness_with_rotation(const Matrix& q1, const Vector& x1,
                                             const Matrix& rotation);

/// Binary matrix file: the 4 bytes "VFBM", a little-endian u32 version (1),
/// u64 rows, u64 cols, then rows·cols little-endian IEEE-754 doubles in
/// row-major order.
inline constexpr std::uint32_t kMatrixFormatVersion = 1;
void write_matrix_binary(std::ostream& out, const Matrix& m);
/// Throws std::runtime_error on a bad header or a short read.
Matrix read_matrix_binary(std::istream& in);

}  // namespace vfbandit

#endif  // VFBANDIT_O3M_HPP_
