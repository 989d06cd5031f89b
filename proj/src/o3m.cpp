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

#include "vfbandit/o3m.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "vfbandit/tolerances.hpp"

namespace vfbandit {

DimPartition::DimPartition(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw DimensionError("DimPartition: at least one participant required");
  offsets_.reserve(dims_.size());
  for (std::size_t d : dims_) {
    if (d == 0) throw DimensionError("DimPartition: every participant needs at least one coordinate");
    offsets_.push_back(total_);
    total_ += d;
  }
}

DimPartition DimPartition::even(std::size_t d, std::size_t parts) {
  if (parts == 0 || parts > d) throw DimensionError("DimPartition::even: need 1 <= parts <= d");
  std::vector<std::size_t> dims(parts, d / parts);
  for (std::size_t j = 0; j < d % parts; ++j) ++dims[j];
  return DimPartition(std::move(dims));
}

Vector DimPartition::local_slice(std::span<const double> global, std::size_t j) const {
  if (global.size() != total_) throw DimensionError("local_slice: global dimension mismatch");
  const auto sub = global.subspan(offset(j), dim(j));
  return Vector(std::vector<double>(sub.begin(), sub.end()));
}

std::vector<MaskShard> partition_mask(const Matrix& q, const DimPartition& part) {
  if (!q.is_square()) throw DimensionError("partition_mask: mask not square");
  if (part.total() != q.cols()) {
    throw DimensionError("partition_mask: partition sums to " + std::to_string(part.total()) +
                         " but mask dimension is " + std::to_string(q.cols()));
  }
  std::vector<MaskShard> shards;
  shards.reserve(part.participants());
  for (std::size_t j = 0; j < part.participants(); ++j) {
    shards.push_back({j, q.column_block(part.offset(j), part.dim(j))});
  }
  return shards;
}

MaskedContext mask_local(const MaskShard& shard, const Vector& x_local, std::size_t arm,
                         std::size_t round) {
  if (shard.block.cols() != x_local.dim()) {
    throw DimensionError("mask_local: participant " + std::to_string(shard.owner) + " holds " +
                         std::to_string(shard.block.cols()) + " coordinates, got " +
                         std::to_string(x_local.dim()));
  }
  return {matvec(shard.block, x_local), arm, round};
}

MaskedContext aggregate(std::span<const MaskedContext> masked) {
  if (masked.empty()) throw std::invalid_argument("aggregate: no shares");
  MaskedContext out = masked.front();
  for (std::size_t i = 1; i < masked.size(); ++i) {
    const MaskedContext& m = masked[i];
    if (m.round != out.round || m.arm != out.arm) {
      throw std::invalid_argument("aggregate: shares from different rounds or arms");
    }
    if (m.vec.dim() != out.vec.dim()) throw DimensionError("aggregate: dimension mismatch");
    for (std::size_t k = 0; k < out.vec.dim(); ++k) out.vec[k] += m.vec[k];
  }
  return out;
}

PrivacyWitness privacy_witness_with_rotation(const Matrix& q1, const Vector& x1,
                                             const Matrix& rotation) {
  if (!q1.is_square() || q1.cols() != x1.dim() || rotation.rows() != x1.dim() ||
      !rotation.is_square()) {
    throw DimensionError("privacy_witness: dimension mismatch");
  }
  if (orthogonality_error(rotation) > kTolerances.orthogonality) {
    throw std::invalid_argument("privacy_witness: rotation is not orthogonal");
  }
  // R⁻¹ = Rᵀ for orthogonal R.
  return {matmul(q1, rotation), matvec_transposed(rotation, x1), rotation};
}

PrivacyWitness privacy_witness(const Matrix& q1, const Vector& x1, Rng& rng) {
  const std::size_t d = x1.dim();
  if (d == 1) return privacy_witness_with_rotation(q1, x1, Matrix{{-1.0}});
  return privacy_witness_with_rotation(q1, x1, random_orthogonal(d, rng));
}

namespace {

void put_le(std::ostream& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xffU));
}

std::uint64_t get_le(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw std::runtime_error("matrix file: truncated");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

void write_matrix_binary(std::ostream& out, const Matrix& m) {
  out.write("VFBM", 4);
  put_le(out, kMatrixFormatVersion, 4);
  put_le(out, m.rows(), 8);
  put_le(out, m.cols(), 8);
  for (double v : m.values()) put_le(out, std::bit_cast<std::uint64_t>(v), 8);
}

Matrix read_matrix_binary(std::istream& in) {
  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, "VFBM", 4) != 0) {
    throw std::runtime_error("matrix file: bad magic");
  }
  if (get_le(in, 4) != kMatrixFormatVersion) throw std::runtime_error("matrix file: unsupported version");
  const std::uint64_t rows = get_le(in, 8);
  const std::uint64_t cols = get_le(in, 8);
  if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20)) {
    throw std::runtime_error("matrix file: implausible shape");
  }
  Matrix m(rows, cols);
  for (double& v : m.values()) v = std::bit_cast<double>(get_le(in, 8));
  return m;
}

}  // namespace vfbandit
