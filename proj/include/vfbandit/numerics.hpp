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

// Dense float64 kernels: matrices, vectors, the seeded generator, random
// orthogonal matrices, Cholesky, SPD inverse and multivariate normal draws.

#ifndef VFBANDIT_NUMERICS_HPP_
#define VFBANDIT_NUMERICS_HPP_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vfbandit {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by cholesky() and spd_inverse() on a non-positive pivot.
class NotPositiveDefinite : public NumericError {
 public:
  using NumericError::NumericError;
};

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim, double fill = 0.0) : data_(dim, fill) {}
  Vector(std::initializer_list<double> values) : data_(values) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t dim() const { return data_.size(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& raw() const { return data_; }

  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> data_;
};

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n, double scale = 1.0);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool is_square() const { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  Vector row_vector(std::size_t r) const;
  Vector column(std::size_t c) const;
  void set_row(std::size_t r, const Vector& v);

  /// Columns [first, first + count) as a rows() × count matrix.
  Matrix column_block(std::size_t first, std::size_t count) const;

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Basic linear algebra. All throw DimensionError on shape mismatch.
double dot(std::span<const double> a, std::span<const double> b);
double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
double max_abs(const Vector& v);
double max_abs(const Matrix& m);
double max_abs_diff(const Vector& a, const Vector& b);
double max_abs_diff(const Matrix& a, const Matrix& b);
Vector operator+(const Vector& a, const Vector& b);
Vector operator-(const Vector& a, const Vector& b);
Vector operator*(double s, const Vector& v);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& m);
Matrix transpose(const Matrix& m);
Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, const Vector& x);
/// aᵀx without forming the transpose.
Vector matvec_transposed(const Matrix& a, const Vector& x);
/// xᵀ a x for square a.
double quadratic_form(const Matrix& a, std::span<const double> x);
/// ‖QᵀQ − I‖∞.
double orthogonality_error(const Matrix& q);
/// Copy of m with (m + mᵀ)/2 written to both triangles.
Matrix symmetrized(const Matrix& m);

/// Seeded pseudo-random source.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Uniform doubles take the top 53 bits of one draw. Standard
/// normals use the Marsaglia polar method (one cached spare per pair); the
/// only transcendental involved is std::log, so draws are bitwise identical
/// across runs and across platforms whose libm log is correctly rounded.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  /// Standard normal.
  double normal();
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Independent generator for a named sub-stream, seeded by mix_seed(seed, stream).
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// SplitMix64 finalizer over the sequence (base, a, b). Used to derive
/// sub-stream and cell seeds so that adding streams never perturbs others.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// Vector of n independent standard normals.
Vector standard_normals(std::size_t n, Rng& rng);

/// Haar-distributed d × d orthogonal matrix: Gram–Schmidt (modified, with one
/// re-orthogonalization pass) on a Gaussian matrix. The implicit triangular
/// factor has a positive diagonal, so the seed → Q map is unique.
/// Degenerate draws are redrawn; NumericError after kMaxOrthogonalRetries.
Matrix random_orthogonal(std::size_t d, Rng& rng);
inline constexpr int kMaxOrthogonalRetries = 16;

/// Lower-triangular L with LLᵀ = a. Throws NotPositiveDefinite on a
/// non-positive pivot and DimensionError if a is not square and symmetric.
Matrix cholesky(const Matrix& a);

/// Inverse of an SPD matrix via its Cholesky factor. The result is exactly
/// symmetric.
Matrix spd_inverse(const Matrix& a);

/// Inverse of a lower-triangular matrix (forward substitution).
Matrix lower_triangular_inverse(const Matrix& l);

struct MvnDraw {
  Vector sample;
  Vector z;
};

/// mean + A·z with z ~ N(0, I) drawn from rng; covariance is AAᵀ.
MvnDraw mvn_draw(const Vector& mean, const Matrix& cov_factor, Rng& rng);
Vector mvn_sample(const Vector& mean, const Matrix& cov_factor, Rng& rng);

}  // namespace vfbandit

#endif  // VFBANDIT_NUMERICS_HPP_
