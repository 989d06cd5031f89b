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

#include "vfbandit/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vfbandit/tolerances.hpp"

namespace vfbandit {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n, double scale) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = scale;
  return m;
}

Vector Matrix::row_vector(std::size_t r) const {
  auto span = row(r);
  return Vector(std::vector<double>(span.begin(), span.end()));
}

Vector Matrix::column(std::size_t c) const {
  Vector v(rows_);
  for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
  return v;
}

void Matrix::set_row(std::size_t r, const Vector& v) {
  require(v.dim() == cols_, "Matrix::set_row: dimension mismatch");
  std::copy(v.values().begin(), v.values().end(), row(r).begin());
}

Matrix Matrix::column_block(std::size_t first, std::size_t count) const {
  require(first + count <= cols_, "Matrix::column_block: out of range");
  Matrix out(rows_, count);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, first + c);
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double dot(const Vector& a, const Vector& b) { return dot(a.values(), b.values()); }

double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

double max_abs(const Vector& v) {
  double m = 0.0;
  for (double x : v.values()) m = std::max(m, std::abs(x));
  return m;
}

double max_abs(const Matrix& m) {
  double out = 0.0;
  for (double x : m.values()) out = std::max(out, std::abs(x));
  return out;
}

double max_abs_diff(const Vector& a, const Vector& b) {
  require(a.dim() == b.dim(), "max_abs_diff: dimension mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "max_abs_diff: shape mismatch");
  double m = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) m = std::max(m, std::abs(av[i] - bv[i]));
  return m;
}

Vector operator+(const Vector& a, const Vector& b) {
  require(a.dim() == b.dim(), "vector +: dimension mismatch");
  Vector out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector operator-(const Vector& a, const Vector& b) {
  require(a.dim() == b.dim(), "vector -: dimension mismatch");
  Vector out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector operator*(double s, const Vector& v) {
  Vector out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) out[i] = s * v[i];
  return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "matrix +: shape mismatch");
  Matrix out(a.rows(), a.cols());
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] + bv[i];
  return out;
}

Matrix operator*(double s, const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  auto mv = m.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < mv.size(); ++i) ov[i] = s * mv[i];
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = m(r, c);
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimension mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Vector matvec(const Matrix& a, const Vector& x) {
  require(a.cols() == x.dim(), "matvec: dimension mismatch");
  Vector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), x.values());
  return out;
}

Vector matvec_transposed(const Matrix& a, const Vector& x) {
  require(a.rows() == x.dim(), "matvec_transposed: dimension mismatch");
  Vector out(a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    auto arow = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += arow[j] * xi;
  }
  return out;
}

double quadratic_form(const Matrix& a, std::span<const double> x) {
  require(a.is_square() && a.cols() == x.size(), "quadratic_form: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) s += x[i] * dot(a.row(i), x);
  return s;
}

double orthogonality_error(const Matrix& q) {
  const std::size_t n = q.cols();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < q.rows(); ++r) s += q(r, i) * q(r, j);
      worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

Matrix symmetrized(const Matrix& m) {
  require(m.is_square(), "symmetrized: matrix not square");
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out(i, i) = m(i, i);
    for (std::size_t j = 0; j < i; ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  return u * f;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
  // Rejection on the top of the range keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

Rng Rng::fork(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto splitmix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = splitmix(base);
  h = splitmix(h ^ a);
  h = splitmix(h ^ b);
  return h;
}

Vector standard_normals(std::size_t n, Rng& rng) {
  Vector z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = rng.normal();
  return z;
}

// ---------------------------------------------------------------------------

namespace {

// One attempt; std::nullopt when a column collapses.
std::optional<Matrix> gram_schmidt_attempt(std::size_t d, Rng& rng) {
  // Columns stored contiguously while orthogonalizing.
  std::vector<std::vector<double>> cols(d, std::vector<double>(d));
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) cols[c][r] = rng.normal();
  }
  for (std::size_t j = 0; j < d; ++j) {
    auto& v = cols[j];
    double original = 0.0;
    for (double x : v) original += x * x;
    original = std::sqrt(original);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        const double proj = dot(cols[i], v);
        for (std::size_t r = 0; r < d; ++r) v[r] -= proj * cols[i][r];
      }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (!(norm > kTolerances.degenerate_column * original)) return std::nullopt;
    for (double& x : v) x /= norm;
  }
  Matrix q(d, d);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t r = 0; r < d; ++r) q(r, c) = cols[c][r];
  }
  return q;
}

}  // namespace

Matrix random_orthogonal(std::size_t d, Rng& rng) {
  if (d == 0) throw DimensionError("random_orthogonal: d must be positive");
  for (int attempt = 0; attempt < kMaxOrthogonalRetries; ++attempt) {
    if (auto q = gram_schmidt_attempt(d, rng)) return std::move(*q);
  }
  throw NumericError("random_orthogonal: degenerate draws exhausted the retry budget");
}

Matrix cholesky(const Matrix& a) {
  require(a.is_square(), "cholesky: matrix not square");
  const std::size_t n = a.rows();
  const double scale = std::max(1.0, max_abs(a));
  for (double x : a.values()) {
    if (!std::isfinite(x)) throw NumericError("cholesky: non-finite entry");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(a(i, j) - a(j, i)) > kTolerances.symmetry * scale) {
        throw DimensionError("cholesky: matrix not symmetric");
      }
    }
  }
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    auto lj = l.row(j);
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= lj[k] * lj[k];
    if (!(diag > 0.0)) {
      throw NotPositiveDefinite("cholesky: non-positive pivot at index " + std::to_string(j));
    }
    const double ljj = std::sqrt(diag);
    lj[j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      auto li = l.row(i);
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      li[j] = s / ljj;
    }
  }
  return l;
}

Matrix lower_triangular_inverse(const Matrix& l) {
  require(l.is_square(), "lower_triangular_inverse: matrix not square");
  const std::size_t n = l.rows();
  Matrix inv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    inv(j, j) = 1.0 / l(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s += l(i, k) * inv(k, j);
      inv(i, j) = -s / l(i, i);
    }
  }
  return inv;
}

Matrix spd_inverse(const Matrix& a) {
  const Matrix linv = lower_triangular_inverse(cholesky(a));
  const std::size_t n = a.rows();
  // a⁻¹ = L⁻ᵀ L⁻¹; entry (i, j) = Σ_{k ≥ max(i, j)} L⁻¹(k, i) L⁻¹(k, j).
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t k = i; k < n; ++k) s += linv(k, i) * linv(k, j);
      out(i, j) = s;
      out(j, i) = s;
    }
  }
  return out;
}

MvnDraw mvn_draw(const Vector& mean, const Matrix& cov_factor, Rng& rng) {
  require(cov_factor.rows() == mean.dim(), "mvn_sample: factor rows must equal mean dimension");
  Vector z = standard_normals(cov_factor.cols(), rng);
  Vector sample = mean + matvec(cov_factor, z);
  return {std::move(sample), std::move(z)};
}

Vector mvn_sample(const Vector& mean, const Matrix& cov_factor, Rng& rng) {
  return mvn_draw(mean, cov_factor, rng).sample;
}

}  // namespace vfbandit
