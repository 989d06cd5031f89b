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

// Centralized linear bandits (LinUCB and linear Thompson sampling) over a
// shared ridge-regression state.

#ifndef VFBANDIT_BANDIT_HPP_
#define VFBANDIT_BANDIT_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "vfbandit/numerics.hpp"

namespace vfbandit {

/// K × d matrix; row a is the context of arm a for one round.
using ContextSet = Matrix;

enum class InverseMode {
  /// Recompute Λ⁻¹ from a fresh Cholesky factorization on every update.
  kCholesky,
  /// Sherman–Morrison rank-1 update of Λ⁻¹.
  kShermanMorrison,
};

/// Sufficient statistics (Λ, Λ⁻¹, u, θ̂) shared by all four algorithms.
/// Λ starts at λI, u and θ̂ at zero.
class BanditState {
 public:
  explicit BanditState(std::size_t dim, double lambda = 1.0,
                       InverseMode mode = InverseMode::kCholesky);

  std::size_t dim() const { return dim_; }
  double lambda() const { return lambda_; }
  InverseMode inverse_mode() const { return mode_; }
  const Matrix& gram() const { return gram_; }
  const Matrix& gram_inverse() const { return gram_inverse_; }
  const Vector& moment() const { return moment_; }
  const Vector& theta() const { return theta_; }
  std::size_t rounds() const { return rounds_; }

  /// Λ += xxᵀ, u += r·x, refresh Λ⁻¹ and θ̂ = Λ⁻¹u, t += 1.
  void update(const Vector& x, double reward);

 private:
  std::size_t dim_;
  double lambda_;
  InverseMode mode_;
  Matrix gram_;
  Matrix gram_inverse_;
  Vector moment_;
  Vector theta_;
  std::size_t rounds_ = 0;
};

struct UcbParams {
  double beta = 0.5;
};

struct TsParams {
  double v = 0.01;
};

struct ArmScore {
  std::size_t arm = 0;
  double mean = 0.0;
  double bonus = 0.0;
  double value = 0.0;
};

/// mean = xᵀθ̂, bonus = β·sqrt(xᵀΛ⁻¹x), value = mean + bonus.
std::vector<ArmScore> ucb_scores(const BanditState& state, const UcbParams& params,
                                 const ContextSet& contexts);

struct TsDraw {
  std::vector<ArmScore> scores;
  /// The sampled parameter μ = θ̂ + v·A·z.
  Vector mu;
  /// Raw standard-normal vector.
  Vector z;
  /// Covariance factor A (without the v scale) with AAᵀ = Λ⁻¹.
  Matrix factor;
};

/// Default Thompson sampling factor: cholesky(Λ⁻¹).
Matrix ts_factor(const BanditState& state);

/// One posterior draw; score[a].mean = xᵀμ and bonus = 0.
TsDraw ts_scores(const BanditState& state, const TsParams& params, const ContextSet& contexts,
                 Rng& rng);

/// As ts_scores but with a caller-supplied factor A (AAᵀ must equal Λ⁻¹).
TsDraw ts_scores_with_factor(const BanditState& state, const TsParams& params,
                             const ContextSet& contexts, Matrix factor, Rng& rng);

/// Index of the largest value; among values tied within kTolerances.tie the
/// smallest index wins. Throws on an empty range or a NaN value.
std::size_t select_arm(std::span<const ArmScore> scores);

}  // namespace vfbandit

#endif  // VFBANDIT_BANDIT_HPP_
