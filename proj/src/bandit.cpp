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

#include "vfbandit/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vfbandit/tolerances.hpp"

namespace vfbandit {

namespace {

void check_contexts(const BanditState& state, const ContextSet& contexts) {
  if (contexts.rows() == 0) throw DimensionError("scores: empty context set");
  if (contexts.cols() != state.dim()) {
    throw DimensionError("scores: context dimension " + std::to_string(contexts.cols()) +
                         " does not match state dimension " + std::to_string(state.dim()));
  }
}

}  // namespace

BanditState::BanditState(std::size_t dim, double lambda, InverseMode mode)
    : dim_(dim),
      lambda_(lambda),
      mode_(mode),
      gram_(Matrix::identity(dim, lambda)),
      gram_inverse_(Matrix::identity(dim, 1.0 / lambda)),
      moment_(dim),
      theta_(dim) {
  if (dim == 0) throw DimensionError("BanditState: dimension must be positive");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("BanditState: lambda must be positive and finite");
  }
}

void BanditState::update(const Vector& x, double reward) {
  if (x.dim() != dim_) throw DimensionError("BanditState::update: dimension mismatch");
  if (!std::isfinite(reward)) throw std::invalid_argument("BanditState::update: reward not finite");
  for (std::size_t i = 0; i < dim_; ++i) {
    auto row = gram_.row(i);
    for (std::size_t j = 0; j < dim_; ++j) row[j] += x[i] * x[j];
    moment_[i] += reward * x[i];
  }
  if (mode_ == InverseMode::kCholesky) {
    gram_inverse_ = spd_inverse(gram_);
  } else {
    // (Λ + xxᵀ)⁻¹ = Λ⁻¹ − (Λ⁻¹x)(Λ⁻¹x)ᵀ / (1 + xᵀΛ⁻¹x)
    const Vector w = matvec(gram_inverse_, x);
    const double denom = 1.0 + dot(x, w);
    for (std::size_t i = 0; i < dim_; ++i) {
      auto row = gram_inverse_.row(i);
      for (std::size_t j = 0; j < dim_; ++j) row[j] -= w[i] * w[j] / denom;
    }
    gram_inverse_ = symmetrized(gram_inverse_);
  }
  theta_ = matvec(gram_inverse_, moment_);
  ++rounds_;
}

std::vector<ArmScore> ucb_scores(const BanditState& state, const UcbParams& params,
                                 const ContextSet& contexts) {
  check_contexts(state, contexts);
  const Matrix& inv = state.gram_inverse();
  std::vector<ArmScore> scores(contexts.rows());
  for (std::size_t a = 0; a < contexts.rows(); ++a) {
    const auto x = contexts.row(a);
    double radicand = quadratic_form(inv, x);
    if (radicand < 0.0) {
      if (radicand < -kTolerances.radicand_clamp) {
        throw NumericError("ucb_scores: negative radicand " + std::to_string(radicand) +
                           " for arm " + std::to_string(a));
      }
      radicand = 0.0;
    }
    ArmScore& s = scores[a];
    s.arm = a;
    s.mean = dot(x, state.theta().values());
    s.bonus = params.beta * std::sqrt(radicand);
    s.value = s.mean + s.bonus;
  }
  return scores;
}

Matrix ts_factor(const BanditState& state) { return cholesky(state.gram_inverse()); }

TsDraw ts_scores_with_factor(const BanditState& state, const TsParams& params,
                             const ContextSet& contexts, Matrix factor, Rng& rng) {
  check_contexts(state, contexts);
  if (factor.rows() != state.dim()) throw DimensionError("ts_scores: factor dimension mismatch");
  TsDraw draw;
  const Matrix scaled = params.v * factor;
  MvnDraw mvn = mvn_draw(state.theta(), scaled, rng);
  draw.mu = std::move(mvn.sample);
  draw.z = std::move(mvn.z);
  draw.factor = std::move(factor);
  draw.scores.resize(contexts.rows());
  for (std::size_t a = 0; a < contexts.rows(); ++a) {
    ArmScore& s = draw.scores[a];
    s.arm = a;
    s.mean = dot(contexts.row(a), draw.mu.values());
    s.bonus = 0.0;
    s.value = s.mean;
  }
  return draw;
}

TsDraw ts_scores(const BanditState& state, const TsParams& params, const ContextSet& contexts,
                 Rng& rng) {
  return ts_scores_with_factor(state, params, contexts, ts_factor(state), rng);
}

std::size_t select_arm(std::span<const ArmScore> scores) {
  if (scores.empty()) throw std::invalid_argument("select_arm: no scores");
  double best = scores[0].value;
  for (const ArmScore& s : scores) {
    if (std::isnan(s.value)) {
      throw NumericError("select_arm: NaN value for arm " + std::to_string(s.arm));
    }
    if (s.value > best) best = s.value;
  }
  const double floor = best - kTolerances.tie * std::max(1.0, std::abs(best));
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].value >= floor) return i;
  }
  return 0;  // unreachable: the maximum itself satisfies the floor
}

}  // namespace vfbandit
