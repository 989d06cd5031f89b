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

#ifndef VFBANDIT_TOLERANCES_HPP_
#define VFBANDIT_TOLERANCES_HPP_

namespace vfbandit {

/// Every numerical threshold used by the library and its test suites.
/// Matrix norms written as ‖·‖∞ in this project are the max-abs-entry norm.
struct Tolerances {
  /// ‖QᵀQ − I‖∞ and ‖QQᵀ − I‖∞ for generated masks.
  double orthogonality = 1e-10;
  /// |‖Qx‖₂ − ‖x‖₂| relative to ‖x‖₂.
  double norm_preservation = 1e-9;
  /// Inputs to cholesky() must be symmetric to this (scaled by max(1, ‖a‖∞)).
  double symmetry = 1e-12;
  /// ‖LLᵀ − a‖∞ relative to ‖a‖∞.
  double cholesky_reconstruction = 1e-9;
  /// ‖a·a⁻¹ − I‖∞ for spd_inverse.
  double inverse_residual = 1e-8;
  /// xᵀΛ⁻¹x in [−radicand_clamp, 0) is clamped to 0; below that is an error.
  double radicand_clamp = 1e-12;
  /// Values within tie·max(1, |max|) of the maximum count as tied in select_arm.
  double tie = 1e-10;
  /// θ̂ = Λ⁻¹u after every update.
  double theta_consistency = 1e-10;
  /// θ̂ against a from-scratch ridge solution.
  double ridge_oracle = 1e-8;
  /// Sherman–Morrison against Cholesky inverse maintenance.
  double inverse_modes = 1e-8;
  /// Federated against centralized scores, relative.
  double lossless = 1e-8;
  /// Σ_j Q^j x^j against Q·x.
  double aggregation = 1e-10;
  /// ‖Q₂X₂ − Q₁X₁‖∞ for privacy witnesses.
  double witness = 1e-9;
  /// Minimum entrywise gap that makes a witness X₂ genuinely different from X₁.
  double witness_distinct = 1e-6;
  /// Unit l2 norm of synthetic contexts and θ*.
  double unit_norm = 1e-12;
  /// Consecutive Gram–Schmidt residual norms below this (relative) are degenerate.
  double degenerate_column = 1e-8;
};

inline constexpr Tolerances kTolerances{};

}  // namespace vfbandit

#endif  // VFBANDIT_TOLERANCES_HPP_
