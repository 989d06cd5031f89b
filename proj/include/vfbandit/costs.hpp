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

// Unit-coefficient upper-bound cost model.
//
// Every itemized term of each protocol stage is counted with coefficient 1
// (one addition, multiplication, comparison or random draw per element):
//
//   stage 1, mask init (federated only):  d³
//   stage 2, selection per round:
//     LinUCB  K·d (means) + d³ (Λ⁻¹) + K·d² (bonuses) + K (argmax)
//     VFUCB   LinUCB + K·d² + K·M·d (masking and summing)
//     LinTS   d² (covariance) + d³ (sampling) + K·d (scores) + K (argmax)
//     VFTS    LinTS + K·d² + K·M·d
//   stage 3, update per round:
//     UCB     d² (Λ) + d (u) + d² (θ)
//     TS      d (Λ) + d³ (Λ⁻¹) + d (u) + d² (θ)
//
// Communication: d² elements of mask delivery plus K·M·d per round.

#ifndef VFBANDIT_COSTS_HPP_
#define VFBANDIT_COSTS_HPP_

#include <cstdint>
#include <optional>
#include <string_view>

namespace vfbandit {

enum class CostAlgorithm { kLinUCB, kLinTS, kVFUCB, kVFTS };

std::string_view to_string(CostAlgorithm alg);
std::optional<CostAlgorithm> parse_cost_algorithm(std::string_view name);
bool is_federated(CostAlgorithm alg);
/// VFUCB → LinUCB, VFTS → LinTS; centralized algorithms map to themselves.
CostAlgorithm central_counterpart(CostAlgorithm alg);

struct CostParams {
  std::uint64_t horizon = 5000;  // T
  std::uint64_t arms = 100;      // K
  std::uint64_t participants = 5;  // M
  std::uint64_t dim = 100;       // d
};

struct CostBreakdown {
  std::uint64_t stage1 = 0;
  std::uint64_t stage2 = 0;
  std::uint64_t stage3 = 0;
  std::uint64_t total_ops = 0;
  std::uint64_t total_elements = 0;
  std::uint64_t total_bytes = 0;
};

inline constexpr std::uint64_t kElementBytes = 8;

/// Throws std::invalid_argument for parameters below 1 and std::overflow_error
/// when a count does not fit in 64 bits. With include_o3m = false the
/// federated algorithms drop the mask-init and masking terms.
CostBreakdown compute_ops(CostAlgorithm alg, const CostParams& p, bool include_o3m = true);

/// d² + T·K·M·d (T may be 0). Throws std::overflow_error beyond 64 bits.
std::uint64_t comm_elements(const CostParams& p);
std::uint64_t comm_bytes(const CostParams& p);
/// K·M·d·8: masked-context bytes for a single round.
std::uint64_t per_step_bytes(const CostParams& p);

/// compute_ops(fed).total_ops / compute_ops(central).total_ops.
double relative_cost(CostAlgorithm fed, CostAlgorithm central, const CostParams& p,
                     bool include_o3m = true);

}  // namespace vfbandit

#endif  // VFBANDIT_COSTS_HPP_
