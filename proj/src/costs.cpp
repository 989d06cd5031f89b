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

#include "vfbandit/costs.hpp"

#include <initializer_list>
#include <stdexcept>
#include <string>

namespace vfbandit {

namespace {

std::uint64_t mul(std::initializer_list<std::uint64_t> factors) {
  std::uint64_t out = 1;
  for (std::uint64_t f : factors) {
    if (__builtin_mul_overflow(out, f, &out)) throw std::overflow_error("cost model: 64-bit overflow");
  }
  return out;
}

std::uint64_t add(std::initializer_list<std::uint64_t> terms) {
  std::uint64_t out = 0;
  for (std::uint64_t t : terms) {
    if (__builtin_add_overflow(out, t, &out)) throw std::overflow_error("cost model: 64-bit overflow");
  }
  return out;
}

void check(const CostParams& p, bool allow_zero_horizon) {
  if ((!allow_zero_horizon && p.horizon == 0) || p.arms == 0 || p.participants == 0 || p.dim == 0) {
    throw std::invalid_argument("cost model: T, K, M and d must be >= 1");
  }
}

}  // namespace

std::string_view to_string(CostAlgorithm alg) {
  switch (alg) {
    case CostAlgorithm::kLinUCB: return "LinUCB";
    case CostAlgorithm::kLinTS: return "LinTS";
    case CostAlgorithm::kVFUCB: return "VFUCB";
    case CostAlgorithm::kVFTS: return "VFTS";
  }
  return "unknown";
}

std::optional<CostAlgorithm> parse_cost_algorithm(std::string_view name) {
  for (CostAlgorithm a : {CostAlgorithm::kLinUCB, CostAlgorithm::kLinTS, CostAlgorithm::kVFUCB,
                          CostAlgorithm::kVFTS}) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

bool is_federated(CostAlgorithm alg) {
  return alg == CostAlgorithm::kVFUCB || alg == CostAlgorithm::kVFTS;
}

CostAlgorithm central_counterpart(CostAlgorithm alg) {
  switch (alg) {
    case CostAlgorithm::kVFUCB: return CostAlgorithm::kLinUCB;
    case CostAlgorithm::kVFTS: return CostAlgorithm::kLinTS;
    default: return alg;
  }
}

CostBreakdown compute_ops(CostAlgorithm alg, const CostParams& p, bool include_o3m) {
  check(p, false);
  const std::uint64_t T = p.horizon, K = p.arms, M = p.participants, d = p.dim;
  const std::uint64_t d2 = mul({d, d});
  const std::uint64_t d3 = mul({d, d, d});
  const bool ucb = alg == CostAlgorithm::kLinUCB || alg == CostAlgorithm::kVFUCB;
  const bool o3m = is_federated(alg) && include_o3m;

  std::uint64_t select_per_round;
  std::uint64_t update_per_round;
  if (ucb) {
    select_per_round = add({mul({K, d}), d3, mul({K, d2}), K});
    update_per_round = add({d2, d, d2});
  } else {
    select_per_round = add({d2, d3, mul({K, d}), K});
    update_per_round = add({d, d3, d, d2});
  }
  if (o3m) select_per_round = add({select_per_round, mul({K, d2}), mul({K, M, d})});

  CostBreakdown out;
  out.stage1 = o3m ? d3 : 0;
  out.stage2 = mul({T, select_per_round});
  out.stage3 = mul({T, update_per_round});
  out.total_ops = add({out.stage1, out.stage2, out.stage3});
  if (is_federated(alg)) {
    out.total_elements = comm_elements(p);
    out.total_bytes = comm_bytes(p);
  }
  return out;
}

std::uint64_t comm_elements(const CostParams& p) {
  check(p, true);
  return add({mul({p.dim, p.dim}), mul({p.horizon, p.arms, p.participants, p.dim})});
}

std::uint64_t comm_bytes(const CostParams& p) { return mul({comm_elements(p), kElementBytes}); }

std::uint64_t per_step_bytes(const CostParams& p) {
  check(p, true);
  return mul({p.arms, p.participants, p.dim, kElementBytes});
}

double relative_cost(CostAlgorithm fed, CostAlgorithm central, const CostParams& p,
                     bool include_o3m) {
  if (central_counterpart(fed) != central) {
    throw std::invalid_argument("relative_cost: " + std::string(to_string(fed)) + " is not paired with " +
                                std::string(to_string(central)));
  }
  const double num = static_cast<double>(compute_ops(fed, p, include_o3m).total_ops);
  const double den = static_cast<double>(compute_ops(central, p, include_o3m).total_ops);
  return num / den;
}

}  // namespace vfbandit
