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

// Self-check suites behind `vfbandit verify`.

#ifndef VFBANDIT_VERIFY_HPP_
#define VFBANDIT_VERIFY_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vfbandit/fedsim.hpp"

namespace vfbandit {

inline constexpr const char* kVerifySuites[] = {"orthogonality", "losslessness", "witness", "ledger"};

struct VerifyOptions {
  /// Privacy witnesses checked by the witness suite.
  std::size_t witness_seeds = 100;
  std::uint64_t base_seed = 0;
  /// Negates one mask entry in the losslessness runs (test instrumentation).
  bool inject_fault = false;
  /// Suites to run; empty means all.
  std::vector<std::string> suites;
};

struct SuiteResult {
  std::string name;
  bool passed = false;
  /// One line: what was checked, or the first violation and its seed.
  std::string detail;
};

/// First round at which the two runs chose different arms, or whose per-arm
/// scores differ by more than `rel_tol` relative; nullopt when they agree.
struct Divergence {
  std::size_t round = 0;
  std::string what;
};
std::optional<Divergence> first_divergence(const RunResult& fed, const RunResult& central, double rel_tol);

/// Throws std::invalid_argument for an unknown suite name.
std::vector<SuiteResult> run_verify(const VerifyOptions& opts);

}  // namespace vfbandit

#endif  // VFBANDIT_VERIFY_HPP_
