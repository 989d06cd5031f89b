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

#include "vfbandit/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "vfbandit/costs.hpp"
#include "vfbandit/csv.hpp"
#include "vfbandit/o3m.hpp"
#include "vfbandit/tolerances.hpp"

namespace vfbandit {

namespace {

constexpr std::uint64_t kOrthogonalityStream = 0x0a7;
constexpr std::uint64_t kWitnessStream = 0x5177;
constexpr std::uint64_t kLedgerStream = 0x1ed9;

bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

SuiteResult orthogonality_suite(const VerifyOptions& opts) {
  constexpr std::size_t kMatrices = 200;
  for (std::size_t i = 0; i < kMatrices; ++i) {
    const std::uint64_t seed = mix_seed(opts.base_seed, kOrthogonalityStream, i);
    Rng rng(seed);
    const std::size_t d = 1 + static_cast<std::size_t>(rng.below(128));
    const Matrix q = random_orthogonal(d, rng);
    const double e1 = orthogonality_error(q);
    const double e2 = orthogonality_error(transpose(q));
    if (e1 > kTolerances.orthogonality || e2 > kTolerances.orthogonality) {
      return {"orthogonality", false,
              "d = " + std::to_string(d) + " seed " + std::to_string(seed) + ": orthogonality error " +
                  format_double(std::max(e1, e2))};
    }
    const Vector x = standard_normals(d, rng);
    const double nx = norm2(x);
    if (std::abs(norm2(matvec(q, x)) - nx) > kTolerances.norm_preservation * nx) {
      return {"orthogonality", false, "norm not preserved at d = " + std::to_string(d) + " seed " +
                                          std::to_string(seed)};
    }
  }
  return {"orthogonality", true, std::to_string(kMatrices) + " random masks (d <= 128) orthogonal and norm-preserving"};
}

SuiteResult losslessness_suite(const VerifyOptions& opts) {
  constexpr std::size_t kSeeds = 3;
  std::size_t checked = 0;
  for (Algorithm fed : {Algorithm::kVFUCB, Algorithm::kVFTS}) {
    for (std::size_t s = 0; s < kSeeds; ++s) {
      RunConfig cfg;
      cfg.horizon = 300;
      cfg.arms = 5;
      cfg.dim = 20;
      cfg.partition = {4, 4, 4, 4, 4};
      cfg.seed = opts.base_seed + s;
      cfg.record_scores = true;
      cfg.coupled_ts = true;
      if (opts.inject_fault) cfg.mask_fault = std::make_pair(std::size_t{0}, std::size_t{0});
      cfg.algorithm = fed;
      const RunResult f = run(cfg);
      cfg.algorithm = fed == Algorithm::kVFUCB ? Algorithm::kLinUCB : Algorithm::kLinTS;
      const RunResult c = run(cfg);
      if (auto div = first_divergence(f, c, kTolerances.lossless)) {
        return {"losslessness", false,
                std::string(to_string(fed)) + " vs " + std::string(to_string(cfg.algorithm)) +
                    " diverge at round " + std::to_string(div->round) + " (seed " + std::to_string(cfg.seed) +
                    "): " + div->what};
      }
      ++checked;
    }
  }
  return {"losslessness", true,
          std::to_string(checked) + " runs: federated and centralized arm sequences and scores identical"};
}

SuiteResult witness_suite(const VerifyOptions& opts) {
  constexpr std::size_t kDims[] = {2, 8, 32};
  for (std::size_t i = 0; i < opts.witness_seeds; ++i) {
    const std::uint64_t seed = mix_seed(opts.base_seed, kWitnessStream, i);
    Rng rng(seed);
    const std::size_t d = kDims[i % 3];
    const Matrix q1 = random_orthogonal(d, rng);
    const Vector x1 = standard_normals(d, rng);
    const PrivacyWitness w = privacy_witness(q1, x1, rng);
    const double gap = max_abs_diff(matvec(w.q2, w.x2), matvec(q1, x1));
    if (gap > kTolerances.witness) {
      return {"witness", false, "seed " + std::to_string(seed) + " (d = " + std::to_string(d) +
                                    "): masked data differs by " + format_double(gap)};
    }
    if (max_abs_diff(w.x2, x1) <= kTolerances.witness_distinct) {
      return {"witness", false, "seed " + std::to_string(seed) + ": witness raw data equals the original"};
    }
    if (orthogonality_error(w.q2) > kTolerances.orthogonality) {
      return {"witness", false, "seed " + std::to_string(seed) + ": witness mask is not orthogonal"};
    }
  }
  return {"witness", true, std::to_string(opts.witness_seeds) +
                               " witnesses (d in {2, 8, 32}) reproduce the masked data with distinct raw data"};
}

SuiteResult ledger_suite(const VerifyOptions& opts) {
  constexpr std::size_t kConfigs = 50;
  for (std::size_t i = 0; i < kConfigs; ++i) {
    const std::uint64_t seed = mix_seed(opts.base_seed, kLedgerStream, i);
    Rng rng(seed);
    RunConfig cfg;
    cfg.algorithm = i % 2 ? Algorithm::kVFTS : Algorithm::kVFUCB;
    cfg.horizon = 1 + rng.below(50);
    cfg.arms = 1 + rng.below(8);
    const std::size_t m = 1 + rng.below(5);
    cfg.dim = m + rng.below(32 - m + 1);
    cfg.partition = DimPartition::even(cfg.dim, m).dims();
    cfg.seed = seed;
    const RunResult r = run(cfg);
    const std::uint64_t expected = comm_elements({cfg.horizon, cfg.arms, m, cfg.dim});
    if (r.ledger.protocol_elements() != expected) {
      return {"ledger", false,
              "seed " + std::to_string(seed) + ": ledger counted " + std::to_string(r.ledger.protocol_elements()) +
                  " elements, closed form gives " + std::to_string(expected)};
    }
  }
  return {"ledger", true, std::to_string(kConfigs) + " random runs match d^2 + T*K*M*d exactly"};
}

}  // namespace

std::optional<Divergence> first_divergence(const RunResult& fed, const RunResult& central, double rel_tol) {
  const std::size_t n = std::min(fed.records.size(), central.records.size());
  for (std::size_t t = 0; t < n; ++t) {
    const RoundRecord& a = fed.records[t];
    const RoundRecord& b = central.records[t];
    if (a.arm != b.arm) {
      return Divergence{t, "arm " + std::to_string(a.arm) + " vs arm " + std::to_string(b.arm)};
    }
    if (a.scores.size() != b.scores.size()) return Divergence{t, "score counts differ"};
    for (std::size_t k = 0; k < a.scores.size(); ++k) {
      const ArmScore& x = a.scores[k];
      const ArmScore& y = b.scores[k];
      if (!rel_close(x.mean, y.mean, rel_tol) || !rel_close(x.bonus, y.bonus, rel_tol) ||
          !rel_close(x.value, y.value, rel_tol)) {
        return Divergence{t, "arm " + std::to_string(k) + " value " + format_double(x.value) + " vs " +
                                 format_double(y.value)};
      }
    }
  }
  if (fed.records.size() != central.records.size()) return Divergence{n, "run lengths differ"};
  return std::nullopt;
}

std::vector<SuiteResult> run_verify(const VerifyOptions& opts) {
  const std::vector<std::pair<std::string, std::function<SuiteResult(const VerifyOptions&)>>> all = {
      {"orthogonality", orthogonality_suite},
      {"losslessness", losslessness_suite},
      {"witness", witness_suite},
      {"ledger", ledger_suite}};
  for (const std::string& s : opts.suites) {
    if (std::none_of(all.begin(), all.end(), [&](const auto& p) { return p.first == s; })) {
      throw std::invalid_argument("unknown verify suite '" + s + "'");
    }
  }
  std::vector<SuiteResult> out;
  for (const auto& [name, fn] : all) {
    if (!opts.suites.empty() && std::find(opts.suites.begin(), opts.suites.end(), name) == opts.suites.end()) {
      continue;
    }
    out.push_back(fn(opts));
  }
  return out;
}

}  // namespace vfbandit
