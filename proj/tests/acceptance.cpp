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

// End-to-end acceptance checks. Prints one PASS/FAIL line per check and
// exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "vfbandit/costs.hpp"
#include "vfbandit/csv.hpp"
#include "vfbandit/experiment.hpp"
#include "vfbandit/fedsim.hpp"
#include "vfbandit/o3m.hpp"
#include "vfbandit/tolerances.hpp"
#include "vfbandit/verify.hpp"

#ifndef VFBANDIT_CONFIG_DIR
#error "VFBANDIT_CONFIG_DIR must point at the shipped configs"
#endif

namespace vfbandit {
namespace {

struct Outcome {
  bool passed = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

RunConfig lossless_config(Algorithm alg, std::uint64_t seed) {
  RunConfig c;
  c.algorithm = alg;
  c.dim = 50;
  c.arms = 10;
  c.horizon = 1000;
  c.partition = {10, 10, 10, 10, 10};
  c.beta = 0.5;
  c.v = 0.01;
  c.seed = seed;
  c.record_scores = true;
  return c;
}

struct ThetaTrace {
  std::vector<Vector> theta;
};

RunResult traced_run(const RunConfig& cfg, ThetaTrace& trace) {
  auto env = make_environment(cfg);
  return run(cfg, *env, [&](std::size_t, const BanditState& s) { trace.theta.push_back(s.theta()); });
}

// Exact arm agreement and per-round score agreement, federated against
// centralized, over five seeds. Also collects the estimate-rotation error.
Outcome check_lossless(Algorithm fed, Algorithm central, bool coupled, double* rotation_err, double* norm_err,
                       double* elapsed) {
  const auto start = Clock::now();
  Outcome out;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RunConfig c = lossless_config(fed, seed);
    c.coupled_ts = coupled;
    ThetaTrace tf, tc;
    const RunResult f = traced_run(c, tf);
    c.algorithm = central;
    const RunResult r = traced_run(c, tc);
    if (f.arm_sequence() != r.arm_sequence()) {
      const auto div = first_divergence(f, r, kTolerances.lossless);
      return {false, "seed " + std::to_string(seed) + ": arm sequences differ at round " +
                         std::to_string(div ? div->round : 0)};
    }
    if (const auto div = first_divergence(f, r, kTolerances.lossless)) {
      return {false, "seed " + std::to_string(seed) + " round " + std::to_string(div->round) + ": " + div->what};
    }
    if (rotation_err) {
      for (std::size_t t = 0; t < tf.theta.size(); ++t) {
        *rotation_err = std::max(*rotation_err, max_abs_diff(tf.theta[t], matvec(*f.mask, tc.theta[t])));
        *norm_err = std::max(*norm_err, std::abs(norm2(tf.theta[t]) - norm2(tc.theta[t])));
      }
    }
  }
  *elapsed = seconds_since(start);
  out.detail = "5 seeds x 1000 rounds identical arms, scores within 1e-8 relative";
  return out;
}

Outcome vfucb_lossless(double* rotation_err, double* norm_err) {
  double elapsed = 0;
  Outcome o = check_lossless(Algorithm::kVFUCB, Algorithm::kLinUCB, false, rotation_err, norm_err, &elapsed);
  if (o.passed && elapsed >= 30.0) o = {false, "runtime " + fmt(elapsed) + " s >= 30 s"};
  if (o.passed) o.detail += " (" + fmt(elapsed, 3) + " s)";
  return o;
}

// Selection frequency of arm 1 on a fixed two-arm instance.
double arm1_frequency(Algorithm alg, std::uint64_t seed, std::size_t horizon) {
  RunConfig c;
  c.algorithm = alg;
  c.dim = 2;
  c.arms = 2;
  c.partition = {1, 1};
  c.horizon = horizon;
  c.v = 1.0;
  c.seed = seed;
  StaticEnv env(Matrix{{1, 0}, {0, 1}}, Vector{0.5, 0.45}, 0.05, Rng(seed).fork(streams::kEnvironment), horizon);
  const RunResult r = run(c, env);
  std::size_t hits = 0;
  for (const RoundRecord& rec : r.records) hits += rec.arm == 1;
  return static_cast<double>(hits) / static_cast<double>(horizon);
}

Outcome vfts_lossless() {
  double elapsed = 0;
  Outcome o = check_lossless(Algorithm::kVFTS, Algorithm::kLinTS, true, nullptr, nullptr, &elapsed);
  if (!o.passed) return {false, "coupled: " + o.detail};
  constexpr std::size_t kReps = 200, kHorizon = 30;
  std::vector<double> fed, cen;
  for (std::size_t rep = 0; rep < kReps; ++rep) {
    fed.push_back(arm1_frequency(Algorithm::kVFTS, mix_seed(0xfed, rep), kHorizon));
    cen.push_back(arm1_frequency(Algorithm::kLinTS, mix_seed(0xce7, rep), kHorizon));
  }
  auto mean_var = [](const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= v.size();
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::make_pair(m, ss / (v.size() - 1));
  };
  const auto [mf, vf] = mean_var(fed);
  const auto [mc, vc] = mean_var(cen);
  const double se = std::sqrt(vf / kReps + vc / kReps);
  const double gap = std::abs(mf - mc);
  const std::string dist = "uncoupled arm-1 frequency " + fmt(mf) + " vs " + fmt(mc) + ", gap " + fmt(gap) +
                           " = " + fmt(gap / se, 3) + " SE";
  if (!(se > 0.0) || gap >= 3.0 * se) return {false, dist};
  return {true, "coupled: " + o.detail + "; " + dist};
}

Outcome estimate_rotation(double rotation_err, double norm_err) {
  const std::string d = "max |theta_fed - Q theta| " + fmt(rotation_err) + ", max norm gap " + fmt(norm_err);
  return {rotation_err <= 1e-8 && norm_err <= 1e-8, d};
}

Outcome partial_regret_gap() {
  const auto start = Clock::now();
  double full = 0, r02 = 0, r08 = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RunConfig c;  // d = 100, K = 10, T = 5000, partition [20 x 5]
    c.seed = seed;
    c.algorithm = Algorithm::kVFUCB;
    full += run(c).cumulative_regret() / 5;
    c.algorithm = Algorithm::kPartialLinUCB;
    c.partial_ratio = 0.2;
    r02 += run(c).cumulative_regret() / 5;
    c.partial_ratio = 0.8;
    r08 += run(c).cumulative_regret() / 5;
  }
  const double elapsed = seconds_since(start);
  const std::string d = "mean regret full " + fmt(full) + ", 0.8 " + fmt(r08) + ", 0.2 " + fmt(r02) +
                        " (ratio " + fmt(r02 / full, 3) + "x, " + fmt(elapsed, 3) + " s)";
  return {r02 >= 3.0 * full && r02 > r08 && r08 > full && elapsed < 300.0, d};
}

Outcome witness_check() {
  const auto start = Clock::now();
  double worst = 0;
  double min_gap = std::numeric_limits<double>::infinity();
  const std::size_t dims[] = {2, 8, 32};
  for (std::size_t i = 0; i < 100; ++i) {
    Rng rng(mix_seed(0x5eed, i));
    const std::size_t d = dims[i % 3];
    const Matrix q1 = random_orthogonal(d, rng);
    const Vector x1 = standard_normals(d, rng);
    const PrivacyWitness w = privacy_witness(q1, x1, rng);
    worst = std::max(worst, max_abs_diff(matvec(w.q2, w.x2), matvec(q1, x1)));
    min_gap = std::min(min_gap, max_abs_diff(w.x2, x1));
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-9 && min_gap > 0.0 && elapsed < 5.0,
          "100 witnesses: max |Q2x2 - Q1x1| " + fmt(worst) + ", min |x2 - x1| " + fmt(min_gap) + " (" +
              fmt(elapsed, 3) + " s)"};
}

Outcome ledger_closed_form() {
  Rng rng(0x1ed6);
  for (std::size_t i = 0; i < 200; ++i) {
    RunConfig c;
    c.algorithm = i % 2 ? Algorithm::kVFTS : Algorithm::kVFUCB;
    c.horizon = 1 + rng.below(50);
    c.arms = 1 + rng.below(8);
    const std::size_t m = 1 + rng.below(5);
    c.dim = m + rng.below(32 - m + 1);
    c.partition = DimPartition::even(c.dim, m).dims();
    c.seed = i;
    const std::uint64_t counted = run(c).ledger.protocol_elements();
    const std::uint64_t closed = comm_elements({c.horizon, c.arms, m, c.dim});
    if (counted != closed) {
      return {false, "config " + std::to_string(i) + ": ledger " + std::to_string(counted) + " vs " +
                         std::to_string(closed)};
    }
  }
  const std::uint64_t step = per_step_bytes({1, 1000, 5, 1000});
  return {step == 1000ULL * 5 * 1000 * 8 && step == 40000000ULL,
          "200 ledgers equal d^2 + TKMd; per-step bytes at d=K=1000, M=5: " + std::to_string(step)};
}

Outcome cost_shape() {
  const std::vector<std::uint64_t> dims{10, 20, 50, 100, 200, 500, 1000, 2000, 5000};
  double prev = std::numeric_limits<double>::infinity();
  double last = 0;
  for (std::uint64_t d : dims) {
    const double r = relative_cost(CostAlgorithm::kVFTS, CostAlgorithm::kLinTS, {5000, 100, 5, d});
    if (!(r < prev)) return {false, "VFTS/LinTS not decreasing at d=" + std::to_string(d)};
    prev = last = r;
  }
  if (std::abs(last - 1.0) > 0.1) return {false, "VFTS/LinTS at d=5000 is " + fmt(last)};
  for (std::uint64_t k : {100, 500, 1000}) {
    double p = std::numeric_limits<double>::infinity();
    for (std::uint64_t d : dims) {
      const double r = relative_cost(CostAlgorithm::kVFUCB, CostAlgorithm::kLinUCB, {5000, k, 5, d});
      if (r < 1.0) return {false, "VFUCB/LinUCB below 1 at K=" + std::to_string(k) + " d=" + std::to_string(d)};
      if (!(r < p)) return {false, "VFUCB/LinUCB not decreasing at K=" + std::to_string(k) + " d=" + std::to_string(d)};
      p = r;
    }
  }
  return {true, "VFTS/LinTS strictly decreasing to " + fmt(last, 5) +
                    " at d=5000; VFUCB/LinUCB >= 1 and decreasing for K in {100, 500, 1000}"};
}

Outcome regret_sublinear() {
  constexpr std::size_t kT = 5000;
  std::vector<double> mean(kT, 0.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RunConfig c;
    c.algorithm = Algorithm::kLinUCB;
    c.seed = seed;
    const RunResult r = run(c);
    double cum = 0;
    for (std::size_t t = 0; t < kT; ++t) {
      cum += r.records[t].regret;
      mean[t] += cum / 5;
    }
  }
  std::string d = "R(t)/t at quarter ends:";
  bool ok = true;
  double prev_avg = std::numeric_limits<double>::infinity();
  double prev_quarter = std::numeric_limits<double>::infinity();
  for (std::size_t q = 1; q <= 4; ++q) {
    const std::size_t end = q * kT / 4;
    const double avg = mean[end - 1] / end;
    const double quarter = (mean[end - 1] - (q > 1 ? mean[(q - 1) * kT / 4 - 1] : 0.0)) / (kT / 4);
    ok = ok && avg < prev_avg && quarter < prev_quarter;
    prev_avg = avg;
    prev_quarter = quarter;
    d += " " + fmt(avg);
  }
  return {ok, d + " (per-quarter rates also decreasing: " + (ok ? "yes" : "no") + ")"};
}

Outcome replay_relative_ctr() {
  const ExperimentSpec spec = load_spec(std::string(VFBANDIT_CONFIG_DIR) + "/replay_planted.yaml");
  const auto runs = run_replay(spec, {1, false});
  const auto rel = mean_relative_ctr(spec, runs);
  double random = 0, linucb = 0, p02 = 0, p08 = 0;
  for (std::size_t c = 0; c < spec.cell_count(); ++c) {
    const std::string& n = spec.cell_name(c);
    if (n == "random") random = rel[c];
    if (n == "LinUCB") linucb = rel[c];
    if (n == "partial-0.2") p02 = rel[c];
    if (n == "partial-0.8") p08 = rel[c];
  }
  const std::string d = "relative CTR over " + std::to_string(spec.repetitions) + " seeds: random " + fmt(random) +
                        ", LinUCB " + fmt(linucb) + ", partial 0.2 " + fmt(p02) + ", partial 0.8 " + fmt(p08);
  return {random >= 0.9 && random <= 1.1 && linucb > 1.1 && p02 < p08 && p08 < linucb, d};
}

Outcome numerics_check() {
  const auto start = Clock::now();
  Rng rng(0x0a10);
  double worst_q = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t d = 1 + rng.below(128);
    worst_q = std::max(worst_q, orthogonality_error(random_orthogonal(d, rng)));
  }
  double worst_l = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t d = 1 + rng.below(64);
    Matrix b(d, d);
    for (double& v : b.values()) v = rng.normal();
    const Matrix a = symmetrized(matmul(b, transpose(b))) + Matrix::identity(d, 1e-3);
    const Matrix l = cholesky(a);
    worst_l = std::max(worst_l, max_abs_diff(matmul(l, transpose(l)), a) / max_abs(a));
  }
  const double elapsed = seconds_since(start);
  return {worst_q <= kTolerances.orthogonality && worst_l <= kTolerances.cholesky_reconstruction && elapsed < 30.0,
          "1000 masks max |Q'Q - I| " + fmt(worst_q) + "; 1000 Cholesky max relative residual " + fmt(worst_l) +
              " (" + fmt(elapsed, 3) + " s)"};
}

}  // namespace
}  // namespace vfbandit

int main() {
  using namespace vfbandit;
  double rotation_err = 0, norm_err = 0;
  struct Check {
    int id;
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Check> checks = {
      {1, "vfucb-lossless", [&] { return vfucb_lossless(&rotation_err, &norm_err); }},
      {2, "vfts-lossless", vfts_lossless},
      {3, "estimate-rotation", [&] { return estimate_rotation(rotation_err, norm_err); }},
      {4, "partial-regret-gap", partial_regret_gap},
      {5, "privacy-witness", witness_check},
      {6, "communication-closed-form", ledger_closed_form},
      {7, "cost-model-shape", cost_shape},
      {8, "regret-sublinear", regret_sublinear},
      {9, "replay-relative-ctr", replay_relative_ctr},
      {10, "numerics", numerics_check},
  };
  int failed = 0;
  for (const Check& c : checks) {
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %2d %s: %s\n", o.passed ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.passed;
  }
  std::printf("%d/%zu acceptance checks passed\n", static_cast<int>(checks.size()) - failed, checks.size());
  return failed == 0 ? 0 : 1;
}
