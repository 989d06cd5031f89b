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

// Experiment specs, the run matrix, and result files.
//
// A spec is a YAML (or JSON) document:
//
//   schema_version: 1
//   kind: synthetic            # or replay
//   repetitions: 5
//   base_seed: 0
//   paired: false              # true: every cell of a repetition shares one seed
//   aggregation: sd            # sd (mean ± sd) or minmax
//   output_dir: results/d2     # optional
//   defaults: {horizon: 5000, arms: 10, dim: 100, participants: 5}
//   cells:
//     - {name: VFUCB, algorithm: VFUCB}
//     - {name: partial-0.2, algorithm: PartialLinUCB, partial_ratio: 0.2}
//
// Replay specs name a log source instead of environment fields:
//
//   kind: replay
//   log: {planted: {rows: 60000}}    # or {cache: path} or {raw: path, ingest: {...}}
//   cells:
//     - {name: random, policy: random}
//     - {name: LinUCB, policy: LinUCB, beta: 0.6}
//
// The seed of (cell c, repetition r) is mix_seed(base_seed, c, r), or
// mix_seed(base_seed, 0, r) for every cell when paired.

#ifndef VFBANDIT_EXPERIMENT_HPP_
#define VFBANDIT_EXPERIMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vfbandit/costs.hpp"
#include "vfbandit/fedsim.hpp"
#include "vfbandit/replay.hpp"

namespace vfbandit {

inline constexpr int kSpecSchemaVersion = 1;

/// Invalid spec. line() is 1-based; 0 when no position is known.
class SpecError : public std::runtime_error {
 public:
  SpecError(std::string source, std::size_t line, const std::string& what);
  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string source_;
  std::size_t line_;
  std::string detail_;
};

enum class Aggregation { kStdDev, kMinMax };
enum class ExperimentKind { kSynthetic, kReplay };

struct SyntheticCell {
  std::string name;
  RunConfig config;
};

enum class ReplayPolicyKind { kRandom, kLinUCB, kVFUCB };

struct ReplayCell {
  std::string name;
  ReplayPolicyKind policy = ReplayPolicyKind::kLinUCB;
  double beta = 0.6;
  double lambda = 1.0;
  double partial_ratio = 1.0;
};

struct ReplayLogSource {
  enum class Kind { kPlanted, kCache, kRaw };
  Kind kind = Kind::kPlanted;
  PlantedLogConfig planted;
  std::filesystem::path path;
  IngestConfig ingest;
};

struct ExperimentSpec {
  int schema_version = kSpecSchemaVersion;
  ExperimentKind kind = ExperimentKind::kSynthetic;
  std::size_t repetitions = 5;
  std::uint64_t base_seed = 0;
  bool paired = false;
  Aggregation aggregation = Aggregation::kStdDev;
  /// Relative to the spec file; --out takes precedence.
  std::optional<std::filesystem::path> output_dir;
  std::vector<SyntheticCell> synthetic_cells;
  ReplayLogSource log;
  /// Seeds averaged by the random-policy CTR baseline.
  std::size_t baseline_seeds = 5;
  std::vector<ReplayCell> replay_cells;

  std::size_t cell_count() const;
  std::string cell_name(std::size_t cell) const;
  std::uint64_t seed(std::size_t cell, std::size_t repetition) const;
};

/// Parses spec text; `source` names it in diagnostics. Relative log paths
/// resolve against `base_dir`.
ExperimentSpec parse_spec(const std::string& text, const std::string& source,
                          const std::filesystem::path& base_dir = {});
ExperimentSpec load_spec(const std::filesystem::path& path);

/// Runs fn(0..n-1) on up to `threads` workers (0 = hardware concurrency).
/// The first exception thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

struct ExperimentOptions {
  std::size_t threads = 1;
  /// Forces coupled sampling in every VFTS cell.
  bool coupled_ts = false;
};

// --- synthetic --------------------------------------------------------------

struct SyntheticRun {
  std::size_t cell = 0;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  RunResult result;
};

/// Runs ordered by (cell, repetition).
std::vector<SyntheticRun> run_synthetic(const ExperimentSpec& spec, const ExperimentOptions& opts);

/// Metric names emitted per round, in output order.
inline constexpr const char* kSyntheticMetrics[] = {"cum_regret", "inst_regret", "theta_norm"};

struct SummaryRow {
  std::string cell;
  std::size_t t = 0;
  std::string metric;
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Per-round values of `metric` for one run.
std::vector<double> metric_trace(const RunResult& result, const std::string& metric);
/// Seed aggregation per (cell, t, metric). sd uses the n − 1 denominator
/// (0 for a single seed); lo/hi are mean ± sd or the seed min/max.
std::vector<SummaryRow> summarize(const ExperimentSpec& spec, const std::vector<SyntheticRun>& runs);

/// Long format: cell,seed,t,metric,value.
void write_results_csv(std::ostream& out, const ExperimentSpec& spec,
                       const std::vector<SyntheticRun>& runs);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
/// |‖θ̃_t‖ − ‖θ̂_t‖| between each federated cell and its centralized twin
/// (same settings, same seed). Rows: fed_cell,central_cell,seed,t,value.
/// Writes only the header when the spec has no such pairs.
void write_norm_diff_csv(std::ostream& out, const ExperimentSpec& spec,
                         const std::vector<SyntheticRun>& runs);
void write_synthetic_manifest(std::ostream& out, const ExperimentSpec& spec,
                              const std::vector<SyntheticRun>& runs);

// --- replay -------------------------------------------------------------------

struct ReplayRun {
  std::size_t cell = 0;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  ReplayMetrics metrics;
  double baseline_ctr = 0.0;

  double relative_ctr() const { return metrics.ctr() / baseline_ctr; }
};

/// Loads or plants the log named by spec.log for one seed. Cache and raw
/// sources ignore the seed.
ReplayLog replay_log_for(const ExperimentSpec& spec, std::uint64_t seed);

/// Runs ordered by (cell, repetition). `fixed_log` overrides spec.log.
/// Throws ReplayError when some cell never matches a logged arm.
std::vector<ReplayRun> run_replay(const ExperimentSpec& spec, const ExperimentOptions& opts,
                                  const ReplayLog* fixed_log = nullptr);

/// Mean relative CTR per cell, in cell order.
std::vector<double> mean_relative_ctr(const ExperimentSpec& spec, const std::vector<ReplayRun>& runs);

/// cell,seed,credited_events,credited_reward,ctr,baseline_ctr,relative_ctr
void write_replay_csv(std::ostream& out, const ExperimentSpec& spec, const std::vector<ReplayRun>& runs);
/// cell,metric,n,mean,sd,lo,hi with metric relative_ctr.
void write_replay_summary_csv(std::ostream& out, const ExperimentSpec& spec,
                              const std::vector<ReplayRun>& runs);
void write_replay_manifest(std::ostream& out, const ExperimentSpec& spec,
                           const std::vector<ReplayRun>& runs);

// --- cost model -------------------------------------------------------------

struct CostGrid {
  std::vector<CostAlgorithm> algorithms{CostAlgorithm::kVFUCB, CostAlgorithm::kVFTS};
  std::vector<std::uint64_t> horizons{5000};
  std::vector<std::uint64_t> arms{100, 500, 1000};
  std::vector<std::uint64_t> participants{5};
  std::vector<std::uint64_t> dims{10, 20, 50, 100, 200, 500, 1000, 2000, 5000};
};

/// One row per algorithm per grid point, relative to the centralized
/// counterpart: alg,T,K,M,d,stage1,stage2,stage3,total_ops,total_bytes,relative_cost.
/// Throws std::invalid_argument for an empty axis or a zero parameter.
void write_cost_csv(std::ostream& out, const CostGrid& grid);

/// "<dir>" from --out, else $VFBANDIT_OUT, else "vfbandit-out".
std::filesystem::path default_output_dir(const std::optional<std::string>& flag);

}  // namespace vfbandit

#endif  // VFBANDIT_EXPERIMENT_HPP_
