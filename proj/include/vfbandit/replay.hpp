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

// Logged-data ingestion (Criteo display-advertising layout) and unbiased
// replay evaluation.
//
// Ingestion pipeline:
//   1. Parse tab-separated rows: response, 13 integer columns, 26 hex
//      categorical columns. Rows with the wrong column count or unparsable
//      numbers are skipped and counted. Empty integer fields read as 0.
//   2. Split the 26 categoricals into n_hash_values contiguous groups and
//      hash each group (seeded FNV-1a over "column=value;" tokens) modulo
//      hash_buckets.
//   3. Cantor-pair the hash values left to right into one item label.
//   4. Keep rows whose label is among the top_labels most frequent
//      (frequency ties go to the smaller label).
//   5. Min-max scale user columns and item (hash) columns over the retained
//      rows, then multiply user columns by their scaling factors.

#ifndef VFBANDIT_REPLAY_HPP_
#define VFBANDIT_REPLAY_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vfbandit/bandit.hpp"
#include "vfbandit/numerics.hpp"

namespace vfbandit {

inline constexpr std::size_t kCriteoIntColumns = 13;
inline constexpr std::size_t kCriteoCategoricalColumns = 26;

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Replay produced no credited events, so CTR is undefined.
class ReplayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ReplayLogEntry {
  Vector user;
  Vector item;
  std::uint64_t label = 0;
  int reward = 0;
};

/// Ingested log plus its arm catalogue. Arms are the retained labels in
/// ascending label order.
struct ReplayLog {
  std::size_t user_dim = 0;
  std::size_t item_dim = 0;
  std::vector<std::uint64_t> labels;
  std::vector<Vector> label_items;
  std::vector<ReplayLogEntry> entries;

  std::size_t arms() const { return labels.size(); }
  std::optional<std::size_t> arm_of(std::uint64_t label) const;
  std::size_t context_dim() const { return user_dim * item_dim; }
};

struct IngestConfig {
  std::size_t n_hash_values = 3;
  std::uint64_t hash_buckets = 16;
  std::size_t top_labels = 40;
  std::uint64_t hash_seed = 0;
  /// Per-user-column factor applied after min-max scaling; empty means all 1.
  std::vector<double> user_scaling;
  /// Optional fixed (min, max) per user column / hash column instead of the
  /// ranges observed in the retained rows.
  std::vector<std::pair<double, double>> user_ranges;
  std::vector<std::pair<double, double>> item_ranges;

  void validate() const;
};

struct IngestStats {
  std::size_t rows_read = 0;
  std::size_t malformed = 0;
  std::size_t retained = 0;
  std::size_t distinct_labels = 0;
};

struct IngestResult {
  ReplayLog log;
  IngestStats stats;
};

struct CriteoRow {
  int response = 0;
  std::vector<double> ints;
  std::vector<std::string> categoricals;
};

/// std::nullopt for malformed rows: wrong field count, a response other than
/// 0 or 1, or a non-integer count column. Empty count columns read as 0.
std::optional<CriteoRow> parse_criteo_row(std::string_view line);

/// FNV-1a 64 over the 8 little-endian seed bytes followed by `data`.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0);
/// (a + b)(a + b + 1)/2 + b; throws std::overflow_error beyond 64 bits.
std::uint64_t cantor_pair(std::uint64_t a, std::uint64_t b);
/// Hash values of one row's categoricals, one per group.
std::vector<std::uint64_t> hash_categoricals(std::span<const std::string> cats,
                                             const IngestConfig& cfg);
std::uint64_t pair_label(std::span<const std::uint64_t> hashes);

IngestResult ingest_log(std::span<const std::string> lines, const IngestConfig& cfg);
IngestResult ingest_log(std::istream& in, const IngestConfig& cfg);

/// Text cache: a versioned comment header, then CSV rows
/// label,reward,u0..,i0.. with 17 significant digits.
inline constexpr std::string_view kReplayCacheMagic = "# vfbandit-replay-cache v1";
void write_replay_cache(std::ostream& out, const ReplayLog& log);
ReplayLog read_replay_cache(std::istream& in);

// ---------------------------------------------------------------------------

/// A policy under replay. Candidates are the outer-addition contexts of the
/// current user with every arm's item features, one row per arm.
class ReplayPolicy {
 public:
  virtual ~ReplayPolicy() = default;
  virtual std::size_t choose(const ContextSet& candidates, Rng& rng) = 0;
  /// Called only when the choice matched the logged arm.
  virtual void observe(const ContextSet& candidates, std::size_t arm, double reward) = 0;
};

class RandomReplayPolicy : public ReplayPolicy {
 public:
  std::size_t choose(const ContextSet& candidates, Rng& rng) override;
  void observe(const ContextSet&, std::size_t, double) override {}
};

/// LinUCB on a subset of context coordinates (all of them when empty). An
/// optional orthogonal mask turns it into the federated variant, which must
/// make the same choices as the unmasked one.
class LinUcbReplayPolicy : public ReplayPolicy {
 public:
  LinUcbReplayPolicy(std::size_t context_dim, double beta, double lambda = 1.0,
                     std::vector<std::size_t> coordinates = {},
                     std::optional<Matrix> mask = std::nullopt);

  std::size_t choose(const ContextSet& candidates, Rng& rng) override;
  void observe(const ContextSet& candidates, std::size_t arm, double reward) override;
  const BanditState& state() const { return state_; }

 private:
  ContextSet view(const ContextSet& candidates) const;

  std::vector<std::size_t> coordinates_;
  std::optional<Matrix> mask_;
  UcbParams params_;
  BanditState state_;
};

/// Context coordinates visible when only a random subset of the raw feature
/// columns is held: round(ratio·d_u) user columns and round(ratio·d_i) item
/// columns, at least one of each. The visible coordinates are the
/// outer-addition cells (i, j) of kept user column i and item column j.
std::vector<std::size_t> replay_partial_coordinates(std::size_t user_dim, std::size_t item_dim,
                                                    double ratio, Rng& rng);

struct ReplayMetrics {
  std::size_t log_length = 0;
  std::size_t credited_events = 0;
  double credited_reward = 0.0;

  double ctr() const { return credited_reward / static_cast<double>(credited_events); }
};

/// Streams the log; credits and updates the policy only when its choice
/// equals the logged arm. Throws ReplayError when nothing was credited.
ReplayMetrics replay_evaluate(ReplayPolicy& policy, const ReplayLog& log, Rng& rng);

/// Mean CTR of the uniform-random policy over the given seeds.
double random_baseline_ctr(const ReplayLog& log, std::span<const std::uint64_t> seeds);

/// Synthetic log with a known linear reward model on the outer-addition
/// context: P(click) = θ*ᵀx with θ* ≥ 0 scaled so that P stays inside (0, 1).
/// Users are uniform on [0, user_scale]^d_u, items uniform on [0,1]^d_i (then
/// min-max scaled across labels), the logged arm is uniform. The user term of
/// θ*ᵀx is common to all arms, so a small user_scale keeps it from diluting
/// the arm-dependent part of the click rate.
struct PlantedLogConfig {
  std::size_t rows = 60000;
  std::size_t labels = 40;
  std::size_t user_dim = 13;
  std::size_t item_dim = 3;
  /// Largest possible click probability.
  double max_ctr = 0.8;
  double user_scale = 0.1;
};

struct PlantedLog {
  ReplayLog log;
  Vector theta_star;
};

PlantedLog make_planted_log(const PlantedLogConfig& cfg, Rng& rng);

}  // namespace vfbandit

#endif  // VFBANDIT_REPLAY_HPP_
