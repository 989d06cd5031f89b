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

// Multi-participant protocol simulation.
//
// Parties are numbered 0..M-1 for the participants that hold context slices
// (0 is the active participant, which runs the bandit and sees rewards;
// 1..M-1 are passive). When the mask generator is a standalone third party
// it is party M. The environment (the user producing rewards) is a separate
// endpoint and its traffic is kept apart from protocol traffic in the ledger.
//
// Every run derives independent random streams from the seed: the
// environment, the policy (Thompson draws), the mask, and the partial-
// baseline coordinate subset. A federated run and a centralized run with the
// same seed therefore see identical contexts, rewards and normal draws.

#ifndef VFBANDIT_FEDSIM_HPP_
#define VFBANDIT_FEDSIM_HPP_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vfbandit/bandit.hpp"
#include "vfbandit/envs.hpp"
#include "vfbandit/numerics.hpp"
#include "vfbandit/o3m.hpp"

namespace vfbandit {

enum class Algorithm { kVFUCB, kVFTS, kLinUCB, kLinTS, kPartialLinUCB, kPartialLinTS };

std::string_view to_string(Algorithm alg);
/// Accepts the canonical names ("VFUCB", "PartialLinTS", ...), case-insensitive.
std::optional<Algorithm> parse_algorithm(std::string_view name);
bool uses_thompson(Algorithm alg);

enum class MaskGeneratorMode {
  /// Standalone third party (party M).
  kThirdParty,
  /// Role taken by one of the passive participants.
  kParticipant,
};

enum class PartialSelection { kPrefix, kRandom };

namespace streams {
inline constexpr std::uint64_t kEnvironment = 1;
inline constexpr std::uint64_t kPolicy = 2;
inline constexpr std::uint64_t kMask = 3;
inline constexpr std::uint64_t kPartial = 4;
}  // namespace streams

struct RunConfig {
  Algorithm algorithm = Algorithm::kVFUCB;
  std::size_t horizon = 5000;  // T
  std::size_t arms = 10;       // K
  std::size_t dim = 100;       // d
  std::vector<std::size_t> partition{20, 20, 20, 20, 20};
  double lambda = 1.0;
  double beta = 0.5;
  double v = 0.01;
  std::uint64_t seed = 0;
  double partial_ratio = 1.0;
  PartialSelection partial_selection = PartialSelection::kPrefix;
  double context_sigma2 = 0.05;
  double theta_sigma2 = 0.05;
  double noise_sigma2 = 0.05;
  MaskGeneratorMode mask_generator = MaskGeneratorMode::kThirdParty;
  /// Passive participant acting as mask generator in kParticipant mode.
  std::size_t mask_generator_participant = 1;
  InverseMode inverse_mode = InverseMode::kCholesky;
  /// Keep per-arm scores in every RoundRecord.
  bool record_scores = false;

  // Test instrumentation.
  /// VFTS draws with factor Q·chol(QᵀΛ̃⁻¹Q), which equals Q times the factor
  /// a centralized run would use. Requires the simulator's knowledge of Q,
  /// so it is for pathwise comparisons only.
  bool coupled_ts = false;
  /// Replace the random mask by the identity.
  bool identity_mask = false;
  /// Negate the mask entry (row, col) after generation.
  std::optional<std::pair<std::size_t, std::size_t>> mask_fault;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  SyntheticConfig synthetic() const;
};

enum class PartyKind { kActiveParticipant, kPassiveParticipant, kPrivacyMaskGenerator };

struct ParticipantRole {
  PartyKind kind = PartyKind::kPassiveParticipant;
  std::size_t index = 0;
  /// d_j for participants; 0 for a third-party mask generator.
  std::size_t local_dims = 0;
  /// Set on the passive participant that also generates the mask.
  bool generates_mask = false;
};

enum class MessageKind { kMaskShard, kMaskedContext, kAction, kReward };
std::string_view to_string(MessageKind kind);

struct Message {
  MessageKind kind = MessageKind::kMaskedContext;
  std::size_t from = 0;
  std::size_t to = 0;
  std::size_t round = 0;
  std::vector<double> payload;

  std::size_t elements() const { return payload.size(); }
};

/// Exact element, byte and operation counters.
class Ledger {
 public:
  static constexpr std::uint64_t kElementBytes = 8;

  explicit Ledger(std::optional<std::size_t> environment_id = std::nullopt)
      : environment_id_(environment_id) {}

  void record(const Message& msg);
  void add_ops(std::size_t party, std::uint64_t ops);

  std::uint64_t total_elements() const { return total_elements_; }
  std::uint64_t total_bytes() const { return total_elements_ * kElementBytes; }
  /// Elements exchanged among participants and the mask generator only.
  std::uint64_t protocol_elements() const;
  std::uint64_t protocol_bytes() const { return protocol_elements() * kElementBytes; }
  std::uint64_t elements_of(MessageKind kind) const;
  std::uint64_t messages_of(MessageKind kind) const;
  std::uint64_t bytes_between(std::size_t from, std::size_t to) const;
  std::uint64_t ops_of(std::size_t party) const;

  const std::map<std::pair<std::size_t, std::size_t>, std::uint64_t>& pair_elements() const {
    return pair_elements_;
  }
  const std::map<std::size_t, std::uint64_t>& ops() const { return ops_; }

 private:
  std::optional<std::size_t> environment_id_;
  std::uint64_t total_elements_ = 0;
  std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> pair_elements_;
  std::map<MessageKind, std::uint64_t> kind_elements_;
  std::map<MessageKind, std::uint64_t> kind_messages_;
  std::map<std::size_t, std::uint64_t> ops_;
};

/// Synchronous in-process bus. Delivery is FIFO per recipient; every send is
/// ledgered before delivery.
class MessageBus {
 public:
  explicit MessageBus(std::optional<std::size_t> environment_id = std::nullopt)
      : ledger_(environment_id) {}

  void send(Message msg);
  /// Removes and returns every queued message of `kind` addressed to `to`.
  std::vector<Message> take(std::size_t to, MessageKind kind);

  Ledger& ledger() { return ledger_; }
  const Ledger& ledger() const { return ledger_; }

 private:
  Ledger ledger_;
  std::map<std::size_t, std::deque<Message>> inbox_;
};

struct RoundRecord {
  std::size_t t = 0;
  std::size_t arm = 0;
  double reward = 0.0;
  double regret = 0.0;
  /// ‖θ̂‖₂ for centralized and partial runs, ‖θ̃‖₂ for federated runs.
  double theta_norm = 0.0;
  std::vector<ArmScore> scores;
};

struct RunResult {
  Algorithm algorithm = Algorithm::kLinUCB;
  std::vector<RoundRecord> records;
  Ledger ledger;
  /// The environment ran out before the configured horizon.
  bool truncated = false;
  /// The mask Q (federated runs only).
  std::optional<Matrix> mask;
  std::vector<ParticipantRole> roles;
  /// Coordinates visible to a partial baseline.
  std::vector<std::size_t> visible_coordinates;

  double cumulative_regret() const;
  std::vector<std::size_t> arm_sequence() const;
};

/// Called after each round's update with the round index and the bandit
/// state that made the decision (masked state for federated runs).
using RoundObserver = std::function<void(std::size_t t, const BanditState& state)>;

RunResult run_vfucb(const RunConfig& cfg, Environment& env, const RoundObserver& observer = {});
RunResult run_vfts(const RunConfig& cfg, Environment& env, const RoundObserver& observer = {});
RunResult run_centralized(const RunConfig& cfg, Environment& env,
                          const RoundObserver& observer = {});
RunResult run_partial(const RunConfig& cfg, Environment& env, const RoundObserver& observer = {});

/// Dispatches on cfg.algorithm.
RunResult run(const RunConfig& cfg, Environment& env, const RoundObserver& observer = {});
/// Synthetic environment from cfg (seeded from the environment stream).
std::unique_ptr<SyntheticEnv> make_environment(const RunConfig& cfg);
/// run(cfg, *make_environment(cfg)).
RunResult run(const RunConfig& cfg);

/// Coordinates a partial baseline sees: ⌈ratio·d⌉ of them, either a prefix or
/// a sorted random subset drawn from rng.
std::vector<std::size_t> partial_coordinates(std::size_t d, double ratio, PartialSelection sel,
                                             Rng& rng);

}  // namespace vfbandit

#endif  // VFBANDIT_FEDSIM_HPP_
