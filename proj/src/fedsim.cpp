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

#include "vfbandit/fedsim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vfbandit {

namespace {

constexpr std::pair<Algorithm, std::string_view> kAlgorithmNames[] = {
    {Algorithm::kVFUCB, "VFUCB"},
    {Algorithm::kVFTS, "VFTS"},
    {Algorithm::kLinUCB, "LinUCB"},
    {Algorithm::kLinTS, "LinTS"},
    {Algorithm::kPartialLinUCB, "PartialLinUCB"},
    {Algorithm::kPartialLinTS, "PartialLinTS"},
};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

void bad_config(const std::string& what) { throw std::invalid_argument("RunConfig: " + what); }

}  // namespace

std::string_view to_string(Algorithm alg) {
  for (const auto& [a, name] : kAlgorithmNames) {
    if (a == alg) return name;
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (const auto& [a, n] : kAlgorithmNames) {
    if (iequals(n, name)) return a;
  }
  return std::nullopt;
}

bool uses_thompson(Algorithm alg) {
  return alg == Algorithm::kVFTS || alg == Algorithm::kLinTS || alg == Algorithm::kPartialLinTS;
}

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::kMaskShard: return "MaskShardMsg";
    case MessageKind::kMaskedContext: return "MaskedContextMsg";
    case MessageKind::kAction: return "ActionMsg";
    case MessageKind::kReward: return "RewardMsg";
  }
  return "unknown";
}

void RunConfig::validate() const {
  if (horizon == 0) bad_config("T must be >= 1");
  if (arms == 0) bad_config("K must be >= 1");
  if (dim == 0) bad_config("d must be >= 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) bad_config("lambda must be positive");
  if (!(beta >= 0.0) || !std::isfinite(beta)) bad_config("beta must be >= 0");
  if (!(v >= 0.0) || !std::isfinite(v)) bad_config("v must be >= 0");
  if (!(partial_ratio > 0.0 && partial_ratio <= 1.0)) bad_config("partial_ratio must be in (0, 1]");
  if (algorithm == Algorithm::kVFUCB || algorithm == Algorithm::kVFTS) {
    if (partition.empty()) bad_config("partition must be nonempty");
    const std::size_t sum = std::accumulate(partition.begin(), partition.end(), std::size_t{0});
    if (sum != dim) {
      bad_config("partition sums to " + std::to_string(sum) + " but d = " + std::to_string(dim));
    }
    if (std::find(partition.begin(), partition.end(), std::size_t{0}) != partition.end()) {
      bad_config("partition entries must be positive");
    }
    if (mask_generator == MaskGeneratorMode::kParticipant &&
        (mask_generator_participant == 0 || mask_generator_participant >= partition.size())) {
      bad_config("mask_generator_participant must name a passive participant");
    }
    if (mask_fault && (mask_fault->first >= dim || mask_fault->second >= dim)) {
      bad_config("mask_fault entry out of range");
    }
  }
  if (noise_sigma2 < 0.0 || context_sigma2 <= 0.0 || theta_sigma2 <= 0.0) {
    bad_config("environment variances must be positive (noise may be zero)");
  }
}

SyntheticConfig RunConfig::synthetic() const {
  return {dim, arms, context_sigma2, theta_sigma2, noise_sigma2};
}

// ---------------------------------------------------------------------------

void Ledger::record(const Message& msg) {
  const std::uint64_t n = msg.elements();
  total_elements_ += n;
  pair_elements_[{msg.from, msg.to}] += n;
  kind_elements_[msg.kind] += n;
  kind_messages_[msg.kind] += 1;
}

void Ledger::add_ops(std::size_t party, std::uint64_t ops) { ops_[party] += ops; }

std::uint64_t Ledger::protocol_elements() const {
  std::uint64_t total = 0;
  for (const auto& [pair, n] : pair_elements_) {
    if (environment_id_ && (pair.first == *environment_id_ || pair.second == *environment_id_)) {
      continue;
    }
    total += n;
  }
  return total;
}

std::uint64_t Ledger::elements_of(MessageKind kind) const {
  auto it = kind_elements_.find(kind);
  return it == kind_elements_.end() ? 0 : it->second;
}

std::uint64_t Ledger::messages_of(MessageKind kind) const {
  auto it = kind_messages_.find(kind);
  return it == kind_messages_.end() ? 0 : it->second;
}

std::uint64_t Ledger::bytes_between(std::size_t from, std::size_t to) const {
  auto it = pair_elements_.find({from, to});
  return it == pair_elements_.end() ? 0 : it->second * kElementBytes;
}

std::uint64_t Ledger::ops_of(std::size_t party) const {
  auto it = ops_.find(party);
  return it == ops_.end() ? 0 : it->second;
}

void MessageBus::send(Message msg) {
  ledger_.record(msg);
  inbox_[msg.to].push_back(std::move(msg));
}

std::vector<Message> MessageBus::take(std::size_t to, MessageKind kind) {
  std::vector<Message> out;
  auto& queue = inbox_[to];
  for (auto it = queue.begin(); it != queue.end();) {
    if (it->kind == kind) {
      out.push_back(std::move(*it));
      it = queue.erase(it);
    } else {
      ++it;
    }
  }
  return out;
}

double RunResult::cumulative_regret() const {
  double total = 0.0;
  for (const RoundRecord& r : records) total += r.regret;
  return total;
}

std::vector<std::size_t> RunResult::arm_sequence() const {
  std::vector<std::size_t> arms;
  arms.reserve(records.size());
  for (const RoundRecord& r : records) arms.push_back(r.arm);
  return arms;
}

std::vector<std::size_t> partial_coordinates(std::size_t d, double ratio, PartialSelection sel,
                                             Rng& rng) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("partial ratio must be in (0, 1]");
  // The epsilon keeps products such as 0.2 × 100 from rounding up to 21.
  auto keep = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(d) - 1e-9));
  keep = std::clamp<std::size_t>(keep, 1, d);
  std::vector<std::size_t> all(d);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (sel == PartialSelection::kPrefix) {
    all.resize(keep);
    return all;
  }
  // Partial Fisher–Yates.
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(d - i));
    std::swap(all[i], all[j]);
  }
  all.resize(keep);
  std::sort(all.begin(), all.end());
  return all;
}

// ---------------------------------------------------------------------------

namespace {

class Scorer {
 public:
  Scorer(const RunConfig& cfg, Rng policy_rng) : cfg_(cfg), rng_(std::move(policy_rng)) {}

  std::vector<ArmScore> score(const BanditState& state, const ContextSet& contexts,
                              const Matrix* coupling_mask = nullptr) {
    if (!uses_thompson(cfg_.algorithm)) {
      return ucb_scores(state, UcbParams{cfg_.beta}, contexts);
    }
    const TsParams params{cfg_.v};
    if (coupling_mask != nullptr) {
      const Matrix& q = *coupling_mask;
      // QᵀΛ̃⁻¹Q recovers the centralized Λ⁻¹.
      const Matrix central_inv = symmetrized(matmul(transpose(q), matmul(state.gram_inverse(), q)));
      return ts_scores_with_factor(state, params, contexts, matmul(q, cholesky(central_inv)), rng_)
          .scores;
    }
    return ts_scores(state, params, contexts, rng_).scores;
  }

 private:
  const RunConfig& cfg_;
  Rng rng_;
};

RoundRecord make_record(const EnvRound& round, std::size_t arm, const BanditState& state,
                        std::vector<ArmScore> scores, bool keep_scores) {
  RoundRecord rec;
  rec.t = round.t;
  rec.arm = arm;
  rec.reward = round.reward(arm);
  rec.regret = round.regret(arm);
  rec.theta_norm = norm2(state.theta());
  if (keep_scores) rec.scores = std::move(scores);
  return rec;
}

void check_env(const RunConfig& cfg, const Environment& env) {
  if (env.dim() != cfg.dim || env.arms() != cfg.arms) {
    throw DimensionError("environment shape (K=" + std::to_string(env.arms()) +
                         ", d=" + std::to_string(env.dim()) + ") does not match run config");
  }
}

/// A context-holding party: the active participant (index 0) or a passive one.
class Participant {
 public:
  Participant(std::size_t index, const DimPartition& part) : index_(index), part_(part) {}

  std::size_t index() const { return index_; }

  void receive_shard(const Message& msg) {
    const std::size_t d = part_.total();
    const std::size_t dj = part_.dim(index_);
    Matrix block(d, dj);
    std::copy(msg.payload.begin(), msg.payload.end(), block.values().begin());
    shard_ = MaskShard{index_, std::move(block)};
  }

  /// Masks this party's slice of every arm: one d-vector per arm in one message.
  Message mask_round(const ContextSet& contexts, std::size_t round, std::size_t to,
                     Ledger& ledger) const {
    const std::size_t d = part_.total();
    Message msg{MessageKind::kMaskedContext, index_, to, round, {}};
    msg.payload.reserve(contexts.rows() * d);
    for (std::size_t a = 0; a < contexts.rows(); ++a) {
      const Vector local = part_.local_slice(contexts.row(a), index_);
      const MaskedContext masked = mask_local(*shard_, local, a, round);
      msg.payload.insert(msg.payload.end(), masked.vec.values().begin(), masked.vec.values().end());
    }
    ledger.add_ops(index_, contexts.rows() * d * part_.dim(index_));
    return msg;
  }

 private:
  std::size_t index_;
  const DimPartition& part_;
  std::optional<MaskShard> shard_;
};

Matrix generate_mask(const RunConfig& cfg) {
  Matrix q;
  if (cfg.identity_mask) {
    q = Matrix::identity(cfg.dim);
  } else {
    Rng mask_rng = Rng(cfg.seed).fork(streams::kMask);
    q = random_orthogonal(cfg.dim, mask_rng);
  }
  if (cfg.mask_fault) {
    auto [r, c] = *cfg.mask_fault;
    q(r, c) = -q(r, c);
  }
  return q;
}

RunResult run_federated(const RunConfig& cfg, Environment& env, const RoundObserver& observer) {
  cfg.validate();
  check_env(cfg, env);
  const DimPartition part(cfg.partition);
  const std::size_t m = part.participants();
  const std::size_t d = cfg.dim;
  constexpr std::size_t kActive = 0;
  const bool third_party = cfg.mask_generator == MaskGeneratorMode::kThirdParty;
  const std::size_t pmg = third_party ? m : cfg.mask_generator_participant;
  const std::size_t environment = m + 1;

  RunResult result;
  result.algorithm = cfg.algorithm;
  for (std::size_t j = 0; j < m; ++j) {
    result.roles.push_back({j == kActive ? PartyKind::kActiveParticipant
                                         : PartyKind::kPassiveParticipant,
                            j, part.dim(j), !third_party && j == pmg});
  }
  if (third_party) result.roles.push_back({PartyKind::kPrivacyMaskGenerator, pmg, 0, true});

  MessageBus bus(environment);

  // Initialization: the mask generator draws Q once and ships column shards.
  const Matrix q = generate_mask(cfg);
  bus.ledger().add_ops(pmg, static_cast<std::uint64_t>(d) * d * d + static_cast<std::uint64_t>(d) * d);
  for (const MaskShard& shard : partition_mask(q, part)) {
    Message msg{MessageKind::kMaskShard, pmg, shard.owner, 0, {}};
    msg.payload.assign(shard.block.values().begin(), shard.block.values().end());
    bus.send(std::move(msg));
  }
  std::vector<Participant> participants;
  participants.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    participants.emplace_back(j, part);
    for (const Message& msg : bus.take(j, MessageKind::kMaskShard)) participants[j].receive_shard(msg);
  }

  BanditState state(d, cfg.lambda, cfg.inverse_mode);
  Scorer scorer(cfg, Rng(cfg.seed).fork(streams::kPolicy));
  result.records.reserve(cfg.horizon);

  for (std::size_t t = 0; t < cfg.horizon; ++t) {
    std::optional<EnvRound> round = env.next();
    if (!round) {
      result.truncated = true;
      break;
    }
    const std::size_t k = round->contexts.rows();

    // Every participant, the active one included, ships its masked slices.
    for (const Participant& p : participants) {
      bus.send(p.mask_round(round->contexts, t, kActive, bus.ledger()));
    }
    std::vector<Message> inbound = bus.take(kActive, MessageKind::kMaskedContext);
    ContextSet masked(k, d);
    std::vector<MaskedContext> shares(inbound.size());
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t i = 0; i < inbound.size(); ++i) {
        const auto* begin = inbound[i].payload.data() + a * d;
        shares[i] = MaskedContext{Vector(std::vector<double>(begin, begin + d)), a, t};
      }
      masked.set_row(a, aggregate(shares).vec);
    }
    bus.ledger().add_ops(kActive, static_cast<std::uint64_t>(k) * m * d);

    std::vector<ArmScore> scores =
        scorer.score(state, masked, cfg.coupled_ts ? &q : nullptr);
    const std::size_t arm = select_arm(scores);
    bus.send({MessageKind::kAction, kActive, environment, t, {static_cast<double>(arm)}});
    bus.send({MessageKind::kReward, environment, kActive, t, {round->reward(arm)}});
    const double reward = bus.take(kActive, MessageKind::kReward).front().payload.front();
    bus.take(environment, MessageKind::kAction);

    state.update(masked.row_vector(arm), reward);
    result.records.push_back(make_record(*round, arm, state, std::move(scores), cfg.record_scores));
    if (observer) observer(t, state);
  }

  result.ledger = bus.ledger();
  result.mask = q;
  return result;
}

RunResult run_on_coordinates(const RunConfig& cfg, Environment& env,
                             const std::vector<std::size_t>& coords,
                             const RoundObserver& observer) {
  cfg.validate();
  check_env(cfg, env);
  RunResult result;
  result.algorithm = cfg.algorithm;
  result.visible_coordinates = coords;
  const bool full = coords.size() == cfg.dim;

  BanditState state(coords.size(), cfg.lambda, cfg.inverse_mode);
  Scorer scorer(cfg, Rng(cfg.seed).fork(streams::kPolicy));
  result.records.reserve(cfg.horizon);

  for (std::size_t t = 0; t < cfg.horizon; ++t) {
    std::optional<EnvRound> round = env.next();
    if (!round) {
      result.truncated = true;
      break;
    }
    const std::size_t k = round->contexts.rows();
    ContextSet visible;
    if (full) {
      visible = round->contexts;
    } else {
      visible = ContextSet(k, coords.size());
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t i = 0; i < coords.size(); ++i) visible(a, i) = round->contexts(a, coords[i]);
      }
    }
    std::vector<ArmScore> scores = scorer.score(state, visible);
    const std::size_t arm = select_arm(scores);
    state.update(visible.row_vector(arm), round->reward(arm));
    result.records.push_back(make_record(*round, arm, state, std::move(scores), cfg.record_scores));
    if (observer) observer(t, state);
  }
  return result;
}

std::vector<std::size_t> all_coordinates(std::size_t d) {
  std::vector<std::size_t> c(d);
  std::iota(c.begin(), c.end(), std::size_t{0});
  return c;
}

}  // namespace

RunResult run_vfucb(const RunConfig& cfg, Environment& env, const RoundObserver& observer) {
  if (cfg.algorithm != Algorithm::kVFUCB) throw std::invalid_argument("run_vfucb: algorithm must be VFUCB");
  return run_federated(cfg, env, observer);
}

RunResult run_vfts(const RunConfig& cfg, Environment& env, const RoundObserver& observer) {
  if (cfg.algorithm != Algorithm::kVFTS) throw std::invalid_argument("run_vfts: algorithm must be VFTS");
  return run_federated(cfg, env, observer);
}

RunResult run_centralized(const RunConfig& cfg, Environment& env, const RoundObserver& observer) {
  if (cfg.algorithm != Algorithm::kLinUCB && cfg.algorithm != Algorithm::kLinTS) {
    throw std::invalid_argument("run_centralized: algorithm must be LinUCB or LinTS");
  }
  return run_on_coordinates(cfg, env, all_coordinates(cfg.dim), observer);
}

RunResult run_partial(const RunConfig& cfg, Environment& env, const RoundObserver& observer) {
  if (cfg.algorithm != Algorithm::kPartialLinUCB && cfg.algorithm != Algorithm::kPartialLinTS) {
    throw std::invalid_argument("run_partial: algorithm must be PartialLinUCB or PartialLinTS");
  }
  cfg.validate();
  Rng rng = Rng(cfg.seed).fork(streams::kPartial);
  return run_on_coordinates(
      cfg, env, partial_coordinates(cfg.dim, cfg.partial_ratio, cfg.partial_selection, rng),
      observer);
}

RunResult run(const RunConfig& cfg, Environment& env, const RoundObserver& observer) {
  switch (cfg.algorithm) {
    case Algorithm::kVFUCB: return run_vfucb(cfg, env, observer);
    case Algorithm::kVFTS: return run_vfts(cfg, env, observer);
    case Algorithm::kLinUCB:
    case Algorithm::kLinTS: return run_centralized(cfg, env, observer);
    case Algorithm::kPartialLinUCB:
    case Algorithm::kPartialLinTS: return run_partial(cfg, env, observer);
  }
  throw std::invalid_argument("run: unknown algorithm");
}

std::unique_ptr<SyntheticEnv> make_environment(const RunConfig& cfg) {
  return std::make_unique<SyntheticEnv>(cfg.synthetic(), Rng(cfg.seed).fork(streams::kEnvironment));
}

RunResult run(const RunConfig& cfg) {
  auto env = make_environment(cfg);
  return run(cfg, *env);
}

}  // namespace vfbandit
