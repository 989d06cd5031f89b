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

#include "vfbandit/replay.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "vfbandit/csv.hpp"
#include "vfbandit/envs.hpp"

namespace vfbandit {

namespace {

std::optional<double> parse_number(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<double> parse_integer(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return static_cast<double>(v);
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double scale(double x) const { return hi > lo ? (x - lo) / (hi - lo) : 0.0; }
};

std::vector<Range> observed_ranges(const std::vector<std::vector<double>>& rows, std::size_t cols) {
  std::vector<Range> ranges(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    ranges[c].lo = ranges[c].hi = rows.front()[c];
  }
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < cols; ++c) {
      ranges[c].lo = std::min(ranges[c].lo, row[c]);
      ranges[c].hi = std::max(ranges[c].hi, row[c]);
    }
  }
  return ranges;
}

std::vector<Range> configured_or_observed(const std::vector<std::pair<double, double>>& configured,
                                          const std::vector<std::vector<double>>& rows,
                                          std::size_t cols) {
  if (configured.empty()) return observed_ranges(rows, cols);
  std::vector<Range> out;
  for (const auto& [lo, hi] : configured) out.push_back({lo, hi});
  return out;
}

std::vector<std::size_t> random_subset(std::size_t n, std::size_t keep, Rng& rng) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(all[i], all[j]);
  }
  all.resize(keep);
  std::sort(all.begin(), all.end());
  return all;
}

/// Rebuilds the arm catalogue (sorted labels, per-label item features) from entries.
void index_arms(ReplayLog& log) {
  std::map<std::uint64_t, Vector> items;
  for (const ReplayLogEntry& e : log.entries) items.try_emplace(e.label, e.item);
  log.labels.clear();
  log.label_items.clear();
  for (auto& [label, item] : items) {
    log.labels.push_back(label);
    log.label_items.push_back(std::move(item));
  }
}

}  // namespace

std::optional<std::size_t> ReplayLog::arm_of(std::uint64_t label) const {
  auto it = std::lower_bound(labels.begin(), labels.end(), label);
  if (it == labels.end() || *it != label) return std::nullopt;
  return static_cast<std::size_t>(it - labels.begin());
}

void IngestConfig::validate() const {
  if (n_hash_values == 0 || n_hash_values > kCriteoCategoricalColumns) {
    throw std::invalid_argument("IngestConfig: n_hash_values must be in [1, 26]");
  }
  if (hash_buckets < 2) throw std::invalid_argument("IngestConfig: hash_buckets must be >= 2");
  if (top_labels == 0) throw std::invalid_argument("IngestConfig: top_labels must be >= 1");
  if (!user_scaling.empty() && user_scaling.size() != kCriteoIntColumns) {
    throw std::invalid_argument("IngestConfig: user_scaling needs one factor per integer column");
  }
  if (!user_ranges.empty() && user_ranges.size() != kCriteoIntColumns) {
    throw std::invalid_argument("IngestConfig: user_ranges needs one range per integer column");
  }
  if (!item_ranges.empty() && item_ranges.size() != n_hash_values) {
    throw std::invalid_argument("IngestConfig: item_ranges needs one range per hash value");
  }
}

std::optional<CriteoRow> parse_criteo_row(std::string_view line) {
  const auto fields = split(trim_cr(line), '\t');
  if (fields.size() != 1 + kCriteoIntColumns + kCriteoCategoricalColumns) return std::nullopt;
  CriteoRow row;
  if (fields[0] == "0") {
    row.response = 0;
  } else if (fields[0] == "1") {
    row.response = 1;
  } else {
    return std::nullopt;
  }
  row.ints.reserve(kCriteoIntColumns);
  for (std::size_t c = 0; c < kCriteoIntColumns; ++c) {
    const std::string_view f = fields[1 + c];
    if (f.empty()) {
      row.ints.push_back(0.0);
      continue;
    }
    auto v = parse_integer(f);
    if (!v) return std::nullopt;
    row.ints.push_back(*v);
  }
  row.categoricals.reserve(kCriteoCategoricalColumns);
  for (std::size_t c = 0; c < kCriteoCategoricalColumns; ++c) {
    row.categoricals.emplace_back(fields[1 + kCriteoIntColumns + c]);
  }
  return row;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
  constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  constexpr std::uint64_t kPrime = 0x100000001b3ULL;
  std::uint64_t h = kOffset;
  for (int i = 0; i < 8; ++i) {
    h ^= (seed >> (8 * i)) & 0xffU;
    h *= kPrime;
  }
  for (unsigned char c : data) {
    h ^= c;
    h *= kPrime;
  }
  return h;
}

std::uint64_t cantor_pair(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s, s1, prod, out;
  if (__builtin_add_overflow(a, b, &s) || __builtin_add_overflow(s, 1, &s1)) {
    throw std::overflow_error("cantor_pair: overflow");
  }
  // One of s, s + 1 is even; halve it first so the product stays exact.
  const bool s_even = s % 2 == 0;
  if (__builtin_mul_overflow(s_even ? s / 2 : s, s_even ? s1 : s1 / 2, &prod) ||
      __builtin_add_overflow(prod, b, &out)) {
    throw std::overflow_error("cantor_pair: overflow");
  }
  return out;
}

std::vector<std::uint64_t> hash_categoricals(std::span<const std::string> cats,
                                             const IngestConfig& cfg) {
  const std::size_t n = cfg.n_hash_values;
  const std::size_t base = cats.size() / n;
  const std::size_t extra = cats.size() % n;
  std::vector<std::uint64_t> out;
  out.reserve(n);
  std::size_t col = 0;
  for (std::size_t g = 0; g < n; ++g) {
    const std::size_t width = base + (g < extra ? 1 : 0);
    std::string token;
    for (std::size_t i = 0; i < width; ++i, ++col) {
      token += std::to_string(col);
      token += '=';
      token += cats[col];
      token += ';';
    }
    out.push_back(fnv1a64(token, cfg.hash_seed) % cfg.hash_buckets);
  }
  return out;
}

std::uint64_t pair_label(std::span<const std::uint64_t> hashes) {
  if (hashes.empty()) throw std::invalid_argument("pair_label: no hash values");
  std::uint64_t label = hashes[0];
  for (std::size_t i = 1; i < hashes.size(); ++i) label = cantor_pair(label, hashes[i]);
  return label;
}

IngestResult ingest_log(std::span<const std::string> lines, const IngestConfig& cfg) {
  cfg.validate();
  IngestResult result;
  struct Parsed {
    int response;
    std::vector<double> ints;
    std::vector<double> hashes;
    std::uint64_t label;
  };
  std::vector<Parsed> parsed;
  parsed.reserve(lines.size());
  std::unordered_map<std::uint64_t, std::size_t> freq;
  for (const std::string& line : lines) {
    if (trim_cr(line).empty()) continue;
    ++result.stats.rows_read;
    auto row = parse_criteo_row(line);
    if (!row) {
      ++result.stats.malformed;
      continue;
    }
    const auto hashes = hash_categoricals(row->categoricals, cfg);
    const std::uint64_t label = pair_label(hashes);
    ++freq[label];
    parsed.push_back({row->response, std::move(row->ints),
                      std::vector<double>(hashes.begin(), hashes.end()), label});
  }
  result.stats.distinct_labels = freq.size();
  if (parsed.empty()) throw IngestError("ingest_log: no well-formed rows");

  std::vector<std::pair<std::uint64_t, std::size_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  ranked.resize(std::min(ranked.size(), cfg.top_labels));
  std::unordered_map<std::uint64_t, bool> keep;
  for (const auto& [label, count] : ranked) keep[label] = true;

  std::vector<std::vector<double>> users, items;
  std::vector<const Parsed*> retained;
  for (const Parsed& p : parsed) {
    if (!keep.count(p.label)) continue;
    retained.push_back(&p);
    users.push_back(p.ints);
    items.push_back(p.hashes);
  }
  if (retained.empty()) throw IngestError("ingest_log: no rows retained");

  const auto user_ranges = configured_or_observed(cfg.user_ranges, users, kCriteoIntColumns);
  const auto item_ranges = configured_or_observed(cfg.item_ranges, items, cfg.n_hash_values);

  ReplayLog& log = result.log;
  log.user_dim = kCriteoIntColumns;
  log.item_dim = cfg.n_hash_values;
  log.entries.reserve(retained.size());
  for (std::size_t r = 0; r < retained.size(); ++r) {
    ReplayLogEntry e;
    e.user = Vector(kCriteoIntColumns);
    for (std::size_t c = 0; c < kCriteoIntColumns; ++c) {
      const double factor = cfg.user_scaling.empty() ? 1.0 : cfg.user_scaling[c];
      e.user[c] = factor * user_ranges[c].scale(users[r][c]);
    }
    e.item = Vector(cfg.n_hash_values);
    for (std::size_t c = 0; c < cfg.n_hash_values; ++c) e.item[c] = item_ranges[c].scale(items[r][c]);
    e.label = retained[r]->label;
    e.reward = retained[r]->response;
    log.entries.push_back(std::move(e));
  }
  index_arms(log);
  result.stats.retained = log.entries.size();
  return result;
}

IngestResult ingest_log(std::istream& in, const IngestConfig& cfg) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return ingest_log(lines, cfg);
}

void write_replay_cache(std::ostream& out, const ReplayLog& log) {
  out << kReplayCacheMagic << '\n';
  out << "# user_dim=" << log.user_dim << " item_dim=" << log.item_dim << '\n';
  out << "label,reward";
  for (std::size_t i = 0; i < log.user_dim; ++i) out << ",u" << i;
  for (std::size_t i = 0; i < log.item_dim; ++i) out << ",i" << i;
  out << '\n';
  for (const ReplayLogEntry& e : log.entries) {
    out << e.label << ',' << e.reward;
    for (double v : e.user.values()) out << ',' << format_double(v);
    for (double v : e.item.values()) out << ',' << format_double(v);
    out << '\n';
  }
}

ReplayLog read_replay_cache(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim_cr(line) != kReplayCacheMagic) {
    throw IngestError("replay cache: missing or unsupported version header");
  }
  ReplayLog log;
  if (!std::getline(in, line) ||
      std::sscanf(line.c_str(), "# user_dim=%zu item_dim=%zu", &log.user_dim, &log.item_dim) != 2 ||
      log.user_dim == 0 || log.item_dim == 0) {
    throw IngestError("replay cache: malformed dimension header");
  }
  std::getline(in, line);  // column names
  std::size_t lineno = 3;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim_cr(line).empty()) continue;
    const auto fields = split(trim_cr(line), ',');
    if (fields.size() != 2 + log.user_dim + log.item_dim) {
      throw IngestError("replay cache: wrong field count on line " + std::to_string(lineno));
    }
    ReplayLogEntry e;
    auto [p, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), e.label);
    auto reward = parse_number(fields[1]);
    if (ec != std::errc() || !reward) {
      throw IngestError("replay cache: bad label or reward on line " + std::to_string(lineno));
    }
    e.reward = static_cast<int>(*reward);
    e.user = Vector(log.user_dim);
    e.item = Vector(log.item_dim);
    for (std::size_t i = 0; i < log.user_dim + log.item_dim; ++i) {
      auto v = parse_number(fields[2 + i]);
      if (!v) throw IngestError("replay cache: bad number on line " + std::to_string(lineno));
      (i < log.user_dim ? e.user[i] : e.item[i - log.user_dim]) = *v;
    }
    log.entries.push_back(std::move(e));
  }
  index_arms(log);
  return log;
}

// ---------------------------------------------------------------------------

std::size_t RandomReplayPolicy::choose(const ContextSet& candidates, Rng& rng) {
  return static_cast<std::size_t>(rng.below(candidates.rows()));
}

LinUcbReplayPolicy::LinUcbReplayPolicy(std::size_t context_dim, double beta, double lambda,
                                       std::vector<std::size_t> coordinates,
                                       std::optional<Matrix> mask)
    : coordinates_(std::move(coordinates)),
      mask_(std::move(mask)),
      params_{beta},
      state_(coordinates_.empty() ? context_dim : coordinates_.size(), lambda) {
  for (std::size_t c : coordinates_) {
    if (c >= context_dim) throw DimensionError("LinUcbReplayPolicy: coordinate out of range");
  }
  if (mask_ && (mask_->rows() != state_.dim() || !mask_->is_square())) {
    throw DimensionError("LinUcbReplayPolicy: mask dimension mismatch");
  }
}

ContextSet LinUcbReplayPolicy::view(const ContextSet& candidates) const {
  ContextSet out;
  if (coordinates_.empty()) {
    out = candidates;
  } else {
    out = ContextSet(candidates.rows(), coordinates_.size());
    for (std::size_t a = 0; a < candidates.rows(); ++a) {
      for (std::size_t i = 0; i < coordinates_.size(); ++i) out(a, i) = candidates(a, coordinates_[i]);
    }
  }
  // Row-wise Q·x is X·Qᵀ.
  if (mask_) out = matmul(out, transpose(*mask_));
  return out;
}

std::size_t LinUcbReplayPolicy::choose(const ContextSet& candidates, Rng&) {
  return select_arm(ucb_scores(state_, params_, view(candidates)));
}

void LinUcbReplayPolicy::observe(const ContextSet& candidates, std::size_t arm, double reward) {
  state_.update(view(candidates).row_vector(arm), reward);
}

std::vector<std::size_t> replay_partial_coordinates(std::size_t user_dim, std::size_t item_dim,
                                                    double ratio, Rng& rng) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("partial ratio must be in (0, 1]");
  auto count = [ratio](std::size_t n) {
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(ratio * static_cast<double>(n))), 1, n);
  };
  const auto users = random_subset(user_dim, count(user_dim), rng);
  const auto items = random_subset(item_dim, count(item_dim), rng);
  std::vector<std::size_t> coords;
  coords.reserve(users.size() * items.size());
  for (std::size_t i : users) {
    for (std::size_t j : items) coords.push_back(i * item_dim + j);
  }
  return coords;
}

ReplayMetrics replay_evaluate(ReplayPolicy& policy, const ReplayLog& log, Rng& rng) {
  if (log.entries.empty() || log.arms() == 0) throw ReplayError("replay_evaluate: empty log");
  ReplayMetrics m;
  m.log_length = log.entries.size();
  const std::size_t k = log.arms();
  ContextSet candidates(k, log.context_dim());
  for (const ReplayLogEntry& e : log.entries) {
    const auto logged = log.arm_of(e.label);
    if (!logged) continue;
    for (std::size_t a = 0; a < k; ++a) candidates.set_row(a, build_context(e.user, log.label_items[a]));
    const std::size_t choice = policy.choose(candidates, rng);
    if (choice != *logged) continue;
    ++m.credited_events;
    m.credited_reward += e.reward;
    policy.observe(candidates, choice, e.reward);
  }
  if (m.credited_events == 0) {
    throw ReplayError("replay_evaluate: no credited events (the policy never matched a logged arm)");
  }
  return m;
}

double random_baseline_ctr(const ReplayLog& log, std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw std::invalid_argument("random_baseline_ctr: no seeds");
  double total = 0.0;
  for (std::uint64_t s : seeds) {
    RandomReplayPolicy policy;
    Rng rng(s);
    total += replay_evaluate(policy, log, rng).ctr();
  }
  return total / static_cast<double>(seeds.size());
}

PlantedLog make_planted_log(const PlantedLogConfig& cfg, Rng& rng) {
  if (cfg.rows == 0 || cfg.labels == 0 || cfg.user_dim == 0 || cfg.item_dim == 0) {
    throw std::invalid_argument("make_planted_log: sizes must be positive");
  }
  if (!(cfg.user_scale >= 0.0 && cfg.user_scale <= 1.0)) {
    throw std::invalid_argument("make_planted_log: user_scale must be in [0, 1]");
  }
  if (!(cfg.max_ctr > 0.0 && cfg.max_ctr < 1.0)) {
    throw std::invalid_argument("make_planted_log: max_ctr must be in (0, 1)");
  }
  PlantedLog out;
  ReplayLog& log = out.log;
  log.user_dim = cfg.user_dim;
  log.item_dim = cfg.item_dim;

  std::vector<std::vector<double>> raw_items(cfg.labels, std::vector<double>(cfg.item_dim));
  for (auto& item : raw_items) {
    for (double& v : item) v = rng.uniform();
  }
  const auto ranges = observed_ranges(raw_items, cfg.item_dim);
  for (std::size_t k = 0; k < cfg.labels; ++k) {
    log.labels.push_back(k);
    Vector item(cfg.item_dim);
    for (std::size_t j = 0; j < cfg.item_dim; ++j) item[j] = ranges[j].scale(raw_items[k][j]);
    log.label_items.push_back(std::move(item));
  }

  // Every context entry is at most 1 + user_scale, so P(click) <= max_ctr.
  const std::size_t d = cfg.user_dim * cfg.item_dim;
  out.theta_star = Vector(d);
  double sum = 0.0;
  for (std::size_t i = 0; i < d; ++i) sum += out.theta_star[i] = rng.uniform();
  for (std::size_t i = 0; i < d; ++i) out.theta_star[i] *= cfg.max_ctr / ((1.0 + cfg.user_scale) * sum);

  log.entries.reserve(cfg.rows);
  for (std::size_t r = 0; r < cfg.rows; ++r) {
    ReplayLogEntry e;
    e.user = Vector(cfg.user_dim);
    for (std::size_t i = 0; i < cfg.user_dim; ++i) e.user[i] = cfg.user_scale * rng.uniform();
    const std::size_t arm = static_cast<std::size_t>(rng.below(cfg.labels));
    e.label = log.labels[arm];
    e.item = log.label_items[arm];
    const double p = dot(out.theta_star, build_context(e.user, e.item));
    e.reward = rng.uniform() < p ? 1 : 0;
    log.entries.push_back(std::move(e));
  }
  return out;
}

}  // namespace vfbandit
