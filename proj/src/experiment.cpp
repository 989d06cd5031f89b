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

#include "vfbandit/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string_view>
#include <thread>

#include "json.hpp"
#include "vfbandit/csv.hpp"
#include "vfbandit/version.hpp"

namespace vfbandit {

namespace {

using json = nlohmann::ordered_json;

constexpr std::uint64_t kBaselineStream = 0xba5e;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

// --- spec parsing -------------------------------------------------------------

class SpecReader {
 public:
  SpecReader(std::string source, std::filesystem::path base_dir)
      : source_(std::move(source)), base_dir_(std::move(base_dir)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
    const int line = n.IsDefined() ? n.Mark().line : -1;
    throw SpecError(source_, line >= 0 ? static_cast<std::size_t>(line) + 1 : 0, msg);
  }
  [[noreturn]] void fail(std::size_t line, const std::string& msg) const {
    throw SpecError(source_, line, msg);
  }

  static std::size_t line_of(const YAML::Node& n) {
    return n.IsDefined() && n.Mark().line >= 0 ? static_cast<std::size_t>(n.Mark().line) + 1 : 0;
  }

  void require_map(const YAML::Node& n, const std::string& what) const {
    if (!n.IsMap()) fail(n, what + " must be a mapping");
  }

  void check_keys(const YAML::Node& map, const std::set<std::string>& allowed,
                  const std::string& where) const {
    for (const auto& kv : map) {
      const std::string key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + where);
    }
  }

  std::string str(const YAML::Node& n, const std::string& key) const {
    if (!n.IsScalar()) fail(n, "'" + key + "' must be a scalar");
    return n.Scalar();
  }

  double real(const YAML::Node& n, const std::string& key) const {
    const std::string s = str(n, key);
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    fail(n, "'" + key + "' must be a finite number, got '" + s + "'");
  }

  std::uint64_t count(const YAML::Node& n, const std::string& key) const {
    const std::string s = str(n, key);
    if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos) {
      try {
        return std::stoull(s);
      } catch (const std::exception&) {
      }
    }
    fail(n, "'" + key + "' must be a non-negative integer, got '" + s + "'");
  }

  bool boolean(const YAML::Node& n, const std::string& key) const {
    const std::string s = lower(str(n, key));
    if (s == "true" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "no" || s == "off") return false;
    fail(n, "'" + key + "' must be true or false, got '" + s + "'");
  }

  std::vector<std::uint64_t> counts(const YAML::Node& n, const std::string& key) const {
    if (!n.IsSequence()) fail(n, "'" + key + "' must be a list");
    std::vector<std::uint64_t> out;
    for (const auto& item : n) out.push_back(count(item, key));
    return out;
  }

  std::filesystem::path path(const YAML::Node& n, const std::string& key) const {
    std::filesystem::path p = str(n, key);
    if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
    return p;
  }

 private:
  std::string source_;
  std::filesystem::path base_dir_;
};

/// RunConfig fields settable from `defaults` and from each cell, plus the
/// participant count used when no explicit partition is given.
struct CellFields {
  RunConfig config;
  std::optional<std::size_t> participants;
  bool partition_set = false;
};

const std::set<std::string> kSyntheticKeys = {
    "algorithm",      "horizon",        "arms",         "dim",
    "participants",   "partition",      "lambda",       "beta",
    "v",              "partial_ratio",  "partial_selection", "context_sigma2",
    "theta_sigma2",   "noise_sigma2",   "mask_generator", "mask_generator_participant",
    "inverse_mode",   "coupled_ts"};

void apply_synthetic(const SpecReader& r, const YAML::Node& map, CellFields& f) {
  RunConfig& c = f.config;
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    const YAML::Node& v = kv.second;
    if (key == "name") continue;
    if (!kSyntheticKeys.count(key)) r.fail(kv.first, "unknown key '" + key + "' in synthetic cell");
    if (key == "algorithm") {
      auto alg = parse_algorithm(r.str(v, key));
      if (!alg) r.fail(v, "unknown algorithm '" + v.Scalar() + "'");
      c.algorithm = *alg;
    } else if (key == "horizon") {
      c.horizon = r.count(v, key);
    } else if (key == "arms") {
      c.arms = r.count(v, key);
    } else if (key == "dim") {
      c.dim = r.count(v, key);
    } else if (key == "participants") {
      f.participants = r.count(v, key);
    } else if (key == "partition") {
      const auto dims = r.counts(v, key);
      c.partition.assign(dims.begin(), dims.end());
      f.partition_set = true;
    } else if (key == "lambda") {
      c.lambda = r.real(v, key);
    } else if (key == "beta") {
      c.beta = r.real(v, key);
    } else if (key == "v") {
      c.v = r.real(v, key);
    } else if (key == "partial_ratio") {
      c.partial_ratio = r.real(v, key);
    } else if (key == "partial_selection") {
      const std::string s = lower(r.str(v, key));
      if (s == "prefix") {
        c.partial_selection = PartialSelection::kPrefix;
      } else if (s == "random") {
        c.partial_selection = PartialSelection::kRandom;
      } else {
        r.fail(v, "partial_selection must be 'prefix' or 'random'");
      }
    } else if (key == "context_sigma2") {
      c.context_sigma2 = r.real(v, key);
    } else if (key == "theta_sigma2") {
      c.theta_sigma2 = r.real(v, key);
    } else if (key == "noise_sigma2") {
      c.noise_sigma2 = r.real(v, key);
    } else if (key == "mask_generator") {
      const std::string s = lower(r.str(v, key));
      if (s == "third_party") {
        c.mask_generator = MaskGeneratorMode::kThirdParty;
      } else if (s == "participant") {
        c.mask_generator = MaskGeneratorMode::kParticipant;
      } else {
        r.fail(v, "mask_generator must be 'third_party' or 'participant'");
      }
    } else if (key == "mask_generator_participant") {
      c.mask_generator_participant = r.count(v, key);
    } else if (key == "inverse_mode") {
      const std::string s = lower(r.str(v, key));
      if (s == "cholesky") {
        c.inverse_mode = InverseMode::kCholesky;
      } else if (s == "sherman_morrison") {
        c.inverse_mode = InverseMode::kShermanMorrison;
      } else {
        r.fail(v, "inverse_mode must be 'cholesky' or 'sherman_morrison'");
      }
    } else if (key == "coupled_ts") {
      c.coupled_ts = r.boolean(v, key);
    }
  }
}

std::string default_cell_name(const RunConfig& c) {
  std::string name(to_string(c.algorithm));
  if (c.algorithm == Algorithm::kPartialLinUCB || c.algorithm == Algorithm::kPartialLinTS) {
    name += "-" + format_double(c.partial_ratio);
  }
  return name;
}

void parse_synthetic_cells(const SpecReader& r, const YAML::Node& root, ExperimentSpec& spec) {
  CellFields defaults;
  if (const YAML::Node d = root["defaults"]) {
    r.require_map(d, "'defaults'");
    if (d["name"]) r.fail(d["name"], "'defaults' cannot set a cell name");
    apply_synthetic(r, d, defaults);
  }
  const YAML::Node cells = root["cells"];
  if (!cells) r.fail(root, "missing 'cells'");
  if (!cells.IsSequence() || cells.size() == 0) r.fail(cells, "'cells' must be a nonempty list");
  std::set<std::string> names;
  for (const auto& node : cells) {
    r.require_map(node, "each cell");
    CellFields f = defaults;
    apply_synthetic(r, node, f);
    RunConfig& c = f.config;
    if (!f.partition_set) {
      const std::size_t m = f.participants.value_or(5);
      if (m == 0 || m > c.dim) {
        r.fail(node, "cannot split d = " + std::to_string(c.dim) + " among " + std::to_string(m) +
                         " participants");
      }
      c.partition = DimPartition::even(c.dim, m).dims();
    } else if (f.participants && *f.participants != c.partition.size()) {
      r.fail(node, "'participants' disagrees with the length of 'partition'");
    }
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      r.fail(node, e.what());
    }
    SyntheticCell cell;
    cell.name = node["name"] ? r.str(node["name"], "name") : default_cell_name(c);
    if (!names.insert(cell.name).second) r.fail(node, "duplicate cell name '" + cell.name + "'");
    cell.config = c;
    spec.synthetic_cells.push_back(std::move(cell));
  }
}

void parse_ingest(const SpecReader& r, const YAML::Node& n, IngestConfig& cfg) {
  r.require_map(n, "'ingest'");
  r.check_keys(n, {"n_hash_values", "hash_buckets", "top_labels", "hash_seed", "user_scaling"},
               "'ingest'");
  if (n["n_hash_values"]) cfg.n_hash_values = r.count(n["n_hash_values"], "n_hash_values");
  if (n["hash_buckets"]) cfg.hash_buckets = r.count(n["hash_buckets"], "hash_buckets");
  if (n["top_labels"]) cfg.top_labels = r.count(n["top_labels"], "top_labels");
  if (n["hash_seed"]) cfg.hash_seed = r.count(n["hash_seed"], "hash_seed");
  if (const YAML::Node s = n["user_scaling"]) {
    if (!s.IsSequence()) r.fail(s, "'user_scaling' must be a list");
    cfg.user_scaling.clear();
    for (const auto& v : s) cfg.user_scaling.push_back(r.real(v, "user_scaling"));
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    r.fail(n, e.what());
  }
}

void parse_log_source(const SpecReader& r, const YAML::Node& n, ReplayLogSource& src) {
  r.require_map(n, "'log'");
  r.check_keys(n, {"planted", "cache", "raw", "ingest"}, "'log'");
  const int sources = (n["planted"] ? 1 : 0) + (n["cache"] ? 1 : 0) + (n["raw"] ? 1 : 0);
  if (sources != 1) r.fail(n, "'log' needs exactly one of 'planted', 'cache', 'raw'");
  if (const YAML::Node p = n["planted"]) {
    src.kind = ReplayLogSource::Kind::kPlanted;
    if (!p.IsNull()) {
      r.require_map(p, "'planted'");
      r.check_keys(p, {"rows", "labels", "user_dim", "item_dim", "max_ctr", "user_scale"}, "'planted'");
      PlantedLogConfig& c = src.planted;
      if (p["rows"]) c.rows = r.count(p["rows"], "rows");
      if (p["labels"]) c.labels = r.count(p["labels"], "labels");
      if (p["user_dim"]) c.user_dim = r.count(p["user_dim"], "user_dim");
      if (p["item_dim"]) c.item_dim = r.count(p["item_dim"], "item_dim");
      if (p["max_ctr"]) c.max_ctr = r.real(p["max_ctr"], "max_ctr");
      if (p["user_scale"]) c.user_scale = r.real(p["user_scale"], "user_scale");
      if (c.rows == 0 || c.labels == 0 || c.user_dim == 0 || c.item_dim == 0) {
        r.fail(p, "planted log sizes must be positive");
      }
      if (!(c.max_ctr > 0.0 && c.max_ctr < 1.0)) r.fail(p, "'max_ctr' must be in (0, 1)");
      if (!(c.user_scale >= 0.0 && c.user_scale <= 1.0)) r.fail(p, "'user_scale' must be in [0, 1]");
    }
  } else if (const YAML::Node c = n["cache"]) {
    src.kind = ReplayLogSource::Kind::kCache;
    src.path = r.path(c, "cache");
  } else {
    src.kind = ReplayLogSource::Kind::kRaw;
    src.path = r.path(n["raw"], "raw");
  }
  if (const YAML::Node ing = n["ingest"]) {
    if (src.kind != ReplayLogSource::Kind::kRaw) r.fail(ing, "'ingest' applies to raw logs only");
    parse_ingest(r, ing, src.ingest);
  }
}

void parse_replay_cells(const SpecReader& r, const YAML::Node& root, ExperimentSpec& spec) {
  if (!root["log"]) r.fail(root, "replay spec needs a 'log' section");
  parse_log_source(r, root["log"], spec.log);
  if (const YAML::Node b = root["baseline_seeds"]) {
    spec.baseline_seeds = r.count(b, "baseline_seeds");
    if (spec.baseline_seeds == 0) r.fail(b, "'baseline_seeds' must be >= 1");
  }
  ReplayCell defaults;
  const std::set<std::string> keys = {"name", "policy", "beta", "lambda", "partial_ratio"};
  auto apply = [&](const YAML::Node& map, ReplayCell& cell) {
    r.check_keys(map, keys, "replay cell");
    if (const YAML::Node p = map["policy"]) {
      const std::string s = lower(r.str(p, "policy"));
      if (s == "random") {
        cell.policy = ReplayPolicyKind::kRandom;
      } else if (s == "linucb") {
        cell.policy = ReplayPolicyKind::kLinUCB;
      } else if (s == "vfucb") {
        cell.policy = ReplayPolicyKind::kVFUCB;
      } else {
        r.fail(p, "policy must be 'random', 'LinUCB' or 'VFUCB'");
      }
    }
    if (map["beta"]) cell.beta = r.real(map["beta"], "beta");
    if (map["lambda"]) cell.lambda = r.real(map["lambda"], "lambda");
    if (map["partial_ratio"]) cell.partial_ratio = r.real(map["partial_ratio"], "partial_ratio");
  };
  if (const YAML::Node d = root["defaults"]) {
    r.require_map(d, "'defaults'");
    if (d["name"]) r.fail(d["name"], "'defaults' cannot set a cell name");
    apply(d, defaults);
  }
  const YAML::Node cells = root["cells"];
  if (!cells) r.fail(root, "missing 'cells'");
  if (!cells.IsSequence() || cells.size() == 0) r.fail(cells, "'cells' must be a nonempty list");
  std::set<std::string> names;
  for (const auto& node : cells) {
    r.require_map(node, "each cell");
    ReplayCell cell = defaults;
    apply(node, cell);
    if (!(cell.beta >= 0.0)) r.fail(node, "beta must be >= 0");
    if (!(cell.lambda > 0.0)) r.fail(node, "lambda must be positive");
    if (!(cell.partial_ratio > 0.0 && cell.partial_ratio <= 1.0)) {
      r.fail(node, "partial_ratio must be in (0, 1]");
    }
    if (node["name"]) {
      cell.name = r.str(node["name"], "name");
    } else {
      cell.name = cell.policy == ReplayPolicyKind::kRandom ? "random"
                  : cell.policy == ReplayPolicyKind::kVFUCB ? "VFUCB"
                                                            : "LinUCB";
      if (cell.partial_ratio < 1.0) cell.name += "-" + format_double(cell.partial_ratio);
    }
    if (!names.insert(cell.name).second) r.fail(node, "duplicate cell name '" + cell.name + "'");
    spec.replay_cells.push_back(std::move(cell));
  }
}

// --- statistics -------------------------------------------------------------

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  m.min = *lo;
  m.max = *hi;
  return m;
}

std::pair<double, double> band(const Moments& m, Aggregation agg) {
  if (agg == Aggregation::kMinMax) return {m.min, m.max};
  return {m.mean - m.sd, m.mean + m.sd};
}

std::string_view to_string(Aggregation agg) { return agg == Aggregation::kMinMax ? "minmax" : "sd"; }

std::string_view to_string(ReplayPolicyKind p) {
  switch (p) {
    case ReplayPolicyKind::kRandom: return "random";
    case ReplayPolicyKind::kLinUCB: return "LinUCB";
    case ReplayPolicyKind::kVFUCB: return "VFUCB";
  }
  return "unknown";
}

json config_json(const RunConfig& c) {
  json j;
  j["algorithm"] = std::string(to_string(c.algorithm));
  j["horizon"] = c.horizon;
  j["arms"] = c.arms;
  j["dim"] = c.dim;
  j["partition"] = c.partition;
  j["lambda"] = c.lambda;
  j["beta"] = c.beta;
  j["v"] = c.v;
  j["partial_ratio"] = c.partial_ratio;
  j["partial_selection"] = c.partial_selection == PartialSelection::kPrefix ? "prefix" : "random";
  j["context_sigma2"] = c.context_sigma2;
  j["theta_sigma2"] = c.theta_sigma2;
  j["noise_sigma2"] = c.noise_sigma2;
  j["mask_generator"] = c.mask_generator == MaskGeneratorMode::kThirdParty ? "third_party" : "participant";
  j["inverse_mode"] = c.inverse_mode == InverseMode::kCholesky ? "cholesky" : "sherman_morrison";
  j["coupled_ts"] = c.coupled_ts;
  return j;
}

json spec_header(const ExperimentSpec& spec) {
  json j;
  j["tool"] = "vfbandit";
  j["version"] = kVersion;
  j["schema_version"] = spec.schema_version;
  j["kind"] = spec.kind == ExperimentKind::kSynthetic ? "synthetic" : "replay";
  j["repetitions"] = spec.repetitions;
  j["base_seed"] = spec.base_seed;
  j["paired"] = spec.paired;
  j["aggregation"] = std::string(to_string(spec.aggregation));
  j["seed_rule"] = spec.paired ? "mix_seed(base_seed, 0, repetition)"
                               : "mix_seed(base_seed, cell_index, repetition)";
  return j;
}

bool same_setting(const RunConfig& a, const RunConfig& b) {
  return a.horizon == b.horizon && a.arms == b.arms && a.dim == b.dim && a.lambda == b.lambda &&
         a.beta == b.beta && a.v == b.v && a.context_sigma2 == b.context_sigma2 &&
         a.theta_sigma2 == b.theta_sigma2 && a.noise_sigma2 == b.noise_sigma2 &&
         a.inverse_mode == b.inverse_mode;
}

std::optional<Algorithm> central_twin(Algorithm a) {
  if (a == Algorithm::kVFUCB) return Algorithm::kLinUCB;
  if (a == Algorithm::kVFTS) return Algorithm::kLinTS;
  return std::nullopt;
}

}  // namespace

SpecError::SpecError(std::string source, std::size_t line, const std::string& what)
    : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
      source_(std::move(source)),
      line_(line),
      detail_(what) {}

std::size_t ExperimentSpec::cell_count() const {
  return kind == ExperimentKind::kSynthetic ? synthetic_cells.size() : replay_cells.size();
}

std::string ExperimentSpec::cell_name(std::size_t cell) const {
  return kind == ExperimentKind::kSynthetic ? synthetic_cells.at(cell).name : replay_cells.at(cell).name;
}

std::uint64_t ExperimentSpec::seed(std::size_t cell, std::size_t repetition) const {
  return mix_seed(base_seed, paired ? 0 : cell, repetition);
}

ExperimentSpec parse_spec(const std::string& text, const std::string& source,
                          const std::filesystem::path& base_dir) {
  SpecReader r(source, base_dir);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    r.fail(e.mark.line >= 0 ? static_cast<std::size_t>(e.mark.line) + 1 : 0, e.msg);
  }
  if (!root.IsMap()) r.fail(root.IsDefined() ? SpecReader::line_of(root) : 0, "spec must be a mapping");
  r.check_keys(root, {"schema_version", "kind", "repetitions", "base_seed", "paired", "aggregation",
                      "defaults", "cells", "log", "baseline_seeds", "output_dir"},
               "spec");

  ExperimentSpec spec;
  const YAML::Node version = root["schema_version"];
  if (!version) r.fail(root, "missing 'schema_version'");
  const std::uint64_t v = r.count(version, "schema_version");
  if (v != kSpecSchemaVersion) {
    r.fail(version, "unsupported schema_version " + std::to_string(v) + " (expected " +
                        std::to_string(kSpecSchemaVersion) + ")");
  }
  spec.schema_version = static_cast<int>(v);

  const YAML::Node kind = root["kind"];
  if (!kind) r.fail(root, "missing 'kind'");
  const std::string k = lower(r.str(kind, "kind"));
  if (k == "synthetic") {
    spec.kind = ExperimentKind::kSynthetic;
  } else if (k == "replay") {
    spec.kind = ExperimentKind::kReplay;
  } else {
    r.fail(kind, "kind must be 'synthetic' or 'replay'");
  }

  if (const YAML::Node n = root["repetitions"]) {
    spec.repetitions = r.count(n, "repetitions");
    if (spec.repetitions == 0) r.fail(n, "'repetitions' must be >= 1");
  }
  if (const YAML::Node n = root["base_seed"]) spec.base_seed = r.count(n, "base_seed");
  if (const YAML::Node n = root["paired"]) spec.paired = r.boolean(n, "paired");
  if (const YAML::Node n = root["aggregation"]) {
    const std::string s = lower(r.str(n, "aggregation"));
    if (s == "sd") {
      spec.aggregation = Aggregation::kStdDev;
    } else if (s == "minmax") {
      spec.aggregation = Aggregation::kMinMax;
    } else {
      r.fail(n, "aggregation must be 'sd' or 'minmax'");
    }
  }
  if (const YAML::Node n = root["output_dir"]) spec.output_dir = r.path(n, "output_dir");

  if (spec.kind == ExperimentKind::kSynthetic) {
    if (root["log"]) r.fail(root["log"], "'log' is only valid in replay specs");
    if (root["baseline_seeds"]) r.fail(root["baseline_seeds"], "'baseline_seeds' is only valid in replay specs");
    parse_synthetic_cells(r, root, spec);
  } else {
    parse_replay_cells(r, root, spec);
  }
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError(path.string(), 0, "cannot open spec file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str(), path.string(), path.parent_path());
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        stop = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// --- synthetic ----------------------------------------------------------------

std::vector<SyntheticRun> run_synthetic(const ExperimentSpec& spec, const ExperimentOptions& opts) {
  if (spec.kind != ExperimentKind::kSynthetic) throw std::invalid_argument("run_synthetic: not a synthetic spec");
  const std::size_t reps = spec.repetitions;
  std::vector<SyntheticRun> runs(spec.synthetic_cells.size() * reps);
  parallel_for(runs.size(), opts.threads, [&](std::size_t i) {
    SyntheticRun& run = runs[i];
    run.cell = i / reps;
    run.repetition = i % reps;
    run.seed = spec.seed(run.cell, run.repetition);
    RunConfig cfg = spec.synthetic_cells[run.cell].config;
    cfg.seed = run.seed;
    if (opts.coupled_ts && cfg.algorithm == Algorithm::kVFTS) cfg.coupled_ts = true;
    run.result = vfbandit::run(cfg);
  });
  return runs;
}

std::vector<double> metric_trace(const RunResult& result, const std::string& metric) {
  std::vector<double> out;
  out.reserve(result.records.size());
  double cum = 0.0;
  for (const RoundRecord& r : result.records) {
    cum += r.regret;
    if (metric == "cum_regret") {
      out.push_back(cum);
    } else if (metric == "inst_regret") {
      out.push_back(r.regret);
    } else if (metric == "theta_norm") {
      out.push_back(r.theta_norm);
    } else {
      throw std::invalid_argument("unknown metric '" + metric + "'");
    }
  }
  return out;
}

std::vector<SummaryRow> summarize(const ExperimentSpec& spec, const std::vector<SyntheticRun>& runs) {
  std::vector<SummaryRow> rows;
  for (std::size_t c = 0; c < spec.synthetic_cells.size(); ++c) {
    for (const char* metric : kSyntheticMetrics) {
      std::vector<std::vector<double>> traces;
      std::size_t longest = 0;
      for (const SyntheticRun& run : runs) {
        if (run.cell != c) continue;
        traces.push_back(metric_trace(run.result, metric));
        longest = std::max(longest, traces.back().size());
      }
      for (std::size_t t = 0; t < longest; ++t) {
        std::vector<double> xs;
        for (const auto& tr : traces) {
          if (t < tr.size()) xs.push_back(tr[t]);
        }
        const Moments m = moments(xs);
        const auto [lo, hi] = band(m, spec.aggregation);
        rows.push_back({spec.synthetic_cells[c].name, t + 1, metric, xs.size(), m.mean, m.sd, lo, hi});
      }
    }
  }
  return rows;
}

void write_results_csv(std::ostream& out, const ExperimentSpec& spec,
                       const std::vector<SyntheticRun>& runs) {
  out << "cell,seed,t,metric,value\n";
  for (const SyntheticRun& run : runs) {
    const std::string& name = spec.synthetic_cells.at(run.cell).name;
    std::vector<std::vector<double>> traces;
    for (const char* metric : kSyntheticMetrics) traces.push_back(metric_trace(run.result, metric));
    for (std::size_t t = 0; t < run.result.records.size(); ++t) {
      for (std::size_t m = 0; m < traces.size(); ++m) {
        out << name << ',' << run.seed << ',' << t + 1 << ',' << kSyntheticMetrics[m] << ','
            << format_double(traces[m][t]) << '\n';
      }
    }
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "cell,t,metric,n,mean,sd,lo,hi\n";
  for (const SummaryRow& r : rows) {
    out << r.cell << ',' << r.t << ',' << r.metric << ',' << r.n << ',' << format_double(r.mean) << ','
        << format_double(r.sd) << ',' << format_double(r.lo) << ',' << format_double(r.hi) << '\n';
  }
}

void write_norm_diff_csv(std::ostream& out, const ExperimentSpec& spec,
                         const std::vector<SyntheticRun>& runs) {
  out << "fed_cell,central_cell,seed,t,value\n";
  const auto& cells = spec.synthetic_cells;
  for (std::size_t f = 0; f < cells.size(); ++f) {
    const auto twin = central_twin(cells[f].config.algorithm);
    if (!twin) continue;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].config.algorithm != *twin || !same_setting(cells[f].config, cells[c].config)) continue;
      for (const SyntheticRun& fr : runs) {
        if (fr.cell != f) continue;
        for (const SyntheticRun& cr : runs) {
          if (cr.cell != c || cr.seed != fr.seed) continue;
          const std::size_t n = std::min(fr.result.records.size(), cr.result.records.size());
          for (std::size_t t = 0; t < n; ++t) {
            const double diff =
                std::abs(fr.result.records[t].theta_norm - cr.result.records[t].theta_norm);
            out << cells[f].name << ',' << cells[c].name << ',' << fr.seed << ',' << t + 1 << ','
                << format_double(diff) << '\n';
          }
        }
      }
    }
  }
}

void write_synthetic_manifest(std::ostream& out, const ExperimentSpec& spec,
                              const std::vector<SyntheticRun>& runs) {
  json j = spec_header(spec);
  j["files"] = {
      {"results.csv", "long format: cell,seed,t,metric,value (one row per cell, seed, round, metric)"},
      {"summary.csv", "seed aggregate per cell, round and metric: n, mean, sd, lo, hi"},
      {"norm_diff.csv", "|norm(theta_fed) - norm(theta_central)| per round for federated cells "
                        "and their centralized twins run on the same seed"},
      {"manifest.json", "this file"}};
  j["metrics"] = {{"cum_regret", "cumulative regret through round t"},
                  {"inst_regret", "best expected reward minus the chosen arm's expected reward at round t"},
                  {"theta_norm", "l2 norm of the bandit estimate after round t (masked estimate for "
                                 "federated cells)"}};
  j["t"] = "1-based round index";
  json cells = json::array();
  for (std::size_t c = 0; c < spec.synthetic_cells.size(); ++c) {
    json cell;
    cell["name"] = spec.synthetic_cells[c].name;
    cell["config"] = config_json(spec.synthetic_cells[c].config);
    json list = json::array();
    for (const SyntheticRun& run : runs) {
      if (run.cell != c) continue;
      json r;
      r["repetition"] = run.repetition;
      r["seed"] = run.seed;
      r["rounds"] = run.result.records.size();
      r["truncated"] = run.result.truncated;
      r["cumulative_regret"] = run.result.cumulative_regret();
      r["protocol_elements"] = run.result.ledger.protocol_elements();
      r["protocol_bytes"] = run.result.ledger.protocol_bytes();
      r["total_elements"] = run.result.ledger.total_elements();
      if (!run.result.visible_coordinates.empty()) {
        r["visible_coordinates"] = run.result.visible_coordinates.size();
      }
      list.push_back(std::move(r));
    }
    cell["runs"] = std::move(list);
    cells.push_back(std::move(cell));
  }
  j["cells"] = std::move(cells);
  out << j.dump(2) << '\n';
}

// --- replay -------------------------------------------------------------------

ReplayLog replay_log_for(const ExperimentSpec& spec, std::uint64_t seed) {
  const ReplayLogSource& src = spec.log;
  switch (src.kind) {
    case ReplayLogSource::Kind::kPlanted: {
      Rng rng = Rng(seed).fork(streams::kEnvironment);
      return make_planted_log(src.planted, rng).log;
    }
    case ReplayLogSource::Kind::kCache: {
      std::ifstream in(src.path, std::ios::binary);
      if (!in) throw IngestError("cannot open replay cache '" + src.path.string() + "'");
      return read_replay_cache(in);
    }
    case ReplayLogSource::Kind::kRaw: {
      std::ifstream in(src.path, std::ios::binary);
      if (!in) throw IngestError("cannot open raw log '" + src.path.string() + "'");
      return ingest_log(in, src.ingest).log;
    }
  }
  throw std::invalid_argument("replay_log_for: unknown log source");
}

std::vector<ReplayRun> run_replay(const ExperimentSpec& spec, const ExperimentOptions& opts,
                                  const ReplayLog* fixed_log) {
  if (spec.kind != ExperimentKind::kReplay) throw std::invalid_argument("run_replay: not a replay spec");
  const std::size_t reps = spec.repetitions;
  const std::size_t n_cells = spec.replay_cells.size();

  // One log and one random baseline per distinct seed.
  std::vector<std::uint64_t> seeds;
  for (std::size_t c = 0; c < n_cells; ++c) {
    for (std::size_t r = 0; r < reps; ++r) seeds.push_back(spec.seed(c, r));
  }
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

  std::optional<ReplayLog> shared;
  if (!fixed_log && spec.log.kind != ReplayLogSource::Kind::kPlanted) shared = replay_log_for(spec, 0);
  const ReplayLog* common = fixed_log ? fixed_log : (shared ? &*shared : nullptr);

  std::vector<std::optional<ReplayLog>> logs(seeds.size());
  std::vector<double> baselines(seeds.size());
  parallel_for(seeds.size(), opts.threads, [&](std::size_t i) {
    if (!common) logs[i] = replay_log_for(spec, seeds[i]);
    const ReplayLog& log = common ? *common : *logs[i];
    std::vector<std::uint64_t> bseeds;
    for (std::size_t b = 0; b < spec.baseline_seeds; ++b) bseeds.push_back(mix_seed(seeds[i], kBaselineStream, b));
    baselines[i] = random_baseline_ctr(log, bseeds);
  });
  auto seed_index = [&](std::uint64_t s) {
    return static_cast<std::size_t>(std::lower_bound(seeds.begin(), seeds.end(), s) - seeds.begin());
  };

  std::vector<ReplayRun> runs(n_cells * reps);
  parallel_for(runs.size(), opts.threads, [&](std::size_t i) {
    ReplayRun& run = runs[i];
    run.cell = i / reps;
    run.repetition = i % reps;
    run.seed = spec.seed(run.cell, run.repetition);
    const std::size_t si = seed_index(run.seed);
    const ReplayLog& log = common ? *common : *logs[si];
    const ReplayCell& cell = spec.replay_cells[run.cell];
    const Rng root(run.seed);
    Rng policy_rng = root.fork(streams::kPolicy);
    std::unique_ptr<ReplayPolicy> policy;
    if (cell.policy == ReplayPolicyKind::kRandom) {
      policy = std::make_unique<RandomReplayPolicy>();
    } else {
      std::vector<std::size_t> coords;
      if (cell.partial_ratio < 1.0) {
        Rng part = root.fork(streams::kPartial);
        coords = replay_partial_coordinates(log.user_dim, log.item_dim, cell.partial_ratio, part);
      }
      std::optional<Matrix> mask;
      if (cell.policy == ReplayPolicyKind::kVFUCB) {
        Rng mask_rng = root.fork(streams::kMask);
        mask = random_orthogonal(coords.empty() ? log.context_dim() : coords.size(), mask_rng);
      }
      policy = std::make_unique<LinUcbReplayPolicy>(log.context_dim(), cell.beta, cell.lambda,
                                                    std::move(coords), std::move(mask));
    }
    try {
      run.metrics = replay_evaluate(*policy, log, policy_rng);
    } catch (const ReplayError& e) {
      throw ReplayError("cell '" + cell.name + "', seed " + std::to_string(run.seed) + ": " + e.what());
    }
    run.baseline_ctr = baselines[si];
  });
  return runs;
}

std::vector<double> mean_relative_ctr(const ExperimentSpec& spec, const std::vector<ReplayRun>& runs) {
  std::vector<double> out;
  for (std::size_t c = 0; c < spec.replay_cells.size(); ++c) {
    std::vector<double> xs;
    for (const ReplayRun& r : runs) {
      if (r.cell == c) xs.push_back(r.relative_ctr());
    }
    out.push_back(moments(xs).mean);
  }
  return out;
}

void write_replay_csv(std::ostream& out, const ExperimentSpec& spec, const std::vector<ReplayRun>& runs) {
  out << "cell,seed,credited_events,credited_reward,ctr,baseline_ctr,relative_ctr\n";
  for (const ReplayRun& r : runs) {
    out << spec.replay_cells.at(r.cell).name << ',' << r.seed << ',' << r.metrics.credited_events << ','
        << format_double(r.metrics.credited_reward) << ',' << format_double(r.metrics.ctr()) << ','
        << format_double(r.baseline_ctr) << ',' << format_double(r.relative_ctr()) << '\n';
  }
}

void write_replay_summary_csv(std::ostream& out, const ExperimentSpec& spec,
                              const std::vector<ReplayRun>& runs) {
  out << "cell,metric,n,mean,sd,lo,hi\n";
  for (std::size_t c = 0; c < spec.replay_cells.size(); ++c) {
    std::vector<double> xs;
    for (const ReplayRun& r : runs) {
      if (r.cell == c) xs.push_back(r.relative_ctr());
    }
    const Moments m = moments(xs);
    const auto [lo, hi] = band(m, spec.aggregation);
    out << spec.replay_cells[c].name << ",relative_ctr," << xs.size() << ',' << format_double(m.mean) << ','
        << format_double(m.sd) << ',' << format_double(lo) << ',' << format_double(hi) << '\n';
  }
}

void write_replay_manifest(std::ostream& out, const ExperimentSpec& spec,
                           const std::vector<ReplayRun>& runs) {
  json j = spec_header(spec);
  j["files"] = {{"replay.csv", "one row per cell and seed"},
                {"replay_summary.csv", "relative CTR aggregated over seeds per cell"},
                {"manifest.json", "this file"}};
  j["metrics"] = {{"ctr", "credited reward / credited events"},
                  {"baseline_ctr", "uniform-random policy CTR on the same log, averaged over baseline_seeds"},
                  {"relative_ctr", "ctr / baseline_ctr"}};
  j["baseline_seeds"] = spec.baseline_seeds;
  json log;
  switch (spec.log.kind) {
    case ReplayLogSource::Kind::kPlanted:
      log["source"] = "planted";
      log["rows"] = spec.log.planted.rows;
      log["labels"] = spec.log.planted.labels;
      log["user_dim"] = spec.log.planted.user_dim;
      log["item_dim"] = spec.log.planted.item_dim;
      log["max_ctr"] = spec.log.planted.max_ctr;
      log["user_scale"] = spec.log.planted.user_scale;
      log["per_seed"] = true;
      break;
    case ReplayLogSource::Kind::kCache:
      log["source"] = "cache";
      log["path"] = spec.log.path.string();
      break;
    case ReplayLogSource::Kind::kRaw:
      log["source"] = "raw";
      log["path"] = spec.log.path.string();
      break;
  }
  j["log"] = std::move(log);
  json cells = json::array();
  for (std::size_t c = 0; c < spec.replay_cells.size(); ++c) {
    const ReplayCell& cell = spec.replay_cells[c];
    json jc;
    jc["name"] = cell.name;
    jc["policy"] = std::string(to_string(cell.policy));
    jc["beta"] = cell.beta;
    jc["lambda"] = cell.lambda;
    jc["partial_ratio"] = cell.partial_ratio;
    json seeds = json::array();
    for (const ReplayRun& r : runs) {
      if (r.cell == c) seeds.push_back(r.seed);
    }
    jc["seeds"] = std::move(seeds);
    cells.push_back(std::move(jc));
  }
  j["cells"] = std::move(cells);
  out << j.dump(2) << '\n';
}

// --- cost model ---------------------------------------------------------------

void write_cost_csv(std::ostream& out, const CostGrid& grid) {
  if (grid.algorithms.empty() || grid.horizons.empty() || grid.arms.empty() || grid.participants.empty() ||
      grid.dims.empty()) {
    throw std::invalid_argument("cost grid: every axis needs at least one value");
  }
  out << "alg,T,K,M,d,stage1,stage2,stage3,total_ops,total_bytes,relative_cost\n";
  for (CostAlgorithm alg : grid.algorithms) {
    for (std::uint64_t T : grid.horizons) {
      for (std::uint64_t K : grid.arms) {
        for (std::uint64_t M : grid.participants) {
          for (std::uint64_t d : grid.dims) {
            const CostParams p{T, K, M, d};
            const CostBreakdown b = compute_ops(alg, p);
            out << to_string(alg) << ',' << T << ',' << K << ',' << M << ',' << d << ',' << b.stage1 << ','
                << b.stage2 << ',' << b.stage3 << ',' << b.total_ops << ',' << b.total_bytes << ','
                << format_double(relative_cost(alg, central_counterpart(alg), p)) << '\n';
          }
        }
      }
    }
  }
}

std::filesystem::path default_output_dir(const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("VFBANDIT_OUT"); env && *env) return env;
  return "vfbandit-out";
}

}  // namespace vfbandit
