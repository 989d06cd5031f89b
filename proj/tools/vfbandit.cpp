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

// vfbandit command-line driver.
//
// Every failure prints one line `error[E_CODE] message` to stderr and exits
// nonzero:
//   E_USAGE 2   bad flags        E_SPEC 3    invalid experiment spec
//   E_INGEST 4  unreadable log   E_REPLAY 5  replay credited nothing
//   E_VERIFY 6  a suite failed   E_IO 7      cannot write output
//   E_INTERNAL 1 anything else

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vfbandit/experiment.hpp"
#include "vfbandit/o3m.hpp"
#include "vfbandit/verify.hpp"
#include "vfbandit/version.hpp"

namespace fs = std::filesystem;
using namespace vfbandit;

namespace {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VerifyFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int fail(const char* code, int status, const std::string& msg) {
  std::string line = msg;
  for (char& c : line) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "error[" << code << "] " << line << '\n';
  return status;
}

fs::path prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

// Renders in memory first so a failing writer never leaves a partial file.
template <class Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ostringstream buf;
  writer(buf);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << buf.str();
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

bool is_cache_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string first;
  std::getline(in, first);
  if (!first.empty() && first.back() == '\r') first.pop_back();
  return first == kReplayCacheMagic;
}

struct Options {
  std::string spec;
  std::optional<std::string> out;
  std::size_t threads = 1;
  bool coupled_ts = false;
  bool dump_masks = false;
  std::string log;
  // ingest
  std::string input;
  IngestConfig ingest;
  // cost-model
  CostGrid grid;
  // verify
  VerifyOptions verify;
};

fs::path output_dir_for(const Options& o, const ExperimentSpec& spec) {
  if (!o.out && spec.output_dir) return prepare_dir(*spec.output_dir);
  return prepare_dir(default_output_dir(o.out));
}

int cmd_run_synthetic(const Options& o) {
  const ExperimentSpec spec = load_spec(o.spec);
  if (spec.kind != ExperimentKind::kSynthetic) throw SpecError(o.spec, 0, "run-synthetic needs kind: synthetic");
  const auto runs = run_synthetic(spec, {o.threads, o.coupled_ts});
  const fs::path dir = output_dir_for(o, spec);
  write_file(dir / "results.csv", [&](std::ostream& s) { write_results_csv(s, spec, runs); });
  write_file(dir / "summary.csv", [&](std::ostream& s) { write_summary_csv(s, summarize(spec, runs)); });
  write_file(dir / "norm_diff.csv", [&](std::ostream& s) { write_norm_diff_csv(s, spec, runs); });
  write_file(dir / "manifest.json", [&](std::ostream& s) { write_synthetic_manifest(s, spec, runs); });
  if (o.dump_masks) {
    const fs::path masks = prepare_dir(dir / "masks");
    for (const SyntheticRun& run : runs) {
      if (!run.result.mask) continue;
      const DimPartition part(spec.synthetic_cells[run.cell].config.partition);
      for (const MaskShard& shard : partition_mask(*run.result.mask, part)) {
        const std::string name = spec.cell_name(run.cell) + "_rep" + std::to_string(run.repetition) + "_shard" +
                                 std::to_string(shard.owner) + ".vfbm";
        write_file(masks / name, [&](std::ostream& s) { write_matrix_binary(s, shard.block); });
      }
    }
  }
  for (std::size_t c = 0; c < spec.cell_count(); ++c) {
    double total = 0.0;
    std::size_t n = 0;
    for (const SyntheticRun& run : runs) {
      if (run.cell != c) continue;
      total += run.result.cumulative_regret();
      ++n;
    }
    std::printf("%-24s mean cumulative regret %.6g over %zu seeds\n", spec.cell_name(c).c_str(), total / n, n);
  }
  std::printf("wrote %s\n", dir.string().c_str());
  return 0;
}

int cmd_run_replay(const Options& o) {
  ExperimentSpec spec = load_spec(o.spec);
  if (spec.kind != ExperimentKind::kReplay) throw SpecError(o.spec, 0, "run-replay needs kind: replay");
  if (!o.log.empty()) {
    spec.log.path = o.log;
    spec.log.kind = is_cache_file(o.log) ? ReplayLogSource::Kind::kCache : ReplayLogSource::Kind::kRaw;
  }
  const auto runs = run_replay(spec, {o.threads, false});
  const fs::path dir = output_dir_for(o, spec);
  write_file(dir / "replay.csv", [&](std::ostream& s) { write_replay_csv(s, spec, runs); });
  write_file(dir / "replay_summary.csv", [&](std::ostream& s) { write_replay_summary_csv(s, spec, runs); });
  write_file(dir / "manifest.json", [&](std::ostream& s) { write_replay_manifest(s, spec, runs); });
  const auto rel = mean_relative_ctr(spec, runs);
  for (std::size_t c = 0; c < rel.size(); ++c) {
    std::printf("%-24s relative CTR %.6g\n", spec.cell_name(c).c_str(), rel[c]);
  }
  std::printf("wrote %s\n", dir.string().c_str());
  return 0;
}

int cmd_ingest(const Options& o) {
  std::ifstream in(o.input, std::ios::binary);
  if (!in) throw IngestError("cannot open raw log '" + o.input + "'");
  const IngestResult res = ingest_log(in, o.ingest);
  fs::path target = o.out ? fs::path(*o.out) : default_output_dir(std::nullopt) / "replay_cache.csv";
  if (target.has_parent_path()) prepare_dir(target.parent_path());
  write_file(target, [&](std::ostream& s) { write_replay_cache(s, res.log); });
  std::printf("rows_read %zu malformed %zu retained %zu distinct_labels %zu arms %zu\n", res.stats.rows_read,
              res.stats.malformed, res.stats.retained, res.stats.distinct_labels, res.log.arms());
  std::printf("wrote %s\n", target.string().c_str());
  return 0;
}

int cmd_cost_model(const Options& o) {
  const fs::path dir = prepare_dir(default_output_dir(o.out));
  write_file(dir / "cost.csv", [&](std::ostream& s) { write_cost_csv(s, o.grid); });
  std::printf("unit-coefficient upper-bound cost model\nwrote %s\n", (dir / "cost.csv").string().c_str());
  return 0;
}

int cmd_verify(const Options& o) {
  const auto results = run_verify(o.verify);
  std::size_t failed = 0;
  for (const SuiteResult& r : results) {
    std::printf("[%s] %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    if (!r.passed) ++failed;
  }
  std::fflush(stdout);
  if (failed) throw VerifyFailed(std::to_string(failed) + " verify suite(s) failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vertical-federated linear contextual bandit simulator"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options o;

  auto add_out = [&](CLI::App* sub, const char* what) {
    sub->add_option("--out", o.out, std::string(what) + " (default: $VFBANDIT_OUT, then ./vfbandit-out)");
  };

  auto* synth = app.add_subcommand("run-synthetic", "Run a synthetic experiment spec");
  synth->add_option("--spec", o.spec, "Experiment spec (YAML or JSON)")->required();
  add_out(synth, "Output directory");
  synth->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  synth->add_flag("--coupled-ts", o.coupled_ts, "Couple VFTS draws to the centralized factor (test mode)");
  synth->add_flag("--dump-masks", o.dump_masks, "Write each run's mask shards in binary matrix format");

  auto* replay = app.add_subcommand("run-replay", "Run a replay (offline evaluation) spec");
  replay->add_option("--spec", o.spec, "Experiment spec (YAML or JSON)")->required();
  replay->add_option("--log", o.log, "Replay cache or raw tab-separated log; overrides the spec");
  add_out(replay, "Output directory");
  replay->add_option("--threads", o.threads, "Worker threads (0 = all cores)");

  auto* ingest = app.add_subcommand("ingest", "Convert a raw tab-separated log into a replay cache");
  ingest->add_option("--input", o.input, "Raw log: response, 13 integer and 26 categorical columns")->required();
  ingest->add_option("--out", o.out, "Cache file to write");
  ingest->add_option("--n-hash-values", o.ingest.n_hash_values, "Hash values per row");
  ingest->add_option("--hash-buckets", o.ingest.hash_buckets, "Buckets per hash value");
  ingest->add_option("--top-labels", o.ingest.top_labels, "Most frequent labels kept as arms");
  ingest->add_option("--hash-seed", o.ingest.hash_seed, "Hash seed");
  ingest->add_option("--user-scaling", o.ingest.user_scaling, "Per-user-column factors (13 values)")
      ->delimiter(',');

  auto* cost = app.add_subcommand("cost-model", "Emit the analytical cost table");
  cost->add_option_function<std::vector<std::string>>(
         "--alg",
         [&](const std::vector<std::string>& names) {
           o.grid.algorithms.clear();
           for (const std::string& n : names) {
             const auto alg = parse_cost_algorithm(n);
             if (!alg) throw CLI::ValidationError("--alg", "unknown algorithm '" + n + "'");
             o.grid.algorithms.push_back(*alg);
           }
         },
         "Algorithms (VFUCB, VFTS, LinUCB, LinTS)")
      ->delimiter(',');
  cost->add_option("--T", o.grid.horizons, "Horizons")->delimiter(',');
  cost->add_option("--K", o.grid.arms, "Arm counts")->delimiter(',');
  cost->add_option("--M", o.grid.participants, "Participant counts")->delimiter(',');
  cost->add_option("--d", o.grid.dims, "Context dimensions")->delimiter(',');
  add_out(cost, "Output directory");

  auto* verify = app.add_subcommand("verify", "Run the built-in invariant suites");
  verify->add_option("--seeds", o.verify.witness_seeds, "Privacy witnesses to check");
  verify->add_option("--seed", o.verify.base_seed, "Base seed");
  verify->add_option("--suite", o.verify.suites, "Run only these suites");
  verify->add_flag("--inject-fault", o.verify.inject_fault, "Corrupt one mask entry (the losslessness suite must fail)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("E_USAGE", 2, e.what());
  }

  try {
    if (synth->parsed()) return cmd_run_synthetic(o);
    if (replay->parsed()) return cmd_run_replay(o);
    if (ingest->parsed()) return cmd_ingest(o);
    if (cost->parsed()) return cmd_cost_model(o);
    if (verify->parsed()) return cmd_verify(o);
  } catch (const SpecError& e) {
    return fail("E_SPEC", 3, e.what());
  } catch (const IngestError& e) {
    return fail("E_INGEST", 4, e.what());
  } catch (const ReplayError& e) {
    return fail("E_REPLAY", 5,
                std::string(e.what()) + "; replay needs the policy to choose the logged arm at least once");
  } catch (const VerifyFailed& e) {
    return fail("E_VERIFY", 6, e.what());
  } catch (const IoError& e) {
    return fail("E_IO", 7, e.what());
  } catch (const std::invalid_argument& e) {
    return fail("E_USAGE", 2, e.what());
  } catch (const std::exception& e) {
    return fail("E_INTERNAL", 1, e.what());
  }
  return fail("E_USAGE", 2, "no subcommand");
}
