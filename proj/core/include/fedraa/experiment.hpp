#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedraa/config.hpp"
#include "fedraa/sim.hpp"

namespace fedraa {

struct RunResult {
  RunLog log;
  double final_loss = 0.0;
  double final_accuracy = 0.0;
  double ticks_to_target = -1.0;  // first checkpoint tick reaching target_accuracy
  double total_ticks = 0.0;
  std::uint64_t merges = 0;
  std::vector<std::uint64_t> fragment_updates;  // q(j) at end
  std::uint64_t shard_hash = 0;  // FNV-1a over the sharded training data
};

// Builds the SimSetup for a validated config (dataset, shards, partition,
// clients, K resolution) and runs it.
SimSetup build_setup(const ExperimentConfig& cfg);
RunResult run_instance(const ExperimentConfig& cfg);

// Runs and writes runlog.csv, summary.csv, curves.dat, config.json into
// out_dir (created if missing).
RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

struct SweepCell {
  std::string key;
  double value = 0.0;
  RunResult result;
};

struct GridSpec {
  std::string key;  // "beta" | "M"
  double start = 0.0, stop = 0.0, step = 0.0;
};

// Parses "beta=0.1:0.9:0.2" style grid arguments.
GridSpec parse_grid(const std::string& text);

// One run per grid cell on a shared base config; emits one summary.csv row
// per cell plus per-cell runlog/curves under out_dir/cell_<k>/.
std::vector<SweepCell> run_sweep(const ExperimentConfig& base, const GridSpec& grid,
                                 const std::string& out_dir);

struct AblationRow {
  std::string mode;
  double final_accuracy = 0.0;
  double final_loss = 0.0;
  double total_ticks = 0.0;
  double ticks_to_target = -1.0;
  std::uint64_t merges = 0;
  std::uint64_t shard_hash = 0;
};

// Runs gre_raa / random / mp / sync on identical seeds and data; verifies all
// four saw identical shards (hash) before reporting.
std::vector<AblationRow> run_ablation_suite(const ExperimentConfig& base,
                                            const std::string& out_dir);

struct TheoremTrial {
  std::size_t n = 0, m = 0;
  double k_sorted = 0.0;
  double k_brute = 0.0;
  double gre_max_duration = 0.0;
  bool sorted_equals_brute = false;
  bool durations_within_bound = false;
};

struct TheoremReport {
  std::vector<TheoremTrial> trials;
  std::size_t equal_count = 0;
  std::size_t bound_ok_count = 0;
};

// Random delay-bound instances comparing the sorted offline strategy, the
// exhaustive oracle, and the online rule's realized max task duration.
TheoremReport verify_theorem2(std::size_t n, std::size_t m, std::size_t trials,
                              std::uint64_t seed);

// Scheduling-only simulation of the greedy rule (no learning): dispatches
// num_tasks tasks and reports the largest task duration seen.
double gre_raa_max_duration(std::span<const ClientProfile> profiles,
                            std::span<const double> sizes, double delay_bound,
                            std::size_t num_tasks, std::uint64_t seed);

std::uint64_t fnv1a_hash_shards(const std::vector<std::vector<Sample>>& shards);

void write_curves_dat(const std::string& path, const RunLog& log);

}  // namespace fedraa
