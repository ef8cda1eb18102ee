#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fedraa/model.hpp"
#include "fedraa/partition.hpp"
#include "fedraa/scheduler.hpp"

namespace fedraa {

enum class StalenessMode { constant, polynomial };

// s(t - tau): 1 under `constant`, (1 + staleness)^-a under `polynomial`.
// Nonincreasing in staleness, always in (0, 1]. Throws ConfigError for a < 0.
double staleness_weight(StalenessMode mode, double a, std::uint64_t t_minus_tau);

enum class RunMode { async_mode, sync_mode };

struct TaskRecord {
  std::size_t task_id = 0;
  std::size_t client = 0;
  std::size_t fragment = 0;
  std::uint64_t dispatch_epoch = 0;  // tau: server epoch when dispatched
  double dispatch_tick = 0.0;
  double duration = 0.0;  // c_{n,j} ticks (plus jitter when enabled)
  double completion_tick = 0.0;
  std::uint64_t applied_epoch = 0;  // t: server epoch when merged
  std::uint64_t staleness = 0;      // t - tau
};

struct LogRow {
  enum class Kind { merge, checkpoint };
  Kind kind = Kind::merge;
  double tick = 0.0;
  std::uint64_t epoch = 0;
  std::size_t client = 0;
  std::size_t fragment = 0;
  std::uint64_t q_j = 0;
  std::uint64_t staleness = 0;
  double alpha_t = 0.0;
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<std::uint64_t> q_snapshot;  // checkpoint rows only
};

// Append-only run record. write_csv output is byte-identical for identical
// config + seed: header `tick,epoch,event,client,fragment,q_j,staleness,
// alpha_t,loss,accuracy`, floats at 9 significant digits, LF endings.
struct RunLog {
  std::vector<TaskRecord> tasks;
  std::vector<LogRow> rows;
  std::string config_echo;  // resolved config JSON, enough to re-run
  std::uint64_t seed = 0;
  RunMode mode = RunMode::async_mode;
  std::uint64_t i_min = 0;  // smallest / largest per-client local iteration
  std::uint64_t i_max = 0;  // counts, recorded for the delay-bound analysis

  void write_csv(std::ostream& out) const;
  std::string csv_string() const;
};

struct ServerState {
  ModelSpec model;
  ParamVector global;
  std::vector<FragmentSpec> fragments;
  std::uint64_t epoch = 0;  // t, merges applied so far; equals sum of q(j)
  double alpha = 0.5;
  StalenessMode staleness_mode = StalenessMode::polynomial;
  double staleness_a = 0.5;
};

// Merge one returned fragment: alpha_t = alpha * s(t - tau) clamped to (0,1],
// weighted-average into the global slice, bump t and q(j), log the merge at
// `merge_tick` (task completion when async, the barrier when sync). Fills
// task.applied_epoch and task.staleness.
void apply_update(ServerState& server, TaskRecord& task, const Fragment& trained,
                  double merge_tick, RunLog& log);

enum class AssignRule { gre_raa, random, mp };

// Everything a single simulation needs. Built by the experiment layer from an
// ExperimentConfig; kept plain so tests can assemble instances directly.
struct SimSetup {
  ModelSpec model;
  ParamVector initial_params;
  std::vector<FragmentSpec> fragments;
  std::vector<double> fragment_sizes;  // cost units matching cost_model
  std::vector<ClientProfile> clients;
  std::vector<std::vector<Sample>> shards;   // per client, same order
  std::vector<std::size_t> local_iters;      // I^n per client, >= 1
  std::vector<Sample> train_eval;            // union of shards
  std::vector<Sample> test_set;
  CostModel cost_model = CostModel::full;
  AssignRule rule = AssignRule::gre_raa;
  double delay_bound = 0.0;  // K, ticks
  double alpha = 0.5;
  StalenessMode staleness_mode = StalenessMode::polynomial;
  double staleness_a = 0.5;
  double gamma = 0.005;
  double rho = 0.1;
  std::size_t batch_size = 128;
  std::uint64_t t_target = 0;        // stop after this many merges
  double tick_budget = 0.0;          // 0 = unbounded
  double checkpoint_interval = 0.0;  // 0 = final checkpoint only
  std::uint64_t seed = 1;
  double jitter_sigma = 0.0;  // lognormal duration jitter; 0 = exact costs
  double idle_delay = 0.0;    // think time before re-dispatch
  std::string config_echo;
};

// Refuses setups where some client has an empty feasible set or some fragment
// no feasible client (skipped under the mp rule, which ignores the filter).
void validate_setup(const SimSetup& setup);

// Deterministic event-loop realization of the asynchronous server: dispatch
// every client at tick 0, merge on completion, re-dispatch immediately.
RunLog run_async(const SimSetup& setup);

// Synchronous-barrier ablation: rounds of simultaneous dispatch, round length
// = max task cost, merges applied at the barrier in client-id order.
RunLog run_sync(const SimSetup& setup);

// Train loss over the shard union and top-1 accuracy on the test set.
std::pair<double, double> evaluate_checkpoint(const ServerState& server,
                                              std::span<const Sample> train_eval,
                                              std::span<const Sample> test_set);

// %.9g rendering shared by every CSV/dat writer so outputs stay byte-stable.
std::string format_g9(double v);

}  // namespace fedraa
