#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "fedraa/rng.hpp"

namespace fedraa {

struct ClientProfile {
  std::size_t id = 0;
  double cmp = 1.0;          // compute capability, work units per tick, > 0
  double com_up = 0.0;       // upload ticks per fragment-size unit
  double com_down = 0.0;     // download ticks per fragment-size unit
  std::size_t shard_size = 1;

  void validate() const;  // throws ConfigError
};

// `full` is the c_{i,j} formula with shard size and communication terms;
// `size_over_capability` is the bare size/capability ratio used by the offline
// delay-bound computation. The two are not reconciled upstream, so both ship.
enum class CostModel { full, size_over_capability };

// Task cost in ticks. fragment_size is an owned-parameter count under `full`
// and a partition ratio under `size_over_capability`.
double cost(const ClientProfile& client, double fragment_size, CostModel model);

// Fragment ids whose cost is <= delay_bound for this client.
std::vector<std::size_t> feasible_set(const ClientProfile& client,
                                      std::span<const double> fragment_sizes,
                                      double delay_bound, CostModel model);

struct SchedulerState {
  std::vector<std::uint64_t> q;              // per-fragment merge counts
  std::map<std::size_t, std::size_t> in_flight;  // client id -> fragment id
  double delay_bound = 0.0;                  // K, ticks
  Rng rng;

  SchedulerState(std::size_t num_fragments, double k, std::uint64_t seed)
      : q(num_fragments, 0), delay_bound(k), rng(seed) {}
};

// Greedy rule: among fragments with cost <= K, pick one with minimal q(j),
// ties uniformly at random. Records the pick in in_flight. Throws
// InfeasibleAssignment when the feasible set is empty.
std::size_t gre_raa_assign(SchedulerState& state, const ClientProfile& client,
                           std::span<const double> fragment_sizes, CostModel model);

// Ablation: uniform over the feasible set (same K filter).
std::size_t random_assign(SchedulerState& state, const ClientProfile& client,
                          std::span<const double> fragment_sizes, CostModel model);

// Ablation: global argmin of q over all fragments, no K filter, ties to the
// lowest index. Never fails.
std::size_t mp_assign(SchedulerState& state, const ClientProfile& client,
                      std::span<const double> fragment_sizes, CostModel model);

// Marks a dispatched task finished so the client can be assigned again.
void release_client(SchedulerState& state, std::size_t client_id);

struct OfflineAssignment {
  // client_fragments[i] = fragment ids assigned to profiles[i]. Exactly one
  // per client when N >= M; a round-robin set when N < M.
  std::vector<std::vector<std::size_t>> client_fragments;
  double delay_bound = 0.0;  // K over all assigned pairs, size_over_capability mode
};

// Sorted-block offline strategy: clients ranked by capability, fragments by
// size, fragment j takes the j-th block of floor(N/M) clients; leftover
// clients join the last block.
OfflineAssignment offline_sorted_assignment(std::span<const ClientProfile> profiles,
                                            std::span<const double> fragment_sizes);

// Exhaustive oracle: minimum over all client->fragment maps covering every
// fragment of the maximum pair cost (size_over_capability mode). Guarded to
// N <= 8, M <= 4.
double brute_force_offline_K(std::span<const ClientProfile> profiles,
                             std::span<const double> fragment_sizes);

}  // namespace fedraa
