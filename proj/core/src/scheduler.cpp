#include "fedraa/scheduler.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fedraa/error.hpp"

namespace fedraa {

void ClientProfile::validate() const {
  if (!(cmp > 0.0)) throw ConfigError("client " + std::to_string(id) + ": cmp must be > 0");
  if (com_up < 0.0 || com_down < 0.0) {
    throw ConfigError("client " + std::to_string(id) + ": communication costs must be >= 0");
  }
  if (shard_size < 1) {
    throw ConfigError("client " + std::to_string(id) + ": shard_size must be >= 1");
  }
}

double cost(const ClientProfile& client, double fragment_size, CostModel model) {
  if (!(fragment_size > 0.0)) throw ContractViolation("cost: fragment_size must be > 0");
  double c = 0.0;
  switch (model) {
    case CostModel::full:
      c = fragment_size * static_cast<double>(client.shard_size) / client.cmp +
          (client.com_up + client.com_down) * fragment_size;
      break;
    case CostModel::size_over_capability:
      c = fragment_size / client.cmp;
      break;
  }
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw NumericError("cost: non-positive or non-finite cost for client " +
                       std::to_string(client.id));
  }
  return c;
}

std::vector<std::size_t> feasible_set(const ClientProfile& client,
                                      std::span<const double> fragment_sizes,
                                      double delay_bound, CostModel model) {
  if (!(delay_bound > 0.0)) throw ContractViolation("feasible_set: K must be > 0");
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < fragment_sizes.size(); ++j) {
    if (cost(client, fragment_sizes[j], model) <= delay_bound) out.push_back(j);
  }
  return out;
}

namespace {

void record_dispatch(SchedulerState& state, std::size_t client_id, std::size_t fragment) {
  auto [it, inserted] = state.in_flight.emplace(client_id, fragment);
  (void)it;
  if (!inserted) {
    throw ContractViolation("assign: client " + std::to_string(client_id) +
                            " already has a task in flight");
  }
}

}  // namespace

std::size_t gre_raa_assign(SchedulerState& state, const ClientProfile& client,
                           std::span<const double> fragment_sizes, CostModel model) {
  const std::vector<std::size_t> feasible =
      feasible_set(client, fragment_sizes, state.delay_bound, model);
  if (feasible.empty()) {
    throw InfeasibleAssignment("gre_raa: K=" + std::to_string(state.delay_bound) +
                               " too small for client " + std::to_string(client.id));
  }
  std::uint64_t min_q = std::numeric_limits<std::uint64_t>::max();
  for (std::size_t j : feasible) min_q = std::min(min_q, state.q[j]);
  std::vector<std::size_t> ties;
  for (std::size_t j : feasible) {
    if (state.q[j] == min_q) ties.push_back(j);
  }
  const std::size_t pick = ties[state.rng.bounded(ties.size())];
  // selection invariant: feasible and least-updated at decision time
  assert(cost(client, fragment_sizes[pick], model) <= state.delay_bound);
  assert(state.q[pick] == min_q);
  record_dispatch(state, client.id, pick);
  return pick;
}

std::size_t random_assign(SchedulerState& state, const ClientProfile& client,
                          std::span<const double> fragment_sizes, CostModel model) {
  const std::vector<std::size_t> feasible =
      feasible_set(client, fragment_sizes, state.delay_bound, model);
  if (feasible.empty()) {
    throw InfeasibleAssignment("random: K=" + std::to_string(state.delay_bound) +
                               " too small for client " + std::to_string(client.id));
  }
  const std::size_t pick = feasible[state.rng.bounded(feasible.size())];
  record_dispatch(state, client.id, pick);
  return pick;
}

std::size_t mp_assign(SchedulerState& state, const ClientProfile& client,
                      std::span<const double> fragment_sizes, CostModel model) {
  (void)fragment_sizes;
  (void)model;
  std::size_t pick = 0;
  for (std::size_t j = 1; j < state.q.size(); ++j) {
    if (state.q[j] < state.q[pick]) pick = j;
  }
  record_dispatch(state, client.id, pick);
  return pick;
}

void release_client(SchedulerState& state, std::size_t client_id) {
  state.in_flight.erase(client_id);
}

OfflineAssignment offline_sorted_assignment(std::span<const ClientProfile> profiles,
                                            std::span<const double> fragment_sizes) {
  const std::size_t n = profiles.size();
  const std::size_t m = fragment_sizes.size();
  if (n == 0 || m == 0) throw ConfigError("offline assignment: empty clients or fragments");

  std::vector<std::size_t> client_order(n);
  std::iota(client_order.begin(), client_order.end(), 0);
  std::stable_sort(client_order.begin(), client_order.end(), [&](std::size_t a, std::size_t b) {
    return profiles[a].cmp > profiles[b].cmp;
  });
  std::vector<std::size_t> frag_order(m);
  std::iota(frag_order.begin(), frag_order.end(), 0);
  std::stable_sort(frag_order.begin(), frag_order.end(), [&](std::size_t a, std::size_t b) {
    return fragment_sizes[a] > fragment_sizes[b];
  });

  OfflineAssignment out;
  out.client_fragments.assign(n, {});
  if (n >= m) {
    const std::size_t block = n / m;
    for (std::size_t rank = 0; rank < n; ++rank) {
      // leftover clients (rank >= m*block) fall through to the last fragment
      const std::size_t j = std::min(rank / block, m - 1);
      out.client_fragments[client_order[rank]].push_back(frag_order[j]);
    }
  } else {
    // N < M: round-robin fragment sets, time-division style
    for (std::size_t jrank = 0; jrank < m; ++jrank) {
      out.client_fragments[client_order[jrank % n]].push_back(frag_order[jrank]);
    }
  }

  double k = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : out.client_fragments[i]) {
      k = std::max(k, cost(profiles[i], fragment_sizes[j], CostModel::size_over_capability));
    }
  }
  out.delay_bound = k;
  return out;
}

double brute_force_offline_K(std::span<const ClientProfile> profiles,
                             std::span<const double> fragment_sizes) {
  const std::size_t n = profiles.size();
  const std::size_t m = fragment_sizes.size();
  if (n == 0 || m == 0) throw ConfigError("brute force: empty clients or fragments");
  if (n > 8 || m > 4) {
    throw ContractViolation("brute force: instance too large (N <= 8, M <= 4)");
  }
  if (n < m) {
    throw ContractViolation("brute force: no covering assignment exists for N < M");
  }

  // cost table once
  std::vector<std::vector<double>> c(n, std::vector<double>(m));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      c[i][j] = cost(profiles[i], fragment_sizes[j], CostModel::size_over_capability);
    }
  }

  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> assign(n, 0);
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= m;
  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t v = code;
    std::uint64_t covered = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = static_cast<std::size_t>(v % m);
      v /= m;
      covered |= 1ULL << j;
      worst = std::max(worst, c[i][j]);
    }
    if (covered == (1ULL << m) - 1 && worst < best) best = worst;
  }
  return best;
}

}  // namespace fedraa
