#include "fedraa/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <queue>
#include <sstream>
#include <string>

#include "fedraa/error.hpp"
#include "fedraa/local_update.hpp"
#include "fedraa/rng.hpp"

namespace fedraa {

double staleness_weight(StalenessMode mode, double a, std::uint64_t t_minus_tau) {
  switch (mode) {
    case StalenessMode::constant:
      return 1.0;
    case StalenessMode::polynomial:
      if (a < 0.0) throw ConfigError("staleness: exponent a must be >= 0");
      return std::pow(1.0 + static_cast<double>(t_minus_tau), -a);
  }
  return 1.0;
}

std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void RunLog::write_csv(std::ostream& out) const {
  out << "tick,epoch,event,client,fragment,q_j,staleness,alpha_t,loss,accuracy\n";
  for (const LogRow& r : rows) {
    if (r.kind == LogRow::Kind::merge) {
      out << format_g9(r.tick) << ',' << r.epoch << ",merge," << r.client << ','
          << r.fragment << ',' << r.q_j << ',' << r.staleness << ','
          << format_g9(r.alpha_t) << ",,\n";
    } else {
      out << format_g9(r.tick) << ',' << r.epoch << ",checkpoint,,,,,,"
          << format_g9(r.loss) << ',' << format_g9(r.accuracy) << "\n";
    }
  }
}

std::string RunLog::csv_string() const {
  std::ostringstream ss;
  write_csv(ss);
  return ss.str();
}

void apply_update(ServerState& server, TaskRecord& task, const Fragment& trained,
                  double merge_tick, RunLog& log) {
  task.applied_epoch = server.epoch;
  task.staleness = server.epoch - task.dispatch_epoch;
  const double s = staleness_weight(server.staleness_mode, server.staleness_a,
                                    task.staleness);
  const double alpha_t = std::min(1.0, server.alpha * s);
  merge_fragment(server.global, server.fragments[task.fragment], trained, alpha_t);
  server.epoch += 1;

  LogRow row;
  row.kind = LogRow::Kind::merge;
  row.tick = merge_tick;
  row.epoch = server.epoch;
  row.client = task.client;
  row.fragment = task.fragment;
  row.q_j = server.fragments[task.fragment].update_count;
  row.staleness = task.staleness;
  row.alpha_t = alpha_t;
  log.rows.push_back(row);
}

std::pair<double, double> evaluate_checkpoint(const ServerState& server,
                                              std::span<const Sample> train_eval,
                                              std::span<const Sample> test_set) {
  return {forward_loss(server.global, server.model, train_eval),
          accuracy(server.global, server.model, test_set)};
}

namespace {

constexpr std::uint64_t kSchedulerStream = 0;
constexpr std::uint64_t kJitterStream = 1;
constexpr std::uint64_t kTaskStreamBase = 100;

struct Event {
  double time = 0.0;
  std::uint64_t seq = 0;
  enum class Kind { client_idle, task_complete, checkpoint } kind = Kind::client_idle;
  std::size_t id = 0;  // client id or task id

  bool operator>(const Event& other) const {
    if (time != other.time) return time > other.time;
    return seq > other.seq;
  }
};

using EventQueue = std::priority_queue<Event, std::vector<Event>, std::greater<Event>>;

struct PendingTask {
  Fragment dispatched;
  ParamVector full_snapshot;
};

// Shared machinery for both run modes.
struct Engine {
  const SimSetup& setup;
  ServerState server;
  SchedulerState sched;
  Rng jitter_rng;
  RunLog log;
  EventQueue queue;
  std::uint64_t next_seq = 0;
  std::map<std::size_t, PendingTask> pending;
  double current_tick = 0.0;
  bool done = false;

  explicit Engine(const SimSetup& s)
      : setup(s),
        server{s.model, s.initial_params, s.fragments, 0,
               s.alpha,  s.staleness_mode, s.staleness_a},
        sched(s.fragments.size(), s.delay_bound, derive_seed(s.seed, kSchedulerStream)),
        jitter_rng(derive_seed(s.seed, kJitterStream)) {
    log.seed = s.seed;
    log.config_echo = s.config_echo;
    log.i_min = UINT64_MAX;
    for (std::size_t iters : s.local_iters) {
      log.i_min = std::min<std::uint64_t>(log.i_min, iters);
      log.i_max = std::max<std::uint64_t>(log.i_max, iters);
    }
  }

  void push(double time, Event::Kind kind, std::size_t id) {
    queue.push(Event{time, next_seq++, kind, id});
  }

  std::size_t assign(std::size_t client_idx) {
    const ClientProfile& client = setup.clients[client_idx];
    switch (setup.rule) {
      case AssignRule::gre_raa:
        return gre_raa_assign(sched, client, setup.fragment_sizes, setup.cost_model);
      case AssignRule::random:
        return random_assign(sched, client, setup.fragment_sizes, setup.cost_model);
      case AssignRule::mp:
        return mp_assign(sched, client, setup.fragment_sizes, setup.cost_model);
    }
    throw ContractViolation("assign: unknown rule");
  }

  // Creates the task record + snapshot; returns the task id.
  std::size_t dispatch(std::size_t client_idx, double tick) {
    const std::size_t fragment = assign(client_idx);
    TaskRecord task;
    task.task_id = log.tasks.size();
    task.client = setup.clients[client_idx].id;
    task.fragment = fragment;
    task.dispatch_epoch = server.epoch;
    task.dispatch_tick = tick;
    double duration =
        cost(setup.clients[client_idx], setup.fragment_sizes[fragment], setup.cost_model);
    if (setup.jitter_sigma > 0.0) {
      duration *= std::exp(setup.jitter_sigma * jitter_rng.gaussian());
    }
    task.duration = duration;
    task.completion_tick = tick + duration;
    log.tasks.push_back(task);
    pending.emplace(task.task_id,
                    PendingTask{extract_fragment(server.global, server.fragments[fragment]),
                                server.global});
    return task.task_id;
  }

  void merge(std::size_t task_id, double merge_tick) {
    TaskRecord& task = log.tasks[task_id];
    auto it = pending.find(task_id);
    if (it == pending.end()) throw ContractViolation("merge: no pending snapshot");
    const std::size_t client_idx = task.client;  // client ids are 0..N-1 positional
    LocalTrainOptions opt;
    opt.iterations = setup.local_iters[client_idx];
    opt.gamma = setup.gamma;
    opt.rho = setup.rho;
    opt.batch_size = setup.batch_size;
    opt.rng_seed = derive_seed(setup.seed, kTaskStreamBase + task_id);
    Fragment trained;
    try {
      trained = local_train(it->second.dispatched, it->second.full_snapshot, setup.model,
                            server.fragments[task.fragment], setup.shards[client_idx], opt);
      apply_update(server, task, trained, merge_tick, log);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (task " + std::to_string(task_id) +
                         ", client " + std::to_string(task.client) + ", fragment " +
                         std::to_string(task.fragment) + ")");
    }
    pending.erase(it);
    sched.q[task.fragment] = server.fragments[task.fragment].update_count;
    release_client(sched, task.client);
    check_epoch_invariant();
    // Theorem-1 precondition: Gre-RAA never runs a task longer than K.
    if (setup.rule == AssignRule::gre_raa && setup.jitter_sigma == 0.0 &&
        task.duration > setup.delay_bound) {
      throw ContractViolation("delay bound violated: duration " +
                              std::to_string(task.duration) + " > K");
    }
    if (setup.t_target > 0 && server.epoch >= setup.t_target) done = true;
  }

  void check_epoch_invariant() const {
    std::uint64_t total = 0;
    for (const FragmentSpec& f : server.fragments) total += f.update_count;
    if (total != server.epoch) {
      throw ContractViolation("epoch bookkeeping: t != sum q(j)");
    }
  }

  void checkpoint(double tick) {
    const auto [loss, acc] = evaluate_checkpoint(server, setup.train_eval, setup.test_set);
    LogRow row;
    row.kind = LogRow::Kind::checkpoint;
    row.tick = tick;
    row.epoch = server.epoch;
    row.loss = loss;
    row.accuracy = acc;
    row.q_snapshot.reserve(server.fragments.size());
    for (const FragmentSpec& f : server.fragments) row.q_snapshot.push_back(f.update_count);
    log.rows.push_back(row);
  }

  bool over_budget(double time) const {
    return setup.tick_budget > 0.0 && time > setup.tick_budget;
  }
};

}  // namespace

void validate_setup(const SimSetup& setup) {
  setup.model.validate();
  if (setup.initial_params.size() != setup.model.param_count()) {
    throw ConfigError("setup: initial parameter vector has wrong length");
  }
  if (setup.fragments.empty() || setup.fragment_sizes.size() != setup.fragments.size()) {
    throw ConfigError("setup: fragment list and size list disagree");
  }
  if (setup.clients.empty()) throw ConfigError("setup: no clients");
  if (setup.shards.size() != setup.clients.size() ||
      setup.local_iters.size() != setup.clients.size()) {
    throw ConfigError("setup: per-client lists must match client count");
  }
  for (std::size_t i = 0; i < setup.clients.size(); ++i) {
    setup.clients[i].validate();
    if (setup.clients[i].id != i) {
      throw ConfigError("setup: client ids must be positional (0..N-1)");
    }
  }
  for (std::size_t i = 0; i < setup.shards.size(); ++i) {
    if (setup.shards[i].empty()) {
      throw ConfigError("setup: client " + std::to_string(i) + " has an empty shard");
    }
    if (setup.local_iters[i] < 1) {
      throw ConfigError("setup: client " + std::to_string(i) + " needs >= 1 local iterations");
    }
  }
  if (setup.train_eval.empty()) throw ConfigError("setup: empty train evaluation set");
  if (setup.test_set.empty()) throw ConfigError("setup: empty test set");
  if (!(setup.alpha > 0.0 && setup.alpha <= 1.0)) {
    throw ConfigError("setup: alpha must be in (0,1]");
  }
  if (setup.staleness_a < 0.0) throw ConfigError("setup: staleness exponent must be >= 0");
  if (!(setup.gamma > 0.0)) throw ConfigError("setup: gamma must be > 0");
  if (setup.rho < 0.0) throw ConfigError("setup: rho must be >= 0");
  if (setup.batch_size < 1) throw ConfigError("setup: batch_size must be >= 1");
  if (setup.t_target == 0 && setup.tick_budget <= 0.0) {
    throw ConfigError("setup: need a merge target or a tick budget to terminate");
  }

  if (setup.rule != AssignRule::mp) {
    if (!(setup.delay_bound > 0.0)) throw ConfigError("setup: delay bound K must be > 0");
    std::vector<char> fragment_covered(setup.fragments.size(), 0);
    for (const ClientProfile& c : setup.clients) {
      const auto feasible =
          feasible_set(c, setup.fragment_sizes, setup.delay_bound, setup.cost_model);
      if (feasible.empty()) {
        throw InfeasibleAssignment("startup: client " + std::to_string(c.id) +
                                   " has no feasible fragment under K=" +
                                   std::to_string(setup.delay_bound));
      }
      for (std::size_t j : feasible) fragment_covered[j] = 1;
    }
    for (std::size_t j = 0; j < fragment_covered.size(); ++j) {
      if (!fragment_covered[j]) {
        throw InfeasibleAssignment("startup: fragment " + std::to_string(j) +
                                   " is feasible for no client under K=" +
                                   std::to_string(setup.delay_bound));
      }
    }
  }
}

RunLog run_async(const SimSetup& setup) {
  validate_setup(setup);
  Engine eng(setup);
  eng.log.mode = RunMode::async_mode;

  for (std::size_t n = 0; n < setup.clients.size(); ++n) {
    eng.push(0.0, Event::Kind::client_idle, n);
  }
  if (setup.checkpoint_interval > 0.0) {
    eng.push(setup.checkpoint_interval, Event::Kind::checkpoint, 1);
  }

  while (!eng.queue.empty() && !eng.done) {
    const Event ev = eng.queue.top();
    eng.queue.pop();
    if (eng.over_budget(ev.time)) {
      eng.current_tick = setup.tick_budget;
      break;
    }
    eng.current_tick = ev.time;
    switch (ev.kind) {
      case Event::Kind::client_idle: {
        if (setup.t_target > 0 && eng.server.epoch >= setup.t_target) break;
        const std::size_t task_id = eng.dispatch(ev.id, ev.time);
        eng.push(eng.log.tasks[task_id].completion_tick, Event::Kind::task_complete, task_id);
        break;
      }
      case Event::Kind::task_complete: {
        eng.merge(ev.id, ev.time);
        if (!eng.done) {
          eng.push(ev.time + setup.idle_delay, Event::Kind::client_idle,
                   eng.log.tasks[ev.id].client);
        }
        break;
      }
      case Event::Kind::checkpoint: {
        eng.checkpoint(ev.time);
        const double next = ev.time + setup.checkpoint_interval;
        if (!eng.over_budget(next)) {
          eng.push(next, Event::Kind::checkpoint, ev.id + 1);
        }
        break;
      }
    }
  }
  eng.checkpoint(eng.current_tick);
  return std::move(eng.log);
}

RunLog run_sync(const SimSetup& setup) {
  validate_setup(setup);
  Engine eng(setup);
  eng.log.mode = RunMode::sync_mode;

  if (setup.checkpoint_interval > 0.0) {
    eng.push(setup.checkpoint_interval, Event::Kind::checkpoint, 1);
  }

  double round_start = 0.0;
  while (!eng.done) {
    if (eng.over_budget(round_start)) {
      eng.current_tick = setup.tick_budget;
      break;
    }
    // dispatch everybody at the barrier start, client-id order
    std::vector<std::size_t> round_tasks;
    double barrier = round_start;
    for (std::size_t n = 0; n < setup.clients.size(); ++n) {
      const std::size_t task_id = eng.dispatch(n, round_start);
      round_tasks.push_back(task_id);
      barrier = std::max(barrier, eng.log.tasks[task_id].completion_tick);
      eng.push(eng.log.tasks[task_id].completion_tick, Event::Kind::task_complete, task_id);
    }
    if (eng.over_budget(barrier)) {
      // the round would finish past the budget; nothing merges
      eng.current_tick = setup.tick_budget;
      break;
    }

    std::size_t completions = 0;
    while (completions < round_tasks.size()) {
      const Event ev = eng.queue.top();
      eng.queue.pop();
      eng.current_tick = ev.time;
      if (ev.kind == Event::Kind::checkpoint) {
        eng.checkpoint(ev.time);
        const double next = ev.time + setup.checkpoint_interval;
        if (!eng.over_budget(next)) eng.push(next, Event::Kind::checkpoint, ev.id + 1);
        continue;
      }
      ++completions;  // completions are buffered; merges happen at the barrier
    }

    // barrier aggregation in client-id order; staleness 0 by construction
    // (dispatch_epoch is re-anchored to the aggregation point)
    for (std::size_t task_id : round_tasks) {
      TaskRecord& task = eng.log.tasks[task_id];
      task.dispatch_epoch = eng.server.epoch;
      eng.merge(task_id, barrier);
      if (eng.done) break;
    }
    eng.current_tick = barrier;
    round_start = barrier + setup.idle_delay;
  }
  eng.checkpoint(eng.current_tick);
  return std::move(eng.log);
}

}  // namespace fedraa
