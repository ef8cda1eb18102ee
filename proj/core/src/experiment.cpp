#include "fedraa/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>

#include "fedraa/data.hpp"
#include "fedraa/error.hpp"
#include "fedraa/rng.hpp"

namespace fedraa {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kTrainDataStream = 10;
constexpr std::uint64_t kTestDataStream = 11;
constexpr std::uint64_t kInitStream = 12;
constexpr std::uint64_t kShardStream = 13;

AssignRule rule_from_name(const std::string& scheduler) {
  if (scheduler == "random") return AssignRule::random;
  if (scheduler == "mp") return AssignRule::mp;
  return AssignRule::gre_raa;  // gre_raa and sync both use the greedy rule
}

// K for the configured cost model via the sorted-block structure: every client
// is within K of its offline fragment, so startup validation always passes.
double auto_delay_bound(std::span<const ClientProfile> profiles,
                        std::span<const double> sizes, CostModel model) {
  const OfflineAssignment off = offline_sorted_assignment(profiles, sizes);
  double k = 0.0;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    for (std::size_t j : off.client_fragments[i]) {
      k = std::max(k, cost(profiles[i], sizes[j], model));
    }
  }
  return k;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << contents;
  }
  fs::rename(tmp, path);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char ch : s) {
    if (ch == '"') quoted += "\"\"";
    else quoted += ch;
  }
  quoted += "\"";
  return quoted;
}

}  // namespace

std::uint64_t fnv1a_hash_shards(const std::vector<std::vector<Sample>>& shards) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& shard : shards) {
    for (const Sample& s : shard) {
      mix(s.features.data(), s.features.size() * sizeof(double));
      mix(&s.label, sizeof(s.label));
    }
  }
  return h;
}

SimSetup build_setup(const ExperimentConfig& cfg) {
  SimSetup setup;

  Dataset train, test;
  if (cfg.dataset == "synthetic") {
    train = gen_synthetic(cfg.synthetic_classes, cfg.synthetic_dim, cfg.synthetic_per_class,
                          cfg.synthetic_separation, derive_seed(cfg.seed, kTrainDataStream));
    test = gen_synthetic(cfg.synthetic_classes, cfg.synthetic_dim, cfg.synthetic_test_per_class,
                         cfg.synthetic_separation, derive_seed(cfg.seed, kTestDataStream));
  } else {
    train = read_idx(cfg.train_images, cfg.train_labels, cfg.train_limit);
    test = read_idx(cfg.test_images, cfg.test_labels, cfg.test_limit);
    if (train.meta.input_dim != test.meta.input_dim) {
      throw ConfigError("idx train/test input dimensions disagree");
    }
  }

  setup.model.input_dim = train.meta.input_dim;
  setup.model.hidden_dim = cfg.hidden_dim;
  setup.model.output_dim = std::max(train.meta.class_count, test.meta.class_count);
  setup.model.activation =
      cfg.activation == "identity" ? Activation::identity : Activation::relu;
  setup.initial_params = init_params(setup.model, derive_seed(cfg.seed, kInitStream));

  setup.fragments = partition_model(setup.model, cfg.num_fragments, cfg.ratios);
  const bool full_cost = cfg.cost_model == "full";
  setup.cost_model = full_cost ? CostModel::full : CostModel::size_over_capability;
  setup.fragment_sizes.reserve(setup.fragments.size());
  for (std::size_t j = 0; j < setup.fragments.size(); ++j) {
    setup.fragment_sizes.push_back(
        full_cost ? static_cast<double>(setup.fragments[j].param_indices.size())
                  : cfg.ratios[j]);
  }

  setup.shards = shard_iid(train, cfg.num_clients, derive_seed(cfg.seed, kShardStream));
  const std::vector<double> caps =
      cfg.capabilities.empty() ? resolve_capabilities(cfg) : cfg.capabilities;
  setup.clients.reserve(cfg.num_clients);
  setup.local_iters.reserve(cfg.num_clients);
  for (std::size_t n = 0; n < cfg.num_clients; ++n) {
    ClientProfile p;
    p.id = n;
    p.cmp = caps[n];
    p.com_up = cfg.com_up;
    p.com_down = cfg.com_down;
    p.shard_size = setup.shards[n].size();
    setup.clients.push_back(p);
    std::size_t iters = cfg.local_iters;
    if (iters == 0) {
      const double per_pass =
          static_cast<double>(p.shard_size) / static_cast<double>(cfg.batch_size);
      iters = static_cast<std::size_t>(std::ceil(cfg.local_epochs * per_pass));
      if (iters == 0) iters = 1;
    }
    setup.local_iters.push_back(iters);
  }

  setup.train_eval.reserve(train.samples.size());
  for (const auto& shard : setup.shards) {
    setup.train_eval.insert(setup.train_eval.end(), shard.begin(), shard.end());
  }
  setup.test_set = std::move(test.samples);

  setup.rule = rule_from_name(cfg.scheduler);
  setup.delay_bound =
      cfg.delay_bound > 0.0
          ? cfg.delay_bound
          : auto_delay_bound(setup.clients, setup.fragment_sizes, setup.cost_model);
  setup.alpha = cfg.alpha;
  setup.staleness_mode = cfg.staleness_mode == "constant" ? StalenessMode::constant
                                                          : StalenessMode::polynomial;
  setup.staleness_a = cfg.staleness_a;
  setup.gamma = cfg.gamma;
  setup.rho = cfg.rho;
  setup.batch_size = cfg.batch_size;
  setup.t_target = cfg.resolved_t_target();
  setup.tick_budget = cfg.tick_budget;
  if (cfg.checkpoint_interval > 0.0) {
    setup.checkpoint_interval = cfg.checkpoint_interval;
  } else if (cfg.tick_budget > 0.0) {
    setup.checkpoint_interval = cfg.tick_budget / 50.0;
  } else {
    double worst = 0.0;
    for (const ClientProfile& c : setup.clients) {
      for (double sz : setup.fragment_sizes) {
        worst = std::max(worst, cost(c, sz, setup.cost_model));
      }
    }
    setup.checkpoint_interval = 2.0 * worst;
  }
  setup.seed = cfg.seed;
  setup.jitter_sigma = cfg.jitter_sigma;
  setup.idle_delay = cfg.idle_delay;
  setup.config_echo = config_echo_json(cfg);
  return setup;
}

RunResult run_instance(const ExperimentConfig& cfg) {
  SimSetup setup = build_setup(cfg);
  RunResult res;
  res.shard_hash = fnv1a_hash_shards(setup.shards);
  res.log = cfg.scheduler == "sync" ? run_sync(setup) : run_async(setup);

  res.fragment_updates.assign(setup.fragments.size(), 0);
  for (const LogRow& r : res.log.rows) {
    if (r.kind == LogRow::Kind::merge) {
      ++res.merges;
      res.fragment_updates[r.fragment] = r.q_j;
      res.total_ticks = std::max(res.total_ticks, r.tick);
    } else {
      res.final_loss = r.loss;
      res.final_accuracy = r.accuracy;
      res.total_ticks = std::max(res.total_ticks, r.tick);
      if (cfg.target_accuracy > 0.0 && res.ticks_to_target < 0.0 &&
          r.accuracy >= cfg.target_accuracy) {
        res.ticks_to_target = r.tick;
      }
    }
  }
  return res;
}

void write_curves_dat(const std::string& path, const RunLog& log) {
  std::ostringstream out;
  out << "# tick loss accuracy\n";
  for (const LogRow& r : log.rows) {
    if (r.kind == LogRow::Kind::checkpoint) {
      out << format_g9(r.tick) << ' ' << format_g9(r.loss) << ' ' << format_g9(r.accuracy)
          << "\n";
    }
  }
  write_file_atomic(path, out.str());
}

namespace {

std::string summary_header() {
  return "key,value,mode,seed,N,M,beta,final_loss,final_accuracy,ticks_to_target,"
         "total_ticks,merges,q,i_min,i_max\n";
}

std::string summary_row(const std::string& key, double value, const ExperimentConfig& cfg,
                        const RunResult& r) {
  std::ostringstream out;
  std::string q_joined;
  for (std::size_t j = 0; j < r.fragment_updates.size(); ++j) {
    if (j) q_joined += ';';
    q_joined += std::to_string(r.fragment_updates[j]);
  }
  out << csv_field(key) << ',' << (key.empty() ? "" : format_g9(value)) << ','
      << cfg.scheduler << ',' << cfg.seed << ',' << cfg.num_clients << ','
      << cfg.num_fragments << ',' << (cfg.beta >= 0.0 ? format_g9(cfg.beta) : "") << ','
      << format_g9(r.final_loss) << ',' << format_g9(r.final_accuracy) << ','
      << (r.ticks_to_target >= 0.0 ? format_g9(r.ticks_to_target) : "") << ','
      << format_g9(r.total_ticks) << ',' << r.merges << ',' << csv_field(q_joined) << ','
      << r.log.i_min << ',' << r.log.i_max << "\n";
  return out.str();
}

void write_run_files(const fs::path& dir, const ExperimentConfig& cfg, const RunResult& r) {
  fs::create_directories(dir);
  write_file_atomic(dir / "runlog.csv", r.log.csv_string());
  write_file_atomic(dir / "summary.csv", summary_header() + summary_row("", 0.0, cfg, r));
  std::ostringstream curves;
  curves << "# tick loss accuracy\n";
  for (const LogRow& row : r.log.rows) {
    if (row.kind == LogRow::Kind::checkpoint) {
      curves << format_g9(row.tick) << ' ' << format_g9(row.loss) << ' '
             << format_g9(row.accuracy) << "\n";
    }
  }
  write_file_atomic(dir / "curves.dat", curves.str());
  write_file_atomic(dir / "config.json", r.log.config_echo + "\n");
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
  RunResult res = run_instance(cfg);
  if (!out_dir.empty()) write_run_files(out_dir, cfg, res);
  return res;
}

GridSpec parse_grid(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("grid must look like key=start:stop:step, got '" + text + "'");
  }
  GridSpec g;
  g.key = text.substr(0, eq);
  if (g.key != "beta" && g.key != "M" && g.key != "m") {
    throw ConfigError("unsupported sweep key '" + g.key + "' (use beta or M)");
  }
  if (g.key == "m") g.key = "M";
  const std::string rest = text.substr(eq + 1);
  char c1 = 0, c2 = 0;
  std::istringstream ss(rest);
  if (!(ss >> g.start >> c1 >> g.stop >> c2 >> g.step) || c1 != ':' || c2 != ':') {
    throw ConfigError("grid range must be start:stop:step, got '" + rest + "'");
  }
  if (!(g.step > 0.0) || g.stop < g.start) {
    throw ConfigError("grid needs step > 0 and stop >= start");
  }
  return g;
}

std::vector<SweepCell> run_sweep(const ExperimentConfig& base, const GridSpec& grid,
                                 const std::string& out_dir) {
  std::vector<SweepCell> cells;
  std::string summary = summary_header();
  for (double v = grid.start; v <= grid.stop + 1e-12; v += grid.step) {
    ExperimentConfig cfg = base;
    if (grid.key == "beta") {
      cfg.beta = v;
      cfg.capabilities.clear();
    } else {
      cfg.num_fragments = static_cast<std::size_t>(std::llround(v));
      cfg.ratios.clear();
    }
    validate_config(cfg);
    SweepCell cell;
    cell.key = grid.key;
    cell.value = v;
    std::ostringstream cell_name;
    cell_name << "cell_" << grid.key << "_" << format_g9(v);
    cell.result = run_experiment(
        cfg, out_dir.empty() ? "" : (fs::path(out_dir) / cell_name.str()).string());
    summary += summary_row(grid.key, v, cfg, cell.result);
    cells.push_back(std::move(cell));
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file_atomic(fs::path(out_dir) / "summary.csv", summary);
  }
  return cells;
}

std::vector<AblationRow> run_ablation_suite(const ExperimentConfig& base,
                                            const std::string& out_dir) {
  static const char* kModes[] = {"gre_raa", "random", "mp", "sync"};
  std::vector<AblationRow> rows;
  std::uint64_t first_hash = 0;
  std::ostringstream table;
  table << "mode,final_accuracy,final_loss,total_ticks,ticks_to_target,merges\n";
  for (const char* mode : kModes) {
    ExperimentConfig cfg = base;
    cfg.scheduler = mode;
    validate_config(cfg);
    const RunResult r = run_experiment(
        cfg, out_dir.empty() ? "" : (fs::path(out_dir) / mode).string());
    if (rows.empty()) {
      first_hash = r.shard_hash;
    } else if (r.shard_hash != first_hash) {
      throw ContractViolation("ablation: modes saw different shards");
    }
    AblationRow row;
    row.mode = mode;
    row.final_accuracy = r.final_accuracy;
    row.final_loss = r.final_loss;
    row.total_ticks = r.total_ticks;
    row.ticks_to_target = r.ticks_to_target;
    row.merges = r.merges;
    row.shard_hash = r.shard_hash;
    rows.push_back(row);
    table << mode << ',' << format_g9(row.final_accuracy) << ',' << format_g9(row.final_loss)
          << ',' << format_g9(row.total_ticks) << ','
          << (row.ticks_to_target >= 0.0 ? format_g9(row.ticks_to_target) : "") << ','
          << row.merges << "\n";
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file_atomic(fs::path(out_dir) / "ablation.csv", table.str());
  }
  return rows;
}

double gre_raa_max_duration(std::span<const ClientProfile> profiles,
                            std::span<const double> sizes, double delay_bound,
                            std::size_t num_tasks, std::uint64_t seed) {
  SchedulerState state(sizes.size(), delay_bound, seed);
  // (completion tick, dispatch seq) -> client; pure scheduling, no learning
  using Entry = std::pair<std::pair<double, std::uint64_t>, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue;
  std::uint64_t seq = 0;
  double max_duration = 0.0;
  std::size_t dispatched = 0;
  auto launch = [&](std::size_t idx, double now) {
    const std::size_t j =
        gre_raa_assign(state, profiles[idx], sizes, CostModel::size_over_capability);
    const double d = cost(profiles[idx], sizes[j], CostModel::size_over_capability);
    max_duration = std::max(max_duration, d);
    queue.push({{now + d, seq++}, idx});
    ++dispatched;
  };
  for (std::size_t i = 0; i < profiles.size(); ++i) launch(i, 0.0);
  while (dispatched < num_tasks && !queue.empty()) {
    const auto [when, idx] = queue.top();
    queue.pop();
    state.q[state.in_flight.at(profiles[idx].id)] += 1;
    release_client(state, profiles[idx].id);
    launch(idx, when.first);
  }
  return max_duration;
}

TheoremReport verify_theorem2(std::size_t n, std::size_t m, std::size_t trials,
                              std::uint64_t seed) {
  if (n < m) throw ConfigError("verify-theorem2: need N >= M");
  if (n > 8 || m > 4) throw ConfigError("verify-theorem2: oracle limits are N <= 8, M <= 4");
  TheoremReport report;
  Rng rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<double> sizes(m);
    double total = 0.0;
    for (double& s : sizes) {
      s = rng.uniform(0.05, 1.0);
      total += s;
    }
    for (double& s : sizes) s /= total;
    std::vector<ClientProfile> profiles(n);
    for (std::size_t i = 0; i < n; ++i) {
      profiles[i].id = i;
      profiles[i].cmp = rng.uniform(1.0, 4.0);
      profiles[i].shard_size = 1;
    }
    TheoremTrial trial;
    trial.n = n;
    trial.m = m;
    trial.k_sorted = offline_sorted_assignment(profiles, sizes).delay_bound;
    trial.k_brute = brute_force_offline_K(profiles, sizes);
    trial.gre_max_duration = gre_raa_max_duration(profiles, sizes, trial.k_sorted,
                                                  16 * std::max(n, m), rng.next_u64());
    trial.sorted_equals_brute = trial.k_sorted == trial.k_brute;
    trial.durations_within_bound = trial.gre_max_duration <= trial.k_sorted;
    if (trial.sorted_equals_brute) ++report.equal_count;
    if (trial.durations_within_bound) ++report.bound_ok_count;
    report.trials.push_back(trial);
  }
  return report;
}

}  // namespace fedraa
