#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fedraa/error.hpp"
#include "fedraa/experiment.hpp"

namespace {

using namespace fedraa;

// --seed flag > FEDRAA_SEED env > config file value
void apply_seed_overrides(ExperimentConfig& cfg, bool seed_flag_set, std::uint64_t seed_flag) {
  if (const char* env = std::getenv("FEDRAA_SEED")) {
    cfg.seed = std::strtoull(env, nullptr, 10);
  }
  if (seed_flag_set) cfg.seed = seed_flag;
}

int cmd_run(const std::string& config_path, bool seed_set, std::uint64_t seed,
            const std::string& out_dir) {
  ExperimentConfig cfg = load_config(config_path);
  apply_seed_overrides(cfg, seed_set, seed);
  const RunResult res = run_experiment(cfg, out_dir);
  std::cout << "mode=" << cfg.scheduler << " seed=" << cfg.seed
            << " merges=" << res.merges << " ticks=" << format_g9(res.total_ticks)
            << " final_loss=" << format_g9(res.final_loss)
            << " final_accuracy=" << format_g9(res.final_accuracy)
            << " I_min=" << res.log.i_min << " I_max=" << res.log.i_max << "\n"
            << "outputs in " << out_dir << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& grid_text, bool seed_set,
              std::uint64_t seed, const std::string& out_dir) {
  ExperimentConfig cfg = load_config(config_path);
  apply_seed_overrides(cfg, seed_set, seed);
  const GridSpec grid = parse_grid(grid_text);
  const auto cells = run_sweep(cfg, grid, out_dir);
  std::cout << grid.key << " sweep: " << cells.size() << " cells\n";
  for (const SweepCell& cell : cells) {
    std::cout << "  " << grid.key << "=" << format_g9(cell.value)
              << " accuracy=" << format_g9(cell.result.final_accuracy)
              << " ticks=" << format_g9(cell.result.total_ticks) << "\n";
  }
  std::cout << "summary in " << out_dir << "/summary.csv\n";
  return 0;
}

int cmd_ablate(const std::string& config_path, bool seed_set, std::uint64_t seed,
               const std::string& out_dir) {
  ExperimentConfig cfg = load_config(config_path);
  apply_seed_overrides(cfg, seed_set, seed);
  const auto rows = run_ablation_suite(cfg, out_dir);
  std::cout << std::left << std::setw(10) << "mode" << std::setw(14) << "accuracy"
            << std::setw(14) << "ticks" << std::setw(10) << "merges" << "\n";
  for (const AblationRow& row : rows) {
    std::cout << std::left << std::setw(10) << row.mode << std::setw(14)
              << format_g9(row.final_accuracy) << std::setw(14)
              << format_g9(row.total_ticks) << std::setw(10) << row.merges << "\n";
  }
  std::cout << "table in " << out_dir << "/ablation.csv\n";
  return 0;
}

int cmd_verify_theorem2(std::size_t n, std::size_t m, std::size_t trials,
                        std::uint64_t seed) {
  const TheoremReport report = verify_theorem2(n, m, trials, seed);
  std::cout << "instances: N=" << n << " M=" << m << " trials=" << trials << "\n"
            << "sorted offline K == brute-force K: " << report.equal_count << "/" << trials
            << "\n"
            << "online max duration <= sorted K:   " << report.bound_ok_count << "/"
            << trials << "\n";
  std::size_t duration_equals_opt = 0;
  for (const TheoremTrial& t : report.trials) {
    if (t.gre_max_duration == t.k_brute) ++duration_equals_opt;
  }
  std::cout << "online max duration == optimal K:  " << duration_equals_opt << "/" << trials
            << "\n";
  return report.bound_ok_count == trials ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fed-RAA: resource-adaptive asynchronous federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "fedraa_out", grid_text;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t vt_n = 6, vt_m = 3, vt_trials = 100;
  std::uint64_t vt_seed = 1;

  auto* run = app.add_subcommand("run", "Run a single experiment");
  run->add_option("--config", config_path, "config JSON path")->required();
  auto* run_seed = run->add_option("--seed", seed, "seed override");
  run->add_option("--out", out_dir, "output directory");

  auto* sweep = app.add_subcommand("sweep", "Grid sweep over beta or M");
  sweep->add_option("--config", config_path, "config JSON path")->required();
  sweep->add_option("--grid", grid_text, "key=start:stop:step, e.g. beta=0.1:0.9:0.2")
      ->required();
  auto* sweep_seed = sweep->add_option("--seed", seed, "seed override");
  sweep->add_option("--out", out_dir, "output directory");

  auto* ablate = app.add_subcommand("ablate", "Run gre_raa/random/mp/sync on one instance");
  ablate->add_option("--config", config_path, "config JSON path")->required();
  auto* ablate_seed = ablate->add_option("--seed", seed, "seed override");
  ablate->add_option("--out", out_dir, "output directory");

  auto* verify = app.add_subcommand("verify-theorem2",
                                    "Compare online and offline delay bounds on random instances");
  verify->add_option("--n", vt_n, "clients per instance");
  verify->add_option("--m", vt_m, "fragments per instance");
  verify->add_option("--trials", vt_trials, "number of random instances");
  verify->add_option("--seed", vt_seed, "instance generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      seed_set = run_seed->count() > 0;
      return cmd_run(config_path, seed_set, seed, out_dir);
    }
    if (sweep->parsed()) {
      seed_set = sweep_seed->count() > 0;
      return cmd_sweep(config_path, grid_text, seed_set, seed, out_dir);
    }
    if (ablate->parsed()) {
      seed_set = ablate_seed->count() > 0;
      return cmd_ablate(config_path, seed_set, seed, out_dir);
    }
    if (verify->parsed()) {
      return cmd_verify_theorem2(vt_n, vt_m, vt_trials, vt_seed);
    }
  } catch (const fedraa::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fedraa::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const fedraa::InfeasibleAssignment& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const fedraa::InfeasiblePartition& e) {
    std::cerr << "infeasible partition: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
