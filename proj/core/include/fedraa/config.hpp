#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fedraa {

// Flat experiment configuration. load_config fills it from a JSON object of
// scalars and arrays, applies defaults, and validates; unknown or ill-typed
// keys raise ConfigError naming the key.
struct ExperimentConfig {
  // dataset
  std::string dataset;  // "synthetic" | "idx" (required)
  std::size_t synthetic_classes = 2;
  std::size_t synthetic_dim = 8;
  std::size_t synthetic_per_class = 250;
  std::size_t synthetic_test_per_class = 50;
  double synthetic_separation = 6.0;
  std::string train_images, train_labels, test_images, test_labels;
  std::size_t train_limit = 2000;
  std::size_t test_limit = 1000;

  // model
  std::size_t hidden_dim = 0;
  std::string activation = "relu";  // "relu" | "identity"

  // partition
  std::size_t num_fragments = 2;  // M
  std::vector<double> ratios;     // empty = default table for M

  // scheduling
  std::string scheduler = "gre_raa";  // gre_raa | random | mp | sync
  std::string cost_model = "full";    // full | size_over_capability
  double delay_bound = 0.0;           // K; 0 = auto from the offline bound

  // server
  double alpha = 0.5;
  std::string staleness_mode = "polynomial";  // polynomial | constant
  double staleness_a = 0.5;

  // local training
  double gamma = 0.005;
  double rho = 0.1;
  std::size_t batch_size = 128;
  double local_epochs = 5.0;     // passes over the shard per task
  std::size_t local_iters = 0;   // explicit I; 0 = derive from local_epochs

  // clients
  std::size_t num_clients = 4;  // N
  std::vector<double> capabilities;  // explicit cmp vector, or use beta below
  double beta = -1.0;                // fraction of cap_low clients; <0 = homogeneous
  double cap_low = 1.0;
  double cap_high = 3.0;
  double com_up = 0.0;
  double com_down = 0.0;

  // run control
  std::uint64_t t_target = 0;  // explicit merge target; 0 = q_per_fragment * M
  std::uint64_t q_per_fragment = 50;  // Q
  double tick_budget = 0.0;           // 0 = unbounded
  double checkpoint_interval = 0.0;   // 0 = auto
  double target_accuracy = 0.0;       // for ticks_to_target in summaries
  std::uint64_t seed = 1;
  double jitter_sigma = 0.0;
  double idle_delay = 0.0;

  std::uint64_t resolved_t_target() const {
    return t_target > 0 ? t_target : q_per_fragment * num_fragments;
  }
};

// Default partition ratios for M in [1,5].
std::vector<double> default_ratios(std::size_t num_fragments);

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& json_text);

// Applies defaults (ratios, capability vector) and range-checks every field.
void validate_config(ExperimentConfig& cfg);

// Canonical JSON echo of a resolved config; parse_config_text on it
// reproduces the run exactly.
std::string config_echo_json(const ExperimentConfig& cfg);

// Capability vector realized from `capabilities` or the (beta, cap_low,
// cap_high) generator: round(beta*N) clients at cap_low, the rest at cap_high.
std::vector<double> resolve_capabilities(const ExperimentConfig& cfg);

}  // namespace fedraa
