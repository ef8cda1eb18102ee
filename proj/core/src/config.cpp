#include "fedraa/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fedraa/error.hpp"

namespace fedraa {

using nlohmann::json;

std::vector<double> default_ratios(std::size_t num_fragments) {
  switch (num_fragments) {
    case 1: return {1.0};
    case 2: return {0.40, 0.60};
    case 3: return {0.20, 0.30, 0.50};
    case 4: return {0.10, 0.20, 0.30, 0.40};
    case 5: return {0.05, 0.10, 0.20, 0.30, 0.35};
    default:
      throw ConfigError("ratios: no default partition table beyond M=5, set ratios explicitly");
  }
}

namespace {

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

void apply_key(ExperimentConfig& c, const std::string& key, const json& v) {
  if (key == "dataset") c.dataset = get_as<std::string>(v, key);
  else if (key == "synthetic_classes") c.synthetic_classes = get_as<std::size_t>(v, key);
  else if (key == "synthetic_dim") c.synthetic_dim = get_as<std::size_t>(v, key);
  else if (key == "synthetic_per_class") c.synthetic_per_class = get_as<std::size_t>(v, key);
  else if (key == "synthetic_test_per_class")
    c.synthetic_test_per_class = get_as<std::size_t>(v, key);
  else if (key == "synthetic_separation") c.synthetic_separation = get_as<double>(v, key);
  else if (key == "train_images") c.train_images = get_as<std::string>(v, key);
  else if (key == "train_labels") c.train_labels = get_as<std::string>(v, key);
  else if (key == "test_images") c.test_images = get_as<std::string>(v, key);
  else if (key == "test_labels") c.test_labels = get_as<std::string>(v, key);
  else if (key == "train_limit") c.train_limit = get_as<std::size_t>(v, key);
  else if (key == "test_limit") c.test_limit = get_as<std::size_t>(v, key);
  else if (key == "hidden_dim") c.hidden_dim = get_as<std::size_t>(v, key);
  else if (key == "activation") c.activation = get_as<std::string>(v, key);
  else if (key == "M") c.num_fragments = get_as<std::size_t>(v, key);
  else if (key == "ratios") c.ratios = get_as<std::vector<double>>(v, key);
  else if (key == "scheduler") c.scheduler = get_as<std::string>(v, key);
  else if (key == "cost_model") c.cost_model = get_as<std::string>(v, key);
  else if (key == "K") c.delay_bound = get_as<double>(v, key);
  else if (key == "alpha") c.alpha = get_as<double>(v, key);
  else if (key == "staleness_mode") c.staleness_mode = get_as<std::string>(v, key);
  else if (key == "staleness_a") c.staleness_a = get_as<double>(v, key);
  else if (key == "gamma") c.gamma = get_as<double>(v, key);
  else if (key == "rho") c.rho = get_as<double>(v, key);
  else if (key == "batch_size") c.batch_size = get_as<std::size_t>(v, key);
  else if (key == "local_epochs") c.local_epochs = get_as<double>(v, key);
  else if (key == "local_iters") c.local_iters = get_as<std::size_t>(v, key);
  else if (key == "N") c.num_clients = get_as<std::size_t>(v, key);
  else if (key == "capabilities") c.capabilities = get_as<std::vector<double>>(v, key);
  else if (key == "beta") c.beta = get_as<double>(v, key);
  else if (key == "cap_low") c.cap_low = get_as<double>(v, key);
  else if (key == "cap_high") c.cap_high = get_as<double>(v, key);
  else if (key == "com_up") c.com_up = get_as<double>(v, key);
  else if (key == "com_down") c.com_down = get_as<double>(v, key);
  else if (key == "T_target") c.t_target = get_as<std::uint64_t>(v, key);
  else if (key == "Q") c.q_per_fragment = get_as<std::uint64_t>(v, key);
  else if (key == "tick_budget") c.tick_budget = get_as<double>(v, key);
  else if (key == "checkpoint_interval") c.checkpoint_interval = get_as<double>(v, key);
  else if (key == "target_accuracy") c.target_accuracy = get_as<double>(v, key);
  else if (key == "seed") c.seed = get_as<std::uint64_t>(v, key);
  else if (key == "jitter_sigma") c.jitter_sigma = get_as<double>(v, key);
  else if (key == "idle_delay") c.idle_delay = get_as<double>(v, key);
  else throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig cfg;
  for (auto it = j.begin(); it != j.end(); ++it) {
    apply_key(cfg, it.key(), it.value());
  }
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::vector<double> resolve_capabilities(const ExperimentConfig& cfg) {
  if (!cfg.capabilities.empty()) {
    if (cfg.capabilities.size() != cfg.num_clients) {
      throw ConfigError("capabilities: expected N=" + std::to_string(cfg.num_clients) +
                        " entries, got " + std::to_string(cfg.capabilities.size()));
    }
    return cfg.capabilities;
  }
  std::vector<double> caps(cfg.num_clients, cfg.cap_high);
  if (cfg.beta >= 0.0) {
    const auto n_low = static_cast<std::size_t>(
        std::llround(cfg.beta * static_cast<double>(cfg.num_clients)));
    for (std::size_t i = 0; i < std::min(n_low, cfg.num_clients); ++i) caps[i] = cfg.cap_low;
  } else {
    // no heterogeneity requested: homogeneous unit capability
    std::fill(caps.begin(), caps.end(), 1.0);
  }
  return caps;
}

void validate_config(ExperimentConfig& cfg) {
  if (cfg.dataset != "synthetic" && cfg.dataset != "idx") {
    throw ConfigError(cfg.dataset.empty() ? "missing required key 'dataset'"
                                          : "dataset must be 'synthetic' or 'idx'");
  }
  if (cfg.dataset == "idx") {
    if (cfg.train_images.empty() || cfg.train_labels.empty() || cfg.test_images.empty() ||
        cfg.test_labels.empty()) {
      throw ConfigError("idx dataset needs train_images/train_labels/test_images/test_labels");
    }
  }
  if (cfg.activation != "relu" && cfg.activation != "identity") {
    throw ConfigError("activation must be 'relu' or 'identity'");
  }
  if (cfg.num_fragments < 1) throw ConfigError("M must be >= 1");
  if (cfg.ratios.empty()) cfg.ratios = default_ratios(cfg.num_fragments);
  if (cfg.ratios.size() != cfg.num_fragments) {
    throw ConfigError("ratios: expected M=" + std::to_string(cfg.num_fragments) +
                      " entries, got " + std::to_string(cfg.ratios.size()));
  }
  double sum = 0.0;
  for (double r : cfg.ratios) {
    if (r <= 0.0) throw ConfigError("ratios entries must be > 0");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("ratios must sum to 1, got " + std::to_string(sum));
  }
  static const std::set<std::string> kSchedulers{"gre_raa", "random", "mp", "sync"};
  if (!kSchedulers.count(cfg.scheduler)) {
    throw ConfigError("scheduler must be one of gre_raa|random|mp|sync");
  }
  if (cfg.cost_model != "full" && cfg.cost_model != "size_over_capability") {
    throw ConfigError("cost_model must be 'full' or 'size_over_capability'");
  }
  if (cfg.delay_bound < 0.0) throw ConfigError("K must be >= 0 (0 = auto)");
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw ConfigError("alpha must be in (0,1]");
  if (cfg.staleness_mode != "polynomial" && cfg.staleness_mode != "constant") {
    throw ConfigError("staleness_mode must be 'polynomial' or 'constant'");
  }
  if (cfg.staleness_a < 0.0) throw ConfigError("staleness_a must be >= 0");
  if (!(cfg.gamma > 0.0)) throw ConfigError("gamma must be > 0");
  if (cfg.rho < 0.0) throw ConfigError("rho must be >= 0");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.local_iters == 0 && !(cfg.local_epochs > 0.0)) {
    throw ConfigError("local_epochs must be > 0 when local_iters is not set");
  }
  if (cfg.num_clients < 1) throw ConfigError("N must be >= 1");
  if (cfg.beta >= 0.0 && cfg.beta > 1.0) throw ConfigError("beta must be in [0,1]");
  if (!(cfg.cap_low > 0.0) || !(cfg.cap_high > 0.0)) {
    throw ConfigError("cap_low and cap_high must be > 0");
  }
  if (cfg.com_up < 0.0 || cfg.com_down < 0.0) throw ConfigError("com costs must be >= 0");
  if (cfg.tick_budget < 0.0) throw ConfigError("tick_budget must be >= 0");
  if (cfg.checkpoint_interval < 0.0) throw ConfigError("checkpoint_interval must be >= 0");
  if (cfg.target_accuracy < 0.0 || cfg.target_accuracy > 1.0) {
    throw ConfigError("target_accuracy must be in [0,1]");
  }
  if (cfg.jitter_sigma < 0.0) throw ConfigError("jitter_sigma must be >= 0");
  if (cfg.idle_delay < 0.0) throw ConfigError("idle_delay must be >= 0");
  if (cfg.resolved_t_target() == 0 && cfg.tick_budget == 0.0) {
    throw ConfigError("need T_target, Q, or tick_budget so the run terminates");
  }
  cfg.capabilities = resolve_capabilities(cfg);
  for (double cap : cfg.capabilities) {
    if (!(cap > 0.0)) throw ConfigError("capabilities entries must be > 0");
  }
}

std::string config_echo_json(const ExperimentConfig& c) {
  json j;
  j["dataset"] = c.dataset;
  if (c.dataset == "synthetic") {
    j["synthetic_classes"] = c.synthetic_classes;
    j["synthetic_dim"] = c.synthetic_dim;
    j["synthetic_per_class"] = c.synthetic_per_class;
    j["synthetic_test_per_class"] = c.synthetic_test_per_class;
    j["synthetic_separation"] = c.synthetic_separation;
  } else {
    j["train_images"] = c.train_images;
    j["train_labels"] = c.train_labels;
    j["test_images"] = c.test_images;
    j["test_labels"] = c.test_labels;
    j["train_limit"] = c.train_limit;
    j["test_limit"] = c.test_limit;
  }
  j["hidden_dim"] = c.hidden_dim;
  j["activation"] = c.activation;
  j["M"] = c.num_fragments;
  j["ratios"] = c.ratios;
  j["scheduler"] = c.scheduler;
  j["cost_model"] = c.cost_model;
  j["K"] = c.delay_bound;
  j["alpha"] = c.alpha;
  j["staleness_mode"] = c.staleness_mode;
  j["staleness_a"] = c.staleness_a;
  j["gamma"] = c.gamma;
  j["rho"] = c.rho;
  j["batch_size"] = c.batch_size;
  j["local_epochs"] = c.local_epochs;
  j["local_iters"] = c.local_iters;
  j["N"] = c.num_clients;
  j["capabilities"] = c.capabilities.empty() ? resolve_capabilities(c) : c.capabilities;
  if (c.beta >= 0.0) {
    j["beta"] = c.beta;
    j["cap_low"] = c.cap_low;
    j["cap_high"] = c.cap_high;
  }
  j["com_up"] = c.com_up;
  j["com_down"] = c.com_down;
  j["T_target"] = c.t_target;
  j["Q"] = c.q_per_fragment;
  j["tick_budget"] = c.tick_budget;
  j["checkpoint_interval"] = c.checkpoint_interval;
  j["target_accuracy"] = c.target_accuracy;
  j["seed"] = c.seed;
  j["jitter_sigma"] = c.jitter_sigma;
  j["idle_delay"] = c.idle_delay;
  return j.dump();
}

}  // namespace fedraa
