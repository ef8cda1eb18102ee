#include <string>

#include <doctest.h>

#include "fedraa/config.hpp"
#include "fedraa/error.hpp"

using namespace fedraa;

TEST_CASE("minimal config gets the published defaults") {
  const ExperimentConfig cfg = parse_config_text(R"({"dataset":"synthetic","M":2})");
  CHECK(cfg.ratios == std::vector<double>{0.40, 0.60});
  CHECK(cfg.gamma == 0.005);
  CHECK(cfg.batch_size == 128);
  CHECK(cfg.local_epochs == 5.0);
  CHECK(cfg.alpha == 0.5);
  CHECK(cfg.staleness_mode == "polynomial");
  CHECK(cfg.scheduler == "gre_raa");
  CHECK(cfg.resolved_t_target() == 50 * 2);
}

TEST_CASE("default partition table covers M=1..5") {
  CHECK(default_ratios(3) == std::vector<double>{0.20, 0.30, 0.50});
  CHECK(default_ratios(4) == std::vector<double>{0.10, 0.20, 0.30, 0.40});
  CHECK(default_ratios(5) == std::vector<double>{0.05, 0.10, 0.20, 0.30, 0.35});
  CHECK_THROWS_AS(default_ratios(6), ConfigError);
}

TEST_CASE("unnormalized ratios are rejected with the key named") {
  try {
    parse_config_text(R"({"dataset":"synthetic","M":2,"ratios":[0.4,0.5]})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("ratios") != std::string::npos);
  }
}

TEST_CASE("beta generator: round(beta*N) low-capability clients") {
  ExperimentConfig cfg =
      parse_config_text(R"({"dataset":"synthetic","N":10,"beta":0.3})");
  REQUIRE(cfg.capabilities.size() == 10);
  std::size_t low = 0, high = 0;
  for (double c : cfg.capabilities) {
    if (c == 1.0) ++low;
    if (c == 3.0) ++high;
  }
  CHECK(low == 3);
  CHECK(high == 7);
}

TEST_CASE("unknown and ill-typed keys are named in the error") {
  try {
    parse_config_text(R"({"dataset":"synthetic","learning_rate":0.1})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("learning_rate") != std::string::npos);
  }
  try {
    parse_config_text(R"({"dataset":"synthetic","gamma":"fast"})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("gamma") != std::string::npos);
  }
}

TEST_CASE("missing dataset key is required") {
  CHECK_THROWS_AS(parse_config_text(R"({"M":2})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"dataset":"csv"})"), ConfigError);
}

TEST_CASE("idx dataset requires the four file paths") {
  CHECK_THROWS_AS(parse_config_text(R"({"dataset":"idx","train_images":"a"})"), ConfigError);
}

TEST_CASE("range checks") {
  CHECK_THROWS_AS(parse_config_text(R"({"dataset":"synthetic","alpha":1.5})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"dataset":"synthetic","alpha":0})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"dataset":"synthetic","gamma":0})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"dataset":"synthetic","beta":1.2})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"dataset":"synthetic","staleness_a":-1})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"dataset":"synthetic","scheduler":"fifo"})"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config_text(R"({"dataset":"synthetic","capabilities":[1,2],"N":3})"),
      ConfigError);
}

TEST_CASE("config echo round-trips to an identical resolved config") {
  const ExperimentConfig cfg = parse_config_text(
      R"({"dataset":"synthetic","M":3,"N":5,"beta":0.4,"Q":7,"gamma":0.02,"seed":9})");
  const std::string echo = config_echo_json(cfg);
  const ExperimentConfig back = parse_config_text(echo);
  CHECK(config_echo_json(back) == echo);
  CHECK(back.num_fragments == 3);
  CHECK(back.capabilities == cfg.capabilities);
  CHECK(back.seed == 9);
  CHECK(back.resolved_t_target() == cfg.resolved_t_target());
}
