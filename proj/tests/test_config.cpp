#include "doctest.h"
#include "run_config.hpp"

using namespace ifslr;
using namespace ifslr::cli;

TEST_CASE("config parsing") {
  const std::string text = R"(
# reference experiment
[ifs]
ratios = 0.5, 1.2
translations = 1, 1
probs = 0.5, 0.5

[run]
seed = 99
replicas = 5000
truncation = 128

[response]
phi = power
t = 2
orders = 1, 2
direction = ratio 1
fd_steps = 1e-4, 5e-5
)";
  const RunConfig cfg = parse_config_text(text);
  CHECK(cfg.ratios == std::vector<double>{0.5, 1.2});
  CHECK(cfg.seed == 99);
  CHECK(cfg.replicas == 5000);
  CHECK(cfg.truncation == 128);
  CHECK(cfg.response_orders == std::vector<int>{1, 2});
  CHECK(cfg.fd_steps == std::vector<double>{1e-4, 5e-5});

  const auto ifs = config_ifs(cfg);
  CHECK(ifs.size() == 2);
  CHECK(ifs.ratio(1) == 1.2);
  const auto dir = config_direction(cfg, ifs);
  CHECK(dir.kind == ParamDirection::Kind::Ratio);
  CHECK(dir.index == 0);
}

TEST_CASE("unknown keys are rejected") {
  CHECK_THROWS_AS(parse_config_text("[ifs]\nratios = 0.5, 1.2\nshape = 7\n"), Error);
  CHECK_THROWS_AS(parse_config_text("[nowhere]\nratios = 0.5\n"), Error);
}

TEST_CASE("malformed values are rejected") {
  CHECK_THROWS_AS(parse_config_text("[run]\nseed = abc\n"), Error);
  CHECK_THROWS_AS(parse_config_text("[ifs]\nratios = 0.5, x\n"), Error);
  CHECK_THROWS_AS(parse_config_text("[ifs]\nratios 0.5\n"), Error);
  CHECK_THROWS_AS(parse_config_text("[nondiff]\nregime = C\n"), Error);
}

TEST_CASE("defaults fill in translations and probabilities") {
  const RunConfig cfg = parse_config_text("[ifs]\nratios = 0.5, 1.2\n");
  const auto ifs = config_ifs(cfg);
  CHECK(ifs.translation(0) == 1.0);
  CHECK(ifs.probs[0] == 0.5);
}

TEST_CASE("bad directions") {
  RunConfig cfg = parse_config_text("[ifs]\nratios = 0.5, 1.2\n");
  const auto ifs = config_ifs(cfg);
  cfg.direction = "ratio 3";
  CHECK_THROWS_AS(config_direction(cfg, ifs), Error);
  cfg.direction = "scale 1";
  CHECK_THROWS_AS(config_direction(cfg, ifs), Error);
  cfg.direction = "translation 2";
  CHECK(config_direction(cfg, ifs).index == 1);
}
