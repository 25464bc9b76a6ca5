#include <doctest.h>

#include "ergmfg/config.hpp"
#include "ergmfg/errors.hpp"

using namespace ergmfg;

TEST_CASE("config parses sections, comments and lists") {
  const Config cfg = Config::parse_text(
      "# comment\n"
      "[domain]\n"
      "kind = interval   # trailing comment\n"
      "resolution = 128\n"
      "[mfg]\n"
      "delta_schedule = 0.1 0.05 0.025\n"
      "theta = 0.5\n");
  CHECK(cfg.get_string("domain", "kind", "?") == "interval");
  CHECK(cfg.get_int("domain", "resolution", 0) == 128);
  const auto sched = cfg.get_doubles("mfg", "delta_schedule", {});
  REQUIRE(sched.size() == 3);
  CHECK(sched[1] == doctest::Approx(0.05));
  CHECK(cfg.get_double("mfg", "theta", 0.0) == doctest::Approx(0.5));
  CHECK(cfg.get_double("mfg", "missing", 42.0) == doctest::Approx(42.0));
  cfg.enforce_consumed({"domain", "mfg"});
}

TEST_CASE("unread keys fail the strictness check") {
  const Config cfg = Config::parse_text("[domain]\nkind = interval\nmystery = 3\n");
  cfg.get_string("domain", "kind", "?");
  CHECK_THROWS_AS(cfg.enforce_consumed({"domain"}), ConfigError);
}

TEST_CASE("unknown sections fail the strictness check") {
  const Config cfg = Config::parse_text("[submarine]\ndepth = 3\n");
  CHECK_THROWS_AS(cfg.enforce_consumed({"domain"}), ConfigError);
}

TEST_CASE("malformed input is rejected") {
  CHECK_THROWS_AS(Config::parse_text("[domain\nkind = x\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse_text("key_without_section = 1\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse_text("[a]\nnot_an_assignment\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse_text("[a]\nx = 1\nx = 2\n"), ConfigError);
  const Config cfg = Config::parse_text("[a]\nx = abc\n");
  CHECK_THROWS_AS(cfg.get_double("a", "x", 0.0), ConfigError);
}
