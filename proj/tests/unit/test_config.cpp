#include <doctest.h>

#include <string>

#include "fkdyn/config.hpp"

using namespace fk;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_ini_config(text, "cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("key-value format") {
  const std::string text =
      "# comment\n"
      "schema_version = 1\n"
      "[run]\n"
      "seed = 42   ; trailing comment\n"
      "engine = naive\n"
      "[lattice]\n"
      "kind = box\n"
      "boundary = \"wired\"\n"
      "[model]\n"
      "q = 3\n"
      "p = 0.6\n"
      "[mix]\n"
      "n_grid = [8, 12, 16]\n"
      "sample_times = 1, 2.5\n"
      "restrict = no\n"
      "[spatial]\n"
      "estimators = wsm, ord\n";
  auto cfg = parse_ini_config(text, "cfg");
  CHECK(cfg.get<std::uint64_t>("run.seed") == 42);
  CHECK(cfg.get<std::string>("run.engine") == "naive");
  CHECK(cfg.get<std::string>("lattice.boundary") == "wired");
  CHECK(cfg.get<double>("model.q") == 3.0);
  CHECK(cfg.get<std::vector<int>>("mix.n_grid") == std::vector<int>{8, 12, 16});
  CHECK(cfg.get<std::vector<double>>("mix.sample_times") == std::vector<double>{1.0, 2.5});
  CHECK_FALSE(cfg.get<bool>("mix.restrict"));
  CHECK(cfg.get<std::vector<std::string>>("spatial.estimators") == std::vector<std::string>{"wsm", "ord"});
  CHECK(cfg.get<int>("lattice.n") == 8);
  CHECK_FALSE(cfg.has("model.bridge_q"));
  CHECK(cfg.has("model.p"));
  CHECK(cfg.lines.at("model.p") == 11);
}

TEST_CASE("errors carry the line") {
  CHECK(error_of("schema_version = 1\n[model]\np = abc\n").find("cfg:3") != std::string::npos);
  CHECK(error_of("schema_version = 1\n[model]\n\nfoo = 1\n").find("cfg:4") != std::string::npos);
  CHECK(error_of("schema_version = 1\n[model]\n\nfoo = 1\n").find("unknown key") != std::string::npos);
  CHECK(error_of("schema_version = 1\n[nope]\n").find("cfg:2: unknown section") != std::string::npos);
  CHECK(error_of("schema_version = 1\n[run]\nengine = fast\n").find("cfg:3") != std::string::npos);
  CHECK(error_of("schema_version = 1\n[run]\nseed = -1\n").find("cfg:3") != std::string::npos);
  CHECK(error_of("schema_version = 1\n[run]\nseed = 1\nseed = 2\n").find("cfg:4: duplicate") != std::string::npos);
  CHECK(error_of("schema_version = 1\n[run\n").find("cfg:2") != std::string::npos);
  CHECK(error_of("schema_version = 1\nseed = 3\n").find("cfg:2") != std::string::npos);
  CHECK(error_of("schema_version = 2\n").find("schema_version") != std::string::npos);
  CHECK(error_of("[run]\nseed = 3\n").find("missing schema_version") != std::string::npos);
  CHECK(error_of("schema_version = 1\n[mix]\nn_grid = 1, x\n").find("cfg:3") != std::string::npos);
  CHECK(error_of("schema_version = 1\n[model]\np = 0.5\n") == "");
  auto cfg = parse_ini_config("schema_version = 1\n[model]\np = 0.5\n", "cfg");
  try {
    cfg.fail("model.p", "must be smaller");
    FAIL("no throw");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()) == "cfg:3: model.p: must be smaller");
  }
}

TEST_CASE("JSON encodes the same schema") {
  auto a = parse_ini_config("schema_version = 1\n[model]\nq = 3\np = 0.6\n[mix]\nn_grid = 8, 12\n", "a");
  auto b = parse_json_config(R"({"schema_version": 1, "model": {"q": 3, "p": 0.6}, "mix": {"n_grid": [8, 12]}})");
  CHECK(canonical_json(a) == canonical_json(b));
  CHECK(config_hash(a) == config_hash(b));
  CHECK_THROWS_AS(parse_json_config(R"({"schema_version": 1, "model": {"bogus": 1}})"), ConfigError);
  CHECK_THROWS_AS(parse_json_config(R"({"schema_version": 1, "model": {"q": "x"}})"), ConfigError);
  CHECK_THROWS_AS(parse_json_config(R"({"model": {}})"), ConfigError);
  CHECK_THROWS_AS(parse_json_config("{"), ConfigError);
}

TEST_CASE("hash ignores seed, threads and output directory only") {
  auto base = parse_ini_config("schema_version = 1\n", "x");
  auto other = base;
  other.set("run.seed", 99);
  other.set("run.threads", 8);
  other.set("run.out", "elsewhere");
  CHECK(config_hash(base) == config_hash(other));
  other.set("run.replicas", 7);
  CHECK(config_hash(base) != config_hash(other));
  auto p1 = base, p2 = base;
  p1.set("model.p", 0.1);
  p2.set("model.p", 0.10000000000000002);
  CHECK(config_hash(p1) != config_hash(p2));
  CHECK(hash_hex(0xabc) == "0000000000000abc");
  CHECK(canonical_json(p1).find("0.10000000000000001") != std::string::npos);
}

TEST_CASE("schema documentation lists every key") {
  const auto md = schema_markdown();
  for (const auto& s : config_schema()) CHECK(md.find("`" + s.key + "`") != std::string::npos);
  auto d = default_config();
  for (const auto& s : config_schema())
    if (!s.default_value.is_null()) CHECK(d.has(s.key));
}
