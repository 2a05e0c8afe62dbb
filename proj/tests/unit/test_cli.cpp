#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fkdyn/commands.hpp"

using namespace fk;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("fkdyn_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Config config(const std::string& text) { return parse_ini_config("schema_version = 1\n" + text, "test.ini"); }

int run(const std::string& command, Config cfg, const fs::path& out, int threads = 1) {
  cfg.set("run.out", out.string());
  cfg.set("run.threads", threads);
  std::ostringstream log;
  return run_command(command, cfg, log);
}

const char* kSmall = R"([run]
replicas = 12
seed = 7
[lattice]
n = 4
[model]
q = 3
[weights]
replicas = 8
snapshots = 4
[oracle]
draws = 3000
samples = 2000
)";

}  // namespace

TEST_CASE("outputs are byte-identical across thread counts") {
  for (const std::string command : {"sample", "mix", "weights"}) {
    const auto a = scratch(command + "_1"), b = scratch(command + "_4");
    REQUIRE(run(command, config(kSmall), a, 1) == kExitOk);
    REQUIRE(run(command, config(kSmall), b, 4) == kExitOk);
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      const auto name = entry.path().filename();
      if (name == "manifest.json") continue;
      CHECK_MESSAGE(slurp(entry.path()) == slurp(b / name), command << ": " << name);
      ++compared;
    }
    CHECK(compared >= 2);
  }
}

TEST_CASE("seed and config hash lead every csv row") {
  const auto out = scratch("hash");
  REQUIRE(run("sample", config(kSmall), out) == kExitOk);
  const auto hash = hash_hex(config_hash(config(kSmall)));
  std::ifstream in(out / "sample.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("seed,config_hash,", 0) == 0);
  while (std::getline(in, line)) CHECK(line.rfind("7," + hash + ",", 0) == 0);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["config_hash"] == hash);
  CHECK(manifest.contains("wall_seconds"));
}

TEST_CASE("validation errors exit with 1") {
  CHECK(run("sample", config("[model]\nq = -1\n"), scratch("bad_q")) == kExitValidation);
  CHECK(run("sample", config("[model]\np = 1.5\n"), scratch("bad_p")) == kExitValidation);
  CHECK(run("spatial", config("[spatial]\nr_grid = [3]\nestimators = [wsm]\n"), scratch("bad_r")) == kExitValidation);
  CHECK(run("nonsense", config(""), scratch("bad_cmd")) == kExitValidation);
  CHECK_THROWS_AS(config("[run]\nbogus = 1\n"), ConfigError);
}

TEST_CASE("oracle-diff passes on the true kernel and flags a wrong bridge weight") {
  CHECK(run("oracle-diff", config(kSmall), scratch("diff_ok")) == kExitOk);
  auto bad = config(kSmall);
  bad.set("model.bridge_q", 6.0);
  const auto out = scratch("diff_bad");
  CHECK(run("oracle-diff", bad, out) == kExitDifferential);
  CHECK(slurp(out / "oracle_diff.csv").find(",0\n") != std::string::npos);
}

TEST_CASE("schema documents every command's files") {
  const auto md = output_schema_markdown();
  for (const char* file : {"sample.csv", "mix.csv", "spatial_fit.csv", "weights_ledger.csv", "oracle_diff.csv",
                           "samples.bin", "run.seed"})
    CHECK(md.find(file) != std::string::npos);
}
