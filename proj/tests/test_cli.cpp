// End-to-end tests for the `verify` command-line driver.  The test harness
// passes the binary path in VERIFY_CLI and the shipped config directory in
// CONFIGS_DIR.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

std::string env_or_fail(const char* name) {
  const char* value = std::getenv(name);
  INFO("environment variable " << name << " must point at the CLI under test");
  REQUIRE(value != nullptr);
  return value;
}

std::string cli() { return env_or_fail("VERIFY_CLI"); }
fs::path configs() { return fs::path(env_or_fail("CONFIGS_DIR")); }

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("itolat_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  REQUIRE(out.good());
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run(const std::string& args, const fs::path& scratch) {
  const fs::path out_file = scratch / "stdout.txt";
  const fs::path err_file = scratch / "stderr.txt";
  const std::string command = "\"" + cli() + "\" " + args + " > \"" + out_file.string() +
                              "\" 2> \"" + err_file.string() + "\"";
  const int status = std::system(command.c_str());
  RunResult r;
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  r.exit_code = WEXITSTATUS(status);
  r.out = read_file(out_file);
  r.err = read_file(err_file);
  return r;
}

}  // namespace

TEST_CASE("run executes a tree campaign and writes both result files", "[cli]") {
  const fs::path dir = fresh_dir("run_tree");
  const std::string config = (configs() / "isometry-tree.json").string();
  const RunResult r = run("run \"" + config + "\" --out-dir \"" + (dir / "out").string() + "\"", dir);
  INFO(r.out << r.err);
  CHECK(r.exit_code == 0);
  CHECK_THAT(r.out, ContainsSubstring("[PASS] qv/starts_at_zero"));
  CHECK_THAT(r.out, ContainsSubstring("[PASS] ito_isometry"));
  CHECK_THAT(r.out, ContainsSubstring("8 checks, digest "));
  CHECK(r.out.find("[FAIL]") == std::string::npos);

  const std::string csv = read_file(dir / "out" / "results.csv");
  CHECK(csv.rfind("check_name,t,lhs,rhs,residual,tolerance,pass\n", 0) == 0);
  CHECK_THAT(csv, ContainsSubstring("ito_isometry"));

  const nlohmann::json report = nlohmann::json::parse(read_file(dir / "out" / "results.json"));
  CHECK(report.contains("meta"));
  CHECK(report.contains("digest"));
  REQUIRE(report.contains("results"));
  CHECK(report["results"].size() == 8);
  CHECK(report["meta"]["seed"] == 2024);
}

TEST_CASE("run output is byte-stable for a fixed seed", "[cli]") {
  const fs::path dir = fresh_dir("run_repeat");
  const std::string config = (configs() / "isometry-tree.json").string();
  const RunResult a =
      run("run \"" + config + "\" --out-dir \"" + (dir / "a").string() + "\"", dir);
  const RunResult b =
      run("run \"" + config + "\" --out-dir \"" + (dir / "b").string() + "\"", dir);
  CHECK(a.exit_code == 0);
  CHECK(b.exit_code == 0);
  CHECK(read_file(dir / "a" / "results.csv") == read_file(dir / "b" / "results.csv"));
  const auto digest_line = [](const std::string& text) {
    const std::size_t pos = text.rfind("digest");
    REQUIRE(pos != std::string::npos);
    return text.substr(pos);
  };
  CHECK(digest_line(a.out) == digest_line(b.out));
}

TEST_CASE("run --format csv suppresses the json file", "[cli]") {
  const fs::path dir = fresh_dir("run_csv_only");
  const std::string config = (configs() / "isometry-tree.json").string();
  const RunResult r = run("run \"" + config + "\" --out-dir \"" + (dir / "out").string() +
                              "\" --format csv",
                          dir);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "out" / "results.csv"));
  CHECK_FALSE(fs::exists(dir / "out" / "results.json"));
}

TEST_CASE("run covers the full check suite end to end", "[cli]") {
  const fs::path dir = fresh_dir("run_full");
  const std::string config = (configs() / "full-suite.json").string();
  const RunResult r = run("run \"" + config + "\" --out-dir \"" + (dir / "out").string() + "\"", dir);
  INFO(r.out << r.err);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("[FAIL]") == std::string::npos);
  CHECK_THAT(r.out, ContainsSubstring("digest"));
  CHECK_THAT(r.out, ContainsSubstring("[PASS] multiplication/bound"));
  CHECK_THAT(r.out, ContainsSubstring("[PASS] holder/slope"));
}

TEST_CASE("sweep tabulates a metric and mirrors stdout into sweep.csv", "[cli]") {
  const fs::path dir = fresh_dir("sweep");
  const std::string config = (configs() / "density-sweep.json").string();
  const RunResult r = run("sweep \"" + config + "\" --param coarseness --values 8,2,4 --out-dir \"" +
                              (dir / "out").string() + "\"",
                          dir);
  INFO(r.out << r.err);
  CHECK(r.exit_code == 0);
  CHECK(r.out.rfind("parameter,value,metric,result\n", 0) == 0);
  CHECK_THAT(r.out, ContainsSubstring("coarseness,2,approximation_error,"));
  // Full resolution reproduces the process exactly, and values come out sorted.
  const std::string tail = "coarseness,8,approximation_error,0\n";
  REQUIRE(r.out.size() >= tail.size());
  CHECK(r.out.substr(r.out.size() - tail.size()) == tail);
  CHECK(read_file(dir / "out" / "sweep.csv") == r.out);
}

TEST_CASE("config problems exit with status 2", "[cli]") {
  const fs::path dir = fresh_dir("config_errors");

  SECTION("missing file") {
    const RunResult r = run("run \"" + (dir / "no_such.json").string() + "\"", dir);
    CHECK(r.exit_code == 2);
    CHECK_THAT(r.err, ContainsSubstring("config error:"));
    CHECK_THAT(r.err, ContainsSubstring("cannot open"));
  }

  SECTION("invalid JSON") {
    write_file(dir / "broken.json", "{ nope");
    const RunResult r = run("run \"" + (dir / "broken.json").string() + "\"", dir);
    CHECK(r.exit_code == 2);
    CHECK_THAT(r.err, ContainsSubstring("invalid JSON"));
  }

  SECTION("missing required field") {
    write_file(dir / "no_seed.json", R"({"checks": ["jensen"]})");
    const RunResult r = run("run \"" + (dir / "no_seed.json").string() + "\"", dir);
    CHECK(r.exit_code == 2);
    CHECK_THAT(r.err, ContainsSubstring("(root).seed"));
  }

  SECTION("unknown sweep parameter") {
    const std::string config = (configs() / "density-sweep.json").string();
    const RunResult r = run("sweep \"" + config + "\" --param voltage --values 1", dir);
    CHECK(r.exit_code == 2);
    CHECK_THAT(r.err, ContainsSubstring("unknown sweep parameter"));
  }
}

TEST_CASE("runtime failures exit with status 1", "[cli]") {
  const fs::path dir = fresh_dir("runtime_error");
  // A scaling family at the critical exponent is rejected by the library with a
  // plain invalid-argument error, which the driver reports as a runtime failure.
  write_file(dir / "critical.json", R"({
    "seed": 1,
    "checks": ["holder"],
    "martingale": {"backend": "exact_tree", "steps": 4, "scale": 1.0},
    "integrand": {"type": "holder_family", "params": [0.0, 0.5, 1.0], "beta": 0.5}
  })");
  const RunResult r = run("run \"" + (dir / "critical.json").string() + "\"", dir);
  INFO(r.out << r.err);
  CHECK(r.exit_code == 1);
  CHECK(r.err.rfind("error:", 0) == 0);
}

TEST_CASE("usage errors are nonzero", "[cli]") {
  const fs::path dir = fresh_dir("usage");
  const RunResult r = run("", dir);
  CHECK(r.exit_code != 0);
}

TEST_CASE("every shipped config runs green", "[cli]") {
  // Anything in configs/ is advertised as ready to run, so each file must
  // complete with every row passing, not just parse.
  const fs::path dir = fresh_dir("shipped_configs");
  std::size_t seen = 0;
  for (const fs::directory_entry& entry : fs::directory_iterator(configs())) {
    if (entry.path().extension() != ".json") continue;
    ++seen;
    DYNAMIC_SECTION(entry.path().filename().string()) {
      const RunResult r = run("run \"" + entry.path().string() + "\" --out-dir \"" +
                                  (dir / "out").string() + "\"",
                              dir);
      INFO(r.out << r.err);
      CHECK(r.exit_code == 0);
      CHECK(r.out.find("[FAIL]") == std::string::npos);
    }
  }
  CHECK(seen >= 4);
}
