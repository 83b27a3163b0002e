#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef YM_CLI_PATH
#define YM_CLI_PATH "ym"
#endif

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(YM_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  while (fgets(buf, sizeof(buf), pipe) != nullptr) r.output += buf;
  const int status = pclose(pipe);
  r.exit_code = WEXITSTATUS(status);
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::filesystem::path temp_dir() {
  auto d = std::filesystem::temp_directory_path() / "ym_cli_test";
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("cli: flow output is byte-for-byte reproducible") {
  const auto dir = temp_dir();
  const std::string out1 = (dir / "traj1.csv").string();
  const std::string out2 = (dir / "traj2.csv").string();
  const std::string args =
      "flow --grid 8 --base pi/2,pi/2 --init random:0.05 --seed 7 --t-max 2 --tol 1e-7 "
      "--stride 4 --out ";
  const RunResult r1 = run_cli(args + out1);
  const RunResult r2 = run_cli(args + out2);
  CHECK(r1.exit_code == 0);
  CHECK(r2.exit_code == 0);
  const std::string c1 = slurp(out1);
  CHECK(c1 == slurp(out2));
  CHECK(c1.rfind("t,energy,grad_l2,slice_residual,dist_l2,arclength\n", 0) == 0);
  CHECK(slurp(out1 + ".json") == slurp(out2 + ".json"));
}

TEST_CASE("cli: malformed config is a config error naming the key") {
  const auto dir = temp_dir();
  const std::string cfg = (dir / "bad.json").string();
  {
    std::ofstream os(cfg);
    os << "{\"grid\": 8, \"gird\": 16}\n";
  }
  const RunResult r = run_cli("flow --config " + cfg);
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("gird") != std::string::npos);

  // Invalid JSON is also a config error.
  {
    std::ofstream os(cfg);
    os << "{\"grid\": }\n";
  }
  const RunResult r2 = run_cli("flow --config " + cfg);
  CHECK(r2.exit_code == 2);
}

TEST_CASE("cli: config supplies values and flags override them") {
  const auto dir = temp_dir();
  const std::string cfg = (dir / "ok.json").string();
  const std::string out = (dir / "cfg_run.csv").string();
  {
    std::ofstream os(cfg);
    os << "{\"grid\": 8, \"base\": \"0,0\", \"init\": \"at-ray:0.1\", \"t_max\": 1.0, "
          "\"grad_tol\": 0.0}\n";
  }
  const RunResult r = run_cli("flow --config " + cfg + " --t-max 0.5 --out " + out);
  CHECK(r.exit_code == 1);  // grad_tol 0 cannot be reached: flagged, not crashed
  const std::string csv = slurp(out);
  CHECK(csv.find("t,energy") == 0);
}

TEST_CASE("cli: named angle constants parse exactly") {
  const RunResult r = run_cli("pillowcase --grid 8 --base pi/2,pi --init zero");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("\"alpha\": 1.5707963267948966") != std::string::npos);
  CHECK(r.output.find("\"beta\": 3.1415926535897931") != std::string::npos);
}

TEST_CASE("cli: unknown flags and missing subcommand are config errors") {
  CHECK(run_cli("flow --no-such-flag 3").exit_code == 2);
  CHECK(run_cli("").exit_code == 2);
}

TEST_CASE("cli: retraction of flat data returns its own point") {
  const RunResult r = run_cli("retract --grid 8 --base 1.0,0.5 --init zero --t-max 1");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("\"alpha\": 1") != std::string::npos);
}

TEST_CASE("cli: snapshots round-trip through flow runs") {
  const auto dir = temp_dir();
  const std::string snap = (dir / "terminal.json").string();
  const std::string out = (dir / "resume.csv").string();
  // Produce a terminal snapshot, then feed it back as initial data.
  const RunResult r1 = run_cli(
      "flow --grid 8 --base 0,0 --init at-ray:0.1 --t-max 1 --tol 0 --save-terminal " + snap);
  CHECK(r1.exit_code == 1);  // tol 0 is unreachable; snapshot still written
  const RunResult r2 =
      run_cli("flow --grid 8 --base 0,0 --init snapshot:" + snap + " --t-max 1 --tol 1 --out " + out);
  CHECK(r2.exit_code == 0);
  // Energy of the reloaded state matches the closed form at t = 1 for the
  // constant ray: 2 s(1)^4 with s(1) = (0.1^-2 + 8)^{-1/2}.
  const nlohmann::json js = nlohmann::json::parse(slurp(out + ".json"));
  const double s1 = 1.0 / std::sqrt(100.0 + 8.0);
  CHECK(js["energy_initial"].get<double>() ==
        Catch::Approx(2.0 * std::pow(s1, 4)).epsilon(1e-5));
}

TEST_CASE("cli: selftest passes on a clean build") {
  const RunResult r = run_cli("selftest");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("lie:") != std::string::npos);
  CHECK(r.output.find("FAIL") == std::string::npos);
}
