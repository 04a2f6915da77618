#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "harmctl/cli.hpp"
#include "helpers.hpp"

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = harm::cli::run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::vector<std::string> fixture_data() {
  return {"--scores", fixture("scores_small.csv").string(), "--humans", fixture("humans_small.csv").string()};
}

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("cli: help and version") {
  CHECK(run({"--version"}).code == 0);
  CHECK(run({"--version"}).out.find(harm::cli::kVersion) != std::string::npos);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("cli: exit codes") {
  auto bad = run({"nonsense"});
  CHECK(bad.code == 1);
  auto j = nlohmann::json::parse(bad.err);
  CHECK(j["exit_code"] == 1);
  CHECK(j.contains("error"));

  CHECK(run(with({"calibrate", "--alpha", "0.01"}, fixture_data())).code == 2);
  CHECK(run(with({"calibrate", "--alpha", "0.3", "--mode", "interventional", "--alpha-prime", "0.3"},
                 fixture_data()))
            .code == 2);
  CHECK(run({"calibrate", "--scores", "/nonexistent/s.csv", "--humans", "/nonexistent/h.csv"}).code == 3);
  CHECK(run({"simulate", "--synthetic", "--regime", "sideways"}).code == 1);
  CHECK(run({"simulate", "--success-profile", "0.5,0.9", "--labels", "2", "--reps", "2"}).code == 1);
  CHECK(run(with({"risk", "--lambda-grid", "0.5,0.2"}, fixture_data())).code == 1);
}

TEST_CASE("cli: calibrate output") {
  auto r = run(with({"calibrate", "--alpha", "0.2"}, fixture_data()));
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j.contains("provenance"));
  CHECK(j["provenance"]["seed"] == 7);
}

TEST_CASE("cli: tradeoff output is byte-identical across runs and job counts") {
  auto dir_a = scratch_dir("cli_a");
  auto dir_b = scratch_dir("cli_b");
  const std::vector<std::string> common = {"--synthetic", "--labels", "6", "--n-instances", "300",
                                           "--repetitions", "5", "--lambda-grid", "0:1:0.01",
                                           "--alpha", "0.2"};
  REQUIRE(run(with(with({"tradeoff", "--jobs", "1", "--out", dir_a.string()}, common), {})).code == 0);
  REQUIRE(run(with(with({"tradeoff", "--jobs", "3", "--out", dir_b.string()}, common), {})).code == 0);
  const auto a = slurp(dir_a / "tradeoff.csv");
  CHECK(a == slurp(dir_b / "tradeoff.csv"));
  CHECK(line_count(a) == 102);
  CHECK(std::filesystem::exists(dir_a / "report.json"));
}

TEST_CASE("cli: config file values match flags, flags win") {
  auto dir = scratch_dir("cli_config");
  {
    std::ofstream cfg(dir / "c.json");
    cfg << R"({"alpha": 0.25, "lambda_grid": "0:1:0.05"})";
  }
  auto via_file = run(with({"risk", "--config", (dir / "c.json").string()}, fixture_data()));
  auto via_flags = run(with({"risk", "--lambda-grid", "0:1:0.05"}, fixture_data()));
  REQUIRE(via_file.code == 0);
  CHECK(via_file.out == via_flags.out);
  auto override_grid = run(with({"risk", "--config", (dir / "c.json").string(), "--lambda-grid", "0:1:0.5"},
                                fixture_data()));
  REQUIRE(override_grid.code == 0);
  CHECK(line_count(override_grid.out) == 4);
}

TEST_CASE("cli: seed from the environment") {
  const std::vector<std::string> cmd = {"tradeoff", "--synthetic", "--labels", "5", "--n-instances", "200",
                                        "--repetitions", "2", "--lambda-grid", "0:1:0.1", "--alpha", "0.3"};
  auto d1 = scratch_dir("cli_env1");
  auto d2 = scratch_dir("cli_env2");
  ::setenv("HARMCTL_SEED", "99", 1);
  REQUIRE(run(with(cmd, {"--out", d1.string()})).code == 0);
  ::unsetenv("HARMCTL_SEED");
  REQUIRE(run(with(cmd, {"--out", d2.string(), "--seed", "99"})).code == 0);
  CHECK(slurp(d1 / "tradeoff.csv") == slurp(d2 / "tradeoff.csv"));
  auto rep = nlohmann::json::parse(slurp(d1 / "report.json"));
  CHECK(rep["provenance"]["seed"] == 99);
}

TEST_CASE("cli: risk and accuracy CSVs") {
  auto r = run(with({"risk", "--lambda-step", "0.001"}, fixture_data()));
  REQUIRE(r.code == 0);
  CHECK(line_count(r.out) == 1002);
  CHECK(r.out.rfind("lambda,H_hat,G_hat,lower,upper\n", 0) == 0);
  auto a = run(with({"accuracy", "--calib-frac", "0.5", "--quantile-cuts", "0.5"}, fixture_data()));
  REQUIRE(a.code == 0);
  CHECK(a.out.rfind("lambda,A\n", 0) == 0);
  CHECK(line_count(a.out) == 1002);
  auto c = run(with({"coverage"}, fixture_data()));
  REQUIRE(c.code == 0);
  CHECK(line_count(c.out) == 1002);
}

TEST_CASE("cli: verify-monotonicity and simulate") {
  auto dir = scratch_dir("cli_mono");
  auto v = run(with({"verify-monotonicity", "--sets", fixture("sets_small.csv").string(), "--min-count", "1",
                     "--out", dir.string()},
                    fixture_data()));
  REQUIRE(v.code == 0);
  CHECK(std::filesystem::exists(dir / "report.json"));
  CHECK(std::filesystem::exists(dir / "monotonicity"));

  auto world = scratch_dir("cli_world");
  auto s = run({"simulate", "--labels", "6", "--reps", "3", "--n-calib", "100", "--n-test", "200",
                "--dump-world", world.string()});
  REQUIRE(s.code == 0);
  auto j = nlohmann::json::parse(s.out);
  CHECK(j["repetitions"] == 3);
  CHECK(std::filesystem::exists(world / "noise.csv"));
  auto reload = run({"risk", "--world", world.string(), "--lambda-grid", "0,1"});
  CHECK(reload.code == 0);
}

TEST_CASE("cli: unknown config keys are rejected") {
  auto dir = scratch_dir("cli_config_bad");
  {
    std::ofstream cfg(dir / "c.json");
    cfg << R"({"alpah": 0.25})";
  }
  CHECK(run(with({"risk", "--config", (dir / "c.json").string()}, fixture_data())).code == 1);
}

TEST_CASE("cli: calibrate variants") {
  auto small = run(with({"calibrate", "--alpha", "0.04", "--n", "20"}, fixture_data()));
  CHECK(small.code == 2);
  CHECK(nlohmann::json::parse(small.err)["error"] == "AlphaTooSmall");
  auto interv = run({"calibrate", "--synthetic", "--labels", "8", "--n-instances", "400", "--mode", "interventional",
                     "--alpha", "0.24", "--auto-alpha-prime"});
  REQUIRE(interv.code == 0);
  auto j = nlohmann::json::parse(interv.out);
  CHECK(j.dump().find("alpha_prime") != std::string::npos);
  auto sim = run({"simulate", "--regime", "interv", "--labels", "6", "--reps", "2", "--n-calib", "100", "--n-test",
                  "200", "--alpha", "0.3", "--lambda-grid", "0:1:0.1"});
  REQUIRE(sim.code == 0);
  auto s = nlohmann::json::parse(sim.out);
  REQUIRE(s.contains("sandwich"));
  CHECK(s["sandwich"].size() == 11);
  CHECK(s["sandwich"][0].contains("slack_lower"));
}

TEST_CASE("cli: the config recorded in report.json replays the run") {
  auto first = scratch_dir("cli_replay1");
  auto second = scratch_dir("cli_replay2");
  REQUIRE(run({"tradeoff", "--synthetic", "--labels", "5", "--n-instances", "200", "--repetitions", "3",
               "--lambda-grid", "0:1:0.05", "--seed", "11", "--out", first.string()})
              .code == 0);
  auto recorded = nlohmann::json::parse(slurp(first / "report.json"))["provenance"]["config"];
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : recorded.items()) {
    if (k == "out" || v == "" || v == false) continue;
    cfg[k] = v;
  }
  {
    std::ofstream out(second / "c.json");
    out << cfg.dump();
  }
  REQUIRE(run({"tradeoff", "--config", (second / "c.json").string(), "--out", second.string()}).code == 0);
  CHECK(slurp(first / "tradeoff.csv") == slurp(second / "tradeoff.csv"));
}
