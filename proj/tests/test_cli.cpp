#include <doctest.h>

#include <cstdlib>
#include <string>
#include <sys/wait.h>

#include "spectool/commands.hpp"
#include "spectool/error.hpp"
#include "spectool/io.hpp"
#include "spectool/serialize.hpp"
#include "support.hpp"

using namespace spectool;
using testsupport::read_file;
using testsupport::TempDir;
using testsupport::write_file;

namespace {

int run_config(const TempDir& dir, const std::string& command, const std::string& config,
               const std::string& out, const std::string& sub = "",
               std::optional<std::filesystem::path> model = std::nullopt) {
  write_file(dir / (out + ".json"), config);
  cli::RunOptions o;
  o.command = command;
  o.subcommand = sub;
  o.config = dir / (out + ".json");
  o.out = dir / out;
  o.model = model;
  return cli::run_and_report(o);
}

int shell_exit(const std::string& args) {
  const std::string cmd = std::string(SPECTOOL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kStabilityBase = R"({
  "operator": {"manifold": "circle", "samples": 80},
  "gamma": 0.2,
  "epsilons": EPS,
  "architectures": [[1, 1], [2, 2]],
  "trials": 2,
  "families": ["eigenbasis_diagonal", "scalar"],
  "seed": 3
})";

std::string stability_config(const std::string& eps) {
  std::string s = kStabilityBase;
  s.replace(s.find("EPS"), 3, eps);
  return s;
}

const char* kWireless = R"({
  "network": {"n": 8, "seed": 4},
  "policy": {"layers": [1, 2], "width": 2, "taps": 3, "gamma": 0.1},
  "train": {"iters": LR_ITERS, "lr": LR, "batch": 2, "seeds": [0, 1], "curve_stride": 1},
  "evaluate": {"draws": 10},
  "robustness": {"sigmas": [0.0, 0.1], "draws": 10},
  "seed": 2
})";

std::string wireless_config(const std::string& lr, int iters) {
  std::string s = kWireless;
  s.replace(s.find("LR_ITERS"), 8, std::to_string(iters));
  s.replace(s.find("LR"), 2, lr);
  return s;
}

}  // namespace

TEST_CASE("spectrum command on the analytic circle") {
  TempDir dir("spectrum");
  const std::string cfg = R"({"operator": {"manifold": "circle", "analytic": true}, "gamma": 0.3, "eigenvalues": 11})";
  REQUIRE(run_config(dir, "spectrum", cfg, "a") == 0);
  const auto part = serial::read_json_file(dir / "a" / "partition.json");
  CHECK(part["zero_group"] == serial::Json::array({0, 1}));
  REQUIRE(part["groups"].size() == 5);
  for (const auto& g : part["groups"]) CHECK(g[1].get<int>() - g[0].get<int>() == 2);
  CHECK(std::filesystem::exists(dir / "a" / "eigenvalues.csv"));
  CHECK(std::filesystem::exists(dir / "a" / "gap_profile.csv"));
  const auto manifest = serial::read_json_file(dir / "a" / "manifest.json");
  CHECK(manifest["command"] == "spectrum");
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["tool_version"] == cli::kToolVersion);

  REQUIRE(run_config(dir, "spectrum", cfg, "b") == 0);
  for (const char* f : {"eigenvalues.csv", "partition.json", "gap_profile.csv", "summary.json"}) {
    CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));
  }
}

TEST_CASE("spectrum command errors") {
  TempDir dir("spectrum_err");
  CHECK(run_config(dir, "spectrum", R"({"operator": {"point_cloud": "nope.csv", "manifold_dim": 1}, "gamma": 0.3})",
                   "missing") == 2);
  CHECK(run_config(dir, "spectrum", R"({"operator": {"manifold": "circle", "samples": 20, "knn": 20}, "gamma": 0.3})",
                   "knn") == 2);
  CHECK(run_config(dir, "spectrum", R"({"operator": {"manifold": "circle"}, "gamma": 0.3, "typo": 1})",
                   "unknown") == 2);
  CHECK(run_config(dir, "spectrum", R"({"operator": {"manifold": "circle"}, "gamma": 1.5})", "gamma") == 2);
  cli::RunOptions o;
  o.command = "spectrum";
  o.config = dir / "absent.json";
  o.out = dir / "x";
  CHECK(cli::run_and_report(o) == 2);
}

TEST_CASE("spectrum command reads point clouds relative to the config") {
  TempDir dir("spectrum_cloud");
  const PointCloud cloud = sample_manifold(Circle{1.0}, 60, 1);
  write_point_cloud_csv(dir / "cloud.csv", cloud);
  CHECK(run_config(dir, "spectrum",
                   R"({"operator": {"point_cloud": "cloud.csv", "manifold_dim": 1, "knn": 10}, "gamma": 0.2, "eigenvalues": 8})",
                   "pc") == 0);
  const auto rows = io::read_numeric_csv(dir / "pc" / "eigenvalues.csv");
  CHECK(rows.size() == 8);
}

TEST_CASE("stability command") {
  TempDir dir("stability");
  REQUIRE(run_config(dir, "stability", stability_config("[0.01, 0.2]"), "ok") == 0);
  const auto summary = serial::read_json_file(dir / "ok" / "summary.json");
  CHECK(summary["violations"] == 0);
  CHECK(summary["rows"] == 2 * 2 * 2 * 2);

  REQUIRE(run_config(dir, "stability", stability_config("[0.01, 0.2]"), "again") == 0);
  CHECK(read_file(dir / "ok" / "stability_report.csv") == read_file(dir / "again" / "stability_report.csv"));
  CHECK(read_file(dir / "ok" / "summary.json") == read_file(dir / "again" / "summary.json"));

  CHECK(run_config(dir, "stability", stability_config("[0.25]"), "over") == 2);
  CHECK(run_config(dir, "stability", stability_config("[2.5]"), "domain") == 3);
  CHECK(run_config(dir, "stability", stability_config("[]"), "empty") == 2);
}

TEST_CASE("stability precondition message names the hypothesis") {
  TempDir dir("stability_msg");
  write_file(dir / "c.json", stability_config("[0.3]"));
  cli::RunOptions o;
  o.command = "stability";
  o.config = dir / "c.json";
  o.out = dir / "o";
  try {
    cli::run(o);
    FAIL("expected a usage error");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("eps <= gamma") != std::string::npos);
  }
}

TEST_CASE("wireless train, evaluate and robustness") {
  TempDir dir("wireless");
  REQUIRE(run_config(dir, "wireless", wireless_config("0.05", 15), "train", "train") == 0);
  const auto model = dir / "train" / "model.json";
  REQUIRE(std::filesystem::exists(model));
  const auto bundle = serial::read_json_file(model);
  CHECK(bundle["models"].size() == 4);

  REQUIRE(run_config(dir, "wireless", wireless_config("0.05", 15), "train2", "train") == 0);
  CHECK(read_file(model) == read_file(dir / "train2" / "model.json"));
  CHECK(read_file(dir / "train" / "training_curve.csv") == read_file(dir / "train2" / "training_curve.csv"));

  REQUIRE(run_config(dir, "wireless", wireless_config("0.05", 15), "eval", "evaluate", model) == 0);
  CHECK(io::read_numeric_csv(dir / "eval" / "evaluation.csv").size() == 4);

  REQUIRE(run_config(dir, "wireless", wireless_config("0.05", 15), "rob", "robustness", model) == 0);
  const auto rob = io::read_numeric_csv(dir / "rob" / "robustness.csv");
  REQUIRE(rob.size() == 8);
  for (const auto& r : rob) {
    if (r[2] == 0.0) CHECK(r[6] == 0.0);
  }
  CHECK(std::filesystem::exists(dir / "rob" / "robustness_trend.csv"));

  CHECK(run_config(dir, "wireless", wireless_config("0.05", 15), "nomodel", "evaluate") == 2);
  CHECK(run_config(dir, "wireless", wireless_config("0.05", 15), "badmodel", "robustness",
                   dir / "none.json") == 2);
}

TEST_CASE("zero learning rate gives a flat training curve") {
  TempDir dir("wireless_flat");
  REQUIRE(run_config(dir, "wireless", wireless_config("0", 12), "t", "train") == 0);
  const auto rows = io::read_numeric_csv(dir / "t" / "training_curve.csv");
  REQUIRE(rows.size() == 4 * 12);
  // columns: L F seed iter lagrangian sum_rate power mu nominal_sum_rate nominal_power
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& first = rows[i - i % 12];
    CHECK(rows[i][7] == 0.0);
    CHECK(rows[i][8] == first[8]);
    CHECK(rows[i][9] == first[9]);
  }
}

TEST_CASE("thread count resolution") {
  ::setenv(cli::kThreadsEnv, "3", 1);
  CHECK(cli::resolve_threads(std::nullopt) == 3);
  CHECK(cli::resolve_threads(2) == 2);
  ::unsetenv(cli::kThreadsEnv);
  CHECK(cli::resolve_threads(std::nullopt) >= 1);
}

TEST_CASE("executable exit codes") {
  TempDir dir("exe");
  CHECK(shell_exit("--version") == 0);
  CHECK(shell_exit("spectrum") == 2);
  CHECK(shell_exit("bogus --config x --out y") == 2);
  CHECK(shell_exit("spectrum --config " + (dir / "none.json").string() + " --out " + (dir / "o").string()) == 2);
  write_file(dir / "c.json", stability_config("[2.5]"));
  CHECK(shell_exit("stability --config " + (dir / "c.json").string() + " --out " + (dir / "o").string()) == 3);
}
