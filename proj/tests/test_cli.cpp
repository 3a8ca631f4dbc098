// In-process command tests: exit codes, file outputs, determinism, the sweep
// table, and the environment-driven worker cap.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "halfphys/cli.hpp"
#include "json.hpp"

using namespace hp;

namespace {

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / "hp_cli_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
  auto path = scratch_dir() / name;
  std::ofstream out(path);
  out << text;
  REQUIRE(out.good());
  return path.string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// chain body over a floor with one rolling ball: every command has something
// to chew on, yet a run takes milliseconds
std::string base_scenario() {
  static std::string path = write_file("cli_base.json", R"({
    "body": {"template": "chain3"},
    "motion": {"synth": {"kind": "static", "frames": 20, "height": 1.5}},
    "scene": {
      "static": [{"name": "floor",
                  "shape": {"type": "halfspace", "normal": [0, 0, 1], "offset": 0}}],
      "objects": [{"name": "ball", "shape": {"type": "sphere", "radius": 0.1},
                   "mass": 1.0, "pose": {"pos": [1, 0, 0.1]}, "lin_vel": [0.4, 0, 0]}]
    },
    "config": {"substeps": 4, "iterations": 8}
  })");
  return path;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(cell);
  return cells;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("run writes the trajectory and report and prints a summary") {
  cli::RunOptions opts;
  opts.scenario_path = base_scenario();
  opts.trajectory_out = (scratch_dir() / "run_traj.jsonl").string();
  opts.metrics_out = (scratch_dir() / "run_metrics.json").string();

  std::ostringstream out, err;
  REQUIRE(cli::cmd_run(opts, out, err) == 0);
  CHECK(err.str().empty());
  CHECK(out.str().find("run: 20 frames") != std::string::npos);
  CHECK(out.str().find("fps") != std::string::npos);

  CHECK(split_lines(read_file(opts.trajectory_out)).size() == 20);

  auto rep = nlohmann::json::parse(read_file(opts.metrics_out));
  CHECK(rep["frames"].get<int>() == 20);
  CHECK(rep["mpjpe_g"].get<double>() == 0.0);  // untouched chain stays exact
  CHECK(rep["pene_rate"].get<double>() == 0.0);
  CHECK(rep["success"].get<bool>());
}

TEST_CASE("repeated runs produce byte-identical files") {
  cli::RunOptions opts;
  opts.scenario_path = base_scenario();
  opts.trajectory_out = (scratch_dir() / "det_a.jsonl").string();
  opts.metrics_out = (scratch_dir() / "det_a_metrics.json").string();
  std::ostringstream out, err;
  REQUIRE(cli::cmd_run(opts, out, err) == 0);

  cli::RunOptions again = opts;
  again.trajectory_out = (scratch_dir() / "det_b.jsonl").string();
  again.metrics_out = (scratch_dir() / "det_b_metrics.json").string();
  REQUIRE(cli::cmd_run(again, out, err) == 0);

  CHECK(read_file(opts.trajectory_out) == read_file(again.trajectory_out));
  CHECK(read_file(opts.metrics_out) == read_file(again.metrics_out));
}

TEST_CASE("rescoring a saved trajectory reproduces the report exactly") {
  cli::RunOptions ropts;
  ropts.scenario_path = base_scenario();
  ropts.trajectory_out = (scratch_dir() / "rescore.jsonl").string();
  ropts.metrics_out = (scratch_dir() / "rescore_metrics.json").string();
  std::ostringstream out, err;
  REQUIRE(cli::cmd_run(ropts, out, err) == 0);

  cli::MetricsOptions mopts;
  mopts.scenario_path = ropts.scenario_path;
  mopts.trajectory_path = ropts.trajectory_out;
  std::ostringstream mout, merr;
  REQUIRE(cli::cmd_metrics(mopts, mout, merr) == 0);
  CHECK(mout.str() == read_file(ropts.metrics_out));

  // a truncated trajectory no longer matches the reference length
  auto lines = split_lines(read_file(ropts.trajectory_out));
  lines.pop_back();
  std::string joined;
  for (const std::string& l : lines) joined += l + "\n";
  mopts.trajectory_path = write_file("rescore_short.jsonl", joined);
  CHECK(cli::cmd_metrics(mopts, mout, merr) == 2);
}

TEST_CASE("failures map onto the documented exit codes") {
  std::ostringstream out, err;

  cli::RunOptions missing;
  missing.scenario_path = (scratch_dir() / "missing.json").string();
  CHECK(cli::cmd_run(missing, out, err) == 4);

  cli::RunOptions bad;
  bad.scenario_path = write_file("bad_mode.json", R"({
    "body": {"template": "chain3"},
    "motion": {"synth": {"kind": "static", "frames": 2}},
    "mode": "ragdoll"
  })");
  CHECK(cli::cmd_run(bad, out, err) == 2);
  CHECK(err.str().find("config error") != std::string::npos);

  cli::RunOptions unwritable;
  unwritable.scenario_path = base_scenario();
  unwritable.metrics_out = "/nonexistent_dir_zz/report.json";
  CHECK(cli::cmd_run(unwritable, out, err) == 4);
}

TEST_CASE("command-line overrides change the run") {
  cli::RunOptions a;
  a.scenario_path = base_scenario();
  a.trajectory_out = (scratch_dir() / "ovr_a.jsonl").string();
  std::ostringstream out, err;
  REQUIRE(cli::cmd_run(a, out, err) == 0);

  cli::RunOptions b = a;
  b.trajectory_out = (scratch_dir() / "ovr_b.jsonl").string();
  b.substeps = 16;
  REQUIRE(cli::cmd_run(b, out, err) == 0);
  CHECK(read_file(a.trajectory_out) != read_file(b.trajectory_out));

  cli::RunOptions bad_mode = a;
  bad_mode.mode = "floppy";
  CHECK(cli::cmd_run(bad_mode, out, err) == 2);

  cli::RunOptions pd_lambda = a;
  pd_lambda.mode = "pd";
  pd_lambda.lambda = 1.0;  // stiffness gain has no meaning under torque control
  CHECK(cli::cmd_run(pd_lambda, out, err) == 2);
}

TEST_CASE("a mass sweep tabulates one ordered row per value") {
  cli::AblateOptions opts;
  opts.scenario_path = base_scenario();
  opts.sweep.param = "object_mass";
  opts.sweep.values = {5.0, 0.5};
  opts.csv_out = (scratch_dir() / "sweep.csv").string();

  std::ostringstream out, err;
  REQUIRE(cli::cmd_ablate(opts, out, err) == 0);

  auto lines = split_lines(read_file(opts.csv_out));
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "value,displacement,rise,mpjpe_g,pene_rate,status");
  auto row0 = split_csv_row(lines[1]);
  auto row1 = split_csv_row(lines[2]);
  REQUIRE(row0.size() == 6);
  REQUIRE(row1.size() == 6);
  CHECK(std::stod(row0[0]) == 0.5);  // sorted ascending
  CHECK(std::stod(row1[0]) == 5.0);
  CHECK(row0[5] == "ok");
  CHECK(row1[5] == "ok");
  CHECK(std::stod(row0[1]) > 0.0);  // the rolling ball moved
}

TEST_CASE("sweep failures are flagged without sinking the table") {
  cli::AblateOptions opts;
  opts.scenario_path = base_scenario();
  opts.sweep.param = "object_mass";
  opts.sweep.values = {-1.0, 1.0};

  std::ostringstream out, err;
  REQUIRE(cli::cmd_ablate(opts, out, err) == 0);
  auto lines = split_lines(out.str());
  REQUIRE(lines.size() == 3);
  CHECK(lines[1].find("error:") != std::string::npos);
  CHECK(lines[2].find("ok") != std::string::npos);
}

TEST_CASE("a contact-free lambda sweep changes nothing") {
  std::string path = write_file("cli_free.json", R"({
    "body": {"template": "chain3"},
    "motion": {"synth": {"kind": "sine_joints", "frames": 15}},
    "config": {"substeps": 4}
  })");
  cli::AblateOptions opts;
  opts.scenario_path = path;
  opts.sweep.param = "lambda";
  opts.sweep.values = {0.0, 1.0};

  std::ostringstream out, err;
  REQUIRE(cli::cmd_ablate(opts, out, err) == 0);
  auto lines = split_lines(out.str());
  REQUIRE(lines.size() == 3);
  auto row0 = split_csv_row(lines[1]);
  auto row1 = split_csv_row(lines[2]);
  CHECK(row0[3] == row1[3]);  // identical tracking columns
  CHECK(row0[4] == row1[4]);

  opts.sweep.param = "object_mass";  // nothing to sweep here
  CHECK(cli::cmd_ablate(opts, out, err) == 2);
  opts.sweep.param = "wingspan";
  CHECK(cli::cmd_ablate(opts, out, err) == 2);
  opts.sweep.param = "lambda";
  opts.sweep.values = {};
  CHECK(cli::cmd_ablate(opts, out, err) == 2);
}

TEST_CASE("pjsc_lambda names the same sweep as lambda") {
  cli::AblateOptions opts;
  opts.scenario_path = base_scenario();
  opts.sweep.param = "pjsc_lambda";
  opts.sweep.values = {0.0};

  std::ostringstream out, err;
  REQUIRE(cli::cmd_ablate(opts, out, err) == 0);
  CHECK(split_lines(out.str()).size() == 2);
}

TEST_CASE("a motion speed sweep rescales the playback rate") {
  cli::AblateOptions opts;
  opts.scenario_path = base_scenario();
  opts.sweep.param = "motion_speed";
  opts.sweep.values = {1.0, 2.0, -0.5};

  std::ostringstream out, err;
  REQUIRE(cli::cmd_ablate(opts, out, err) == 0);
  auto lines = split_lines(out.str());
  REQUIRE(lines.size() == 4);
  CHECK(lines[1].find("error:") != std::string::npos);  // -0.5 sorted first, rejected
  auto row1x = split_csv_row(lines[2]);
  auto row2x = split_csv_row(lines[3]);
  CHECK(row1x[5] == "ok");
  CHECK(row2x[5] == "ok");
  // the same 20 frames span half the time at 2x, so the coasting ball,
  // launched at a fixed 0.4 m/s, covers about half the distance
  double d1 = std::stod(row1x[1]);
  double d2 = std::stod(row2x[1]);
  CHECK(d2 < 0.7 * d1);
  CHECK(d2 > 0.3 * d1);
}

TEST_CASE("bench reports a median with spread") {
  cli::BenchOptions opts;
  opts.scenario_path = base_scenario();
  opts.repeats = 2;
  std::ostringstream out, err;
  REQUIRE(cli::cmd_bench(opts, out, err) == 0);
  CHECK(out.str().find("median") != std::string::npos);
  CHECK(out.str().find("p90") != std::string::npos);

  opts.repeats = 0;
  CHECK(cli::cmd_bench(opts, out, err) == 2);
}

TEST_CASE("the worker cap follows HALFPHYS_THREADS") {
  setenv("HALFPHYS_THREADS", "3", 1);
  CHECK(cli::sweep_worker_cap() == 3);
  setenv("HALFPHYS_THREADS", "junk", 1);
  CHECK(cli::sweep_worker_cap() >= 1);
  setenv("HALFPHYS_THREADS", "0", 1);
  CHECK(cli::sweep_worker_cap() >= 1);
  unsetenv("HALFPHYS_THREADS");
  CHECK(cli::sweep_worker_cap() >= 1);
}

TEST_SUITE_END();
