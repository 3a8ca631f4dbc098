#pragma once

// Command implementations behind the `halfphys` binary, split out so tests
// can drive them in-process. Each returns a process exit code: 0 ok,
// 2 bad configuration, 3 simulation abort, 4 I/O failure.

#include <ostream>
#include <string>
#include <vector>

#include "halfphys/math.hpp"

namespace hp::cli {

struct RunOptions {
  std::string scenario_path;
  std::string trajectory_out;   //!< empty: don't write
  std::string metrics_out;      //!< empty: don't write the report file
  // overrides; negative / empty means "leave the scenario value alone"
  Real lambda = -1;
  int substeps = 0;
  int iterations = 0;
  std::string mode;  //!< "hp" | "pd" | "teleport"
};

struct SweepSpec {
  //! "pjsc_lambda" (alias "lambda") | "substeps" | "motion_speed" |
  //! "object_mass" | "object_friction"
  std::string param;
  std::vector<Real> values;
};

struct AblateOptions {
  std::string scenario_path;
  SweepSpec sweep;
  std::string csv_out;  //!< empty: print to stdout
};

struct BenchOptions {
  std::string scenario_path;
  int repeats = 3;
};

struct MetricsOptions {
  std::string scenario_path;
  std::string trajectory_path;
  std::string metrics_out;  //!< empty: print to stdout
};

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_metrics(const MetricsOptions& opts, std::ostream& out, std::ostream& err);
int cmd_ablate(const AblateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err);

// worker cap for sweep runs: HALFPHYS_THREADS when set, else hardware threads
int sweep_worker_cap();

}  // namespace hp::cli
