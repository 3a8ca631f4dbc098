// `halfphys` binary: thin argument layer over the command implementations in
// halfphys/cli.hpp so everything interesting stays testable in-process.

#include <iostream>

#include "CLI11.hpp"
#include "halfphys/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"kinematic-humanoid / dynamic-object simulation sandbox"};
  app.require_subcommand(1);

  hp::cli::RunOptions run_opts;
  CLI::App* run_cmd = app.add_subcommand("run", "simulate a scenario and score the result");
  run_cmd->add_option("scenario", run_opts.scenario_path, "scenario JSON file")->required();
  run_cmd->add_option("--traj-out", run_opts.trajectory_out, "write the trajectory (JSON lines)");
  run_cmd->add_option("--metrics-out", run_opts.metrics_out, "write the metrics report (JSON)");
  run_cmd->add_option("--lambda", run_opts.lambda, "override the passive stiffness gain");
  run_cmd->add_option("--substeps", run_opts.substeps, "override the substep count");
  run_cmd->add_option("--iterations", run_opts.iterations, "override the solver iterations");
  run_cmd->add_option("--mode", run_opts.mode, "override the control mode (hp|pd|teleport)");

  hp::cli::MetricsOptions metrics_opts;
  CLI::App* metrics_cmd =
      app.add_subcommand("metrics", "re-score a saved trajectory against its scenario");
  metrics_cmd->add_option("scenario", metrics_opts.scenario_path, "scenario JSON file")
      ->required();
  metrics_cmd->add_option("trajectory", metrics_opts.trajectory_path, "trajectory JSON lines")
      ->required();
  metrics_cmd->add_option("--out", metrics_opts.metrics_out,
                          "write the report here instead of stdout");

  hp::cli::AblateOptions ablate_opts;
  CLI::App* ablate_cmd =
      app.add_subcommand("ablate", "sweep one parameter and tabulate the outcomes");
  ablate_cmd->add_option("scenario", ablate_opts.scenario_path, "scenario JSON file")
      ->required();
  ablate_cmd
      ->add_option("--param", ablate_opts.sweep.param,
                   "pjsc_lambda | substeps | motion_speed | object_mass | object_friction")
      ->required();
  ablate_cmd->add_option("--values", ablate_opts.sweep.values, "sweep values")
      ->required()
      ->delimiter(',');
  ablate_cmd->add_option("--csv-out", ablate_opts.csv_out,
                         "write the table here instead of stdout");

  hp::cli::BenchOptions bench_opts;
  CLI::App* bench_cmd = app.add_subcommand("bench", "time repeated runs of a scenario");
  bench_cmd->add_option("scenario", bench_opts.scenario_path, "scenario JSON file")->required();
  bench_cmd->add_option("--repeats", bench_opts.repeats, "number of timed runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exit clean, everything else is bad usage
  }

  if (run_cmd->parsed()) return hp::cli::cmd_run(run_opts, std::cout, std::cerr);
  if (metrics_cmd->parsed()) return hp::cli::cmd_metrics(metrics_opts, std::cout, std::cerr);
  if (ablate_cmd->parsed()) return hp::cli::cmd_ablate(ablate_opts, std::cout, std::cerr);
  return hp::cli::cmd_bench(bench_opts, std::cout, std::cerr);
}
