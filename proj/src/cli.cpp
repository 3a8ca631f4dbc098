#include "halfphys/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>
#include <variant>

#include "halfphys/scenario.hpp"

namespace hp::cli {

namespace {

// one place maps the error taxonomy onto exit codes
template <typename F>
int guarded(F&& body, std::ostream& err) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SimError& e) {
    err << "simulation error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return 4;
  }
}

std::string fmt(Real v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void apply_overrides(ScenarioFile& sf, const RunOptions& opts) {
  if (!opts.mode.empty()) {
    if (opts.mode == "hp") sf.mode = HalfPhysics{};
    else if (opts.mode == "pd") sf.mode = TorquePD{};
    else if (opts.mode == "teleport") sf.mode = PositionTeleport{};
    else throw ConfigError("cli: --mode must be one of hp, pd, teleport");
  }
  if (opts.lambda >= 0) {
    auto* hp_mode = std::get_if<HalfPhysics>(&sf.mode);
    if (!hp_mode) throw ConfigError("cli: --lambda only applies to hp mode");
    hp_mode->pjsc_lambda = opts.lambda;
  }
  if (opts.substeps > 0) sf.config.substeps = opts.substeps;
  if (opts.iterations > 0) sf.config.solver_iterations = opts.iterations;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  out << text;
  out.flush();
  if (!out.good()) throw IoError("error while writing file: " + path);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// nearest-rank percentile over a sorted sample
double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0;
  auto idx = static_cast<size_t>(std::llround(q * (sorted.size() - 1)));
  return sorted[idx];
}

}  // namespace

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded([&] {
    ScenarioFile sf = load_scenario(opts.scenario_path);
    apply_overrides(sf, opts);

    auto t0 = std::chrono::steady_clock::now();
    Trajectory traj = run(sf.body, sf.scene, sf.config, sf.mode, sf.motion);
    double secs = seconds_since(t0);

    MetricsReport rep = compute_metrics(traj, sf.motion, sf.body, sf.scene.statics);
    if (!opts.trajectory_out.empty()) write_trajectory(opts.trajectory_out, traj);
    if (!opts.metrics_out.empty()) write_text(opts.metrics_out, metrics_to_json(rep) + "\n");

    int stepped = std::max(0, sf.motion.frame_count() - 1);
    double fps = secs > 0 ? stepped / secs : 0;
    out << "run: " << rep.frames << " frames, mpjpe_g " << fmt(rep.mpjpe_g)
        << " mm, pene_rate " << fmt(rep.pene_rate) << " %, " << fmt(fps) << " fps\n";
    return 0;
  }, err);
}

int cmd_metrics(const MetricsOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded([&] {
    ScenarioFile sf = load_scenario(opts.scenario_path);
    Trajectory traj = read_trajectory(opts.trajectory_path);
    MetricsReport rep = compute_metrics(traj, sf.motion, sf.body, sf.scene.statics);
    if (opts.metrics_out.empty()) out << metrics_to_json(rep) << "\n";
    else write_text(opts.metrics_out, metrics_to_json(rep) + "\n");
    return 0;
  }, err);
}

int cmd_ablate(const AblateOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded([&] {
    ScenarioFile base = load_scenario(opts.scenario_path);
    const SweepSpec& sweep = opts.sweep;
    if (sweep.values.empty()) throw ConfigError("cli: sweep needs at least one value");
    bool is_lambda = sweep.param == "lambda" || sweep.param == "pjsc_lambda";
    bool known = is_lambda || sweep.param == "substeps" || sweep.param == "motion_speed" ||
                 sweep.param == "object_mass" || sweep.param == "object_friction";
    if (!known)
      throw ConfigError("cli: unknown sweep parameter '" + sweep.param +
                        "' (pjsc_lambda, substeps, motion_speed, object_mass, object_friction)");
    if (is_lambda && !std::holds_alternative<HalfPhysics>(base.mode))
      throw ConfigError("cli: a stiffness sweep needs hp mode");
    if ((sweep.param == "object_mass" || sweep.param == "object_friction") &&
        base.scene.objects.empty())
      throw ConfigError("cli: the scenario has no objects to sweep");

    struct Row {
      Real value = 0;
      bool ok = false;
      std::string error;
      Real displacement = 0;  // first object, final vs spawn position
      Real rise = 0;          // first object, final minus spawn height
      MetricsReport rep;
    };
    std::vector<Row> rows(sweep.values.size());

    std::atomic<size_t> cursor{0};
    auto worker = [&] {
      for (size_t i; (i = cursor.fetch_add(1)) < sweep.values.size();) {
        Row& row = rows[i];
        row.value = sweep.values[i];
        try {
          ScenarioFile sf = base;
          if (is_lambda) {
            if (row.value < 0) throw ConfigError("stiffness gain must be >= 0");
            std::get<HalfPhysics>(sf.mode).pjsc_lambda = row.value;
          } else if (sweep.param == "substeps") {
            int n = static_cast<int>(std::llround(row.value));
            if (n < 1 || n != row.value) throw ConfigError("substeps must be a positive integer");
            sf.config.substeps = n;
          } else if (sweep.param == "motion_speed") {
            // same poses traversed faster: scaling the frame rate scales every
            // enforced velocity by the factor while dt stays 1/fps
            if (!(row.value > 0)) throw ConfigError("motion speed factor must be positive");
            sf.motion.fps *= row.value;
          } else if (sweep.param == "object_mass") {
            if (!(row.value > 0)) throw ConfigError("object mass must be positive");
            for (RigidObjectSpec& obj : sf.scene.objects) obj.mass = row.value;
          } else {
            if (row.value < 0) throw ConfigError("object friction must be >= 0");
            for (RigidObjectSpec& obj : sf.scene.objects) obj.friction = row.value;
          }

          Trajectory traj = run(sf.body, sf.scene, sf.config, sf.mode, sf.motion);
          row.rep = compute_metrics(traj, sf.motion, sf.body, sf.scene.statics);
          if (!traj.frames.empty() && !traj.frames.front().objects.empty()) {
            const Vec3& from = traj.frames.front().objects[0].pose.pos;
            const Vec3& to = traj.frames.back().objects[0].pose.pos;
            row.displacement = norm(to - from);
            row.rise = to.z - from.z;
          }
          row.ok = true;
        } catch (const std::exception& e) {
          row.error = e.what();  // flagged in the table, sweep continues
        }
      }
    };

    int workers = std::min<int>(sweep_worker_cap(), static_cast<int>(sweep.values.size()));
    workers = std::max(workers, 1);
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();

    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.value < b.value; });

    std::string csv = "value,displacement,rise,mpjpe_g,pene_rate,status\n";
    for (const Row& row : rows) {
      csv += fmt(row.value);
      if (row.ok) {
        csv += ',' + fmt(row.displacement) + ',' + fmt(row.rise) + ',' +
               fmt(row.rep.mpjpe_g) + ',' + fmt(row.rep.pene_rate) + ",ok\n";
      } else {
        std::string quoted = row.error;
        for (size_t p = 0; (p = quoted.find('"', p)) != std::string::npos; p += 2)
          quoted.replace(p, 1, "\"\"");
        csv += ",,,,,\"error: " + quoted + "\"\n";
      }
    }
    if (opts.csv_out.empty()) out << csv;
    else write_text(opts.csv_out, csv);
    return 0;
  }, err);
}

int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded([&] {
    if (opts.repeats < 1) throw ConfigError("cli: bench needs repeats >= 1");
    ScenarioFile sf = load_scenario(opts.scenario_path);
    int stepped = std::max(1, sf.motion.frame_count() - 1);

    std::vector<double> fps;
    fps.reserve(opts.repeats);
    for (int r = 0; r < opts.repeats; ++r) {
      auto t0 = std::chrono::steady_clock::now();
      run(sf.body, sf.scene, sf.config, sf.mode, sf.motion);
      double secs = seconds_since(t0);
      fps.push_back(secs > 0 ? stepped / secs : 0);
    }
    std::sort(fps.begin(), fps.end());

    out << "bench: median " << fmt(percentile(fps, 0.5)) << " fps (p10 "
        << fmt(percentile(fps, 0.1)) << ", p90 " << fmt(percentile(fps, 0.9)) << ") over "
        << opts.repeats << " runs of " << stepped << " frames\n";
    return 0;
  }, err);
}

int sweep_worker_cap() {
  if (const char* env = std::getenv("HALFPHYS_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1) return static_cast<int>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

}  // namespace hp::cli
