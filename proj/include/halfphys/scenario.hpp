#pragma once

// File formats: scenario documents wiring body + motion + scene + config
// together, JSON-lines trajectory dumps, metrics reports, body definitions,
// and a Wavefront OBJ exporter for eyeballing single frames. All floats are
// written with 17 significant digits so a parse-write cycle is lossless.

#include <string>
#include <vector>

#include "halfphys/dynamics.hpp"
#include "halfphys/metrics.hpp"

namespace hp {

struct ScenarioFile {
  ArticulatedBodySpec body;
  MotionSequence motion;
  SceneSpec scene;
  SimConfig config;
  ControlMode mode = HalfPhysics{};
};

// Parse and resolve a scenario document: template or body file loaded, motion
// file read or synthesized, defaults filled in. Relative paths resolve
// against the scenario file's directory. Schema problems throw ConfigError,
// unreadable files IoError.
ScenarioFile load_scenario(const std::string& path);
ScenarioFile parse_scenario(const std::string& text, const std::string& base_dir);

// body definition files (links with parent/anchors/shape/mass)
ArticulatedBodySpec parse_body(const std::string& text);
ArticulatedBodySpec load_body(const std::string& path);

// one JSON object per line, one line per frame
void write_trajectory(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory(const std::string& path);

std::string metrics_to_json(const MetricsReport& report);

// static scene + body + objects of one frame as OBJ groups (capsules and
// spheres tessellated 16x8, boxes as 12 triangles, half spaces as large quads)
std::string export_frame_obj(const ArticulatedBodySpec& spec, const SimState& state,
                             const std::vector<std::string>& object_names,
                             const SceneSpec& scene);

}  // namespace hp
