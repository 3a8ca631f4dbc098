#include "halfphys/scenario.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace hp {

namespace {

using nlohmann::json;

// every validation failure carries the path of the offending field, e.g.
// "scenario.scene.objects[0].mass"
[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + " " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path + "." + key;
}

std::string at(const std::string& path, size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

const json& member(const json& obj, const std::string& path, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) fail(join(path, key), "is required");
  return obj.at(key);
}

void require_keys(const json& obj, const std::string& path,
                  std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) fail(join(path, item.key()), "is not a recognized field");
  }
}

Real as_real(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "must be a number");
  Real v = j.get<Real>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "must be an integer");
  return j.get<int>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "must be true or false");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "must be a string");
  return j.get<std::string>();
}

Vec3 as_vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) fail(path, "must be an array of 3 numbers");
  return {as_real(j[0], path), as_real(j[1], path), as_real(j[2], path)};
}

// four raw components, no unit requirement; trajectory records round-trip
// exactly through this
Quat as_quat_raw(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 4)
    fail(path, "must be an array of 4 numbers (w, x, y, z)");
  return {as_real(j[0], path), as_real(j[1], path), as_real(j[2], path),
          as_real(j[3], path)};
}

Quat as_unit_quat(const json& j, const std::string& path) {
  Quat q = as_quat_raw(j, path);
  Real n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
  if (std::abs(n - 1.0) > 1e-3) fail(path, "must be a unit quaternion");
  return normalize(q);
}

Pose as_pose(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "must be an object");
  require_keys(j, path, {"pos", "quat"});
  Pose pose;
  pose.rot = Quat::identity();
  if (j.contains("pos")) pose.pos = as_vec3(j["pos"], join(path, "pos"));
  if (j.contains("quat")) pose.rot = as_unit_quat(j["quat"], join(path, "quat"));
  return pose;
}

Shape as_shape(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "must be an object");
  std::string type = as_string(member(j, path, "type"), join(path, "type"));

  Shape shape;
  if (type == "sphere") {
    require_keys(j, path, {"type", "radius"});
    shape = SphereShape{as_real(member(j, path, "radius"), join(path, "radius"))};
  } else if (type == "capsule") {
    require_keys(j, path, {"type", "radius", "half_length"});
    shape = CapsuleShape{as_real(member(j, path, "radius"), join(path, "radius")),
                         as_real(member(j, path, "half_length"), join(path, "half_length"))};
  } else if (type == "box") {
    require_keys(j, path, {"type", "half_extents"});
    shape = BoxShape{as_vec3(member(j, path, "half_extents"), join(path, "half_extents"))};
  } else if (type == "halfspace") {
    require_keys(j, path, {"type", "normal", "offset"});
    shape = HalfspaceShape{as_vec3(member(j, path, "normal"), join(path, "normal")),
                           as_real(member(j, path, "offset"), join(path, "offset"))};
  } else if (type == "trimesh") {
    require_keys(j, path, {"type", "vertices", "triangles"});
    TrimeshShape mesh;
    const json& verts = member(j, path, "vertices");
    if (!verts.is_array()) fail(join(path, "vertices"), "must be an array");
    for (size_t i = 0; i < verts.size(); ++i)
      mesh.vertices.push_back(as_vec3(verts[i], at(join(path, "vertices"), i)));
    const json& tris = member(j, path, "triangles");
    if (!tris.is_array()) fail(join(path, "triangles"), "must be an array");
    for (size_t i = 0; i < tris.size(); ++i) {
      const json& t = tris[i];
      std::string tp = at(join(path, "triangles"), i);
      if (!t.is_array() || t.size() != 3) fail(tp, "must be an array of 3 indices");
      mesh.triangles.push_back({as_int(t[0], tp), as_int(t[1], tp), as_int(t[2], tp)});
    }
    shape = std::move(mesh);
  } else {
    fail(path, "has unknown shape type '" + type + "'");
  }

  try {
    validate_shape(shape);
  } catch (const ConfigError& e) {
    fail(path, e.what());
  }
  return shape;
}

std::string resolve(const std::string& base_dir, const std::string& rel) {
  std::filesystem::path p(rel);
  if (p.is_absolute() || base_dir.empty()) return rel;
  return (std::filesystem::path(base_dir) / p).string();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error while reading file: " + path);
  return buf.str();
}

// fixed 17 significant digits: enough for a double to round-trip exactly
std::string num(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void append_vec3(std::string& s, const Vec3& v) {
  s += '[';
  s += num(v.x);
  s += ',';
  s += num(v.y);
  s += ',';
  s += num(v.z);
  s += ']';
}

void append_quat(std::string& s, const Quat& q) {
  s += '[';
  s += num(q.w);
  s += ',';
  s += num(q.x);
  s += ',';
  s += num(q.y);
  s += ',';
  s += num(q.z);
  s += ']';
}

}  // namespace

// ------------------------------------------------------------- scenarios

ScenarioFile parse_scenario(const std::string& text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("scenario: document must be a JSON object");
  require_keys(doc, "scenario", {"body", "motion", "scene", "config", "mode", "pd", "outputs"});

  ScenarioFile out;

  // body: a named template or a body definition file
  {
    const json& body = member(doc, "scenario", "body");
    if (!body.is_object()) fail("scenario.body", "must be an object");
    require_keys(body, "scenario.body", {"template", "path", "scale"});
    bool has_template = body.contains("template");
    bool has_path = body.contains("path");
    if (has_template == has_path)
      fail("scenario.body", "needs exactly one of 'template' or 'path'");
    if (has_path && body.contains("scale"))
      fail("scenario.body.scale", "only applies to templates");
    if (has_template) {
      Real scale = body.contains("scale")
                       ? as_real(body["scale"], "scenario.body.scale")
                       : 1.0;
      try {
        out.body = make_template(as_string(body["template"], "scenario.body.template"), scale);
      } catch (const ConfigError& e) {
        fail("scenario.body.template", e.what());
      }
    } else {
      out.body = load_body(resolve(base_dir, as_string(body["path"], "scenario.body.path")));
    }
  }

  // motion: a file or a synthesized sequence
  {
    const json& motion = member(doc, "scenario", "motion");
    if (!motion.is_object()) fail("scenario.motion", "must be an object");
    require_keys(motion, "scenario.motion", {"path", "synth"});
    bool has_path = motion.contains("path");
    if (has_path == motion.contains("synth"))
      fail("scenario.motion", "needs exactly one of 'path' or 'synth'");
    if (has_path) {
      out.motion = load_motion(resolve(base_dir, as_string(motion["path"], "scenario.motion.path")));
    } else {
      const json& synth = motion["synth"];
      if (!synth.is_object()) fail("scenario.motion.synth", "must be an object");
      require_keys(synth, "scenario.motion.synth",
                   {"kind", "fps", "frames", "joint_count", "height", "amplitude",
                    "frequency", "speed"});
      SynthParams p;
      p.joint_count = out.body.joint_count();  // follows the body unless overridden
      std::string kind = as_string(member(synth, "scenario.motion.synth", "kind"),
                                   "scenario.motion.synth.kind");
      if (synth.contains("fps")) p.fps = as_real(synth["fps"], "scenario.motion.synth.fps");
      if (synth.contains("frames"))
        p.frames = as_int(synth["frames"], "scenario.motion.synth.frames");
      if (synth.contains("joint_count"))
        p.joint_count = as_int(synth["joint_count"], "scenario.motion.synth.joint_count");
      if (synth.contains("height"))
        p.height = as_real(synth["height"], "scenario.motion.synth.height");
      if (synth.contains("amplitude"))
        p.amplitude = as_real(synth["amplitude"], "scenario.motion.synth.amplitude");
      if (synth.contains("frequency"))
        p.frequency = as_real(synth["frequency"], "scenario.motion.synth.frequency");
      if (synth.contains("speed")) p.speed = as_real(synth["speed"], "scenario.motion.synth.speed");
      try {
        out.motion = synth_motion(kind, p);
      } catch (const ConfigError& e) {
        fail("scenario.motion.synth", e.what());
      }
    }
  }

  // scene (optional)
  if (doc.contains("scene")) {
    const json& scene = doc["scene"];
    if (!scene.is_object()) fail("scenario.scene", "must be an object");
    require_keys(scene, "scenario.scene", {"static", "objects"});

    if (scene.contains("static")) {
      const json& statics = scene["static"];
      if (!statics.is_array()) fail("scenario.scene.static", "must be an array");
      std::set<std::string> names;
      for (size_t i = 0; i < statics.size(); ++i) {
        std::string path = at("scenario.scene.static", i);
        const json& row = statics[i];
        if (!row.is_object()) fail(path, "must be an object");
        require_keys(row, path, {"name", "shape", "pose", "friction", "restitution"});
        StaticCollider sc;
        sc.name = row.contains("name") ? as_string(row["name"], join(path, "name"))
                                       : "static" + std::to_string(i);
        if (!names.insert(sc.name).second)
          fail(join(path, "name"), "duplicates '" + sc.name + "'");
        sc.shape = as_shape(member(row, path, "shape"), join(path, "shape"));
        if (row.contains("pose")) sc.pose = as_pose(row["pose"], join(path, "pose"));
        if (row.contains("friction"))
          sc.friction = as_real(row["friction"], join(path, "friction"));
        if (!(sc.friction >= 0)) fail(join(path, "friction"), "must be >= 0");
        if (row.contains("restitution"))
          sc.restitution = as_real(row["restitution"], join(path, "restitution"));
        if (sc.restitution < 0 || sc.restitution > 1)
          fail(join(path, "restitution"), "must be in [0, 1]");
        out.scene.statics.push_back(std::move(sc));
      }
    }

    if (scene.contains("objects")) {
      const json& objects = scene["objects"];
      if (!objects.is_array()) fail("scenario.scene.objects", "must be an array");
      std::set<std::string> names;
      for (size_t i = 0; i < objects.size(); ++i) {
        std::string path = at("scenario.scene.objects", i);
        const json& row = objects[i];
        if (!row.is_object()) fail(path, "must be an object");
        require_keys(row, path, {"name", "shape", "mass", "friction", "restitution",
                                 "pose", "lin_vel", "ang_vel"});
        RigidObjectSpec obj;
        obj.name = as_string(member(row, path, "name"), join(path, "name"));
        if (!names.insert(obj.name).second)
          fail(join(path, "name"), "duplicates '" + obj.name + "'");
        obj.shape = as_shape(member(row, path, "shape"), join(path, "shape"));
        if (is_halfspace(obj.shape) || is_trimesh(obj.shape))
          fail(join(path, "shape"), "must be a volumetric primitive (sphere, capsule or box)");
        if (row.contains("mass")) obj.mass = as_real(row["mass"], join(path, "mass"));
        if (!(obj.mass > 0)) fail(join(path, "mass"), "must be positive");
        if (row.contains("friction"))
          obj.friction = as_real(row["friction"], join(path, "friction"));
        if (!(obj.friction >= 0)) fail(join(path, "friction"), "must be >= 0");
        if (row.contains("restitution"))
          obj.restitution = as_real(row["restitution"], join(path, "restitution"));
        if (obj.restitution < 0 || obj.restitution > 1)
          fail(join(path, "restitution"), "must be in [0, 1]");
        if (row.contains("pose")) obj.initial_pose = as_pose(row["pose"], join(path, "pose"));
        else obj.initial_pose.rot = Quat::identity();
        if (row.contains("lin_vel"))
          obj.initial_lin_vel = as_vec3(row["lin_vel"], join(path, "lin_vel"));
        if (row.contains("ang_vel"))
          obj.initial_ang_vel = as_vec3(row["ang_vel"], join(path, "ang_vel"));
        out.scene.objects.push_back(std::move(obj));
      }
    }
  }

  // config (optional); "lambda" feeds the half-physics mode below
  Real lambda = 0;
  if (doc.contains("config")) {
    const json& cfg = doc["config"];
    if (!cfg.is_object()) fail("scenario.config", "must be an object");
    require_keys(cfg, "scenario.config",
                 {"gravity", "substeps", "iterations", "lambda", "slop", "beta",
                  "joint_damping", "human_gravity", "max_angular_speed",
                  "root_linear_from_actual"});
    SimConfig& c = out.config;
    if (cfg.contains("gravity")) c.gravity = as_vec3(cfg["gravity"], "scenario.config.gravity");
    if (cfg.contains("substeps"))
      c.substeps = as_int(cfg["substeps"], "scenario.config.substeps");
    if (c.substeps < 1) fail("scenario.config.substeps", "must be >= 1");
    if (cfg.contains("iterations"))
      c.solver_iterations = as_int(cfg["iterations"], "scenario.config.iterations");
    if (c.solver_iterations < 1) fail("scenario.config.iterations", "must be >= 1");
    if (cfg.contains("lambda")) lambda = as_real(cfg["lambda"], "scenario.config.lambda");
    if (lambda < 0) fail("scenario.config.lambda", "must be >= 0");
    if (cfg.contains("slop")) c.contact_slop = as_real(cfg["slop"], "scenario.config.slop");
    if (c.contact_slop < 0) fail("scenario.config.slop", "must be >= 0");
    if (cfg.contains("beta")) c.baumgarte_beta = as_real(cfg["beta"], "scenario.config.beta");
    if (c.baumgarte_beta < 0 || c.baumgarte_beta > 1)
      fail("scenario.config.beta", "must be in [0, 1]");
    if (cfg.contains("joint_damping"))
      c.joint_damping = as_real(cfg["joint_damping"], "scenario.config.joint_damping");
    if (c.joint_damping < 0) fail("scenario.config.joint_damping", "must be >= 0");
    if (cfg.contains("human_gravity"))
      c.human_gravity = as_bool(cfg["human_gravity"], "scenario.config.human_gravity");
    if (cfg.contains("max_angular_speed"))
      c.max_angular_speed =
          as_real(cfg["max_angular_speed"], "scenario.config.max_angular_speed");
    if (c.max_angular_speed < 0) fail("scenario.config.max_angular_speed", "must be >= 0");
    if (cfg.contains("root_linear_from_actual"))
      c.root_linear_from_actual =
          as_bool(cfg["root_linear_from_actual"], "scenario.config.root_linear_from_actual");
  }

  // mode (optional, defaults to half physics)
  {
    std::string mode = doc.contains("mode") ? as_string(doc["mode"], "scenario.mode") : "hp";
    if (mode == "hp") {
      out.mode = HalfPhysics{lambda};
    } else if (mode == "pd") {
      TorquePD pd;
      if (doc.contains("pd")) {
        const json& j = doc["pd"];
        if (!j.is_object()) fail("scenario.pd", "must be an object");
        require_keys(j, "scenario.pd", {"kp", "kd"});
        if (j.contains("kp")) pd.kp = as_real(j["kp"], "scenario.pd.kp");
        if (j.contains("kd")) pd.kd = as_real(j["kd"], "scenario.pd.kd");
        if (pd.kp < 0) fail("scenario.pd.kp", "must be >= 0");
        if (pd.kd < 0) fail("scenario.pd.kd", "must be >= 0");
      }
      out.mode = pd;
    } else if (mode == "teleport") {
      out.mode = PositionTeleport{};
    } else {
      fail("scenario.mode", "must be one of 'hp', 'pd', 'teleport'");
    }
  }

  // "outputs" is tolerated for forward compatibility; output paths come from
  // the command line

  if (out.motion.joint_count != out.body.joint_count())
    fail("scenario.motion", "drives " + std::to_string(out.motion.joint_count) +
                                " joints but the body has " +
                                std::to_string(out.body.joint_count()));
  return out;
}

ScenarioFile load_scenario(const std::string& path) {
  std::string text = read_text_file(path);
  std::string base = std::filesystem::path(path).parent_path().string();
  return parse_scenario(text, base);
}

// ------------------------------------------------------------ body files

ArticulatedBodySpec parse_body(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("body: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("body: document must be a JSON object");
  require_keys(doc, "body", {"name", "links"});

  ArticulatedBodySpec spec;
  spec.name = doc.contains("name") ? as_string(doc["name"], "body.name") : "body";

  const json& links = member(doc, "body", "links");
  if (!links.is_array() || links.empty()) fail("body.links", "must be a non-empty array");

  for (size_t i = 0; i < links.size(); ++i) {
    std::string path = at("body.links", i);
    const json& row = links[i];
    if (!row.is_object()) fail(path, "must be an object");
    require_keys(row, path, {"name", "parent", "anchor_parent", "anchor_child",
                             "shape", "mass", "com", "inertia", "collision"});
    LinkSpec l;
    l.name = as_string(member(row, path, "name"), join(path, "name"));

    // parents are named, and must already be in the table
    if (row.contains("parent")) {
      std::string parent = as_string(row["parent"], join(path, "parent"));
      if (!parent.empty()) {
        l.parent = spec.find_link(parent);
        if (l.parent < 0)
          fail(join(path, "parent"), "'" + parent + "' is not an earlier link");
      }
    }

    if (row.contains("anchor_parent"))
      l.joint_anchor_parent = as_vec3(row["anchor_parent"], join(path, "anchor_parent"));
    if (row.contains("anchor_child"))
      l.joint_anchor_child = as_vec3(row["anchor_child"], join(path, "anchor_child"));

    l.shape = as_shape(member(row, path, "shape"), join(path, "shape"));
    Real mass = as_real(member(row, path, "mass"), join(path, "mass"));
    if (!(mass > 0)) fail(join(path, "mass"), "must be positive");
    try {
      l.inertia = shape_inertia(l.shape, mass);
    } catch (const ConfigError& e) {
      fail(join(path, "shape"), e.what());
    }
    if (row.contains("com")) l.inertia.com = as_vec3(row["com"], join(path, "com"));
    if (row.contains("inertia")) {
      l.inertia.principal = as_vec3(row["inertia"], join(path, "inertia"));
      if (!(l.inertia.principal.x > 0 && l.inertia.principal.y > 0 &&
            l.inertia.principal.z > 0))
        fail(join(path, "inertia"), "components must be positive");
    }
    if (row.contains("collision"))
      l.collision_enabled = as_bool(row["collision"], join(path, "collision"));

    spec.links.push_back(std::move(l));
  }

  validate_body(spec);
  return spec;
}

ArticulatedBodySpec load_body(const std::string& path) {
  return parse_body(read_text_file(path));
}

// ----------------------------------------------------------- trajectories

void write_trajectory(const std::string& path, const Trajectory& traj) {
  for (const SimState& st : traj.frames)
    if (st.objects.size() != traj.object_names.size())
      throw ConfigError("trajectory: object states and names disagree");

  std::ofstream out(path);
  if (!out) throw IoError("cannot write trajectory file: " + path);

  std::string line;
  for (const SimState& st : traj.frames) {
    line.clear();
    line += "{\"frame\":" + std::to_string(st.frame);
    line += ",\"time\":";
    line += num(st.time);
    line += ",\"root_pos\":";
    append_vec3(line, st.joint_state.root.pos);
    line += ",\"root_quat\":";
    append_quat(line, st.joint_state.root.rot);
    line += ",\"joints\":[";
    for (size_t j = 0; j < st.joint_state.joints.size(); ++j) {
      if (j) line += ',';
      append_quat(line, st.joint_state.joints[j]);
    }
    line += "],\"links\":[";
    for (size_t i = 0; i < st.link_poses.size(); ++i) {
      if (i) line += ',';
      line += "{\"pos\":";
      append_vec3(line, st.link_poses[i].pos);
      line += ",\"quat\":";
      append_quat(line, st.link_poses[i].rot);
      line += '}';
    }
    line += "],\"objects\":[";
    for (size_t k = 0; k < st.objects.size(); ++k) {
      if (k) line += ',';
      line += "{\"name\":" + json(traj.object_names[k]).dump();
      line += ",\"pos\":";
      append_vec3(line, st.objects[k].pose.pos);
      line += ",\"quat\":";
      append_quat(line, st.objects[k].pose.rot);
      line += ",\"lin_vel\":";
      append_vec3(line, st.objects[k].lin_vel);
      line += ",\"ang_vel\":";
      append_vec3(line, st.objects[k].ang_vel);
      line += '}';
    }
    line += "]}";
    out << line << '\n';
  }
  out.flush();
  if (!out.good()) throw IoError("error while writing trajectory file: " + path);
}

Trajectory read_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trajectory file: " + path);

  Trajectory traj;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::string where = "trajectory line " + std::to_string(lineno);

    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError(where + ": invalid JSON: " + e.what());
    }
    if (!rec.is_object()) fail(where, "must be a JSON object");
    require_keys(rec, where,
                 {"frame", "time", "root_pos", "root_quat", "joints", "links", "objects"});

    SimState st;
    st.frame = as_int(member(rec, where, "frame"), join(where, "frame"));
    st.time = as_real(member(rec, where, "time"), join(where, "time"));
    st.joint_state.root.pos = as_vec3(member(rec, where, "root_pos"), join(where, "root_pos"));
    st.joint_state.root.rot =
        as_quat_raw(member(rec, where, "root_quat"), join(where, "root_quat"));

    const json& joints = member(rec, where, "joints");
    if (!joints.is_array()) fail(join(where, "joints"), "must be an array");
    for (size_t j = 0; j < joints.size(); ++j)
      st.joint_state.joints.push_back(as_quat_raw(joints[j], at(join(where, "joints"), j)));

    const json& links = member(rec, where, "links");
    if (!links.is_array()) fail(join(where, "links"), "must be an array");
    for (size_t i = 0; i < links.size(); ++i) {
      std::string lp = at(join(where, "links"), i);
      const json& l = links[i];
      if (!l.is_object()) fail(lp, "must be an object");
      require_keys(l, lp, {"pos", "quat"});
      Pose pose;
      pose.pos = as_vec3(member(l, lp, "pos"), join(lp, "pos"));
      pose.rot = as_quat_raw(member(l, lp, "quat"), join(lp, "quat"));
      st.link_poses.push_back(pose);
    }
    st.link_velocities.assign(st.link_poses.size(), {});
    st.anchor_residual = 0;

    const json& objects = member(rec, where, "objects");
    if (!objects.is_array()) fail(join(where, "objects"), "must be an array");
    std::vector<std::string> names;
    for (size_t k = 0; k < objects.size(); ++k) {
      std::string op = at(join(where, "objects"), k);
      const json& o = objects[k];
      if (!o.is_object()) fail(op, "must be an object");
      require_keys(o, op, {"name", "pos", "quat", "lin_vel", "ang_vel"});
      names.push_back(as_string(member(o, op, "name"), join(op, "name")));
      RigidObjectState os;
      os.pose.pos = as_vec3(member(o, op, "pos"), join(op, "pos"));
      os.pose.rot = as_quat_raw(member(o, op, "quat"), join(op, "quat"));
      os.lin_vel = as_vec3(member(o, op, "lin_vel"), join(op, "lin_vel"));
      os.ang_vel = as_vec3(member(o, op, "ang_vel"), join(op, "ang_vel"));
      st.objects.push_back(os);
    }
    if (traj.frames.empty()) traj.object_names = names;
    else if (names != traj.object_names)
      fail(where, "lists different objects than the first frame");

    traj.frames.push_back(std::move(st));
  }
  if (in.bad()) throw IoError("error while reading trajectory file: " + path);
  return traj;
}

// ---------------------------------------------------------------- metrics

std::string metrics_to_json(const MetricsReport& rep) {
  std::string s = "{\"mpjpe_g\":";
  s += num(rep.mpjpe_g);
  s += ",\"mpjpe\":";
  s += num(rep.mpjpe);
  s += ",\"success\":";
  s += rep.success ? "true" : "false";
  s += ",\"pene_rate\":";
  s += num(rep.pene_rate);
  s += ",\"depth_mean\":";
  s += num(rep.depth_mean);
  s += ",\"depth_max\":";
  s += num(rep.depth_max);
  s += ",\"frames\":" + std::to_string(rep.frames);
  s += '}';
  return s;
}

// ------------------------------------------------------------- OBJ export

namespace {

struct MeshData {
  std::vector<Vec3> v;
  std::vector<std::array<int, 3>> f;
};

// rings of a UV sphere shared by the sphere and capsule tessellations; the
// capsule pulls its two hemispheres apart by the half length
void stitch_rings(MeshData& m, int seg, int rings) {
  auto ring = [&](int k, int j) { return 1 + k * seg + (j % seg); };
  int south = 1 + rings * seg;
  for (int j = 0; j < seg; ++j) m.f.push_back({0, ring(0, j), ring(0, j + 1)});
  for (int k = 0; k + 1 < rings; ++k)
    for (int j = 0; j < seg; ++j) {
      m.f.push_back({ring(k, j), ring(k + 1, j), ring(k + 1, j + 1)});
      m.f.push_back({ring(k, j), ring(k + 1, j + 1), ring(k, j + 1)});
    }
  for (int j = 0; j < seg; ++j)
    m.f.push_back({south, ring(rings - 1, j + 1), ring(rings - 1, j)});
}

MeshData sphere_mesh(Real r, int seg, int bands) {
  MeshData m;
  m.v.push_back({0, 0, r});
  for (int k = 1; k < bands; ++k) {
    Real theta = kPi * k / bands;
    for (int j = 0; j < seg; ++j) {
      Real phi = 2.0 * kPi * j / seg;
      m.v.push_back({r * std::sin(theta) * std::cos(phi),
                     r * std::sin(theta) * std::sin(phi), r * std::cos(theta)});
    }
  }
  m.v.push_back({0, 0, -r});
  stitch_rings(m, seg, bands - 1);
  return m;
}

MeshData capsule_mesh(Real r, Real hl, int seg, int bands) {
  int half = bands / 2;
  MeshData m;
  m.v.push_back({0, 0, hl + r});
  for (int k = 1; k <= half; ++k) {  // upper hemisphere, ends on the equator
    Real theta = (kPi / 2) * k / half;
    for (int j = 0; j < seg; ++j) {
      Real phi = 2.0 * kPi * j / seg;
      m.v.push_back({r * std::sin(theta) * std::cos(phi),
                     r * std::sin(theta) * std::sin(phi), hl + r * std::cos(theta)});
    }
  }
  for (int k = 0; k < half; ++k) {  // lower hemisphere, starts on the equator
    Real theta = kPi / 2 + (kPi / 2) * k / half;
    for (int j = 0; j < seg; ++j) {
      Real phi = 2.0 * kPi * j / seg;
      m.v.push_back({r * std::sin(theta) * std::cos(phi),
                     r * std::sin(theta) * std::sin(phi), -hl + r * std::cos(theta)});
    }
  }
  m.v.push_back({0, 0, -hl - r});
  stitch_rings(m, seg, 2 * half);  // the equator pair forms the cylinder wall
  return m;
}

MeshData box_mesh(const Vec3& he) {
  MeshData m;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) m.v.push_back({sx * he.x, sy * he.y, sz * he.z});
  // vertex order above: index bit 2 = +x, bit 1 = +y, bit 0 = +z
  m.f = {{4, 6, 7}, {4, 7, 5}, {0, 1, 3}, {0, 3, 2}, {2, 3, 7}, {2, 7, 6},
         {0, 4, 5}, {0, 5, 1}, {1, 5, 7}, {1, 7, 3}, {0, 2, 6}, {0, 6, 4}};
  return m;
}

MeshData halfspace_mesh(const HalfspaceShape& hs) {
  Vec3 n = normalized(hs.normal);
  Vec3 t1 = any_orthogonal(n);
  Vec3 t2 = cross(n, t1);
  Vec3 c = n * hs.offset;
  const Real extent = 50.0;
  MeshData m;
  m.v = {c - extent * t1 - extent * t2, c + extent * t1 - extent * t2,
         c + extent * t1 + extent * t2, c - extent * t1 + extent * t2};
  m.f = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

MeshData shape_mesh(const Shape& s) {
  const int seg = 16, bands = 8;
  if (const auto* sp = std::get_if<SphereShape>(&s)) return sphere_mesh(sp->radius, seg, bands);
  if (const auto* cp = std::get_if<CapsuleShape>(&s))
    return capsule_mesh(cp->radius, cp->half_length, seg, bands);
  if (const auto* bx = std::get_if<BoxShape>(&s)) return box_mesh(bx->half_extents);
  if (const auto* hs = std::get_if<HalfspaceShape>(&s)) return halfspace_mesh(*hs);
  const auto& mesh = std::get<TrimeshShape>(s);
  MeshData m;
  m.v = mesh.vertices;
  for (const auto& t : mesh.triangles) m.f.push_back(t);
  return m;
}

}  // namespace

std::string export_frame_obj(const ArticulatedBodySpec& spec, const SimState& state,
                             const std::vector<std::string>& object_names,
                             const SceneSpec& scene) {
  if (static_cast<int>(state.link_poses.size()) != spec.link_count())
    throw ConfigError("export: frame link count does not match the body");
  if (state.objects.size() != object_names.size())
    throw ConfigError("export: object states and names disagree");

  std::string out = "# frame " + std::to_string(state.frame) + " time " + num(state.time) + "\n";
  int base = 0;

  auto emit = [&](const std::string& name, const Shape& shape, const Pose& pose) {
    MeshData m = shape_mesh(shape);
    out += "g " + name + "\n";
    for (const Vec3& p : m.v) {
      Vec3 w = pose.apply(p);
      out += "v ";
      out += num(w.x);
      out += ' ';
      out += num(w.y);
      out += ' ';
      out += num(w.z);
      out += '\n';
    }
    for (const auto& f : m.f)
      out += "f " + std::to_string(base + f[0] + 1) + ' ' + std::to_string(base + f[1] + 1) +
             ' ' + std::to_string(base + f[2] + 1) + '\n';
    base += static_cast<int>(m.v.size());
  };

  for (int i = 0; i < spec.link_count(); ++i)
    emit(spec.links[i].name, spec.links[i].shape, state.link_poses[i]);

  for (size_t k = 0; k < object_names.size(); ++k) {
    const RigidObjectSpec* found = nullptr;
    for (const RigidObjectSpec& obj : scene.objects)
      if (obj.name == object_names[k]) found = &obj;
    if (!found) throw ConfigError("export: object '" + object_names[k] + "' is not in the scene");
    emit(found->name, found->shape, state.objects[k].pose);
  }

  for (size_t i = 0; i < scene.statics.size(); ++i) {
    const StaticCollider& sc = scene.statics[i];
    emit(sc.name.empty() ? "static" + std::to_string(i) : sc.name, sc.shape, sc.pose);
  }

  return out;
}

}  // namespace hp
