#include "halfphys/motion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "halfphys/errors.hpp"
#include "json.hpp"

namespace hp {
namespace {

using nlohmann::json;

Vec3 parse_vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw ConfigError(std::string("motion: ") + what + " must be an array of 3 numbers");
  Vec3 v{j[0].get<Real>(), j[1].get<Real>(), j[2].get<Real>()};
  if (!finite(v)) throw ConfigError(std::string("motion: non-finite ") + what);
  return v;
}

Quat parse_quat(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 4)
    throw ConfigError(std::string("motion: ") + what + " must be [w, x, y, z]");
  Quat q{j[0].get<Real>(), j[1].get<Real>(), j[2].get<Real>(), j[3].get<Real>()};
  Real n = std::sqrt(dot(q, q));
  if (!std::isfinite(n) || std::fabs(n - 1.0) > 1e-3)
    throw ConfigError(std::string("motion: ") + what + " is not a unit quaternion");
  return canonical(normalize(q));
}

json quat_to_json(const Quat& q) { return json::array({q.w, q.x, q.y, q.z}); }
json vec3_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

// humanoid22 joint indices (joint j drives link j + 1)
enum HumanoidJoint {
  kSpine1 = 0,
  kSpine2 = 1,
  kSpine3 = 2,
  kNeck = 3,
  kHead = 4,
  kClavL = 5,
  kUarmL = 6,
  kFarmL = 7,
  kHandL = 8,
  kClavR = 9,
  kUarmR = 10,
  kFarmR = 11,
  kHandR = 12,
  kThighL = 13,
  kShinL = 14,
  kFootL = 15,
  kToeL = 16,
  kThighR = 17,
  kShinR = 18,
  kFootR = 19,
  kToeR = 20,
};

void require_humanoid_layout(const std::string& kind, const SynthParams& p) {
  if (p.joint_count != 21)
    throw ConfigError("synth_motion: kind '" + kind + "' assumes the humanoid22 joint layout");
}

Quat about_y(Real angle) { return quat_from_axis_angle({0, 1, 0}, angle); }

Real smoothstep01(Real u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

MotionSequence blank_sequence(const SynthParams& p) {
  MotionSequence seq;
  seq.fps = p.fps;
  seq.joint_count = p.joint_count;
  seq.frames.resize(p.frames);
  for (auto& f : seq.frames) {
    f.root.pos = {0, 0, p.height};
    f.root.rot = Quat::identity();
    f.joints.assign(p.joint_count, Quat::identity());
  }
  return seq;
}

}  // namespace

MotionSequence parse_motion(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("motion: invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("fps") || !doc.contains("joint_count") ||
      !doc.contains("frames"))
    throw ConfigError("motion: document needs fps, joint_count and frames");

  MotionSequence seq;
  try {
    seq.fps = doc["fps"].get<Real>();
    seq.joint_count = doc["joint_count"].get<int>();
    if (!(seq.fps > 0)) throw ConfigError("motion: fps must be positive");
    if (seq.joint_count < 0) throw ConfigError("motion: joint_count must be >= 0");
    for (const json& jf : doc["frames"]) {
      MotionFrame f;
      f.root.pos = parse_vec3(jf.at("root_pos"), "root_pos");
      f.root.rot = parse_quat(jf.at("root_quat"), "root_quat");
      const json& joints = jf.at("joints");
      if (!joints.is_array() || static_cast<int>(joints.size()) != seq.joint_count)
        throw ConfigError("motion: frame joint list does not match joint_count");
      f.joints.reserve(seq.joint_count);
      for (const json& jq : joints) f.joints.push_back(parse_quat(jq, "joint quaternion"));
      seq.frames.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("motion: ") + e.what());
  }
  return seq;
}

MotionSequence load_motion(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open motion file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error while reading motion file: " + path);
  return parse_motion(buf.str());
}

std::string motion_to_json(const MotionSequence& seq) {
  json doc;
  doc["fps"] = seq.fps;
  doc["joint_count"] = seq.joint_count;
  json frames = json::array();
  for (const MotionFrame& f : seq.frames) {
    json jf;
    jf["root_pos"] = vec3_to_json(f.root.pos);
    jf["root_quat"] = quat_to_json(f.root.rot);
    json joints = json::array();
    for (const Quat& q : f.joints) joints.push_back(quat_to_json(q));
    jf["joints"] = std::move(joints);
    frames.push_back(std::move(jf));
  }
  doc["frames"] = std::move(frames);
  return doc.dump(1);
}

MotionSequence synth_motion(const std::string& kind, const SynthParams& params) {
  if (params.frames < 1) throw ConfigError("synth_motion: need at least one frame");
  if (!(params.fps > 0)) throw ConfigError("synth_motion: fps must be positive");

  MotionSequence seq = blank_sequence(params);

  if (kind == "static") return seq;

  if (kind == "sine_joints") {
    // every joint oscillates about a cycling axis with a per-joint phase, so
    // the pose is busy without any two joints moving in lockstep
    static const Vec3 axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (int t = 0; t < params.frames; ++t) {
      Real time = t / params.fps;
      for (int j = 0; j < params.joint_count; ++j) {
        Real angle = params.amplitude * std::sin(2.0 * kPi * params.frequency * time + 0.35 * j);
        seq.frames[t].joints[j] = quat_from_axis_angle(axes[j % 3], angle);
      }
    }
    return seq;
  }

  if (kind == "walk_forward") {
    require_humanoid_layout(kind, params);
    Real a = params.amplitude;
    for (int t = 0; t < params.frames; ++t) {
      Real time = t / params.fps;
      Real phase = 2.0 * kPi * params.frequency * time;
      MotionFrame& f = seq.frames[t];
      f.root.pos.x = params.speed * time;
      Real swing = a * std::sin(phase);
      // positive rotation about +y moves the foot backward, so the forward
      // swing carries a negative hip angle; knees only ever flex backward
      f.joints[kThighL] = about_y(-swing);
      f.joints[kThighR] = about_y(swing);
      f.joints[kShinL] = about_y(0.5 * a * (1.0 - std::cos(phase)));
      f.joints[kShinR] = about_y(0.5 * a * (1.0 + std::cos(phase)));
      f.joints[kUarmL] = about_y(0.4 * swing);
      f.joints[kUarmR] = about_y(-0.4 * swing);
    }
    return seq;
  }

  if (kind == "kick") {
    require_humanoid_layout(kind, params);
    const Real lead_in = 0.2;                    // settle before the swing
    const Real span = 0.5 / params.frequency;    // seconds for the whole arc
    for (int t = 0; t < params.frames; ++t) {
      Real time = t / params.fps;
      Real u = std::clamp((time - lead_in) / span, 0.0, 1.0);
      Real pulse = std::sin(kPi * u);
      MotionFrame& f = seq.frames[t];
      f.joints[kThighR] = about_y(-params.amplitude * pulse);
      f.joints[kShinR] = about_y(0.7 * params.amplitude * pulse);
      f.joints[kSpine3] = quat_from_axis_angle({0, 0, 1}, 0.1 * params.amplitude * pulse);
    }
    return seq;
  }

  if (kind == "squat_sit") {
    require_humanoid_layout(kind, params);
    const Real seat_height = 0.60;  // root height with thighs horizontal
    Real duration = params.frames / params.fps;
    for (int t = 0; t < params.frames; ++t) {
      Real time = t / params.fps;
      Real s = smoothstep01(time / (0.4 * duration));
      MotionFrame& f = seq.frames[t];
      f.root.pos.z = params.height + (seat_height - params.height) * s;
      Real hip = -0.5 * kPi * s;
      // knees overshoot mid-descent to tuck the feet in under the seat edge
      Real knee = 0.5 * kPi * s + 0.4 * std::sin(kPi * s);
      f.joints[kThighL] = about_y(hip);
      f.joints[kThighR] = about_y(hip);
      f.joints[kShinL] = about_y(knee);
      f.joints[kShinR] = about_y(knee);
      f.joints[kSpine1] = about_y(-0.15 * s);
    }
    return seq;
  }

  throw ConfigError("synth_motion: unknown kind '" + kind + "'");
}

FrameVelocities frame_velocities(const MotionSequence& seq, int t,
                                 const JointSpaceState& current,
                                 const FrameVelocityOptions& opts) {
  if (t < 1 || t >= seq.frame_count())
    throw ConfigError("frame_velocities: frame index " + std::to_string(t) +
                      " outside [1, " + std::to_string(seq.frame_count()) + ")");
  if (static_cast<int>(current.joints.size()) != seq.joint_count)
    throw ConfigError("frame_velocities: state joint count does not match the sequence");

  const MotionFrame& target = seq.frames[t];
  Real dt = seq.dt();

  FrameVelocities fv;
  const Vec3& from = opts.root_linear_from_actual ? current.root.pos
                                                  : seq.frames[t - 1].root.pos;
  fv.root_linear = (target.root.pos - from) / dt;
  fv.root_angular = angdiff(target.root.rot, current.root.rot, dt);

  fv.joint_omegas.reserve(seq.joint_count);
  for (int j = 0; j < seq.joint_count; ++j) {
    Vec3 w = angdiff(target.joints[j], current.joints[j], dt);
    if (opts.max_angular_speed > 0) {
      Real n = norm(w);
      if (n > opts.max_angular_speed) w = w * (opts.max_angular_speed / n);
    }
    fv.joint_omegas.push_back(w);
  }
  return fv;
}

}  // namespace hp
