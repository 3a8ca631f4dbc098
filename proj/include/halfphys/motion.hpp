#pragma once

// Kinematic reference motion: a fixed-rate sequence of joint-space targets,
// plus the per-frame velocity set that drives the simulator. Linear root
// velocity is the difference of consecutive *targets* (the reference keeps
// its own pace even when the simulated root was blocked); angular rates are
// measured from the current simulated state to the upcoming target, which
// makes orientation tracking self-correcting.

#include <string>
#include <vector>

#include "halfphys/body.hpp"

namespace hp {

struct MotionFrame {
  Pose root;
  std::vector<Quat> joints;
};

struct MotionSequence {
  Real fps = 30;
  int joint_count = 0;
  std::vector<MotionFrame> frames;

  int frame_count() const { return static_cast<int>(frames.size()); }
  Real dt() const { return 1.0 / fps; }
};

struct FrameVelocities {
  Vec3 root_linear;              //!< world m/s, target-to-target difference
  Vec3 root_angular;             //!< world rad/s, current-to-target
  std::vector<Vec3> joint_omegas;  //!< parent-frame rad/s, current-to-target
};

struct FrameVelocityOptions {
  Real max_angular_speed = 0;        //!< rad/s clamp per joint, 0 disables
  bool root_linear_from_actual = false;  //!< measure root velocity from the
                                         //!< simulated root instead of the
                                         //!< previous target
};

// parse the motion JSON document in `text`; see docs/formats for the schema.
// Quaternions are normalized and canonicalized to w >= 0; mismatched joint
// counts, non-unit quaternions (beyond 1e-3) and non-positive fps throw
// ConfigError.
MotionSequence parse_motion(const std::string& text);
MotionSequence load_motion(const std::string& path);  // reads file, then parses

std::string motion_to_json(const MotionSequence& seq);

struct SynthParams {
  Real fps = 30;
  int frames = 90;
  int joint_count = 21;   //!< humanoid22 joint layout unless a kind says otherwise
  Real height = 0.97;     //!< rest root height
  Real amplitude = 0.3;   //!< radians, oscillating kinds
  Real frequency = 1.0;   //!< Hz, oscillating kinds
  Real speed = 0.3;       //!< m/s, walk_forward
};

// deterministic synthetic sequences for tests and demos:
//   "static"       frozen rest pose
//   "sine_joints"  every joint oscillates about a cycling axis
//   "walk_forward" root advances at constant speed with leg/arm swings
//                  (humanoid22 joint layout)
//   "kick"         right leg snaps through a fast arc (humanoid22)
//   "squat_sit"    root descends onto a seat while hips and knees fold
//                  (humanoid22)
// unknown kinds throw ConfigError
MotionSequence synth_motion(const std::string& kind, const SynthParams& params);

// velocity set that drives frame t (t in [1, frame_count)), measured against
// the current simulated joint state; throws ConfigError when t is out of range
FrameVelocities frame_velocities(const MotionSequence& seq, int t,
                                 const JointSpaceState& current,
                                 const FrameVelocityOptions& opts = {});

}  // namespace hp
