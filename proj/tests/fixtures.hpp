// Scenario builders shared by the unit suites and the acceptance runner.
// Each builder returns a complete, self-consistent setup: tuning constants
// live here so a test and the acceptance check always measure the same
// configuration.

#pragma once

#include <string>

#include "halfphys/dynamics.hpp"
#include "halfphys/motion.hpp"

namespace fixtures {

struct Setup {
  hp::ArticulatedBodySpec body;
  hp::SceneSpec scene;
  hp::SimConfig config;
  hp::ControlMode mode;
  hp::MotionSequence motion;
};

// humanoid22 tracking a synthesized motion in an empty scene; the caller can
// rerun with a different mode or damping to compare against the baseline
Setup tracking(const std::string& synth_kind, int frames = 300);

// humanoid22 walking into a thick wall over a floor that sits below the
// deepest toe dip of the gait, so the wall is the first thing it touches.
// High substep count keeps the fastest swing samples inside the contact
// detection margin per substep.
Setup walk_into_wall();

// humanoid22 sitting back onto a box: the root retreats as the thighs swing
// forward so the knees hold their ground position, and the arms reach
// forward clear of the seat. The reference pelvis ends well inside the seat.
Setup sit_on_box();

// humanoid22 kicking a box of the given mass resting on a floor; the strike
// lands near the box's center of mass height so it slides instead of
// toppling
Setup kick(hp::Real target_mass);

// two-plate gripper squeezing a payload cube off a pedestal and lifting it;
// plate-payload grip is friction only, so the payload's friction coefficient
// decides between carrying and dropping
Setup squeeze_lift(hp::Real payload_friction);
// trajectory indices for the squeeze measurement: the lift completes at
// frame 78, the reference height is read after a short settle, and the hold
// window covers the following second
inline constexpr int kSqueezeRefFrame = 84;
inline constexpr int kSqueezeHoldBegin = 85;
inline constexpr int kSqueezeHoldEnd = 114;

// humanoid22 exercising all joints with a resting box two meters away,
// far outside the motion envelope
Setup bystander();

// humanoid22's swinging arm strikes a fixed pillar; with_pillar=false gives
// the contact-free control for the stiffness-compensation comparison
Setup arm_pillar(hp::Real lambda, bool with_pillar = true);

// two spheres on a head-on course, gravity off, with a far-away articulated
// body so the run exercises the full stepper
Setup two_sphere_momentum();

// two boxes stacked on a floor, nothing else moving
Setup resting_stack(int frames = 300);

// cluttered walking scene: 20 static colliders, 5 free objects, two of them
// directly in the walk path; used for throughput and determinism checks
Setup desk_scene();

}  // namespace fixtures
