#include "fixtures.hpp"

#include <algorithm>
#include <cmath>

using namespace hp;

namespace fixtures {

namespace {

Quat about_x(Real a) { return quat_from_axis_angle({1, 0, 0}, a); }
Quat about_y(Real a) { return quat_from_axis_angle({0, 1, 0}, a); }

Real smoothstep01(Real u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

// two vertical plates reaching up from a heavy carriage; the plates are
// deliberately massive so contact reactions barely move them between the
// once-per-frame velocity enforcements, which keeps the grip steady while
// the carriage translates
ArticulatedBodySpec gripper_body() {
  ArticulatedBodySpec spec;
  spec.name = "gripper";
  LinkSpec root;
  root.name = "carriage";
  root.parent = -1;
  root.shape = BoxShape{{0.15, 0.20, 0.05}};
  root.inertia = shape_inertia(root.shape, 20.0);
  root.collision_enabled = false;
  spec.links.push_back(root);
  for (int side = 0; side < 2; ++side) {
    Real s = side == 0 ? 1.0 : -1.0;
    LinkSpec arm;
    arm.name = side == 0 ? "arm.L" : "arm.R";
    arm.parent = 0;
    arm.joint_anchor_parent = {0, s * 0.14, 0};
    arm.joint_anchor_child = {0, 0, -0.30};
    arm.shape = BoxShape{{0.10, 0.02, 0.30}};
    arm.inertia = shape_inertia(arm.shape, 20.0);
    spec.links.push_back(arm);
  }
  validate_body(spec);
  return spec;
}

// close the plates during the first 0.6 s, then raise the carriage 0.35 m
// with a smoothstep so the lift ends without a velocity jump
MotionSequence gripper_motion(Real grip_angle, Real lift) {
  MotionSequence seq;
  seq.fps = 30;
  seq.joint_count = 2;
  for (int t = 0; t < 180; ++t) {
    Real time = t / seq.fps;
    Real close01 = std::min(1.0, time / 0.6);
    Real lift01 = smoothstep01((time - 1.2) / 1.4);
    MotionFrame f;
    f.root.pos = {0, 0, 0.60 + lift * lift01};
    f.joints.resize(2);
    f.joints[0] = about_x(grip_angle * close01);
    f.joints[1] = about_x(-grip_angle * close01);
    seq.frames.push_back(f);
  }
  return seq;
}

// sit-back reference: the root drops and retreats while the hips and knees
// fold, tied together so the knees hold their x position and the shins stay
// vertical; arms swing forward out of the seat's way
MotionSequence sit_motion() {
  MotionSequence seq;
  seq.fps = 30;
  seq.joint_count = 21;
  seq.frames.resize(150);
  constexpr int kUarmL = 6, kUarmR = 10;
  constexpr int kThighL = 13, kShinL = 14, kThighR = 17, kShinR = 18;
  for (int t = 0; t < 150; ++t) {
    Real s = smoothstep01((t / 30.0 - 0.5) / 2.5);
    Real theta = 0.5 * kPi * s;
    MotionFrame& f = seq.frames[t];
    f.joints.assign(21, Quat::identity());
    f.root.pos = {-0.42 * std::sin(theta), 0, 0.97 - 0.39 * s};
    f.joints[kThighL] = about_y(-theta);
    f.joints[kThighR] = about_y(-theta);
    f.joints[kShinL] = about_y(theta);
    f.joints[kShinR] = about_y(theta);
    f.joints[kUarmL] = about_y(-1.2 * s);
    f.joints[kUarmR] = about_y(-1.2 * s);
  }
  return seq;
}

}  // namespace

Setup tracking(const std::string& synth_kind, int frames) {
  Setup s;
  s.body = make_humanoid22();
  SynthParams p;
  p.frames = frames;
  s.motion = synth_motion(synth_kind, p);
  s.mode = HalfPhysics{0.0};
  return s;
}

Setup walk_into_wall() {
  Setup s;
  s.body = make_humanoid22();
  SynthParams p;
  p.frames = 300;
  s.motion = synth_motion("walk_forward", p);
  // the gait's toe boxes dip to z = -0.034 and sweep forward at up to
  // 2.1 m/s; the floor sits below the dip and the substep count keeps the
  // per-substep travel under the detection margin at that speed
  s.scene.statics.push_back({"floor", HalfspaceShape{{0, 0, 1}, -0.06}, Pose{}, 1.0, 0.0});
  s.scene.statics.push_back(
      {"wall", BoxShape{{0.3, 1.5, 1.0}}, Pose{{1.2, 0, 1.0}, Quat::identity()}, 1.0, 0.0});
  s.config.substeps = 64;
  s.config.solver_iterations = 32;
  s.mode = HalfPhysics{1.0};
  return s;
}

Setup sit_on_box() {
  Setup s;
  s.body = make_humanoid22();
  s.motion = sit_motion();
  // seat top at 0.59 m; the reference pelvis bottoms out at 0.51 m, so the
  // kinematic motion sinks 80 mm into the box while simulation is blocked
  // at the surface
  s.scene.statics.push_back(
      {"seat", BoxShape{{0.25, 0.25, 0.295}}, Pose{{-0.38, 0, 0.295}, Quat::identity()}, 1.0, 0.0});
  s.config.substeps = 16;
  s.mode = HalfPhysics{1.0};
  return s;
}

Setup kick(Real target_mass) {
  Setup s;
  s.body = make_humanoid22();
  SynthParams p;
  p.frames = 90;
  p.amplitude = 1.2;
  s.motion = synth_motion("kick", p);
  s.scene.statics.push_back({"floor", HalfspaceShape{{0, 0, 1}, 0.0}, Pose{}, 1.0, 0.0});
  RigidObjectSpec box;
  box.name = "target";
  // tall box with its near face at x = 0.55, inside the foot's arc; low
  // friction and a strike near center height make it slide without tipping
  box.shape = BoxShape{{0.15, 0.2, 0.35}};
  box.mass = target_mass;
  box.friction = 0.25;
  box.restitution = 0.0;
  box.initial_pose.pos = {0.70, -0.09, 0.3505};
  s.scene.objects.push_back(box);
  s.mode = HalfPhysics{1.0};
  return s;
}

Setup squeeze_lift(Real payload_friction) {
  Setup s;
  s.body = gripper_body();
  s.motion = gripper_motion(0.12, 0.35);
  s.scene.statics.push_back({"pedestal", BoxShape{{0.04, 0.04, 0.425}},
                             Pose{{0, 0, 0.425}, Quat::identity()}, 1.0, 0.0});
  RigidObjectSpec payload;
  payload.name = "payload";
  payload.shape = BoxShape{{0.10, 0.10, 0.10}};
  payload.mass = 2.0;
  payload.friction = payload_friction;
  payload.restitution = 0.0;
  payload.initial_pose.pos = {0, 0, 0.9505};
  s.scene.objects.push_back(payload);
  s.config.substeps = 16;
  s.config.solver_iterations = 32;
  // a per-frame target-difference root velocity would ratchet downward
  // under the payload's weight; measuring from the simulated root makes the
  // carriage height self-correcting
  s.config.root_linear_from_actual = true;
  s.mode = TorquePD{2000, 60};
  return s;
}

Setup bystander() {
  Setup s;
  s.body = make_humanoid22();
  SynthParams p;
  p.frames = 300;
  s.motion = synth_motion("sine_joints", p);
  s.scene.statics.push_back({"floor", HalfspaceShape{{0, 0, 1}, 0.0}, Pose{}, 1.0, 0.0});
  RigidObjectSpec box;
  box.name = "bystander";
  box.shape = BoxShape{{0.1, 0.1, 0.1}};
  box.mass = 1.0;
  box.friction = 0.5;
  box.initial_pose.pos = {2.0, 0.0, 0.1005};
  s.scene.objects.push_back(box);
  s.mode = HalfPhysics{1.0};
  return s;
}

Setup arm_pillar(Real lambda, bool with_pillar) {
  Setup s;
  s.body = make_humanoid22();
  SynthParams p;
  p.frames = 150;
  s.motion = synth_motion("sine_joints", p);
  if (with_pillar) {
    // the left hand's swing passes 46 mm from this axis, so each cycle
    // strikes the pillar; the pelvis and shoulders stay clear
    s.scene.statics.push_back({"pillar", CapsuleShape{0.05, 0.8},
                               Pose{{-0.14, 0.24, 1.0}, Quat::identity()}, 1.0, 0.0});
  }
  s.mode = HalfPhysics{lambda};
  return s;
}

Setup two_sphere_momentum() {
  Setup s;
  s.body = make_chain3();
  SynthParams p;
  p.frames = 90;
  p.joint_count = 2;
  p.height = 50.0;  // parked far above the collision
  s.motion = synth_motion("static", p);
  s.config.gravity = {0, 0, 0};
  RigidObjectSpec a, b;
  a.name = "a";
  a.shape = SphereShape{0.1};
  a.mass = 1.0;
  a.friction = 0.4;
  a.restitution = 0.8;
  a.initial_pose.pos = {-0.4, 0, 1.0};
  a.initial_lin_vel = {0.5, 0, 0};
  b.name = "b";
  b.shape = SphereShape{0.1};
  b.mass = 3.0;
  b.friction = 0.4;
  b.restitution = 0.8;
  b.initial_pose.pos = {0.4, 0.02, 1.0};  // slight offset so friction works too
  b.initial_lin_vel = {-0.5, 0, 0};
  s.scene.objects.push_back(a);
  s.scene.objects.push_back(b);
  s.mode = HalfPhysics{0.0};
  return s;
}

Setup resting_stack(int frames) {
  Setup s;
  s.body = make_chain3();
  SynthParams p;
  p.frames = frames;
  p.joint_count = 2;
  p.height = 5.0;
  s.motion = synth_motion("static", p);
  s.scene.statics.push_back({"floor", HalfspaceShape{{0, 0, 1}, 0.0}, Pose{}, 1.0, 0.0});
  RigidObjectSpec lower, upper;
  lower.name = "lower";
  lower.shape = BoxShape{{0.1, 0.1, 0.1}};
  lower.mass = 2.0;
  lower.friction = 0.8;
  lower.initial_pose.pos = {3, 0, 0.1005};
  upper.name = "upper";
  upper.shape = BoxShape{{0.08, 0.08, 0.08}};
  upper.mass = 1.0;
  upper.friction = 0.8;
  upper.initial_pose.pos = {3, 0, 0.2815};
  s.scene.objects.push_back(lower);
  s.scene.objects.push_back(upper);
  s.mode = HalfPhysics{0.0};
  return s;
}

Setup desk_scene() {
  Setup s;
  s.body = make_humanoid22();
  SynthParams p;
  p.frames = 300;
  s.motion = synth_motion("walk_forward", p);

  s.scene.statics.push_back({"floor", HalfspaceShape{{0, 0, 1}, -0.06}, Pose{}, 1.0, 0.0});
  for (int i = 0; i < 10; ++i) {
    Real x = -0.5 + 0.45 * i;
    Real side = i % 2 == 0 ? 1.0 : -1.0;
    s.scene.statics.push_back({"desk" + std::to_string(i), BoxShape{{0.2, 0.15, 0.36}},
                               Pose{{x, side * 0.65, 0.30}, Quat::identity()}, 0.8, 0.1});
  }
  for (int i = 0; i < 6; ++i) {
    Real x = -0.3 + 0.6 * i;
    Real side = i % 2 == 0 ? -1.0 : 1.0;
    s.scene.statics.push_back({"pillar" + std::to_string(i), CapsuleShape{0.06, 0.7},
                               Pose{{x, side * 1.0, 0.9}, Quat::identity()}, 0.9, 0.0});
  }
  s.scene.statics.push_back({"wall.L", BoxShape{{2.5, 0.05, 1.2}},
                             Pose{{1.5, 1.4, 1.14}, Quat::identity()}, 1.0, 0.0});
  s.scene.statics.push_back({"wall.R", BoxShape{{2.5, 0.05, 1.2}},
                             Pose{{1.5, -1.4, 1.14}, Quat::identity()}, 1.0, 0.0});
  s.scene.statics.push_back({"shelf", BoxShape{{0.3, 0.25, 0.02}},
                             Pose{{-1.0, 0, 1.1}, Quat::identity()}, 0.7, 0.2});

  RigidObjectSpec o;
  o.restitution = 0.1;
  o.name = "crate";
  o.shape = BoxShape{{0.08, 0.08, 0.08}};
  o.mass = 1.0;
  o.friction = 0.4;
  o.initial_pose = {{1.0, 0.05, 0.0205}, Quat::identity()};
  s.scene.objects.push_back(o);
  o.name = "ball";
  o.shape = SphereShape{0.09};
  o.mass = 0.6;
  o.friction = 0.3;
  o.initial_pose = {{1.8, -0.08, 0.0305}, Quat::identity()};
  s.scene.objects.push_back(o);
  o.name = "tube";
  o.shape = CapsuleShape{0.04, 0.12};
  o.mass = 0.8;
  o.friction = 0.5;
  o.initial_pose = {{2.4, 0.10, -0.0195}, Quat{0.7071067811865476, 0, 0.7071067811865476, 0}};
  s.scene.objects.push_back(o);
  o.name = "book";
  o.shape = BoxShape{{0.10, 0.07, 0.02}};
  o.mass = 0.9;
  o.friction = 0.6;
  o.initial_pose = {{-1.0, 0, 1.1405}, Quat::identity()};
  s.scene.objects.push_back(o);
  o.name = "mug";
  o.shape = BoxShape{{0.04, 0.04, 0.05}};
  o.mass = 0.3;
  o.friction = 0.5;
  o.initial_pose = {{0.4, 0.65, 0.71}, Quat::identity()};
  s.scene.objects.push_back(o);

  s.mode = HalfPhysics{1.0};
  return s;
}

}  // namespace fixtures
