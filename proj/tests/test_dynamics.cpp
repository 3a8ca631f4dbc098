// Solver and stepper behavior: impulse-level checks against closed-form
// two-body results, conservation properties, and end-to-end stepping (exact
// free-space tracking, resting contact, the failure-mode control variants).

#include <random>

#include "doctest.h"
#include "halfphys/dynamics.hpp"

using namespace hp;

namespace {

std::mt19937_64 rng(0xD1CE);

Real uniform(Real lo, Real hi) {
  std::uniform_real_distribution<Real> d(lo, hi);
  return d(rng);
}

SolverBody free_sphere(const Vec3& pos, const Vec3& v, Real mass, Real radius) {
  SolverBody b;
  b.com = pos;
  b.rot = Quat::identity();
  b.v = v;
  b.w = {0, 0, 0};
  b.inv_mass = 1.0 / mass;
  Real i = 0.4 * mass * radius * radius;
  b.inv_inertia = Mat3::diagonal({1.0 / i, 1.0 / i, 1.0 / i});
  return b;
}

Contact contact_between(int a, int b, const Vec3& point, const Vec3& normal, Real separation,
                        Real friction = 0, Real restitution = 0) {
  Contact c;
  c.a = a;
  c.b = b;
  c.point = point;
  c.normal = normal;
  c.separation = separation;
  c.depth = std::fmax(0.0, -separation);
  c.friction = friction;
  c.restitution = restitution;
  return c;
}

SceneSpec empty_scene() { return {}; }

SceneSpec floor_scene() {
  SceneSpec scene;
  scene.statics.push_back({"floor", HalfspaceShape{{0, 0, 1}, 0}, Pose{}, 1.0, 0.0});
  return scene;
}

SimConfig base_config() { return SimConfig{}; }

// worst link position error against the kinematic targets for one frame
Real tracking_error(const ArticulatedBodySpec& spec, const SimState& st,
                    const MotionSequence& seq) {
  JointSpaceState target{seq.frames[st.frame].root, seq.frames[st.frame].joints};
  auto want = forward_kinematics(spec, target);
  Real worst = 0;
  for (size_t i = 0; i < want.size(); ++i)
    worst = std::fmax(worst, norm(st.link_poses[i].pos - want[i].pos));
  return worst;
}

}  // namespace

TEST_SUITE_BEGIN("dynamics");

TEST_CASE("expected_joint_pose advances the frame-start pose by the rate") {
  Quat start = quat_from_axis_angle({1, 0, 0}, 0.3);
  Vec3 omega{0, 0, 2.0};
  Quat got = expected_joint_pose(start, omega, 3, 0.01);
  Quat want = quat_mul(quat_from_axis_angle({0, 0, 1}, 0.06), start);
  CHECK(std::fabs(dot(got, want)) > 1.0 - 1e-12);
  CHECK(std::fabs(dot(expected_joint_pose(start, omega, 0, 0.01), start)) > 1.0 - 1e-12);
}

TEST_CASE("pjsc_torque pulls the lagging pose forward") {
  Quat expected = quat_from_axis_angle({0, 0, 1}, 0.1);
  Quat actual = Quat::identity();
  Vec3 tau = pjsc_torque(expected, actual, 2.0);
  CHECK(norm(tau - Vec3{0, 0, 0.2}) < 1e-12);
  CHECK(norm(pjsc_torque(expected, expected, 2.0)) < 1e-12);
  CHECK(norm(pjsc_torque(expected, actual, 0.0)) == 0.0);
}

TEST_CASE("solver: separating contact applies no impulse") {
  std::vector<SolverBody> bodies = {free_sphere({0, 0, 0.2}, {0, 0, 1}, 1, 0.1)};
  std::vector<Contact> contacts = {contact_between(0, -1, {0, 0, 0.1}, {0, 0, 1}, 0.0)};
  auto diag = solve_constraints(bodies, contacts, {}, 0.01, 16, 0.2, 0);
  CHECK(norm(bodies[0].v - Vec3{0, 0, 1}) == 0.0);
  CHECK(norm(diag.contact_impulses[0]) == 0.0);
}

TEST_CASE("solver: equal-mass head-on elastic collision swaps velocities") {
  std::vector<SolverBody> bodies = {free_sphere({-0.1, 0, 0}, {1, 0, 0}, 1, 0.1),
                                    free_sphere({0.1, 0, 0}, {-1, 0, 0}, 1, 0.1)};
  std::vector<Contact> contacts = {contact_between(0, 1, {0, 0, 0}, {-1, 0, 0}, 0.0, 0.0, 1.0)};
  solve_constraints(bodies, contacts, {}, 0.01, 32, 0.2, 0);
  CHECK(norm(bodies[0].v - Vec3{-1, 0, 0}) < 1e-9);
  CHECK(norm(bodies[1].v - Vec3{1, 0, 0}) < 1e-9);
}

TEST_CASE("solver: speculative bound lets a body approach only up to the gap") {
  // 10 mm away, moving down at 2 m/s with h = 10 ms would tunnel; the bound
  // leaves exactly the closing speed that consumes the gap
  std::vector<SolverBody> bodies = {free_sphere({0, 0, 0.11}, {0, 0, -2}, 1, 0.1)};
  std::vector<Contact> contacts = {contact_between(0, -1, {0, 0, 0.005}, {0, 0, 1}, 0.01)};
  solve_constraints(bodies, contacts, {}, 0.01, 16, 0.2, 0.0);
  CHECK(bodies[0].v.z == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("solver: penetration beyond the rest offset is pushed out") {
  // separation -4 mm with slop 2 mm: bias restores beta * (r0 - d) / h
  std::vector<SolverBody> bodies = {free_sphere({0, 0, 0.096}, {0, 0, 0}, 1, 0.1)};
  std::vector<Contact> contacts = {contact_between(0, -1, {0, 0, -0.002}, {0, 0, 1}, -0.004)};
  solve_constraints(bodies, contacts, {}, 0.01, 16, 0.2, 0.002);
  Real want = 0.2 * (0.0005 + 0.004) / 0.01;
  CHECK(bodies[0].v.z == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("solver: friction cone clamps the tangential impulse") {
  auto slide = [](Real mu) {
    std::vector<SolverBody> bodies = {free_sphere({0, 0, 0.1}, {3, 0, -1}, 1, 0.1)};
    std::vector<Contact> contacts = {contact_between(0, -1, {0, 0, 0}, {0, 0, 1}, 0.0, mu, 0.0)};
    auto diag = solve_constraints(bodies, contacts, {}, 0.01, 32, 0.2, 0);
    return std::make_pair(bodies[0], diag.contact_impulses[0]);
  };

  auto [frictionless, imp0] = slide(0.0);
  CHECK(frictionless.v.x == doctest::Approx(3.0));
  CHECK(frictionless.v.z == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(std::fabs(imp0.x) < 1e-12);

  auto [grippy, imp1] = slide(10.0);
  // inside the cone the contact point sticks (the sphere rolls instead)
  Vec3 at_point = grippy.v + cross(grippy.w, Vec3{0, 0, -0.1});
  CHECK(std::fabs(at_point.x) < 1e-6);
  CHECK(std::fabs(imp1.x) < 0.857143 * 1.01);

  auto [sliding, imp2] = slide(0.3);
  // cone surface: tangential magnitude equals mu times the normal impulse
  CHECK(std::fabs(imp2.x) == doctest::Approx(0.3 * imp2.z).epsilon(1e-9));
  CHECK(sliding.v.x > 2.0);  // slowed, still sliding
}

TEST_CASE("solver: ball joint zeroes the relative anchor velocity") {
  std::vector<SolverBody> bodies = {free_sphere({0, 0, 0}, {1, 0, 0}, 1, 0.1),
                                    free_sphere({0, 0, -0.4}, {-1, 0, 0}, 1, 0.1)};
  JointAttachment j;
  j.a = 0;
  j.b = 1;
  j.anchor_a = {0, 0, -0.2};
  j.anchor_b = {0, 0, -0.2};
  auto diag = solve_constraints(bodies, {}, {j}, 0.01, 16, 0.2, 0.002);
  Vec3 va = bodies[0].v + cross(bodies[0].w, Vec3{0, 0, -0.2});
  Vec3 vb = bodies[1].v + cross(bodies[1].w, Vec3{0, 0, 0.2});
  CHECK(norm(va - vb) < 1e-9);
  CHECK(diag.max_joint_speed_error < 1e-9);
}

TEST_CASE("solver: joint gap drives the anchors together") {
  std::vector<SolverBody> bodies = {free_sphere({0, 0, 0}, {0, 0, 0}, 1, 0.1),
                                    free_sphere({0.001, 0, -0.4}, {0, 0, 0}, 1, 0.1)};
  JointAttachment j;
  j.a = 0;
  j.b = 1;
  j.anchor_a = {0, 0, -0.2};
  j.anchor_b = {0.001, 0, -0.2};  // 1 mm apart
  solve_constraints(bodies, {}, {j}, 0.01, 16, 0.2, 0.002);
  // the full gap closes within the substep: relative anchor speed = gap / h
  Vec3 va = bodies[0].v + cross(bodies[0].w, j.anchor_a - bodies[0].com);
  Vec3 vb = bodies[1].v + cross(bodies[1].w, j.anchor_b - bodies[1].com);
  CHECK((vb - va).x == doctest::Approx(-0.1).epsilon(1e-6));
}

TEST_CASE("solver: impulses conserve momentum and pair exactly") {
  for (int round = 0; round < 50; ++round) {
    std::vector<SolverBody> bodies;
    for (int i = 0; i < 4; ++i)
      bodies.push_back(free_sphere({uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)},
                                   {uniform(-2, 2), uniform(-2, 2), uniform(-2, 2)},
                                   uniform(0.5, 4.0), uniform(0.05, 0.3)));
    std::vector<SolverBody> before = bodies;

    std::vector<Contact> contacts;
    for (int i = 0; i < 3; ++i) {
      Vec3 n = normalized({uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)});
      contacts.push_back(contact_between(i, i + 1, (bodies[i].com + bodies[i + 1].com) * 0.5, n,
                                         uniform(-0.01, 0.005), 0.5, 0.2));
    }
    std::vector<JointAttachment> joints;
    JointAttachment j;
    j.a = 0;
    j.b = 3;
    j.anchor_a = j.anchor_b = (bodies[0].com + bodies[3].com) * 0.5;
    joints.push_back(j);

    auto diag = solve_constraints(bodies, contacts, joints, 0.01, 16, 0.2, 0.002);

    // linear and angular momentum are untouched by internal impulses
    Vec3 dp{0, 0, 0}, dl{0, 0, 0};
    for (size_t i = 0; i < bodies.size(); ++i) {
      Real m = 1.0 / bodies[i].inv_mass;
      Mat3 inertia = inverse(bodies[i].inv_inertia);
      dp += (bodies[i].v - before[i].v) * m;
      dl += inertia * (bodies[i].w - before[i].w) +
            cross(bodies[i].com, (bodies[i].v - before[i].v) * m);
    }
    CHECK(norm(dp) < 1e-9);
    CHECK(norm(dl) < 1e-9);

    // velocity deltas decompose into the reported contact impulses
    Vec3 recon[4] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    for (size_t c = 0; c < contacts.size(); ++c) {
      recon[contacts[c].a] += diag.contact_impulses[c] * bodies[contacts[c].a].inv_mass;
      recon[contacts[c].b] -= diag.contact_impulses[c] * bodies[contacts[c].b].inv_mass;
    }
    // the joint shares body 0 and 3, so compare the contact-only middle pair
    for (int i : {1, 2}) CHECK(norm((bodies[i].v - before[i].v) - recon[i]) < 1e-12);
  }
}

TEST_CASE("free-space tracking is exact") {
  ArticulatedBodySpec spec = make_humanoid22();
  SynthParams p;
  p.frames = 60;
  MotionSequence seq = synth_motion("sine_joints", p);
  Simulation sim(spec, empty_scene(), base_config(), HalfPhysics{}, seq);
  for (int t = 1; t < seq.frame_count(); ++t) {
    sim.step_frame(t);
    CHECK(tracking_error(spec, sim.state(), seq) < 1e-9);
    CHECK(sim.state().anchor_residual == 0.0);
    CHECK(sim.state().frame == t);
    CHECK(sim.state().time == doctest::Approx(t / 30.0));
  }
}

TEST_CASE("free-space walk tracking is exact") {
  ArticulatedBodySpec spec = make_humanoid22();
  SynthParams p;
  p.frames = 45;
  MotionSequence seq = synth_motion("walk_forward", p);
  Simulation sim(spec, empty_scene(), base_config(), HalfPhysics{}, seq);
  for (int t = 1; t < seq.frame_count(); ++t) {
    sim.step_frame(t);
    CHECK(tracking_error(spec, sim.state(), seq) < 1e-9);
  }
}

TEST_CASE("runs are bitwise deterministic") {
  ArticulatedBodySpec spec = make_humanoid22();
  SynthParams p;
  p.frames = 30;
  MotionSequence seq = synth_motion("walk_forward", p);
  SceneSpec scene = floor_scene();
  RigidObjectSpec ball{"ball", SphereShape{0.1}, 0.5, 0.5, 0.3, Pose{{0.5, 0, 0.1}, {1, 0, 0, 0}},
                       Vec3{}, Vec3{}};
  scene.objects.push_back(ball);

  Trajectory t1 = run(spec, scene, base_config(), HalfPhysics{1.0}, seq);
  Trajectory t2 = run(spec, scene, base_config(), HalfPhysics{1.0}, seq);
  REQUIRE(t1.frames.size() == t2.frames.size());
  for (size_t f = 0; f < t1.frames.size(); ++f) {
    for (size_t i = 0; i < t1.frames[f].link_poses.size(); ++i) {
      const Quat& qa = t1.frames[f].link_poses[i].rot;
      const Quat& qb = t2.frames[f].link_poses[i].rot;
      CHECK(norm(t1.frames[f].link_poses[i].pos - t2.frames[f].link_poses[i].pos) == 0.0);
      CHECK(qa.w == qb.w);
      CHECK(qa.x == qb.x);
      CHECK(qa.y == qb.y);
      CHECK(qa.z == qb.z);
    }
    for (size_t o = 0; o < t1.frames[f].objects.size(); ++o)
      CHECK(norm(t1.frames[f].objects[o].pose.pos - t2.frames[f].objects[o].pose.pos) == 0.0);
  }
}

TEST_CASE("stiffness gain is inert while nothing touches the body") {
  ArticulatedBodySpec spec = make_humanoid22();
  SynthParams p;
  p.frames = 40;
  MotionSequence seq = synth_motion("sine_joints", p);
  Trajectory off = run(spec, empty_scene(), base_config(), HalfPhysics{0.0}, seq);
  Trajectory on = run(spec, empty_scene(), base_config(), HalfPhysics{1.0}, seq);
  for (size_t f = 0; f < off.frames.size(); ++f)
    for (size_t i = 0; i < off.frames[f].link_poses.size(); ++i)
      CHECK(norm(off.frames[f].link_poses[i].pos - on.frames[f].link_poses[i].pos) == 0.0);
}

TEST_CASE("a free object falls like the closed-form integrator") {
  ArticulatedBodySpec spec = make_chain3();
  SynthParams p;
  p.frames = 11;
  p.joint_count = 2;
  p.height = 5.0;  // chain parked far from the object
  MotionSequence seq = synth_motion("static", p);
  SceneSpec scene;
  scene.objects.push_back(
      {"ball", SphereShape{0.1}, 1.0, 0.5, 0.0, Pose{{2, 0, 1}, {1, 0, 0, 0}}, Vec3{}, Vec3{}});
  SimConfig cfg = base_config();
  Trajectory traj = run(spec, scene, cfg, HalfPhysics{}, seq);

  Real h = (1.0 / 30.0) / cfg.substeps;
  int steps = 10 * cfg.substeps;
  Real want_z = 1.0 - 9.81 * h * h * (Real(steps) * (steps + 1) / 2.0);
  CHECK(traj.frames.back().objects[0].pose.pos.z == doctest::Approx(want_z).epsilon(1e-9));
}

TEST_CASE("a dropped ball settles just above the floor and stays") {
  ArticulatedBodySpec spec = make_chain3();
  SynthParams p;
  p.frames = 60;
  p.joint_count = 2;
  p.height = 5.0;
  MotionSequence seq = synth_motion("static", p);
  SceneSpec scene = floor_scene();
  // a short drop: impact speed stays under slop / h, inside the regime the
  // fixed detection margin is built for
  scene.objects.push_back(
      {"ball", SphereShape{0.1}, 1.0, 0.5, 0.0, Pose{{2, 0, 0.11}, {1, 0, 0, 0}}, Vec3{}, Vec3{}});
  Trajectory traj = run(spec, scene, base_config(), HalfPhysics{}, seq);

  for (const SimState& st : traj.frames) CHECK(st.objects[0].pose.pos.z > 0.1 - 1e-9);
  Real rest = traj.frames.back().objects[0].pose.pos.z;
  CHECK(rest == doctest::Approx(0.1 + 0.0005).epsilon(1e-3));
  for (size_t f = traj.frames.size() - 10; f < traj.frames.size(); ++f) {
    CHECK(std::fabs(traj.frames[f].objects[0].pose.pos.z - rest) < 1e-6);
    CHECK(norm(traj.frames[f].objects[0].lin_vel) < 1e-6);
  }
}

TEST_CASE("two objects exchange momentum elastically") {
  ArticulatedBodySpec spec = make_chain3();
  SynthParams p;
  p.frames = 25;
  p.joint_count = 2;
  p.height = 5.0;
  MotionSequence seq = synth_motion("static", p);
  SceneSpec scene;
  scene.objects.push_back({"left", SphereShape{0.1}, 1.0, 0.0, 1.0,
                           Pose{{-0.3, 0, 1}, {1, 0, 0, 0}}, Vec3{1, 0, 0}, Vec3{}});
  scene.objects.push_back({"right", SphereShape{0.1}, 1.0, 0.0, 1.0,
                           Pose{{0.3, 0, 1}, {1, 0, 0, 0}}, Vec3{-1, 0, 0}, Vec3{}});
  SimConfig cfg = base_config();
  cfg.gravity = {0, 0, 0};
  Trajectory traj = run(spec, scene, cfg, HalfPhysics{}, seq);

  for (const SimState& st : traj.frames) {
    Vec3 total = st.objects[0].lin_vel + st.objects[1].lin_vel;
    CHECK(norm(total) < 1e-9);
  }
  CHECK(traj.frames.back().objects[0].lin_vel.x == doctest::Approx(-1.0).epsilon(0.02));
  CHECK(traj.frames.back().objects[1].lin_vel.x == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("standing on the floor tracks through the contact solver") {
  ArticulatedBodySpec spec = make_humanoid22();
  SynthParams p;
  p.frames = 30;
  MotionSequence seq = synth_motion("static", p);
  Simulation sim(spec, floor_scene(), base_config(), HalfPhysics{}, seq);
  for (int t = 1; t < seq.frame_count(); ++t) {
    sim.step_frame(t);
    CHECK(tracking_error(spec, sim.state(), seq) < 0.002);
    CHECK(sim.state().anchor_residual <= 1e-6);
  }
}

TEST_CASE("teleport mode writes the raw targets") {
  ArticulatedBodySpec spec = make_humanoid22();
  SynthParams p;
  p.frames = 20;
  MotionSequence seq = synth_motion("walk_forward", p);
  Simulation sim(spec, floor_scene(), base_config(), PositionTeleport{}, seq);
  for (int t = 1; t < seq.frame_count(); ++t) {
    sim.step_frame(t);
    CHECK(tracking_error(spec, sim.state(), seq) < 1e-12);
    for (const auto& v : sim.state().link_velocities) {
      CHECK(norm(v.lin) == 0.0);
      CHECK(norm(v.ang) == 0.0);
    }
  }
}

TEST_CASE("torque control lags the reference but stays bounded") {
  ArticulatedBodySpec spec = make_humanoid22();
  SynthParams p;
  p.frames = 60;
  MotionSequence seq = synth_motion("sine_joints", p);
  Simulation sim(spec, empty_scene(), base_config(), TorquePD{}, seq);
  Real worst = 0;
  for (int t = 1; t < seq.frame_count(); ++t) {
    sim.step_frame(t);
    worst = std::fmax(worst, tracking_error(spec, sim.state(), seq));
    CHECK(sim.state().anchor_residual <= 1e-6);
  }
  CHECK(worst > 1e-4);  // visibly behind the targets
  CHECK(worst < 2.0);   // but not unstable
}

TEST_CASE("joint damping drags the tracking behind the targets") {
  ArticulatedBodySpec spec = make_humanoid22();
  SynthParams p;
  p.frames = 60;
  MotionSequence seq = synth_motion("sine_joints", p);
  SimConfig cfg = base_config();
  cfg.joint_damping = 5.0;
  Simulation sim(spec, empty_scene(), cfg, HalfPhysics{}, seq);
  Real worst = 0;
  for (int t = 1; t < seq.frame_count(); ++t) {
    sim.step_frame(t);
    worst = std::fmax(worst, tracking_error(spec, sim.state(), seq));
    CHECK(sim.state().anchor_residual <= 1e-6);
  }
  CHECK(worst > 1e-3);
  CHECK(worst < 2.0);
}

TEST_CASE("run records the initial state plus every stepped frame") {
  ArticulatedBodySpec spec = make_humanoid22();
  SynthParams p;
  p.frames = 12;
  MotionSequence seq = synth_motion("sine_joints", p);
  Trajectory traj = run(spec, empty_scene(), base_config(), HalfPhysics{}, seq);
  REQUIRE(static_cast<int>(traj.frames.size()) == seq.frame_count());
  CHECK(traj.frames[0].frame == 0);
  auto rest = forward_kinematics(spec, {seq.frames[0].root, seq.frames[0].joints});
  for (size_t i = 0; i < rest.size(); ++i)
    CHECK(norm(traj.frames[0].link_poses[i].pos - rest[i].pos) == 0.0);
}

TEST_CASE("construction validates its inputs") {
  ArticulatedBodySpec spec = make_humanoid22();
  SynthParams p;
  p.frames = 5;
  MotionSequence seq = synth_motion("static", p);

  SynthParams wrong = p;
  wrong.joint_count = 3;
  MotionSequence bad_joints = synth_motion("sine_joints", wrong);
  CHECK_THROWS_AS(Simulation(spec, empty_scene(), base_config(), HalfPhysics{}, bad_joints),
                  ConfigError);

  SceneSpec bad_scene;
  bad_scene.objects.push_back(
      {"plane", HalfspaceShape{}, 1.0, 0.5, 0.0, Pose{}, Vec3{}, Vec3{}});
  CHECK_THROWS_AS(Simulation(spec, bad_scene, base_config(), HalfPhysics{}, seq), ConfigError);

  SimConfig bad_cfg = base_config();
  bad_cfg.substeps = 0;
  CHECK_THROWS_AS(Simulation(spec, empty_scene(), bad_cfg, HalfPhysics{}, seq), ConfigError);
}

TEST_CASE("frames must be stepped consecutively") {
  ArticulatedBodySpec spec = make_humanoid22();
  SynthParams p;
  p.frames = 5;
  MotionSequence seq = synth_motion("static", p);
  Simulation sim(spec, empty_scene(), base_config(), HalfPhysics{}, seq);
  CHECK_THROWS_AS(sim.step_frame(2), ConfigError);
  CHECK_THROWS_AS(sim.step_frame(0), ConfigError);
  sim.step_frame(1);
  CHECK_THROWS_AS(sim.step_frame(1), ConfigError);
}

TEST_SUITE_END();
