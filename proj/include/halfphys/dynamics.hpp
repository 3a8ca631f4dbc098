#pragma once

// The stepper. Each reference frame the humanoid links are driven by enforced
// velocities that carry them exactly onto the next kinematic target; scene
// objects obey gravity and impulses. Contacts and ball-joint attachments are
// resolved by a sequential-impulse solver running over fixed substeps. While
// the body is untouched the chain is integrated in joint space, so joints
// transmit nothing: links only react to the outside world (contacts,
// friction), never to each other's inertia.
//
// Control modes:
//   HalfPhysics      velocity enforcement, optional passive-stiffness torque
//                    that pulls disturbed joints back to the pose the frame's
//                    rates predict (gain lambda, 0 = off)
//   TorquePD         joints chase targets through torques only; the root
//                    velocity stays enforced
//   PositionTeleport poses written directly, no body response; kept as the
//                    failure baseline

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "halfphys/body.hpp"
#include "halfphys/collision.hpp"
#include "halfphys/motion.hpp"

namespace hp {

// ------------------------------------------------------------------ scene

struct StaticCollider {
  std::string name;
  Shape shape;
  Pose pose;
  Real friction = 1.0;
  Real restitution = 0.0;
};

struct RigidObjectSpec {
  std::string name;
  Shape shape;
  Real mass = 1.0;
  Real friction = 0.5;
  Real restitution = 0.0;
  Pose initial_pose;
  Vec3 initial_lin_vel;
  Vec3 initial_ang_vel;
};

struct SceneSpec {
  std::vector<StaticCollider> statics;
  std::vector<RigidObjectSpec> objects;
};

// ----------------------------------------------------------------- config

struct SimConfig {
  Vec3 gravity{0, 0, -9.81};
  int substeps = 8;
  int solver_iterations = 16;
  Real contact_slop = 0.002;      //!< m; also the contact generation margin
  Real baumgarte_beta = 0.2;      //!< fraction of excess depth removed per substep
  Real joint_damping = 0;         //!< N m s/rad of passive drag across joints
  bool human_gravity = false;     //!< pull links down too (off: targets carry height)
  Real max_angular_speed = 0;     //!< rad/s clamp on enforced joint rates, 0 = none
  bool root_linear_from_actual = false;  //!< see FrameVelocityOptions
};

struct HalfPhysics {
  Real pjsc_lambda = 0;  //!< passive joint stiffness compensation gain
};

struct TorquePD {
  Real kp = 200;
  Real kd = 10;
};

struct PositionTeleport {};

using ControlMode = std::variant<HalfPhysics, TorquePD, PositionTeleport>;

// ------------------------------------------------------------------ state

struct RigidObjectState {
  Pose pose;
  Vec3 lin_vel;
  Vec3 ang_vel;
};

struct SimState {
  int frame = 0;
  Real time = 0;
  JointSpaceState joint_state;           //!< recovered each frame
  Real anchor_residual = 0;              //!< worst joint gap backing the recovery
  std::vector<Pose> link_poses;
  std::vector<SpatialVelocity> link_velocities;
  std::vector<RigidObjectState> objects;
};

struct Trajectory {
  std::vector<std::string> object_names;
  std::vector<SimState> frames;
};

// --------------------------------------------------------- stiffness terms

// joint pose the frame's rates predict k substeps into the frame:
// exp(omega * k * dt_sub) applied to the pose held when the frame started
Quat expected_joint_pose(const Quat& frame_start, const Vec3& omega, int k, Real dt_sub);

// restorative torque pulling `actual` back onto `expected`:
// lambda * log(expected * actual^-1), as a rotation vector in the quats' frame
Vec3 pjsc_torque(const Quat& expected, const Quat& actual, Real lambda);

// ------------------------------------------------------------ solver entry

// rigid body as the constraint solver sees it: com-centric, world frame
struct SolverBody {
  Vec3 com;
  Quat rot;
  Vec3 v;
  Vec3 w;
  Real inv_mass = 0;        //!< 0 = immovable
  Mat3 inv_inertia;         //!< world frame; zero matrix for immovable
};

// ball joint holding two bodies together at a shared point
struct JointAttachment {
  int a = -1;     //!< body index, -1 = world
  int b = -1;
  Vec3 anchor_a;  //!< world anchor as currently placed on a
  Vec3 anchor_b;  //!< world anchor as currently placed on b
};

struct SolveDiagnostics {
  // net impulse applied to contact[i].a at its point; b received the exact
  // negation, by construction
  std::vector<Vec3> contact_impulses;
  Real max_joint_speed_error = 0;  //!< residual relative anchor speed, m/s
};

// Projected Gauss-Seidel over joint rows (first) then contact rows, sorted by
// ids. Velocity-level only; positions are the caller's business. Contact a/b
// index into `bodies`, -1 meaning the immovable world.
SolveDiagnostics solve_constraints(std::vector<SolverBody>& bodies,
                                   const std::vector<Contact>& contacts,
                                   const std::vector<JointAttachment>& joints,
                                   Real dt_sub, int iterations, Real beta,
                                   Real slop);

// ------------------------------------------------------------- simulation

class Simulation {
 public:
  Simulation(const ArticulatedBodySpec& body, const SceneSpec& scene,
             const SimConfig& config, const ControlMode& mode,
             const MotionSequence& motion);
  ~Simulation();

  // advance one reference frame; t counts up from 1, consecutive calls only.
  // Throws SimError when the state stops being finite.
  void step_frame(int t);

  const SimState& state() const { return state_; }
  const ArticulatedBodySpec& body() const { return body_; }
  const SceneSpec& scene() const { return scene_; }

 private:
  struct Body;  // solver-facing view of one link or object

  void enforce_frame_velocities(const FrameVelocities& fv);
  void substep(Real h, int k);
  void detect_contacts(std::vector<Contact>& out) const;
  void apply_joint_drives(Real h, int k);
  void project_joint_anchors();
  void refresh_links_from_joint_state();
  void write_back_state(int t);

  ArticulatedBodySpec body_;
  SceneSpec scene_;
  SimConfig config_;
  ControlMode mode_;
  MotionSequence motion_;

  SimState state_;

  // working buffers (indices: [0, L) links, [L, L+O) objects, then statics)
  std::vector<Body> bodies_;
  std::vector<Vec3> frame_joint_omegas_;   //!< parent frame, held for the frame
  std::vector<Quat> frame_start_joints_;   //!< joint quats when the frame began
  SpatialVelocity frame_root_vel_;
  JointSpaceState virtual_js_;             //!< joint-space integrator state
  bool disturbed_ = false;                 //!< contact touched the body this frame
  bool forced_disturbed_ = false;          //!< mode/config makes every frame dynamic

  // fixed per run: collidable ids taking part in collision, their material
  // properties, and the static boxes (their poses never change)
  std::vector<int> active_collidables_;
  std::vector<Real> collidable_friction_;
  std::vector<Real> collidable_restitution_;
  std::vector<Aabb> static_aabbs_;

  // scratch reused across substeps
  std::vector<Contact> contacts_;
  std::vector<SolverBody> solver_bodies_;
  std::vector<JointAttachment> attachments_;
};

// convenience wrapper: initialize from frame 0, step through the whole
// sequence, record every frame (index 0 is the initial state)
Trajectory run(const ArticulatedBodySpec& body, const SceneSpec& scene,
               const SimConfig& config, const ControlMode& mode,
               const MotionSequence& motion);

}  // namespace hp
