#include "halfphys/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "halfphys/errors.hpp"

namespace hp {

namespace {

Mat3 scaled(const Mat3& a, Real s) {
  Mat3 r = Mat3::zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.m[i][j] = a.m[i][j] * s;
  return r;
}

Vec3 point_velocity(const std::vector<SolverBody>& bodies, int idx, const Vec3& r) {
  if (idx < 0) return {0, 0, 0};
  return bodies[idx].v + cross(bodies[idx].w, r);
}

// impulse P on `a` at arm ra, -P on `b` at arm rb; the exact pairing is what
// keeps momentum conserved to rounding
void apply_pair(std::vector<SolverBody>& bodies, int a, int b, const Vec3& ra,
                const Vec3& rb, const Vec3& P) {
  if (a >= 0) {
    bodies[a].v += P * bodies[a].inv_mass;
    bodies[a].w += bodies[a].inv_inertia * cross(ra, P);
  }
  if (b >= 0) {
    bodies[b].v -= P * bodies[b].inv_mass;
    bodies[b].w -= bodies[b].inv_inertia * cross(rb, P);
  }
}

// inverse of the scalar constraint mass along direction d
Real effective_mass(const std::vector<SolverBody>& bodies, int a, int b, const Vec3& ra,
                    const Vec3& rb, const Vec3& d) {
  Real k = 0;
  if (a >= 0) {
    Vec3 rc = cross(ra, d);
    k += bodies[a].inv_mass + dot(rc, bodies[a].inv_inertia * rc);
  }
  if (b >= 0) {
    Vec3 rc = cross(rb, d);
    k += bodies[b].inv_mass + dot(rc, bodies[b].inv_inertia * rc);
  }
  return k > kTiny ? 1.0 / k : 0.0;
}

}  // namespace

// ------------------------------------------------------------ stiffness

Quat expected_joint_pose(const Quat& frame_start, const Vec3& omega, int k, Real dt_sub) {
  return normalize(quat_mul(quat_exp(omega * (k * dt_sub)), frame_start));
}

Vec3 pjsc_torque(const Quat& expected, const Quat& actual, Real lambda) {
  if (lambda == 0) return {0, 0, 0};
  return quat_log(quat_mul(expected, conjugate(actual))) * lambda;
}

// --------------------------------------------------------------- solver

SolveDiagnostics solve_constraints(std::vector<SolverBody>& bodies,
                                   const std::vector<Contact>& contacts,
                                   const std::vector<JointAttachment>& joints,
                                   Real dt_sub, int iterations, Real beta, Real slop) {
  if (dt_sub <= 0) throw ConfigError("solver substep duration must be positive");
  const int n = static_cast<int>(bodies.size());
  const Real rest_offset = 0.25 * slop;

  SolveDiagnostics diag;
  diag.contact_impulses.assign(contacts.size(), Vec3{0, 0, 0});

  // equality rows holding the ball joints together; solved as 3x3 blocks
  struct JointRow {
    int a, b;
    Vec3 ra, rb;
    Mat3 k_inv;
    Vec3 bias;
  };
  std::vector<JointRow> joint_rows;
  joint_rows.reserve(joints.size());
  for (const JointAttachment& j : joints) {
    if (j.a >= n || j.b >= n) throw ConfigError("joint attachment references a missing body");
    JointRow r;
    r.a = j.a;
    r.b = j.b;
    r.ra = j.a >= 0 ? j.anchor_a - bodies[j.a].com : Vec3{0, 0, 0};
    r.rb = j.b >= 0 ? j.anchor_b - bodies[j.b].com : Vec3{0, 0, 0};
    Mat3 K = Mat3::zero();
    for (int side = 0; side < 2; ++side) {
      int idx = side == 0 ? j.a : j.b;
      if (idx < 0) continue;
      const SolverBody& body = bodies[idx];
      Mat3 s = skew(side == 0 ? r.ra : r.rb);
      Real im = body.inv_mass;
      K = K + Mat3::diagonal({im, im, im}) + scaled(s * body.inv_inertia * s, -1.0);
    }
    r.k_inv = inverse(K);  // singular (two immovables) inverts to zero: row inert
    r.bias = (j.anchor_b - j.anchor_a) / dt_sub;
    joint_rows.push_back(r);
  }

  // unilateral contact rows with a two-tangent friction box
  struct ContactRow {
    int a, b;
    Vec3 ra, rb;
    Vec3 normal, t1, t2;
    Real mass_n, mass_t1, mass_t2;
    Real v_min;
    Real friction;
    Real lambda_n = 0, lambda_t1 = 0, lambda_t2 = 0;
    Vec3 applied;
    int source;
    bool live;
  };
  std::vector<ContactRow> rows;
  rows.reserve(contacts.size());
  for (int ci = 0; ci < static_cast<int>(contacts.size()); ++ci) {
    const Contact& c = contacts[ci];
    if (c.a >= n || c.b >= n) throw ConfigError("contact references a missing body");
    ContactRow r;
    r.a = c.a;
    r.b = c.b;
    r.ra = c.a >= 0 ? c.point - bodies[c.a].com : Vec3{0, 0, 0};
    r.rb = c.b >= 0 ? c.point - bodies[c.b].com : Vec3{0, 0, 0};
    r.normal = c.normal;
    r.t1 = any_orthogonal(c.normal);
    r.t2 = cross(c.normal, r.t1);
    r.mass_n = effective_mass(bodies, r.a, r.b, r.ra, r.rb, r.normal);
    r.mass_t1 = effective_mass(bodies, r.a, r.b, r.ra, r.rb, r.t1);
    r.mass_t2 = effective_mass(bodies, r.a, r.b, r.ra, r.rb, r.t2);
    r.friction = c.friction;
    r.source = ci;
    r.live = r.mass_n > 0;

    // Speculative bound above the rest offset (consume the gap, never more),
    // positional push-out below it. Resting bodies park on the offset, which
    // keeps a strictly positive gap while friction still carries load.
    if (c.separation >= rest_offset)
      r.v_min = -(c.separation - rest_offset) / dt_sub;
    else
      r.v_min = beta * (rest_offset - c.separation) / dt_sub;
    if (c.restitution > 0) {
      Real approach =
          dot(r.normal, point_velocity(bodies, r.a, r.ra) - point_velocity(bodies, r.b, r.rb));
      if (approach < -1e-3) r.v_min = std::fmax(r.v_min, -c.restitution * approach);
    }
    rows.push_back(r);
  }

  // fixed row order: joints as given, contacts by participant ids
  std::vector<int> order(rows.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    if (rows[x].a != rows[y].a) return rows[x].a < rows[y].a;
    return rows[x].b < rows[y].b;
  });

  for (int it = 0; it < iterations; ++it) {
    for (JointRow& r : joint_rows) {
      Vec3 v_rel = point_velocity(bodies, r.b, r.rb) - point_velocity(bodies, r.a, r.ra);
      Vec3 P = r.k_inv * ((v_rel + r.bias) * -1.0);
      apply_pair(bodies, r.b, r.a, r.rb, r.ra, P);
    }
    for (int ri : order) {
      ContactRow& r = rows[ri];
      if (!r.live) continue;

      Real vn = dot(r.normal, point_velocity(bodies, r.a, r.ra) -
                                  point_velocity(bodies, r.b, r.rb));
      Real dl = (r.v_min - vn) * r.mass_n;
      Real accumulated = std::fmax(0.0, r.lambda_n + dl);
      dl = accumulated - r.lambda_n;
      r.lambda_n = accumulated;
      if (dl != 0) {
        Vec3 P = r.normal * dl;
        apply_pair(bodies, r.a, r.b, r.ra, r.rb, P);
        r.applied += P;
      }

      Real limit = r.friction * r.lambda_n;
      for (int axis = 0; axis < 2; ++axis) {
        const Vec3& t = axis == 0 ? r.t1 : r.t2;
        Real mass = axis == 0 ? r.mass_t1 : r.mass_t2;
        Real& lambda = axis == 0 ? r.lambda_t1 : r.lambda_t2;
        if (mass <= 0) continue;
        Real vt = dot(t, point_velocity(bodies, r.a, r.ra) -
                             point_velocity(bodies, r.b, r.rb));
        Real dt_imp = -vt * mass;
        Real clamped = std::clamp(lambda + dt_imp, -limit, limit);
        dt_imp = clamped - lambda;
        lambda = clamped;
        if (dt_imp != 0) {
          Vec3 P = t * dt_imp;
          apply_pair(bodies, r.a, r.b, r.ra, r.rb, P);
          r.applied += P;
        }
      }
    }
  }

  for (const JointRow& r : joint_rows) {
    Vec3 v_rel = point_velocity(bodies, r.b, r.rb) - point_velocity(bodies, r.a, r.ra);
    diag.max_joint_speed_error = std::fmax(diag.max_joint_speed_error, norm(v_rel + r.bias));
  }
  for (const ContactRow& r : rows) diag.contact_impulses[r.source] = r.applied;
  return diag;
}

// ----------------------------------------------------------- simulation

// one link or object as the substep loop sees it: com-centric, world frame
struct Simulation::Body {
  Vec3 com;
  Quat rot;
  Vec3 v;  //!< velocity of the center of mass
  Vec3 w;
  Real inv_mass = 0;
  Vec3 inv_inertia_local;  //!< inverse principal moments, body frame
  Vec3 com_local;          //!< center of mass in the shape frame
};

namespace {

Pose body_pose(const Quat& rot, const Vec3& com, const Vec3& com_local) {
  return {com - rotate(rot, com_local), rot};
}

Mat3 inv_inertia_world(const Quat& rot, const Vec3& inv_local) {
  Mat3 r = mat3_from_quat(rot);
  return r * Mat3::diagonal(inv_local) * r.transposed();
}

Vec3 safe_inverse_principal(const Vec3& principal, const std::string& who) {
  if (!(principal.x > 0) || !(principal.y > 0) || !(principal.z > 0))
    throw ConfigError(who + ": principal inertia must be positive");
  return {1.0 / principal.x, 1.0 / principal.y, 1.0 / principal.z};
}

}  // namespace

Simulation::Simulation(const ArticulatedBodySpec& body, const SceneSpec& scene,
                       const SimConfig& config, const ControlMode& mode,
                       const MotionSequence& motion)
    : body_(body), scene_(scene), config_(config), mode_(mode), motion_(motion) {
  validate_body(body_);
  if (motion_.frame_count() < 1) throw ConfigError("motion needs at least one frame");
  if (motion_.joint_count != body_.joint_count())
    throw ConfigError("motion drives " + std::to_string(motion_.joint_count) +
                      " joints but the body has " + std::to_string(body_.joint_count()));
  for (const MotionFrame& f : motion_.frames)
    if (static_cast<int>(f.joints.size()) != motion_.joint_count)
      throw ConfigError("motion frame joint count does not match its header");

  if (config_.substeps < 1) throw ConfigError("substeps must be at least 1");
  if (config_.solver_iterations < 1) throw ConfigError("solver_iterations must be at least 1");
  if (!(config_.contact_slop >= 0)) throw ConfigError("contact_slop must be non-negative");
  if (!(config_.baumgarte_beta >= 0 && config_.baumgarte_beta <= 1))
    throw ConfigError("baumgarte_beta must lie in [0, 1]");
  if (!(config_.joint_damping >= 0)) throw ConfigError("joint_damping must be non-negative");
  if (!(config_.max_angular_speed >= 0))
    throw ConfigError("max_angular_speed must be non-negative");
  if (!finite(config_.gravity)) throw ConfigError("gravity must be finite");

  const int L = body_.link_count();
  const int O = static_cast<int>(scene_.objects.size());
  const int S = static_cast<int>(scene_.statics.size());
  const bool teleport = std::holds_alternative<PositionTeleport>(mode_);

  for (const LinkSpec& l : body_.links)
    if (is_halfspace(l.shape) || is_trimesh(l.shape))
      throw ConfigError("link '" + l.name + "': links must be spheres, capsules or boxes");
  for (const StaticCollider& s : scene_.statics) {
    validate_shape(s.shape);
    if (!(s.friction >= 0) || !(s.restitution >= 0 && s.restitution <= 1))
      throw ConfigError("static '" + s.name + "': bad friction or restitution");
  }
  for (const RigidObjectSpec& o : scene_.objects) {
    validate_shape(o.shape);
    if (is_halfspace(o.shape) || is_trimesh(o.shape))
      throw ConfigError("object '" + o.name + "': dynamic objects must be spheres, capsules or boxes");
    if (!(o.mass > 0) || !std::isfinite(o.mass))
      throw ConfigError("object '" + o.name + "': mass must be positive");
    if (!(o.friction >= 0) || !(o.restitution >= 0 && o.restitution <= 1))
      throw ConfigError("object '" + o.name + "': bad friction or restitution");
    if (!finite(o.initial_pose.pos) || !finite(o.initial_pose.rot) ||
        !finite(o.initial_lin_vel) || !finite(o.initial_ang_vel))
      throw ConfigError("object '" + o.name + "': initial state must be finite");
  }

  bodies_.resize(L + O);
  for (int i = 0; i < L; ++i) {
    const InertiaSpec& in = body_.links[i].inertia;
    Body& b = bodies_[i];
    b.com_local = in.com;
    if (!teleport) {
      b.inv_mass = 1.0 / in.mass;
      b.inv_inertia_local = safe_inverse_principal(in.principal, "link '" + body_.links[i].name + "'");
    }
  }
  for (int o = 0; o < O; ++o) {
    const RigidObjectSpec& spec = scene_.objects[o];
    InertiaSpec in = shape_inertia(spec.shape, spec.mass);
    Body& b = bodies_[L + o];
    b.com_local = in.com;
    b.inv_mass = 1.0 / in.mass;
    b.inv_inertia_local = safe_inverse_principal(in.principal, "object '" + spec.name + "'");
    b.rot = normalize(spec.initial_pose.rot);
    b.com = spec.initial_pose.pos + rotate(b.rot, b.com_local);
    b.w = spec.initial_ang_vel;
    b.v = spec.initial_lin_vel + cross(b.w, rotate(b.rot, b.com_local));
  }

  virtual_js_ = {motion_.frames[0].root, motion_.frames[0].joints};
  refresh_links_from_joint_state();

  frame_joint_omegas_.assign(body_.joint_count(), Vec3{0, 0, 0});
  frame_start_joints_ = virtual_js_.joints;
  forced_disturbed_ = config_.joint_damping > 0 || config_.human_gravity ||
                      std::holds_alternative<TorquePD>(mode_);
  disturbed_ = forced_disturbed_;

  // material and participation tables, fixed for the run
  collidable_friction_.assign(L + O + S, 1.0);
  collidable_restitution_.assign(L + O + S, 0.0);
  for (int o = 0; o < O; ++o) {
    collidable_friction_[L + o] = scene_.objects[o].friction;
    collidable_restitution_[L + o] = scene_.objects[o].restitution;
  }
  for (int s = 0; s < S; ++s) {
    collidable_friction_[L + O + s] = scene_.statics[s].friction;
    collidable_restitution_[L + O + s] = scene_.statics[s].restitution;
  }
  for (int i = 0; i < L; ++i)
    if (body_.links[i].collision_enabled) active_collidables_.push_back(i);
  for (int o = 0; o < O; ++o) active_collidables_.push_back(L + o);
  static_aabbs_.reserve(S);
  for (int s = 0; s < S; ++s) {
    active_collidables_.push_back(L + O + s);
    static_aabbs_.push_back(
        compute_aabb(scene_.statics[s].shape, scene_.statics[s].pose, config_.contact_slop));
  }

  state_.link_poses.resize(L);
  state_.link_velocities.resize(L);
  state_.objects.resize(O);
  write_back_state(0);
}

Simulation::~Simulation() = default;

void Simulation::refresh_links_from_joint_state() {
  std::vector<Pose> poses = forward_kinematics(body_, virtual_js_);
  for (int i = 0; i < body_.link_count(); ++i) {
    Body& b = bodies_[i];
    b.rot = poses[i].rot;
    b.com = poses[i].pos + rotate(poses[i].rot, b.com_local);
    b.v = {0, 0, 0};
    b.w = {0, 0, 0};
  }
}

void Simulation::step_frame(int t) {
  if (t != state_.frame + 1)
    throw ConfigError("frames step consecutively: expected " +
                      std::to_string(state_.frame + 1) + ", got " + std::to_string(t));
  if (t >= motion_.frame_count())
    throw ConfigError("frame " + std::to_string(t) + " is past the end of the motion");

  if (std::holds_alternative<PositionTeleport>(mode_)) {
    virtual_js_ = {motion_.frames[t].root, motion_.frames[t].joints};
    refresh_links_from_joint_state();
  } else {
    FrameVelocityOptions opts;
    opts.max_angular_speed = config_.max_angular_speed;
    opts.root_linear_from_actual = config_.root_linear_from_actual;
    enforce_frame_velocities(frame_velocities(motion_, t, state_.joint_state, opts));
  }

  disturbed_ = forced_disturbed_;
  const Real h = motion_.dt() / config_.substeps;
  for (int k = 0; k < config_.substeps; ++k) substep(h, k);
  write_back_state(t);
}

void Simulation::enforce_frame_velocities(const FrameVelocities& fv) {
  frame_joint_omegas_ = fv.joint_omegas;
  frame_root_vel_ = {fv.root_linear, fv.root_angular};
  frame_start_joints_ = state_.joint_state.joints;

  const int L = body_.link_count();
  if (std::holds_alternative<TorquePD>(mode_)) {
    // only the root is carried; every joint has to torque its own way there
    Body& root = bodies_[0];
    root.w = fv.root_angular;
    root.v = fv.root_linear + cross(root.w, rotate(root.rot, root.com_local));
    return;
  }
  std::vector<Pose> poses(L);
  for (int i = 0; i < L; ++i)
    poses[i] = body_pose(bodies_[i].rot, bodies_[i].com, bodies_[i].com_local);
  std::vector<SpatialVelocity> vel =
      forward_velocity(body_, poses, frame_root_vel_, frame_joint_omegas_);
  for (int i = 0; i < L; ++i) {
    bodies_[i].w = vel[i].ang;
    bodies_[i].v = vel[i].lin + cross(vel[i].ang, rotate(bodies_[i].rot, bodies_[i].com_local));
  }
}

void Simulation::substep(Real h, int k) {
  const int L = body_.link_count();
  const int O = static_cast<int>(scene_.objects.size());
  const bool teleport = std::holds_alternative<PositionTeleport>(mode_);

  for (int i = L; i < L + O; ++i) bodies_[i].v += config_.gravity * h;
  if (config_.human_gravity && !teleport)
    for (int i = 0; i < L; ++i) bodies_[i].v += config_.gravity * h;

  if (!teleport) apply_joint_drives(h, k);

  detect_contacts(contacts_);

  // the first touch anywhere on the chain ends the exact joint-space ride
  // for the rest of the frame
  if (!disturbed_)
    for (const Contact& c : contacts_)
      if (c.a < L || c.b < L) {
        disturbed_ = true;
        break;
      }

  solver_bodies_.resize(L + O);
  for (int i = 0; i < L + O; ++i) {
    const Body& b = bodies_[i];
    SolverBody& s = solver_bodies_[i];
    s.com = b.com;
    s.rot = b.rot;
    s.v = b.v;
    s.w = b.w;
    s.inv_mass = b.inv_mass;
    s.inv_inertia = inv_inertia_world(b.rot, b.inv_inertia_local);
  }
  // collidable ids -> solver indices; scenery collapses onto the world
  for (Contact& c : contacts_) {
    if (c.a >= L + O) c.a = -1;
    if (c.b >= L + O) c.b = -1;
  }
  attachments_.clear();
  if (!teleport && disturbed_) {
    for (int i = 1; i < L; ++i) {
      const LinkSpec& l = body_.links[i];
      JointAttachment j;
      j.a = l.parent;
      j.b = i;
      j.anchor_a = body_pose(bodies_[l.parent].rot, bodies_[l.parent].com,
                             bodies_[l.parent].com_local)
                       .apply(l.joint_anchor_parent);
      j.anchor_b =
          body_pose(bodies_[i].rot, bodies_[i].com, bodies_[i].com_local).apply(l.joint_anchor_child);
      attachments_.push_back(j);
    }
  }
  solve_constraints(solver_bodies_, contacts_, attachments_, h, config_.solver_iterations,
                    config_.baumgarte_beta, config_.contact_slop);
  for (int i = 0; i < L + O; ++i) {
    bodies_[i].v = solver_bodies_[i].v;
    bodies_[i].w = solver_bodies_[i].w;
  }

  bool exact_path = !disturbed_ && std::holds_alternative<HalfPhysics>(mode_);
  if (exact_path) {
    // joint-space integration: lands on the target to rounding, and the
    // joints stay assembled by construction
    virtual_js_.root.pos += frame_root_vel_.lin * h;
    virtual_js_.root.rot = integrate_orientation(virtual_js_.root.rot, frame_root_vel_.ang, h);
    for (int j = 0; j < body_.joint_count(); ++j)
      virtual_js_.joints[j] =
          integrate_orientation(virtual_js_.joints[j], frame_joint_omegas_[j], h);
    std::vector<Pose> poses = forward_kinematics(body_, virtual_js_);
    std::vector<SpatialVelocity> vel =
        forward_velocity(body_, poses, frame_root_vel_, frame_joint_omegas_);
    for (int i = 0; i < L; ++i) {
      Body& b = bodies_[i];
      b.rot = poses[i].rot;
      b.com = poses[i].pos + rotate(poses[i].rot, b.com_local);
      b.w = vel[i].ang;
      b.v = vel[i].lin + cross(vel[i].ang, rotate(b.rot, b.com_local));
    }
  } else if (!teleport) {
    for (int i = 0; i < L; ++i) {
      bodies_[i].com += bodies_[i].v * h;
      bodies_[i].rot = integrate_orientation(bodies_[i].rot, bodies_[i].w, h);
    }
  }
  for (int i = L; i < L + O; ++i) {
    bodies_[i].com += bodies_[i].v * h;
    bodies_[i].rot = integrate_orientation(bodies_[i].rot, bodies_[i].w, h);
  }

  if (!teleport && disturbed_) project_joint_anchors();

  for (const Body& b : bodies_)
    if (!finite(b.com) || !finite(b.rot) || !finite(b.v) || !finite(b.w))
      throw SimError("state became non-finite at frame " + std::to_string(state_.frame + 1) +
                     ", substep " + std::to_string(k));
}

void Simulation::detect_contacts(std::vector<Contact>& out) const {
  out.clear();
  const int L = body_.link_count();
  const int O = static_cast<int>(scene_.objects.size());
  const Real margin = config_.contact_slop;

  auto shape_of = [&](int id) -> const Shape& {
    if (id < L) return body_.links[id].shape;
    if (id < L + O) return scene_.objects[id - L].shape;
    return scene_.statics[id - L - O].shape;
  };
  auto pose_of = [&](int id) -> Pose {
    if (id < L + O)
      return body_pose(bodies_[id].rot, bodies_[id].com, bodies_[id].com_local);
    return scene_.statics[id - L - O].pose;
  };

  std::vector<Aabb> boxes(active_collidables_.size());
  for (size_t i = 0; i < active_collidables_.size(); ++i) {
    int id = active_collidables_[i];
    boxes[i] = id < L + O ? compute_aabb(shape_of(id), pose_of(id), margin)
                          : static_aabbs_[id - L - O];
  }

  for (const auto& [ia, ib] : broadphase(boxes)) {
    int a = active_collidables_[ia];
    int b = active_collidables_[ib];
    if (a < L && b < L) continue;                    // the chain never self-collides
    if (a >= L + O && b >= L + O) continue;          // scenery against scenery
    bool a_fixed = a >= L + O || bodies_[a].inv_mass == 0;
    bool b_fixed = b >= L + O || bodies_[b].inv_mass == 0;
    if (a_fixed && b_fixed) continue;                // nothing the solver could move

    for (Contact& c : narrowphase(shape_of(a), pose_of(a), a, shape_of(b), pose_of(b), b, margin)) {
      c.friction = collidable_friction_[c.a] * collidable_friction_[c.b];
      c.restitution = std::fmax(collidable_restitution_[c.a], collidable_restitution_[c.b]);
      out.push_back(c);
    }
  }
}

void Simulation::apply_joint_drives(Real h, int k) {
  const HalfPhysics* hp = std::get_if<HalfPhysics>(&mode_);
  const TorquePD* pd = std::get_if<TorquePD>(&mode_);
  const Real kp = pd ? pd->kp : 0.0;
  const Real kd = config_.joint_damping + (pd ? pd->kd : 0.0);
  const bool stiffness = hp && hp->pjsc_lambda > 0 && disturbed_;
  if (!stiffness && kp <= 0 && kd <= 0) return;

  for (int i = 1; i < body_.link_count(); ++i) {
    Body& child = bodies_[i];
    Body& parent = bodies_[body_.links[i].parent];
    const int j = i - 1;
    Mat3 inv_ic = inv_inertia_world(child.rot, child.inv_inertia_local);
    Mat3 inv_ip = inv_inertia_world(parent.rot, parent.inv_inertia_local);

    if (stiffness) {
      // explicit restoring torque toward the pose this frame's rates predict;
      // zero whenever the joint is exactly on its path
      Quat expected = expected_joint_pose(frame_start_joints_[j], frame_joint_omegas_[j], k, h);
      Quat actual = normalize(quat_mul(conjugate(parent.rot), child.rot));
      Vec3 tau = rotate(parent.rot, pjsc_torque(expected, actual, hp->pjsc_lambda));
      child.w += inv_ic * (tau * h);
      parent.w -= inv_ip * (tau * h);
    }

    if (kp > 0 || kd > 0) {
      // implicit step: solve for the angular impulse y so the torque is
      // evaluated at the post-step relative velocity (stable for stiff gains)
      Mat3 kmat = inv_ic + inv_ip;
      Real gain = h * (kp * h + kd);
      Vec3 rhs = (child.w - parent.w) * -gain;
      if (kp > 0) {
        Quat target = expected_joint_pose(frame_start_joints_[j], frame_joint_omegas_[j], k + 1, h);
        Quat actual = normalize(quat_mul(conjugate(parent.rot), child.rot));
        rhs += rotate(parent.rot, quat_log(quat_mul(target, conjugate(actual)))) * (h * kp);
      }
      Vec3 y = inverse(Mat3::identity() + scaled(kmat, gain)) * rhs;
      child.w += inv_ic * y;
      parent.w -= inv_ip * y;
    }
  }
}

void Simulation::project_joint_anchors() {
  // translation-only cleanup of the anchor gaps the velocity solve left
  // behind. Links are stored parent-before-child, so one pass that shifts
  // each child onto its parent's anchor closes every joint exactly; the
  // orientation part is what the next frame's enforcement corrects.
  for (int i = 1; i < body_.link_count(); ++i) {
    const LinkSpec& l = body_.links[i];
    Body& child = bodies_[i];
    const Body& parent = bodies_[l.parent];
    if (child.inv_mass <= 0) continue;
    Vec3 gap = body_pose(child.rot, child.com, child.com_local).apply(l.joint_anchor_child) -
               body_pose(parent.rot, parent.com, parent.com_local).apply(l.joint_anchor_parent);
    child.com -= gap;
  }
}

void Simulation::write_back_state(int t) {
  const int L = body_.link_count();
  const int O = static_cast<int>(scene_.objects.size());
  state_.frame = t;
  state_.time = t * motion_.dt();
  for (int i = 0; i < L; ++i) {
    const Body& b = bodies_[i];
    state_.link_poses[i] = body_pose(b.rot, b.com, b.com_local);
    state_.link_velocities[i] = {b.v - cross(b.w, rotate(b.rot, b.com_local)), b.w};
  }
  for (int o = 0; o < O; ++o) {
    const Body& b = bodies_[L + o];
    state_.objects[o].pose = body_pose(b.rot, b.com, b.com_local);
    state_.objects[o].lin_vel = b.v - cross(b.w, rotate(b.rot, b.com_local));
    state_.objects[o].ang_vel = b.w;
  }

  const bool exact = std::holds_alternative<PositionTeleport>(mode_) ||
                     (std::holds_alternative<HalfPhysics>(mode_) && !disturbed_);
  if (exact) {
    state_.joint_state = virtual_js_;
    state_.anchor_residual = 0;
  } else {
    JointRecovery rec = joint_state_from_links(body_, state_.link_poses);
    state_.joint_state = rec.state;
    state_.anchor_residual = rec.anchor_residual;
    virtual_js_ = rec.state;  // the exact path resumes from here if touch ends
  }
}

Trajectory run(const ArticulatedBodySpec& body, const SceneSpec& scene, const SimConfig& config,
               const ControlMode& mode, const MotionSequence& motion) {
  Simulation sim(body, scene, config, mode, motion);
  Trajectory traj;
  traj.object_names.reserve(scene.objects.size());
  for (const RigidObjectSpec& o : scene.objects) traj.object_names.push_back(o.name);
  traj.frames.reserve(motion.frame_count());
  traj.frames.push_back(sim.state());
  for (int t = 1; t < motion.frame_count(); ++t) {
    sim.step_frame(t);
    traj.frames.push_back(sim.state());
  }
  return traj;
}

}  // namespace hp
