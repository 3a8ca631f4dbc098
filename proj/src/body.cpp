#include "halfphys/body.hpp"

#include <map>
#include <set>

namespace hp {

int ArticulatedBodySpec::find_link(const std::string& n) const {
  for (int i = 0; i < link_count(); ++i)
    if (links[i].name == n) return i;
  return -1;
}

Real ArticulatedBodySpec::total_mass() const {
  Real m = 0;
  for (const auto& l : links) m += l.inertia.mass;
  return m;
}

void validate_body(const ArticulatedBodySpec& spec) {
  if (spec.links.empty()) throw ConfigError("body '" + spec.name + "' has no links");
  std::set<std::string> names;
  for (int i = 0; i < spec.link_count(); ++i) {
    const LinkSpec& l = spec.links[i];
    if (!names.insert(l.name).second)
      throw ConfigError("body '" + spec.name + "': repeated link name '" + l.name + "'");
    if (i == 0) {
      if (l.parent != -1) throw ConfigError("link 0 must be the root (parent -1)");
    } else if (l.parent < 0 || l.parent >= i) {
      // parents strictly before children rules out cycles and floating links
      throw ConfigError("link '" + l.name + "': parent must be an earlier link");
    }
    if (!(l.inertia.mass > 0))
      throw ConfigError("link '" + l.name + "': mass must be positive");
    if (!(l.inertia.principal.x > 0 && l.inertia.principal.y > 0 && l.inertia.principal.z > 0))
      throw ConfigError("link '" + l.name + "': rotational inertia must be positive");
    validate_shape(l.shape);
    if (is_halfspace(l.shape) || is_trimesh(l.shape))
      throw ConfigError("link '" + l.name + "': links need a volumetric shape");
  }
}

std::vector<Pose> forward_kinematics(const ArticulatedBodySpec& spec,
                                     const JointSpaceState& js) {
  if (static_cast<int>(js.joints.size()) != spec.joint_count())
    throw ConfigError("joint state has " + std::to_string(js.joints.size()) +
                      " joints, body expects " + std::to_string(spec.joint_count()));
  std::vector<Pose> poses(spec.link_count());
  poses[0] = {js.root.pos, normalize(js.root.rot)};
  for (int i = 1; i < spec.link_count(); ++i) {
    const LinkSpec& l = spec.links[i];
    const Pose& par = poses[l.parent];
    Quat rot = normalize(quat_mul(par.rot, js.joints[i - 1]));
    Vec3 anchor = par.pos + rotate(par.rot, l.joint_anchor_parent);
    poses[i] = {anchor - rotate(rot, l.joint_anchor_child), rot};
  }
  return poses;
}

std::vector<SpatialVelocity> forward_velocity(const ArticulatedBodySpec& spec,
                                              const std::vector<Pose>& poses,
                                              const SpatialVelocity& root_vel,
                                              const std::vector<Vec3>& joint_omegas) {
  if (static_cast<int>(poses.size()) != spec.link_count())
    throw ConfigError("pose buffer size does not match the body");
  if (static_cast<int>(joint_omegas.size()) != spec.joint_count())
    throw ConfigError("joint rate buffer size does not match the body");
  std::vector<SpatialVelocity> vel(spec.link_count());
  vel[0] = root_vel;
  for (int i = 1; i < spec.link_count(); ++i) {
    const LinkSpec& l = spec.links[i];
    const Pose& par = poses[l.parent];
    const SpatialVelocity& pv = vel[l.parent];
    Vec3 w = pv.ang + rotate(par.rot, joint_omegas[i - 1]);
    // the shared anchor moves with the parent; the child frame origin trails
    // it by the (rotating) child-side offset
    Vec3 anchor_vel = pv.lin + cross(pv.ang, rotate(par.rot, l.joint_anchor_parent));
    vel[i] = {anchor_vel - cross(w, rotate(poses[i].rot, l.joint_anchor_child)), w};
  }
  return vel;
}

JointRecovery joint_state_from_links(const ArticulatedBodySpec& spec,
                                     const std::vector<Pose>& poses) {
  if (static_cast<int>(poses.size()) != spec.link_count())
    throw ConfigError("pose buffer size does not match the body");
  JointRecovery rec;
  rec.state.root = poses[0];
  rec.state.joints.resize(spec.joint_count());
  for (int i = 1; i < spec.link_count(); ++i) {
    const LinkSpec& l = spec.links[i];
    const Pose& par = poses[l.parent];
    rec.state.joints[i - 1] =
        canonical(normalize(quat_mul(conjugate(par.rot), poses[i].rot)));
    Vec3 on_parent = par.pos + rotate(par.rot, l.joint_anchor_parent);
    Vec3 on_child = poses[i].pos + rotate(poses[i].rot, l.joint_anchor_child);
    rec.anchor_residual = std::fmax(rec.anchor_residual, norm(on_parent - on_child));
  }
  return rec;
}

// --------------------------------------------------------------- templates

namespace {

// one row of a template table: rest placement in world coordinates, turned
// into parent/child anchors below
struct LinkRow {
  std::string name;
  std::string parent;  // empty for root
  Vec3 joint;          // joint position at rest (ignored for root)
  Vec3 center;         // link frame origin at rest
  Shape shape;
  Real mass_frac;
};

ArticulatedBodySpec assemble(const std::string& body_name, const std::vector<LinkRow>& rows,
                             Real total_mass, Real scale) {
  Real frac_sum = 0;
  for (const auto& r : rows) frac_sum += r.mass_frac;

  std::map<std::string, int> index;
  std::map<std::string, Vec3> centers;
  ArticulatedBodySpec spec;
  spec.name = body_name;
  for (const auto& r : rows) {
    LinkSpec l;
    l.name = r.name;
    Shape shape = r.shape;
    if (auto* s = std::get_if<SphereShape>(&shape)) s->radius *= scale;
    if (auto* c = std::get_if<CapsuleShape>(&shape)) {
      c->radius *= scale;
      c->half_length *= scale;
    }
    if (auto* b = std::get_if<BoxShape>(&shape)) b->half_extents *= scale;
    l.shape = shape;

    Real mass = total_mass * scale * scale * scale * r.mass_frac / frac_sum;
    l.inertia = shape_inertia(shape, mass);

    if (!r.parent.empty()) {
      auto it = index.find(r.parent);
      if (it == index.end()) throw ConfigError("template row references unknown parent");
      l.parent = it->second;
      l.joint_anchor_parent = (r.joint - centers[r.parent]) * scale;
      l.joint_anchor_child = (r.joint - r.center) * scale;
    }
    index[r.name] = spec.link_count();
    centers[r.name] = r.center;
    spec.links.push_back(std::move(l));
  }
  validate_body(spec);
  return spec;
}

std::vector<LinkRow> humanoid22_rows() {
  // Rest layout: standing on z = 0, x forward, arms hanging. Capsules are
  // z-aligned so horizontal segments (clavicles, feet) use boxes. Mass
  // fractions follow the usual anthropometric tables and are normalized by
  // the assembler.
  std::vector<LinkRow> rows;
  auto add = [&](std::string name, std::string parent, Vec3 joint, Vec3 center,
                 Shape shape, Real frac) {
    rows.push_back({std::move(name), std::move(parent), joint, center, std::move(shape), frac});
  };

  add("pelvis", "", {}, {0, 0, 0.97}, BoxShape{{0.10, 0.13, 0.07}}, 0.142);
  add("spine1", "pelvis", {0, 0, 1.02}, {0, 0, 1.075}, CapsuleShape{0.09, 0.025}, 0.048);
  add("spine2", "spine1", {0, 0, 1.13}, {0, 0, 1.185}, CapsuleShape{0.10, 0.025}, 0.090);
  add("spine3", "spine2", {0, 0, 1.24}, {0, 0, 1.325}, CapsuleShape{0.11, 0.045}, 0.170);
  add("neck", "spine3", {0, 0, 1.41}, {0, 0, 1.455}, CapsuleShape{0.045, 0.02}, 0.012);
  add("head", "neck", {0, 0, 1.50}, {0, 0, 1.59}, SphereShape{0.09}, 0.069);

  for (int side = 0; side < 2; ++side) {
    Real s = side == 0 ? 1.0 : -1.0;
    std::string sfx = side == 0 ? ".L" : ".R";
    add("clav" + sfx, "spine3", {0, s * 0.03, 1.38}, {0, s * 0.105, 1.39},
        BoxShape{{0.04, 0.075, 0.025}}, 0.010);
    add("uarm" + sfx, "clav" + sfx, {0, s * 0.18, 1.40}, {0, s * 0.18, 1.255},
        CapsuleShape{0.045, 0.10}, 0.027);
    add("farm" + sfx, "uarm" + sfx, {0, s * 0.18, 1.11}, {0, s * 0.18, 0.985},
        CapsuleShape{0.04, 0.085}, 0.016);
    add("hand" + sfx, "farm" + sfx, {0, s * 0.18, 0.86}, {0, s * 0.18, 0.775},
        CapsuleShape{0.035, 0.05}, 0.006);
  }

  for (int side = 0; side < 2; ++side) {
    Real s = side == 0 ? 1.0 : -1.0;
    std::string sfx = side == 0 ? ".L" : ".R";
    add("thigh" + sfx, "pelvis", {0, s * 0.09, 0.92}, {0, s * 0.09, 0.71},
        CapsuleShape{0.07, 0.14}, 0.100);
    add("shin" + sfx, "thigh" + sfx, {0, s * 0.09, 0.50}, {0, s * 0.09, 0.295},
        CapsuleShape{0.05, 0.155}, 0.0465);
    add("foot" + sfx, "shin" + sfx, {0, s * 0.09, 0.09}, {0.04, s * 0.09, 0.045},
        BoxShape{{0.10, 0.045, 0.045}}, 0.012);
    add("toe" + sfx, "foot" + sfx, {0.14, s * 0.09, 0.03}, {0.17, s * 0.09, 0.03},
        BoxShape{{0.035, 0.04, 0.03}}, 0.0025);
  }
  return rows;
}

}  // namespace

ArticulatedBodySpec make_humanoid22(Real scale) {
  if (!(scale > 0)) throw ConfigError("body scale must be positive");
  return assemble("humanoid22", humanoid22_rows(), 70.0, scale);
}

ArticulatedBodySpec make_humanoid55(Real scale) {
  if (!(scale > 0)) throw ConfigError("body scale must be positive");
  std::vector<LinkRow> rows = humanoid22_rows();

  // fifteen phalanges per hand, plus jaw and eyes, for the 55-part layout
  for (int side = 0; side < 2; ++side) {
    Real s = side == 0 ? 1.0 : -1.0;
    std::string sfx = side == 0 ? ".L" : ".R";
    for (int f = 0; f < 5; ++f) {
      Real x = -0.03 + 0.015 * f;
      for (int p = 0; p < 3; ++p) {
        std::string name = "f" + std::to_string(f) + "." + std::to_string(p) + sfx;
        std::string parent =
            p == 0 ? "hand" + sfx : "f" + std::to_string(f) + "." + std::to_string(p - 1) + sfx;
        Real joint_z = 0.70 - 0.04 * p;
        rows.push_back({name, parent, {x, s * 0.18, joint_z},
                        {x, s * 0.18, joint_z - 0.02}, CapsuleShape{0.008, 0.012}, 0.0003});
      }
    }
  }
  rows.push_back({"jaw", "head", {0.05, 0, 1.55}, {0.06, 0, 1.53},
                  BoxShape{{0.03, 0.025, 0.015}}, 0.002});
  rows.push_back({"eye.L", "head", {0.075, 0.03, 1.61}, {0.075, 0.03, 1.61},
                  SphereShape{0.012}, 0.0005});
  rows.push_back({"eye.R", "head", {0.075, -0.03, 1.61}, {0.075, -0.03, 1.61},
                  SphereShape{0.012}, 0.0005});

  return assemble("humanoid55", rows, 70.0, scale);
}

ArticulatedBodySpec make_chain3() {
  std::vector<LinkRow> rows = {
      {"root", "", {}, {0, 0, 0}, SphereShape{0.1}, 1.0},
      {"mid", "root", {0, 0, -0.1}, {0, 0, -0.3}, CapsuleShape{0.05, 0.15}, 0.8},
      {"tip", "mid", {0, 0, -0.5}, {0, 0, -0.7}, CapsuleShape{0.05, 0.15}, 0.6},
  };
  return assemble("chain3", rows, 2.4, 1.0);
}

ArticulatedBodySpec make_template(const std::string& name, Real scale) {
  if (name == "humanoid22") return make_humanoid22(scale);
  if (name == "humanoid55") return make_humanoid55(scale);
  if (name == "chain3") return make_chain3();
  throw ConfigError("unknown body template '" + name + "'");
}

}  // namespace hp
