#pragma once

// Articulated body description plus the kinematic maps over it: forward
// kinematics, velocity propagation and the inverse recovery of joint state
// from link poses. Every joint is a 3-dof ball joint; the tree is stored
// parent-before-child with the root at index 0.
//
// Conventions:
//   - link frames sit at the shape center with identity orientation in the
//     rest pose (so a body file needs no quaternions)
//   - joint i connects links[i+1] to its parent; joint quats are child
//     orientation relative to parent
//   - joint angular velocities are expressed in the parent frame

#include <string>
#include <vector>

#include "halfphys/shapes.hpp"

namespace hp {

struct LinkSpec {
  std::string name;
  int parent = -1;            //!< index into links, -1 for the root
  Vec3 joint_anchor_parent;   //!< joint point in the parent frame
  Vec3 joint_anchor_child;    //!< same point in this link's frame
  Shape shape;
  InertiaSpec inertia;
  bool collision_enabled = true;
};

struct ArticulatedBodySpec {
  std::string name;
  std::vector<LinkSpec> links;

  int link_count() const { return static_cast<int>(links.size()); }
  int joint_count() const { return static_cast<int>(links.size()) - 1; }
  int find_link(const std::string& name) const;  // -1 when absent
  Real total_mass() const;
};

// generalized coordinates: root pose plus one quaternion per ball joint
struct JointSpaceState {
  Pose root;
  std::vector<Quat> joints;
};

// maximal coordinates: one world pose/velocity per link
struct LinkSpaceState {
  std::vector<Pose> poses;
  std::vector<SpatialVelocity> velocities;
};

struct JointRecovery {
  JointSpaceState state;
  Real anchor_residual = 0;  //!< largest joint-anchor gap in meters
};

// tree ordering, unique names, positive masses, valid shapes; throws ConfigError
void validate_body(const ArticulatedBodySpec& spec);

// link poses for the given joint state (root pose applied, anchors chained)
std::vector<Pose> forward_kinematics(const ArticulatedBodySpec& spec,
                                     const JointSpaceState& js);

// Instantaneous rigid-chain velocities consistent with the time derivative of
// forward_kinematics: child angular = parent angular + R_parent * joint rate,
// child linear follows the joint anchor.
std::vector<SpatialVelocity> forward_velocity(const ArticulatedBodySpec& spec,
                                              const std::vector<Pose>& poses,
                                              const SpatialVelocity& root_vel,
                                              const std::vector<Vec3>& joint_omegas);

// Joint state that best explains the given link poses: root pose copied from
// link 0, joint quats from relative orientations. The residual reports how far
// the poses are from an exactly assembled chain.
JointRecovery joint_state_from_links(const ArticulatedBodySpec& spec,
                                     const std::vector<Pose>& poses);

// --------------------------------------------------------------- templates

// 22-link human: pelvis, three spine segments, neck, head, and per side
// clavicle/upper arm/forearm/hand plus thigh/shin/foot/toes. Base mass 70 kg
// split by standard anthropometric segment fractions; scale multiplies
// lengths, so mass grows with scale cubed. Rest pose stands on z = 0.
ArticulatedBodySpec make_humanoid22(Real scale = 1.0);

// humanoid22 plus finger phalanges, jaw and eyes for a 55-part layout
ArticulatedBodySpec make_humanoid55(Real scale = 1.0);

// hanging 3-link chain (sphere root, two capsules); small test body
ArticulatedBodySpec make_chain3();

// resolves "humanoid22" / "humanoid55" / "chain3"; throws ConfigError
ArticulatedBodySpec make_template(const std::string& name, Real scale = 1.0);

}  // namespace hp
