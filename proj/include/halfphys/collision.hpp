#pragma once

// Collision queries: world-space bounding boxes, a sweep-and-prune broadphase
// over them, pairwise contact generation for the supported shape pairs, and
// deterministic surface sampling used by the penetration metrics.
//
// Movable shapes are spheres, capsules and boxes; half spaces and triangle
// meshes only ever appear as static scenery. Contact normals point from shape
// b towards shape a, and `depth` is the overlap (0 while the pair is merely
// inside the proximity margin).

#include <cstdint>
#include <vector>

#include "halfphys/shapes.hpp"

namespace hp {

struct Aabb {
  Vec3 lo;
  Vec3 hi;
};

struct Contact {
  int a = -1;             //!< collidable id of the first shape
  int b = -1;             //!< collidable id of the second shape
  Vec3 point;             //!< world contact point (midway across the gap)
  Vec3 normal;            //!< unit, from b to a
  Real depth = 0;         //!< penetration, >= 0; 0 for separated-but-close
  Real separation = 0;    //!< signed surface distance, negative = penetrating
  Real friction = 0;      //!< combined coefficient (product rule)
  Real restitution = 0;   //!< combined coefficient (max rule)
};

// bounding box of the shape at the given pose, grown by margin on all sides
Aabb compute_aabb(const Shape& s, const Pose& pose, Real margin = 0);

inline bool overlaps(const Aabb& a, const Aabb& b) {
  return a.lo.x <= b.hi.x && b.lo.x <= a.hi.x && a.lo.y <= b.hi.y &&
         b.lo.y <= a.hi.y && a.lo.z <= b.hi.z && b.lo.z <= a.hi.z;
}

// Sweep and prune along x: ids of all overlapping box pairs, each pair once
// with first < second, sorted lexicographically. Exactly the pairs a full
// O(n^2) scan would report.
std::vector<std::pair<int, int>> broadphase(const std::vector<Aabb>& boxes);

// Contact manifold between two posed shapes, using ids a/b for bookkeeping.
// Pairs are generated once the surfaces come within `margin` of each other;
// friction/restitution fields are left at zero for the caller to fill.
// Box-box uses SAT with face clipping (up to 4 points); capsules lying on a
// face report both cap ends. Trimesh-trimesh and halfspace-halfspace queries
// throw ConfigError, as does anything movable-vs-movable involving a
// halfspace or trimesh.
std::vector<Contact> narrowphase(const Shape& sa, const Pose& pa, int a,
                                 const Shape& sb, const Pose& pb, int b,
                                 Real margin);

// Signed distance from a world point to the shape surface (negative inside).
// For triangle meshes the sign is taken against the supporting plane of the
// nearest triangle, which is exact for watertight geometry queried near the
// surface.
Real signed_distance(const Shape& s, const Pose& pose, const Vec3& point);

// n surface points in the local frame, deterministic and roughly even
// (Fibonacci spirals on spheres/caps, area-weighted grids on boxes and
// cylinder walls); used as penetration probes
std::vector<Vec3> sample_surface_points(const Shape& s, int n);

}  // namespace hp
