#pragma once

// Collision/visual primitives shared by the body model, the scene description
// and the collision pipeline. A shape lives in the local frame of whatever
// owns it: spheres and boxes are centered on the origin, capsules run along
// the local z axis, half spaces and triangle meshes are world-anchored bits of
// static scenery.

#include <array>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "halfphys/errors.hpp"
#include "halfphys/math.hpp"

namespace hp {

struct SphereShape {
  Real radius = 0;
};

struct CapsuleShape {
  Real radius = 0;
  Real half_length = 0;  //!< half the segment between cap centers, not counting caps
};

struct BoxShape {
  Vec3 half_extents;
};

// points p with dot(normal, p) <= offset are inside the solid
struct HalfspaceShape {
  Vec3 normal{0, 0, 1};
  Real offset = 0;
};

struct TrimeshShape {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

using Shape = std::variant<SphereShape, CapsuleShape, BoxShape, HalfspaceShape, TrimeshShape>;

inline bool is_sphere(const Shape& s) { return std::holds_alternative<SphereShape>(s); }
inline bool is_capsule(const Shape& s) { return std::holds_alternative<CapsuleShape>(s); }
inline bool is_box(const Shape& s) { return std::holds_alternative<BoxShape>(s); }
inline bool is_halfspace(const Shape& s) { return std::holds_alternative<HalfspaceShape>(s); }
inline bool is_trimesh(const Shape& s) { return std::holds_alternative<TrimeshShape>(s); }

const char* shape_name(const Shape& s);

// throws ConfigError on non-positive dimensions, degenerate normals,
// out-of-range mesh indices
void validate_shape(const Shape& s);

Real shape_volume(const Shape& s);

// Uniform-density inertia for the given total mass. Sphere and box are the
// textbook closed forms; the capsule splits into cylinder plus two hemisphere
// caps with the parallel-axis shift. Half spaces and meshes carry no mass and
// are rejected.
InertiaSpec shape_inertia(const Shape& s, Real mass);

}  // namespace hp
