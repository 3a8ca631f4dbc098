#include "halfphys/shapes.hpp"

namespace hp {

const char* shape_name(const Shape& s) {
  switch (s.index()) {
    case 0: return "sphere";
    case 1: return "capsule";
    case 2: return "box";
    case 3: return "halfspace";
    default: return "trimesh";
  }
}

void validate_shape(const Shape& s) {
  if (const auto* sp = std::get_if<SphereShape>(&s)) {
    if (!(sp->radius > 0)) throw ConfigError("sphere radius must be positive");
  } else if (const auto* c = std::get_if<CapsuleShape>(&s)) {
    if (!(c->radius > 0)) throw ConfigError("capsule radius must be positive");
    if (c->half_length < 0) throw ConfigError("capsule half_length must be >= 0");
  } else if (const auto* b = std::get_if<BoxShape>(&s)) {
    if (!(b->half_extents.x > 0 && b->half_extents.y > 0 && b->half_extents.z > 0))
      throw ConfigError("box half extents must be positive");
  } else if (const auto* h = std::get_if<HalfspaceShape>(&s)) {
    if (norm(h->normal) < kTiny) throw ConfigError("halfspace normal must be nonzero");
  } else {
    const auto& t = std::get<TrimeshShape>(s);
    if (t.triangles.empty()) throw ConfigError("trimesh needs at least one triangle");
    int nv = static_cast<int>(t.vertices.size());
    for (const auto& tri : t.triangles)
      for (int idx : tri)
        if (idx < 0 || idx >= nv) throw ConfigError("trimesh triangle index out of range");
  }
}

Real shape_volume(const Shape& s) {
  if (const auto* sp = std::get_if<SphereShape>(&s))
    return 4.0 / 3.0 * kPi * sp->radius * sp->radius * sp->radius;
  if (const auto* c = std::get_if<CapsuleShape>(&s)) {
    Real r = c->radius;
    return kPi * r * r * (2.0 * c->half_length) + 4.0 / 3.0 * kPi * r * r * r;
  }
  if (const auto* b = std::get_if<BoxShape>(&s))
    return 8.0 * b->half_extents.x * b->half_extents.y * b->half_extents.z;
  return 0;  // scenery has no meaningful volume
}

InertiaSpec shape_inertia(const Shape& s, Real mass) {
  if (!(mass > 0)) throw ConfigError("inertia needs a positive mass");
  InertiaSpec out;
  out.mass = mass;
  out.com = {0, 0, 0};  // all primitives are centered on their local origin

  if (const auto* sp = std::get_if<SphereShape>(&s)) {
    Real i = 0.4 * mass * sp->radius * sp->radius;
    out.principal = {i, i, i};
    return out;
  }

  if (const auto* b = std::get_if<BoxShape>(&s)) {
    const Vec3& h = b->half_extents;
    out.principal = {mass / 3.0 * (h.y * h.y + h.z * h.z),
                     mass / 3.0 * (h.x * h.x + h.z * h.z),
                     mass / 3.0 * (h.x * h.x + h.y * h.y)};
    return out;
  }

  if (const auto* c = std::get_if<CapsuleShape>(&s)) {
    // split the mass between cylinder and cap sphere by volume, then combine
    // cylinder inertia with the hemisphere pair shifted to the capsule center
    Real r = c->radius;
    Real h = 2.0 * c->half_length;  // cylinder height
    Real v_cyl = kPi * r * r * h;
    Real v_sph = 4.0 / 3.0 * kPi * r * r * r;
    Real m_cyl = mass * v_cyl / (v_cyl + v_sph);
    Real m_sph = mass - m_cyl;  // both hemispheres together

    Real axial = m_cyl * 0.5 * r * r + m_sph * 0.4 * r * r;
    // hemisphere about the capsule center: 2/5 r^2 about its sphere center,
    // re-based through its own com (3r/8 off the flat face) and shifted by h/2
    Real hemi = 0.4 * r * r + 0.25 * h * h + 0.375 * h * r;
    Real radial = m_cyl * (r * r / 4.0 + h * h / 12.0) + m_sph * hemi;
    out.principal = {radial, radial, axial};
    return out;
  }

  throw ConfigError(std::string(shape_name(s)) + " cannot carry mass");
}

}  // namespace hp
