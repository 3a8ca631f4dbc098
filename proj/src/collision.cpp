#include "halfphys/collision.hpp"

#include <algorithm>
#include <cmath>

#include "halfphys/errors.hpp"

namespace hp {
namespace {

// dispatch rank; scenery kinds sort last so cores only see canonical orders
int shape_rank(const Shape& s) { return static_cast<int>(s.index()); }
bool is_scenery_rank(int r) { return r >= 3; }

Vec3 clamp_to_box(const Vec3& p, const Vec3& he) {
  return {std::clamp(p.x, -he.x, he.x), std::clamp(p.y, -he.y, he.y),
          std::clamp(p.z, -he.z, he.z)};
}

Vec3 closest_point_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  Vec3 ab = b - a;
  Real len2 = norm2(ab);
  if (len2 < kTiny * kTiny) return a;
  Real t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return a + ab * t;
}

// closest points between segments [p1,q1] and [p2,q2] (Ericson's clamped
// parametrization); returns the pair (on first, on second)
void closest_point_segment_segment(const Vec3& p1, const Vec3& q1, const Vec3& p2,
                                   const Vec3& q2, Vec3& c1, Vec3& c2) {
  Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  Real a = norm2(d1), e = norm2(d2), f = dot(d2, r);
  Real s = 0, t = 0;
  if (a < kTiny && e < kTiny) {
    c1 = p1;
    c2 = p2;
    return;
  }
  if (a < kTiny) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    Real c = dot(d1, r);
    if (e < kTiny) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      Real b = dot(d1, d2);
      Real denom = a * e - b * b;
      s = denom > kTiny ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0) {
        t = 0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1) {
        t = 1;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  c1 = p1 + d1 * s;
  c2 = p2 + d2 * t;
}

// closest point on triangle abc to p (Ericson's barycentric region walk)
Vec3 closest_point_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  Real d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0 && d2 <= 0) return a;

  Vec3 bp = p - b;
  Real d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0 && d4 <= d3) return b;

  Real vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + ab * (d1 / (d1 - d3));

  Vec3 cp = p - c;
  Real d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0 && d5 <= d6) return c;

  Real vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + ac * (d2 / (d2 - d6));

  Real va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));

  Real denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

Vec3 triangle_normal(const Vec3& a, const Vec3& b, const Vec3& c) {
  return normalized(cross(b - a, c - a));
}

// closest pair between segment [p0,p1] and triangle abc; coincident when the
// segment pierces the triangle
void closest_segment_triangle(const Vec3& p0, const Vec3& p1, const Vec3& a, const Vec3& b,
                              const Vec3& c, Vec3& on_seg, Vec3& on_tri) {
  Vec3 nu = triangle_normal(a, b, c);
  Real h0 = dot(nu, p0 - a), h1 = dot(nu, p1 - a);
  if (h0 * h1 <= 0 && std::fabs(h0 - h1) > kTiny) {
    Real t = h0 / (h0 - h1);
    Vec3 x = p0 + (p1 - p0) * t;
    if (norm(closest_point_triangle(x, a, b, c) - x) < 1e-9) {
      on_seg = x;
      on_tri = x;
      return;
    }
  }
  Real best = 1e30;
  const Vec3 edges[3][2] = {{a, b}, {b, c}, {c, a}};
  for (const auto& e : edges) {
    Vec3 cs, ct;
    closest_point_segment_segment(p0, p1, e[0], e[1], cs, ct);
    Real d2 = norm2(cs - ct);
    if (d2 < best) {
      best = d2;
      on_seg = cs;
      on_tri = ct;
    }
  }
  for (const Vec3& p : {p0, p1}) {
    Vec3 q = closest_point_triangle(p, a, b, c);
    Real d2 = norm2(p - q);
    if (d2 < best) {
      best = d2;
      on_seg = p;
      on_tri = q;
    }
  }
}

// world-frame capsule segment endpoints
void capsule_segment(const CapsuleShape& cap, const Pose& pose, Vec3& p0, Vec3& p1) {
  Vec3 axis = rotate(pose.rot, {0, 0, cap.half_length});
  p0 = pose.pos - axis;
  p1 = pose.pos + axis;
}

// plane of a posed half space in world coordinates
void halfspace_plane(const HalfspaceShape& hs, const Pose& pose, Vec3& n, Real& offset) {
  n = normalized(rotate(pose.rot, hs.normal));
  offset = hs.offset / std::fmax(norm(hs.normal), kTiny) + dot(n, pose.pos);
}

struct SurfaceHit {
  Real sep = 0;    // signed distance between the surfaces
  Vec3 normal;     // unit, pointing at the queried shape
  Vec3 mid;        // midpoint between the two surface points
};

// sphere of `radius` centered at `c` against an origin-centered box, all in
// the box frame; handles centers inside the box by face push-out
SurfaceHit sphere_vs_box_local(const Vec3& c, Real radius, const Vec3& he) {
  SurfaceHit hit;
  Vec3 q = clamp_to_box(c, he);
  Vec3 delta = c - q;
  Real dist2 = norm2(delta);
  if (dist2 > kTiny * kTiny) {
    Real dist = std::sqrt(dist2);
    hit.normal = delta / dist;
    hit.sep = dist - radius;
    hit.mid = (q + (c - hit.normal * radius)) * 0.5;
    return hit;
  }
  // center inside: push through the nearest face
  Real best_gap = 1e30;
  int axis = 0;
  Real sign = 1;
  const Real cs[3] = {c.x, c.y, c.z};
  const Real hs[3] = {he.x, he.y, he.z};
  for (int i = 0; i < 3; ++i) {
    Real gap = hs[i] - std::fabs(cs[i]);
    if (gap < best_gap) {
      best_gap = gap;
      axis = i;
      sign = cs[i] < 0 ? -1.0 : 1.0;
    }
  }
  hit.normal = Vec3{0, 0, 0};
  hit.normal[axis] = sign;
  hit.sep = -(best_gap + radius);
  hit.mid = c + hit.normal * ((best_gap - radius) * 0.5);
  return hit;
}

Contact make_contact(int a, int b, const Vec3& point, const Vec3& normal, Real sep) {
  Contact c;
  c.a = a;
  c.b = b;
  c.point = point;
  c.normal = normal;
  c.separation = sep;
  c.depth = std::fmax(0.0, -sep);
  return c;
}

// ---------------------------------------------------------------------------
// pair cores; each assumes its canonical argument order and b -> a normals

std::vector<Contact> sphere_sphere(const SphereShape& sa, const Pose& pa, int a,
                                   const SphereShape& sb, const Pose& pb, int b, Real margin) {
  Vec3 d = pa.pos - pb.pos;
  Real dist = norm(d);
  Vec3 n = dist > kTiny ? d / dist : Vec3{0, 0, 1};
  Real sep = dist - sa.radius - sb.radius;
  if (sep > margin) return {};
  Vec3 mid = ((pa.pos - n * sa.radius) + (pb.pos + n * sb.radius)) * 0.5;
  return {make_contact(a, b, mid, n, sep)};
}

std::vector<Contact> sphere_capsule(const SphereShape& sa, const Pose& pa, int a,
                                    const CapsuleShape& sb, const Pose& pb, int b, Real margin) {
  Vec3 p0, p1;
  capsule_segment(sb, pb, p0, p1);
  Vec3 q = closest_point_segment(pa.pos, p0, p1);
  Vec3 d = pa.pos - q;
  Real dist = norm(d);
  Vec3 n = dist > kTiny ? d / dist : Vec3{0, 0, 1};
  Real sep = dist - sa.radius - sb.radius;
  if (sep > margin) return {};
  Vec3 mid = ((pa.pos - n * sa.radius) + (q + n * sb.radius)) * 0.5;
  return {make_contact(a, b, mid, n, sep)};
}

std::vector<Contact> capsule_capsule(const CapsuleShape& sa, const Pose& pa, int a,
                                     const CapsuleShape& sb, const Pose& pb, int b, Real margin) {
  Vec3 a0, a1, b0, b1, ca, cb;
  capsule_segment(sa, pa, a0, a1);
  capsule_segment(sb, pb, b0, b1);
  closest_point_segment_segment(a0, a1, b0, b1, ca, cb);
  Vec3 d = ca - cb;
  Real dist = norm(d);
  Vec3 n = dist > kTiny ? d / dist : Vec3{0, 0, 1};
  Real sep = dist - sa.radius - sb.radius;
  if (sep > margin) return {};
  Vec3 mid = ((ca - n * sa.radius) + (cb + n * sb.radius)) * 0.5;
  return {make_contact(a, b, mid, n, sep)};
}

std::vector<Contact> sphere_box(const SphereShape& sa, const Pose& pa, int a,
                                const BoxShape& sb, const Pose& pb, int b, Real margin) {
  Vec3 c_local = pb.apply_inv(pa.pos);
  SurfaceHit hit = sphere_vs_box_local(c_local, sa.radius, sb.half_extents);
  if (hit.sep > margin) return {};
  return {make_contact(a, b, pb.apply(hit.mid), rotate(pb.rot, hit.normal), hit.sep)};
}

// capsule against box: exact endpoint-sphere pair when the capsule lies flat
// on a face, otherwise the global segment/box minimizer (the squared distance
// along the segment is convex, so a ternary search finds it)
std::vector<Contact> capsule_box(const CapsuleShape& sa, const Pose& pa, int a,
                                 const BoxShape& sb, const Pose& pb, int b, Real margin) {
  Vec3 w0, w1;
  capsule_segment(sa, pa, w0, w1);
  Vec3 q0 = pb.apply_inv(w0), q1 = pb.apply_inv(w1);
  const Vec3& he = sb.half_extents;

  SurfaceHit e0 = sphere_vs_box_local(q0, sa.radius, he);
  SurfaceHit e1 = sphere_vs_box_local(q1, sa.radius, he);
  if (e0.sep <= margin && e1.sep <= margin && dot(e0.normal, e1.normal) > 1.0 - 1e-9) {
    return {make_contact(a, b, pb.apply(e0.mid), rotate(pb.rot, e0.normal), e0.sep),
            make_contact(a, b, pb.apply(e1.mid), rotate(pb.rot, e1.normal), e1.sep)};
  }

  auto dist2_at = [&](Real t) {
    Vec3 p = q0 + (q1 - q0) * t;
    return norm2(p - clamp_to_box(p, he));
  };
  Real lo = 0, hi = 1;
  for (int it = 0; it < 120; ++it) {
    Real m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
    if (dist2_at(m1) <= dist2_at(m2))
      hi = m2;
    else
      lo = m1;
  }
  Real tstar = 0.5 * (lo + hi);

  if (dist2_at(tstar) <= kTiny * kTiny) {
    // segment enters the box: report the middle of the submerged stretch
    auto inside = [&](Real t) { return dist2_at(t) <= kTiny * kTiny; };
    Real enter = tstar, exit = tstar;
    if (inside(0)) {
      enter = 0;
    } else {
      Real l = 0, h = tstar;
      for (int it = 0; it < 60; ++it) {
        Real m = 0.5 * (l + h);
        (inside(m) ? h : l) = m;
      }
      enter = h;
    }
    if (inside(1)) {
      exit = 1;
    } else {
      Real l = tstar, h = 1;
      for (int it = 0; it < 60; ++it) {
        Real m = 0.5 * (l + h);
        (inside(m) ? l : h) = m;
      }
      exit = l;
    }
    tstar = 0.5 * (enter + exit);
  }

  Vec3 p = q0 + (q1 - q0) * tstar;
  SurfaceHit hit = sphere_vs_box_local(p, sa.radius, he);
  if (hit.sep > margin) return {};
  return {make_contact(a, b, pb.apply(hit.mid), rotate(pb.rot, hit.normal), hit.sep)};
}

struct ObbFrame {
  Vec3 c;
  Vec3 axis[3];
  Vec3 he;
};

ObbFrame obb_frame(const BoxShape& box, const Pose& pose) {
  ObbFrame f;
  f.c = pose.pos;
  Mat3 r = mat3_from_quat(pose.rot);
  for (int i = 0; i < 3; ++i) f.axis[i] = {r.m[0][i], r.m[1][i], r.m[2][i]};
  f.he = box.half_extents;
  return f;
}

Real obb_radius(const ObbFrame& f, const Vec3& axis) {
  return f.he.x * std::fabs(dot(f.axis[0], axis)) + f.he.y * std::fabs(dot(f.axis[1], axis)) +
         f.he.z * std::fabs(dot(f.axis[2], axis));
}

// Sutherland-Hodgman: keep the part of `poly` with dot(n, x) <= d
void clip_polygon(std::vector<Vec3>& poly, const Vec3& n, Real d) {
  std::vector<Vec3> out;
  out.reserve(poly.size() + 2);
  for (size_t i = 0; i < poly.size(); ++i) {
    const Vec3& cur = poly[i];
    const Vec3& nxt = poly[(i + 1) % poly.size()];
    Real dc = dot(n, cur) - d, dn = dot(n, nxt) - d;
    if (dc <= 0) out.push_back(cur);
    if ((dc < 0 && dn > 0) || (dc > 0 && dn < 0))
      out.push_back(cur + (nxt - cur) * (dc / (dc - dn)));
  }
  poly = std::move(out);
}

std::vector<Contact> box_box(const BoxShape& sa, const Pose& pa, int a, const BoxShape& sb,
                             const Pose& pb, int b, Real margin) {
  ObbFrame A = obb_frame(sa, pa), B = obb_frame(sb, pb);
  Vec3 d = A.c - B.c;

  Real best_sep = -1e30;
  int best_axis = -1;  // 0..2 A faces, 3..5 B faces, 6..14 edge pairs
  Vec3 best_n;
  auto consider = [&](const Vec3& axis, int id, Real bias) {
    Real s = dot(d, axis);
    Vec3 n = s >= 0 ? axis : -axis;  // oriented from b to a
    Real sep = std::fabs(s) - obb_radius(A, axis) - obb_radius(B, axis);
    if (sep > best_sep + bias) {
      best_sep = sep;
      best_axis = id;
      best_n = n;
    }
    return sep;
  };

  for (int i = 0; i < 3; ++i)
    if (consider(A.axis[i], i, 0) > margin) return {};
  for (int i = 0; i < 3; ++i)
    if (consider(B.axis[i], 3 + i, 0) > margin) return {};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Vec3 cr = cross(A.axis[i], B.axis[j]);
      Real len = norm(cr);
      if (len < 1e-9) continue;  // near-parallel edges, faces cover this
      // face axes win ties so flat stacks don't flicker into edge contacts
      if (consider(cr / len, 6 + 3 * i + j, 1e-6) > margin) return {};
    }

  if (best_axis >= 6) {
    int i = (best_axis - 6) / 3, j = (best_axis - 6) % 3;
    auto support_edge = [](const ObbFrame& f, int along, const Vec3& dir, Vec3& p0, Vec3& p1) {
      Vec3 mid = f.c;
      for (int k = 0; k < 3; ++k) {
        if (k == along) continue;
        mid = mid + f.axis[k] * (dot(f.axis[k], dir) >= 0 ? f.he[k] : -f.he[k]);
      }
      p0 = mid - f.axis[along] * f.he[along];
      p1 = mid + f.axis[along] * f.he[along];
    };
    Vec3 a0, a1, b0, b1, ca, cb;
    support_edge(A, i, -best_n, a0, a1);
    support_edge(B, j, best_n, b0, b1);
    closest_point_segment_segment(a0, a1, b0, b1, ca, cb);
    return {make_contact(a, b, (ca + cb) * 0.5, best_n, best_sep)};
  }

  // face contact: clip the incident face of the other box against the
  // reference face's side planes
  const bool ref_is_a = best_axis < 3;
  const ObbFrame& R = ref_is_a ? A : B;
  const ObbFrame& I = ref_is_a ? B : A;
  int ri = best_axis % 3;
  Vec3 f = R.axis[ri];
  if (dot(I.c - R.c, f) < 0) f = -f;  // outward through the touching face
  Vec3 face_center = R.c + f * R.he[ri];

  int ii = 0;
  Real most = -1e30;
  for (int k = 0; k < 3; ++k) {
    Real al = std::fabs(dot(I.axis[k], f));
    if (al > most) {
      most = al;
      ii = k;
    }
  }
  Vec3 m = dot(I.axis[ii], f) > 0 ? -I.axis[ii] : I.axis[ii];
  int u = (ii + 1) % 3, v = (ii + 2) % 3;
  Vec3 fc = I.c + m * I.he[ii];
  std::vector<Vec3> poly = {
      fc + I.axis[u] * I.he[u] + I.axis[v] * I.he[v],
      fc - I.axis[u] * I.he[u] + I.axis[v] * I.he[v],
      fc - I.axis[u] * I.he[u] - I.axis[v] * I.he[v],
      fc + I.axis[u] * I.he[u] - I.axis[v] * I.he[v],
  };
  for (int k = 0; k < 3 && !poly.empty(); ++k) {
    if (k == ri) continue;
    clip_polygon(poly, R.axis[k], dot(R.axis[k], R.c) + R.he[k]);
    clip_polygon(poly, -R.axis[k], -dot(R.axis[k], R.c) + R.he[k]);
  }

  struct Candidate {
    Vec3 p;
    Real sep;
  };
  std::vector<Candidate> kept;
  for (const Vec3& p : poly) {
    Real sep = dot(f, p - face_center);
    if (sep <= margin) kept.push_back({p, sep});
  }
  std::sort(kept.begin(), kept.end(),
            [](const Candidate& l, const Candidate& r) { return l.sep < r.sep; });
  if (kept.size() > 4) kept.resize(4);

  std::vector<Contact> contacts;
  for (const Candidate& k : kept)
    contacts.push_back(make_contact(a, b, k.p - f * (k.sep * 0.5), ref_is_a ? -f : f, k.sep));
  return contacts;
}

std::vector<Contact> movable_halfspace(const Shape& sa, const Pose& pa, int a,
                                       const HalfspaceShape& sb, const Pose& pb, int b,
                                       Real margin) {
  Vec3 n;
  Real offset;
  halfspace_plane(sb, pb, n, offset);
  std::vector<Contact> contacts;
  auto add_sphere = [&](const Vec3& c, Real r) {
    Real sd = dot(n, c) - offset;
    Real sep = sd - r;
    if (sep <= margin) contacts.push_back(make_contact(a, b, c - n * ((r + sd) * 0.5), n, sep));
  };

  if (const auto* sphere = std::get_if<SphereShape>(&sa)) {
    add_sphere(pa.pos, sphere->radius);
  } else if (const auto* cap = std::get_if<CapsuleShape>(&sa)) {
    Vec3 p0, p1;
    capsule_segment(*cap, pa, p0, p1);
    add_sphere(p0, cap->radius);
    add_sphere(p1, cap->radius);
  } else {
    const auto& box = std::get<BoxShape>(sa);
    struct Corner {
      Vec3 p;
      Real sd;
    };
    std::vector<Corner> corners;
    for (int k = 0; k < 8; ++k) {
      Vec3 local{(k & 1 ? 1.0 : -1.0) * box.half_extents.x,
                 (k & 2 ? 1.0 : -1.0) * box.half_extents.y,
                 (k & 4 ? 1.0 : -1.0) * box.half_extents.z};
      Vec3 p = pa.apply(local);
      Real sd = dot(n, p) - offset;
      if (sd <= margin) corners.push_back({p, sd});
    }
    std::sort(corners.begin(), corners.end(),
              [](const Corner& l, const Corner& r) { return l.sd < r.sd; });
    if (corners.size() > 4) corners.resize(4);
    for (const Corner& c : corners)
      contacts.push_back(make_contact(a, b, c.p - n * (c.sd * 0.5), n, c.sd));
  }
  return contacts;
}

// nearest point on the mesh plus the supporting normal of its triangle
struct MeshHit {
  Real dist = 1e30;
  Vec3 point;
  Vec3 tri_normal;
};

MeshHit nearest_on_mesh(const TrimeshShape& mesh, const Vec3& p) {
  MeshHit best;
  Real best2 = 1e60;
  for (const auto& tri : mesh.triangles) {
    const Vec3& v0 = mesh.vertices[tri[0]];
    const Vec3& v1 = mesh.vertices[tri[1]];
    const Vec3& v2 = mesh.vertices[tri[2]];
    Vec3 q = closest_point_triangle(p, v0, v1, v2);
    Real d2 = norm2(p - q);
    if (d2 < best2) {
      best2 = d2;
      best.point = q;
      best.tri_normal = triangle_normal(v0, v1, v2);
    }
  }
  best.dist = std::sqrt(best2);
  return best;
}

SurfaceHit sphere_vs_mesh_local(const TrimeshShape& mesh, const Vec3& c, Real radius) {
  MeshHit near = nearest_on_mesh(mesh, c);
  Real side = dot(c - near.point, near.tri_normal) >= 0 ? 1.0 : -1.0;
  SurfaceHit hit;
  hit.normal = near.dist > kTiny ? (c - near.point) * (side / near.dist) : near.tri_normal;
  hit.sep = side * near.dist - radius;
  hit.mid = (near.point + (c - hit.normal * radius)) * 0.5;
  return hit;
}

std::vector<Contact> sphere_trimesh(const SphereShape& sa, const Pose& pa, int a,
                                    const TrimeshShape& sb, const Pose& pb, int b, Real margin) {
  SurfaceHit hit = sphere_vs_mesh_local(sb, pb.apply_inv(pa.pos), sa.radius);
  if (hit.sep > margin) return {};
  return {make_contact(a, b, pb.apply(hit.mid), rotate(pb.rot, hit.normal), hit.sep)};
}

std::vector<Contact> capsule_trimesh(const CapsuleShape& sa, const Pose& pa, int a,
                                     const TrimeshShape& sb, const Pose& pb, int b, Real margin) {
  Vec3 w0, w1;
  capsule_segment(sa, pa, w0, w1);
  Vec3 q0 = pb.apply_inv(w0), q1 = pb.apply_inv(w1);

  SurfaceHit e0 = sphere_vs_mesh_local(sb, q0, sa.radius);
  SurfaceHit e1 = sphere_vs_mesh_local(sb, q1, sa.radius);
  if (e0.sep <= margin && e1.sep <= margin && dot(e0.normal, e1.normal) > 1.0 - 1e-9) {
    return {make_contact(a, b, pb.apply(e0.mid), rotate(pb.rot, e0.normal), e0.sep),
            make_contact(a, b, pb.apply(e1.mid), rotate(pb.rot, e1.normal), e1.sep)};
  }

  Real best2 = 1e60;
  Vec3 on_seg, on_tri, nu;
  for (const auto& tri : sb.triangles) {
    const Vec3& v0 = sb.vertices[tri[0]];
    const Vec3& v1 = sb.vertices[tri[1]];
    const Vec3& v2 = sb.vertices[tri[2]];
    Vec3 cs, ct;
    closest_segment_triangle(q0, q1, v0, v1, v2, cs, ct);
    Real d2 = norm2(cs - ct);
    if (d2 < best2) {
      best2 = d2;
      on_seg = cs;
      on_tri = ct;
      nu = triangle_normal(v0, v1, v2);
    }
  }
  if (best2 >= 1e60) return {};
  Real dist = std::sqrt(best2);
  Real side = dot(on_seg - on_tri, nu) >= 0 ? 1.0 : -1.0;
  Vec3 n = dist > kTiny ? (on_seg - on_tri) * (side / dist) : nu;
  Real sep = side * dist - sa.radius;
  if (sep > margin) return {};
  Vec3 mid = (on_tri + (on_seg - n * sa.radius)) * 0.5;
  return {make_contact(a, b, pb.apply(mid), rotate(pb.rot, n), sep)};
}

// box against one triangle, in the box frame (box centered on the origin);
// SAT over 3 face axes, the triangle normal and the 9 edge crosses
void box_triangle_contacts(const Vec3& he, const Vec3& v0, const Vec3& v1, const Vec3& v2,
                           Real margin, std::vector<Contact>& out, int a, int b) {
  const Vec3 verts[3] = {v0, v1, v2};
  Vec3 nu = triangle_normal(v0, v1, v2);
  if (norm2(nu) < 0.5) return;  // degenerate sliver

  Real best_sep = -1e30;
  Vec3 best_n;  // oriented from the triangle towards the box
  int best_kind = -1;  // 0..2 box face, 3 tri normal, >= 4 edge cross
  Vec3 best_edge[2];

  auto consider = [&](const Vec3& axis, int kind, Real bias, const Vec3* edge) {
    Real rb = he.x * std::fabs(axis.x) + he.y * std::fabs(axis.y) + he.z * std::fabs(axis.z);
    Real tmin = 1e30, tmax = -1e30;
    for (const Vec3& v : verts) {
      Real t = dot(v, axis);
      tmin = std::fmin(tmin, t);
      tmax = std::fmax(tmax, t);
    }
    Real sep_pos = tmin - rb;   // triangle beyond +axis
    Real sep_neg = -tmax - rb;  // triangle beyond -axis
    Real sep = std::fmax(sep_pos, sep_neg);
    if (sep > best_sep + bias) {
      best_sep = sep;
      best_n = sep_pos >= sep_neg ? -axis : axis;
      best_kind = kind;
      if (edge) {
        best_edge[0] = edge[0];
        best_edge[1] = edge[1];
      }
    }
    return sep;
  };

  const Vec3 box_axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (int i = 0; i < 3; ++i)
    if (consider(box_axes[i], i, 0, nullptr) > margin) return;
  if (consider(nu, 3, 0, nullptr) > margin) return;
  const Vec3 tedges[3][2] = {{v0, v1}, {v1, v2}, {v2, v0}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Vec3 cr = cross(box_axes[i], tedges[j][1] - tedges[j][0]);
      Real len = norm(cr);
      if (len < 1e-9) continue;
      if (consider(cr / len, 4 + 3 * i + j, 1e-6, tedges[j]) > margin) return;
    }

  if (best_kind >= 4) {
    int i = (best_kind - 4) / 3;
    Vec3 mid{0, 0, 0};
    for (int k = 0; k < 3; ++k) {
      if (k == i) continue;
      mid[k] = -best_n[k] >= 0 ? he[k] : -he[k];
    }
    Vec3 p0 = mid, p1 = mid;
    p0[i] = -he[i];
    p1[i] = he[i];
    Vec3 cb_, ct_;
    closest_point_segment_segment(p0, p1, best_edge[0], best_edge[1], cb_, ct_);
    out.push_back(make_contact(a, b, (cb_ + ct_) * 0.5, best_n, best_sep));
    return;
  }

  if (best_kind == 3) {
    // reference plane is the triangle: clip the box's incident face against
    // the triangle's edge prism
    int ii = 0;
    Real most = -1e30;
    for (int k = 0; k < 3; ++k)
      if (std::fabs(best_n[k]) > most) {
        most = std::fabs(best_n[k]);
        ii = k;
      }
    Vec3 m{0, 0, 0};
    m[ii] = best_n[ii] > 0 ? -1.0 : 1.0;  // face looking at the triangle
    int u = (ii + 1) % 3, v = (ii + 2) % 3;
    Vec3 fc = m * he[ii];
    Vec3 au{0, 0, 0}, av{0, 0, 0};
    au[u] = he[u];
    av[v] = he[v];
    std::vector<Vec3> poly = {fc + au + av, fc - au + av, fc - au - av, fc + au - av};
    for (int k = 0; k < 3 && !poly.empty(); ++k) {
      Vec3 inward = cross(nu, tedges[k][1] - tedges[k][0]);
      clip_polygon(poly, -inward, dot(-inward, tedges[k][0]));
    }
    for (const Vec3& p : poly) {
      Real sep = dot(best_n, p - v0);
      if (sep <= margin) out.push_back(make_contact(a, b, p - best_n * (sep * 0.5), best_n, sep));
    }
    return;
  }

  // reference plane is a box face: clip the triangle against its side planes
  Vec3 f{0, 0, 0};
  f[best_kind] = best_n[best_kind] > 0 ? -1.0 : 1.0;  // face looking at the triangle
  std::vector<Vec3> poly(verts, verts + 3);
  for (int k = 0; k < 3 && !poly.empty(); ++k) {
    if (k == best_kind) continue;
    Vec3 n{0, 0, 0};
    n[k] = 1;
    clip_polygon(poly, n, he[k]);
    clip_polygon(poly, -n, he[k]);
  }
  struct Candidate {
    Vec3 p;
    Real sep;
  };
  std::vector<Candidate> kept;
  for (const Vec3& p : poly) {
    Real sep = dot(f, p) - he[best_kind];
    if (sep <= margin) kept.push_back({p, sep});
  }
  std::sort(kept.begin(), kept.end(),
            [](const Candidate& l, const Candidate& r) { return l.sep < r.sep; });
  if (kept.size() > 4) kept.resize(4);
  for (const Candidate& k : kept)
    out.push_back(make_contact(a, b, k.p - f * (k.sep * 0.5), best_n, k.sep));
}

std::vector<Contact> box_trimesh(const BoxShape& sa, const Pose& pa, int a,
                                 const TrimeshShape& sb, const Pose& pb, int b, Real margin) {
  // work in the box frame; triangles prefiltered by bounding box
  Vec3 he = sa.half_extents;
  std::vector<Contact> raw;
  for (const auto& tri : sb.triangles) {
    Vec3 v[3];
    for (int k = 0; k < 3; ++k) v[k] = pa.apply_inv(pb.apply(sb.vertices[tri[k]]));
    Vec3 lo = vmin(vmin(v[0], v[1]), v[2]) - Vec3{margin, margin, margin};
    Vec3 hi = vmax(vmax(v[0], v[1]), v[2]) + Vec3{margin, margin, margin};
    if (lo.x > he.x || lo.y > he.y || lo.z > he.z || hi.x < -he.x || hi.y < -he.y ||
        hi.z < -he.z)
      continue;
    box_triangle_contacts(he, v[0], v[1], v[2], margin, raw, a, b);
  }

  // merge duplicates from shared edges, keep the deepest few
  std::sort(raw.begin(), raw.end(),
            [](const Contact& l, const Contact& r) { return l.separation < r.separation; });
  std::vector<Contact> merged;
  for (const Contact& c : raw) {
    bool dup = false;
    for (const Contact& m : merged)
      if (norm(m.point - c.point) < 1e-6) {
        dup = true;
        break;
      }
    if (!dup) merged.push_back(c);
    if (merged.size() == 8) break;
  }
  for (Contact& c : merged) {
    c.point = pa.apply(c.point);
    c.normal = rotate(pa.rot, c.normal);
  }
  return merged;
}

}  // namespace

Aabb compute_aabb(const Shape& s, const Pose& pose, Real margin) {
  Aabb box;
  if (const auto* sphere = std::get_if<SphereShape>(&s)) {
    Vec3 r{sphere->radius, sphere->radius, sphere->radius};
    box.lo = pose.pos - r;
    box.hi = pose.pos + r;
  } else if (const auto* cap = std::get_if<CapsuleShape>(&s)) {
    Vec3 p0, p1;
    capsule_segment(*cap, pose, p0, p1);
    Vec3 r{cap->radius, cap->radius, cap->radius};
    box.lo = vmin(p0, p1) - r;
    box.hi = vmax(p0, p1) + r;
  } else if (const auto* bx = std::get_if<BoxShape>(&s)) {
    Mat3 r = mat3_from_quat(pose.rot);
    Vec3 ext;
    for (int i = 0; i < 3; ++i)
      ext[i] = std::fabs(r.m[i][0]) * bx->half_extents.x +
               std::fabs(r.m[i][1]) * bx->half_extents.y +
               std::fabs(r.m[i][2]) * bx->half_extents.z;
    box.lo = pose.pos - ext;
    box.hi = pose.pos + ext;
  } else if (const auto* hs = std::get_if<HalfspaceShape>(&s)) {
    // unbounded except along its normal; clamp to something huge but finite
    Vec3 n;
    Real offset;
    halfspace_plane(*hs, pose, n, offset);
    const Real big = 1e12;
    box.lo = {-big, -big, -big};
    box.hi = {big, big, big};
    for (int i = 0; i < 3; ++i) {
      if (n[i] > 1.0 - 1e-12) box.hi[i] = offset;
      if (n[i] < -1.0 + 1e-12) box.lo[i] = -offset;
    }
  } else {
    const auto& mesh = std::get<TrimeshShape>(s);
    box.lo = {1e30, 1e30, 1e30};
    box.hi = {-1e30, -1e30, -1e30};
    for (const Vec3& v : mesh.vertices) {
      Vec3 p = pose.apply(v);
      box.lo = vmin(box.lo, p);
      box.hi = vmax(box.hi, p);
    }
    if (mesh.vertices.empty()) box.lo = box.hi = pose.pos;
  }
  box.lo = box.lo - Vec3{margin, margin, margin};
  box.hi = box.hi + Vec3{margin, margin, margin};
  return box;
}

std::vector<std::pair<int, int>> broadphase(const std::vector<Aabb>& boxes) {
  const int n = static_cast<int>(boxes.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int l, int r) {
    if (boxes[l].lo.x != boxes[r].lo.x) return boxes[l].lo.x < boxes[r].lo.x;
    return l < r;
  });

  std::vector<std::pair<int, int>> pairs;
  std::vector<int> active;
  for (int idx : order) {
    const Aabb& cur = boxes[idx];
    size_t keep = 0;
    for (int j : active) {
      if (boxes[j].hi.x < cur.lo.x) continue;  // swept past, drop
      active[keep++] = j;
      if (boxes[j].lo.y <= cur.hi.y && cur.lo.y <= boxes[j].hi.y &&
          boxes[j].lo.z <= cur.hi.z && cur.lo.z <= boxes[j].hi.z)
        pairs.emplace_back(std::min(idx, j), std::max(idx, j));
    }
    active.resize(keep);
    active.push_back(idx);
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

std::vector<Contact> narrowphase(const Shape& sa, const Pose& pa, int a, const Shape& sb,
                                 const Pose& pb, int b, Real margin) {
  int ra = shape_rank(sa), rb = shape_rank(sb);
  if (is_scenery_rank(ra) && is_scenery_rank(rb))
    throw ConfigError(std::string("narrowphase: ") + shape_name(sa) + " against " +
                      shape_name(sb) + " is not a supported pair");

  if (ra > rb) {
    std::vector<Contact> flipped = narrowphase(sb, pb, b, sa, pa, a, margin);
    for (Contact& c : flipped) {
      std::swap(c.a, c.b);
      c.normal = -c.normal;
    }
    return flipped;
  }

  if (const auto* sphere = std::get_if<SphereShape>(&sa)) {
    if (const auto* s2 = std::get_if<SphereShape>(&sb))
      return sphere_sphere(*sphere, pa, a, *s2, pb, b, margin);
    if (const auto* cap = std::get_if<CapsuleShape>(&sb))
      return sphere_capsule(*sphere, pa, a, *cap, pb, b, margin);
    if (const auto* box = std::get_if<BoxShape>(&sb))
      return sphere_box(*sphere, pa, a, *box, pb, b, margin);
    if (const auto* hs = std::get_if<HalfspaceShape>(&sb))
      return movable_halfspace(sa, pa, a, *hs, pb, b, margin);
    return sphere_trimesh(*sphere, pa, a, std::get<TrimeshShape>(sb), pb, b, margin);
  }
  if (const auto* cap = std::get_if<CapsuleShape>(&sa)) {
    if (const auto* c2 = std::get_if<CapsuleShape>(&sb))
      return capsule_capsule(*cap, pa, a, *c2, pb, b, margin);
    if (const auto* box = std::get_if<BoxShape>(&sb))
      return capsule_box(*cap, pa, a, *box, pb, b, margin);
    if (const auto* hs = std::get_if<HalfspaceShape>(&sb))
      return movable_halfspace(sa, pa, a, *hs, pb, b, margin);
    return capsule_trimesh(*cap, pa, a, std::get<TrimeshShape>(sb), pb, b, margin);
  }
  const auto& box = std::get<BoxShape>(sa);
  if (const auto* b2 = std::get_if<BoxShape>(&sb)) return box_box(box, pa, a, *b2, pb, b, margin);
  if (const auto* hs = std::get_if<HalfspaceShape>(&sb))
    return movable_halfspace(sa, pa, a, *hs, pb, b, margin);
  return box_trimesh(box, pa, a, std::get<TrimeshShape>(sb), pb, b, margin);
}

Real signed_distance(const Shape& s, const Pose& pose, const Vec3& point) {
  if (const auto* sphere = std::get_if<SphereShape>(&s))
    return norm(point - pose.pos) - sphere->radius;
  if (const auto* cap = std::get_if<CapsuleShape>(&s)) {
    Vec3 p0, p1;
    capsule_segment(*cap, pose, p0, p1);
    return norm(point - closest_point_segment(point, p0, p1)) - cap->radius;
  }
  if (const auto* box = std::get_if<BoxShape>(&s)) {
    Vec3 q = pose.apply_inv(point);
    Vec3 he = box->half_extents;
    Vec3 d{std::fabs(q.x) - he.x, std::fabs(q.y) - he.y, std::fabs(q.z) - he.z};
    Vec3 outside{std::fmax(d.x, 0.0), std::fmax(d.y, 0.0), std::fmax(d.z, 0.0)};
    return norm(outside) + std::fmin(std::fmax(d.x, std::fmax(d.y, d.z)), 0.0);
  }
  if (const auto* hs = std::get_if<HalfspaceShape>(&s)) {
    Vec3 n;
    Real offset;
    halfspace_plane(*hs, pose, n, offset);
    return dot(n, point) - offset;
  }
  const auto& mesh = std::get<TrimeshShape>(s);
  Vec3 local = pose.apply_inv(point);
  MeshHit near = nearest_on_mesh(mesh, local);
  Real side = dot(local - near.point, near.tri_normal) >= 0 ? 1.0 : -1.0;
  return side * near.dist;
}

std::vector<Vec3> sample_surface_points(const Shape& s, int n) {
  std::vector<Vec3> pts;
  if (n <= 0) return pts;
  pts.reserve(n);
  const Real golden = kPi * (3.0 - std::sqrt(5.0));

  if (const auto* sphere = std::get_if<SphereShape>(&s)) {
    for (int i = 0; i < n; ++i) {
      Real z = 1.0 - (2.0 * i + 1.0) / n;
      Real rho = std::sqrt(std::fmax(0.0, 1.0 - z * z));
      Real th = golden * i;
      pts.push_back(Vec3{rho * std::cos(th), rho * std::sin(th), z} * sphere->radius);
    }
    return pts;
  }

  if (const auto* cap = std::get_if<CapsuleShape>(&s)) {
    Real r = cap->radius, hl = cap->half_length;
    Real area_caps = 4.0 * kPi * r * r;
    Real area_cyl = 2.0 * kPi * r * (2.0 * hl);
    int n_caps = static_cast<int>(std::lround(n * area_caps / (area_caps + area_cyl)));
    n_caps = std::clamp(n_caps, 0, n);
    int n_top = (n_caps + 1) / 2, n_bot = n_caps - n_top, n_cyl = n - n_caps;
    for (int i = 0; i < n_top; ++i) {
      Real z = (i + 0.5) / n_top;
      Real rho = std::sqrt(std::fmax(0.0, 1.0 - z * z));
      Real th = golden * i;
      pts.push_back({r * rho * std::cos(th), r * rho * std::sin(th), hl + r * z});
    }
    for (int i = 0; i < n_bot; ++i) {
      Real z = (i + 0.5) / n_bot;
      Real rho = std::sqrt(std::fmax(0.0, 1.0 - z * z));
      Real th = golden * i + 0.7;
      pts.push_back({r * rho * std::cos(th), r * rho * std::sin(th), -hl - r * z});
    }
    for (int i = 0; i < n_cyl; ++i) {
      Real z = -hl + (i + 0.5) / n_cyl * 2.0 * hl;
      Real th = golden * i + 1.4;
      pts.push_back({r * std::cos(th), r * std::sin(th), z});
    }
    return pts;
  }

  if (const auto* box = std::get_if<BoxShape>(&s)) {
    const Vec3& he = box->half_extents;
    // allocate per face by area (largest remainder), then grid each face
    struct Face {
      int axis;
      Real sign;
      Real area;
      int count = 0;
    };
    Real areas[3] = {4 * he.y * he.z, 4 * he.x * he.z, 4 * he.x * he.y};
    std::vector<Face> faces;
    Real total = 0;
    for (int axis = 0; axis < 3; ++axis)
      for (Real sign : {1.0, -1.0}) {
        faces.push_back({axis, sign, areas[axis]});
        total += areas[axis];
      }
    int assigned = 0;
    std::vector<Real> remainders(6);
    for (int i = 0; i < 6; ++i) {
      Real exact = n * faces[i].area / total;
      faces[i].count = static_cast<int>(exact);
      remainders[i] = exact - faces[i].count;
      assigned += faces[i].count;
    }
    while (assigned < n) {
      int best = 0;
      for (int i = 1; i < 6; ++i)
        if (remainders[i] > remainders[best]) best = i;
      ++faces[best].count;
      remainders[best] = -1;
      ++assigned;
    }
    for (const Face& face : faces) {
      if (face.count == 0) continue;
      int u = (face.axis + 1) % 3, v = (face.axis + 2) % 3;
      Real w = 2 * he[u], h = 2 * he[v];
      int cols = std::max(1, static_cast<int>(std::lround(std::sqrt(face.count * w /
                                                                    std::fmax(h, 1e-12)))));
      int rows = (face.count + cols - 1) / cols;
      for (int i = 0; i < face.count; ++i) {
        int rr = i / cols, cc = i % cols;
        Vec3 p;
        p[face.axis] = face.sign * he[face.axis];
        p[u] = ((cc + 0.5) / cols) * w - he[u];
        p[v] = ((rr + 0.5) / rows) * h - he[v];
        pts.push_back(p);
      }
    }
    return pts;
  }

  throw ConfigError(std::string("sample_surface_points: unsupported shape ") + shape_name(s));
}

}  // namespace hp
