#pragma once

// Small fixed-size vector/quaternion kit used everywhere else in the library.
// Doubles throughout; quaternions are stored (w, x, y, z) and kept unit length
// by the few functions that can drift. Angular velocities are plain Vec3
// rotation rates in whatever frame the caller documents.

#include <cmath>
#include <cstdint>

namespace hp {

using Real = double;

inline constexpr Real kPi = 3.14159265358979323846;
inline constexpr Real kTiny = 1e-12;        // below this a vector counts as zero
inline constexpr Real kTinyAngle = 1e-9;    // small-angle series switchover

// ---------------------------------------------------------------- Vec3

struct Vec3 {
  Real x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3 operator*(Real s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(Real s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(Real s) { x *= s; y *= s; z *= s; return *this; }

  Real& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  Real operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(Real s, const Vec3& v) { return v * s; }

inline Real dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline Real norm2(const Vec3& v) { return dot(v, v); }
inline Real norm(const Vec3& v) { return std::sqrt(norm2(v)); }

inline Vec3 normalized(const Vec3& v) {
  Real n = norm(v);
  return n > kTiny ? v / n : Vec3{0, 0, 0};
}

inline Vec3 vmin(const Vec3& a, const Vec3& b) {
  return {std::fmin(a.x, b.x), std::fmin(a.y, b.y), std::fmin(a.z, b.z)};
}
inline Vec3 vmax(const Vec3& a, const Vec3& b) {
  return {std::fmax(a.x, b.x), std::fmax(a.y, b.y), std::fmax(a.z, b.z)};
}

inline bool finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

// Any unit vector orthogonal to n, picked deterministically (used for
// friction tangent bases and capsule cap seams).
inline Vec3 any_orthogonal(const Vec3& n) {
  // branch on the smallest component so the cross product is well conditioned
  Vec3 ref = std::fabs(n.x) <= std::fabs(n.y) && std::fabs(n.x) <= std::fabs(n.z)
                 ? Vec3{1, 0, 0}
                 : (std::fabs(n.y) <= std::fabs(n.z) ? Vec3{0, 1, 0} : Vec3{0, 0, 1});
  return normalized(cross(n, ref));
}

// ---------------------------------------------------------------- Mat3

struct Mat3 {
  // row-major
  Real m[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

  static Mat3 zero() { return Mat3{{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}}; }
  static Mat3 identity() { return Mat3{}; }

  static Mat3 diagonal(const Vec3& d) {
    return Mat3{{{d.x, 0, 0}, {0, d.y, 0}, {0, 0, d.z}}};
  }

  Vec3 operator*(const Vec3& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }

  Mat3 operator*(const Mat3& o) const {
    Mat3 r = zero();
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 3; ++j) r.m[i][j] += m[i][k] * o.m[k][j];
    return r;
  }

  Mat3 operator+(const Mat3& o) const {
    Mat3 r = zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[i][j] + o.m[i][j];
    return r;
  }

  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
    return r;
  }
};

inline Mat3 skew(const Vec3& v) {
  return Mat3{{{0, -v.z, v.y}, {v.z, 0, -v.x}, {-v.y, v.x, 0}}};
}

// Cramer inverse; fine for the well-conditioned 3x3 blocks the solver builds.
inline Mat3 inverse(const Mat3& a) {
  const auto& m = a.m;
  Real c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
  Real c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
  Real c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
  Real det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
  Real inv = std::fabs(det) > 1e-300 ? 1.0 / det : 0.0;
  Mat3 r;
  r.m[0][0] = c00 * inv;
  r.m[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv;
  r.m[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv;
  r.m[1][0] = c01 * inv;
  r.m[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv;
  r.m[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv;
  r.m[2][0] = c02 * inv;
  r.m[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv;
  r.m[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv;
  return r;
}

// ---------------------------------------------------------------- Quat

struct Quat {
  Real w = 1, x = 0, y = 0, z = 0;  //!< scalar first; unit length expected

  static Quat identity() { return {1, 0, 0, 0}; }

  Quat operator-() const { return {-w, -x, -y, -z}; }

  Vec3 vec() const { return {x, y, z}; }
};

inline Real dot(const Quat& a, const Quat& b) {
  return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

inline Quat quat_mul(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

inline Quat conjugate(const Quat& q) { return {q.w, -q.x, -q.y, -q.z}; }

inline Quat normalize(const Quat& q) {
  Real n = std::sqrt(dot(q, q));
  if (n < kTiny) return Quat::identity();
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

// flips sign so w >= 0; both signs encode the same rotation
inline Quat canonical(const Quat& q) { return q.w < 0 ? -q : q; }

inline Vec3 rotate(const Quat& q, const Vec3& v) {
  // v' = v + 2 qv x (qv x v + w v), one cross cheaper than the matrix route
  Vec3 u{q.x, q.y, q.z};
  Vec3 t = cross(u, v) * 2.0;
  return v + t * q.w + cross(u, t);
}

inline Vec3 rotate_inv(const Quat& q, const Vec3& v) { return rotate(conjugate(q), v); }

inline Mat3 mat3_from_quat(const Quat& q) {
  Real ww = q.w * q.w, xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
  Real wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
  Real xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
  return Mat3{{{ww + xx - yy - zz, 2 * (xy - wz), 2 * (xz + wy)},
               {2 * (xy + wz), ww - xx + yy - zz, 2 * (yz - wx)},
               {2 * (xz - wy), 2 * (yz + wx), ww - xx - yy + zz}}};
}

inline Quat quat_from_axis_angle(const Vec3& axis, Real angle) {
  Vec3 u = normalized(axis);
  Real h = 0.5 * angle;
  Real s = std::sin(h);
  return {std::cos(h), u.x * s, u.y * s, u.z * s};
}

// exp map: rotation vector (axis * angle, radians) -> unit quaternion
inline Quat quat_exp(const Vec3& v) {
  Real angle = norm(v);
  if (angle < kTinyAngle) {
    // second order series keeps this exact to ~1e-18 near zero
    Real h2 = 0.25 * norm2(v);
    Quat q{1.0 - 0.5 * h2, 0.5 * v.x, 0.5 * v.y, 0.5 * v.z};
    return normalize(q);
  }
  Real half = 0.5 * angle;
  Real s = std::sin(half) / angle;
  return {std::cos(half), v.x * s, v.y * s, v.z * s};
}

// log map: unit quaternion -> rotation vector, always the short way around.
// Inverse of quat_exp for angles in [0, pi].
inline Vec3 quat_log(const Quat& qin) {
  Quat q = canonical(qin);
  Real s = norm(q.vec());
  if (s < kTinyAngle) return q.vec() * 2.0;  // w ~= 1 here
  Real angle = 2.0 * std::atan2(s, q.w);
  return q.vec() * (angle / s);
}

// Angular velocity that carries `current` onto `target` over dt, expressed in
// the frame both quaternions live in. Sign-canonicalized via the dot test so
// the double cover never produces a 2*pi detour.
inline Vec3 angdiff(const Quat& target, const Quat& current, Real dt) {
  Quat t = dot(target, current) < 0 ? -target : target;
  Quat delta = quat_mul(t, conjugate(current));
  return quat_log(delta) / dt;
}

// One explicit step of the exp map; exact inverse of angdiff for constant
// omega: integrate_orientation(q, angdiff(t, q, dt), dt) == t up to rounding.
inline Quat integrate_orientation(const Quat& q, const Vec3& omega, Real dt) {
  return normalize(quat_mul(quat_exp(omega * dt), q));
}

// shortest-path spherical interpolation, u in [0,1], endpoints exact
inline Quat slerp(const Quat& a, const Quat& bin, Real u) {
  Quat b = dot(a, bin) < 0 ? -bin : bin;
  Real c = dot(a, b);
  if (c > 1.0 - 1e-10) {
    // nearly parallel: nlerp is exact enough and avoids 0/0
    Quat r{a.w + (b.w - a.w) * u, a.x + (b.x - a.x) * u, a.y + (b.y - a.y) * u,
           a.z + (b.z - a.z) * u};
    return normalize(r);
  }
  Real angle = std::acos(std::fmin(std::fmax(c, -1.0), 1.0));
  Real s = std::sin(angle);
  Real ka = std::sin((1.0 - u) * angle) / s;
  Real kb = std::sin(u * angle) / s;
  return {ka * a.w + kb * b.w, ka * a.x + kb * b.x, ka * a.y + kb * b.y,
          ka * a.z + kb * b.z};
}

inline bool finite(const Quat& q) {
  return std::isfinite(q.w) && std::isfinite(q.x) && std::isfinite(q.y) && std::isfinite(q.z);
}

// ---------------------------------------------------------------- poses

struct Pose {
  Vec3 pos;
  Quat rot;

  Vec3 apply(const Vec3& p) const { return pos + rotate(rot, p); }
  Vec3 apply_inv(const Vec3& p) const { return rotate_inv(rot, p - pos); }
};

inline Pose compose(const Pose& a, const Pose& b) {
  return {a.pos + rotate(a.rot, b.pos), normalize(quat_mul(a.rot, b.rot))};
}

struct SpatialVelocity {
  Vec3 lin;  //!< m/s, world frame
  Vec3 ang;  //!< rad/s, world frame
};

// mass + first/second moments; principal axes assumed aligned with the frame
// the owning shape is expressed in
struct InertiaSpec {
  Real mass = 0;
  Vec3 com;        //!< center of mass offset in the local frame
  Vec3 principal;  //!< diagonal rotational inertia about the com, kg m^2
};

}  // namespace hp
