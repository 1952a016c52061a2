// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>

namespace mogen {

// Plain (non-tensor) 3D helpers. Matrices are row-major 3x3.
using Mat3 = std::array<double, 9>;
using Vec3 = std::array<double, 3>;

inline Mat3 mat3_identity() { return {1, 0, 0, 0, 1, 0, 0, 0, 1}; }

inline Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int l = 0; l < 3; ++l) acc += a[static_cast<size_t>(i * 3 + l)] * b[static_cast<size_t>(l * 3 + j)];
      c[static_cast<size_t>(i * 3 + j)] = acc;
    }
  return c;
}

inline Mat3 mat3_transpose(const Mat3& a) {
  return {a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]};
}

inline Vec3 mat3_apply(const Mat3& m, const Vec3& v) {
  return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2], m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
          m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

inline Vec3 vec3_add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 vec3_sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 vec3_scale(const Vec3& a, double c) { return {a[0] * c, a[1] * c, a[2] * c}; }
inline double vec3_dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 vec3_cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double vec3_norm(const Vec3& a) { return std::sqrt(vec3_dot(a, a)); }
inline Vec3 vec3_normalize(const Vec3& a) {
  const double n = vec3_norm(a);
  return {a[0] / n, a[1] / n, a[2] / n};
}

inline Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {1, 0, 0, 0, c, -s, 0, s, c};
}
inline Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {c, 0, s, 0, 1, 0, -s, 0, c};
}
inline Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {c, -s, 0, s, c, 0, 0, 0, 1};
}

// Rodrigues rotation about a unit axis.
inline Mat3 rot_axis_angle(const Vec3& axis, double angle) {
  const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  const double x = axis[0], y = axis[1], z = axis[2];
  return {t * x * x + c,     t * x * y - s * z, t * x * z + s * y,
          t * x * y + s * z, t * y * y + c,     t * y * z - s * x,
          t * x * z - s * y, t * y * z + s * x, t * z * z + c};
}

// Rotate vector v about a unit axis by angle (Rodrigues formula).
inline Vec3 rotate_about(const Vec3& v, const Vec3& axis, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  const Vec3 cr = vec3_cross(axis, v);
  const double d = vec3_dot(axis, v) * (1.0 - c);
  return {v[0] * c + cr[0] * s + axis[0] * d, v[1] * c + cr[1] * s + axis[1] * d,
          v[2] * c + cr[2] * s + axis[2] * d};
}

// Smallest rotation mapping unit vector `from` to unit vector `to`.
inline Mat3 minimal_rotation(const Vec3& from, const Vec3& to) {
  const Vec3 axis = vec3_cross(from, to);
  const double s = vec3_norm(axis);
  const double c = vec3_dot(from, to);
  if (s < 1e-12) {
    if (c > 0.0) return mat3_identity();
    // antiparallel: 180 degrees about any axis perpendicular to `from`
    Vec3 perp = std::fabs(from[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    const Vec3 p = vec3_normalize(vec3_cross(from, perp));
    return rot_axis_angle(p, M_PI);
  }
  return rot_axis_angle(vec3_scale(axis, 1.0 / s), std::atan2(s, c));
}

// First two columns of R, the inverse of the Gram-Schmidt 6D decode for
// matrices already in SO(3).
inline std::array<double, 6> rot_to_6d(const Mat3& R) {
  return {R[0], R[3], R[6], R[1], R[4], R[7]};
}

// Max deviation of R^T R from identity.
inline double mat3_ortho_error(const Mat3& R) {
  const Mat3 RtR = mat3_mul(mat3_transpose(R), R);
  double err = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double target = i == j ? 1.0 : 0.0;
      err = std::max(err, std::fabs(RtR[static_cast<size_t>(i * 3 + j)] - target));
    }
  return err;
}

}  // namespace mogen
