#pragma once

#include <array>
#include <span>
#include <vector>

#include "veridict/types.hpp"

namespace veridict {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double norm() const;
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
};

// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> m{};

  static Mat3 identity();
  double operator()(int r, int c) const { return m[static_cast<std::size_t>(3 * r + c)]; }
  double& operator()(int r, int c) { return m[static_cast<std::size_t>(3 * r + c)]; }
  Mat3 operator*(const Mat3& o) const;
  Mat3 transposed() const;
  double trace() const { return m[0] + m[4] + m[8]; }
  double det() const;
};

// A validated member of SO(3): orthonormal with det +1 to within 1e-9.
struct Rotation {
  Mat3 m;

  static Rotation from_matrix(const Mat3& m);  // throws ValidationError if not in SO(3)
  static Rotation identity() { return Rotation{Mat3::identity()}; }
};

// Continuous 6D parameterization: the first two (unorthogonalized) columns of
// a rotation matrix.
struct SixD {
  Vec3 a1, a2;
};

// Intrinsic Z-Y-X Tait-Bryan angles in degrees:
//   R = Rz(yaw) * Ry(pitch) * Rx(roll)
// with yaw, roll in (-180, 180] and pitch in [-90, 90].
struct EulerYPR {
  double yaw_deg = 0.0, pitch_deg = 0.0, roll_deg = 0.0;
};

// Gram-Schmidt: b1 = normalize(a1), b2 = normalize(a2 - (b1.a2) b1), b3 = b1 x b2.
// Throws ValidationError for degenerate input (zero a1, or a2 parallel to a1).
Rotation sixd_to_rotation(const SixD& rep);

// Geodesic distance on SO(3) in radians: arccos of clamp((tr(R1^T R2) - 1)/2).
double geodesic_distance(const Rotation& r1, const Rotation& r2);

EulerYPR rotation_to_euler(const Rotation& r);
Rotation euler_to_rotation(const EulerYPR& e);

// Wraps an angular difference in degrees to (-180, 180].
double wrap_angle_deg(double deg);

struct EulerMae {
  double yaw = 0.0, pitch = 0.0, roll = 0.0;
  double mean() const { return (yaw + pitch + roll) / 3.0; }
};

// Per-angle mean absolute error with wrapped differences. Spans must be
// non-empty and of equal length.
EulerMae euler_mae(std::span<const EulerYPR> predicted, std::span<const EulerYPR> reference);

}  // namespace veridict
