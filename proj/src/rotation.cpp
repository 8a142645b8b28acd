#include "veridict/rotation.hpp"

#include <algorithm>
#include <cmath>

namespace veridict {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg2Rad = kPi / 180.0;
constexpr double kRad2Deg = 180.0 / kPi;
constexpr double kOrthoTol = 1e-9;

double clamp1(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

Mat3 Mat3::identity() {
  Mat3 r;
  r.m = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  return r;
}

Mat3 Mat3::operator*(const Mat3& o) const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
      r(i, j) = s;
    }
  return r;
}

Mat3 Mat3::transposed() const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
  return r;
}

double Mat3::det() const {
  const auto& a = m;
  return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
         a[2] * (a[3] * a[7] - a[4] * a[6]);
}

Rotation Rotation::from_matrix(const Mat3& m) {
  Mat3 g = m.transposed() * m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double want = i == j ? 1.0 : 0.0;
      if (std::abs(g(i, j) - want) > kOrthoTol)
        throw ValidationError("matrix is not orthonormal within 1e-9");
    }
  if (std::abs(m.det() - 1.0) > kOrthoTol)
    throw ValidationError("matrix determinant is not +1 within 1e-9");
  return Rotation{m};
}

Rotation sixd_to_rotation(const SixD& rep) {
  double n1 = rep.a1.norm();
  if (n1 < 1e-12) throw ValidationError("6d rotation input: first column is numerically zero");
  Vec3 b1 = rep.a1 * (1.0 / n1);
  Vec3 u2 = rep.a2 - b1 * b1.dot(rep.a2);
  double n2 = u2.norm();
  if (n2 < 1e-12)
    throw ValidationError("6d rotation input: columns are numerically parallel");
  Vec3 b2 = u2 * (1.0 / n2);
  Vec3 b3 = b1.cross(b2);
  Mat3 m;
  m(0, 0) = b1.x; m(1, 0) = b1.y; m(2, 0) = b1.z;
  m(0, 1) = b2.x; m(1, 1) = b2.y; m(2, 1) = b2.z;
  m(0, 2) = b3.x; m(1, 2) = b3.y; m(2, 2) = b3.z;
  return Rotation{m};  // orthonormal by construction
}

double geodesic_distance(const Rotation& r1, const Rotation& r2) {
  double tr = (r1.m.transposed() * r2.m).trace();
  return std::acos(clamp1((tr - 1.0) / 2.0));
}

Rotation euler_to_rotation(const EulerYPR& e) {
  double cy = std::cos(e.yaw_deg * kDeg2Rad), sy = std::sin(e.yaw_deg * kDeg2Rad);
  double cp = std::cos(e.pitch_deg * kDeg2Rad), sp = std::sin(e.pitch_deg * kDeg2Rad);
  double cr = std::cos(e.roll_deg * kDeg2Rad), sr = std::sin(e.roll_deg * kDeg2Rad);
  Mat3 m;
  m(0, 0) = cy * cp;
  m(0, 1) = cy * sp * sr - sy * cr;
  m(0, 2) = cy * sp * cr + sy * sr;
  m(1, 0) = sy * cp;
  m(1, 1) = sy * sp * sr + cy * cr;
  m(1, 2) = sy * sp * cr - cy * sr;
  m(2, 0) = -sp;
  m(2, 1) = cp * sr;
  m(2, 2) = cp * cr;
  return Rotation{m};
}

EulerYPR rotation_to_euler(const Rotation& r) {
  const Mat3& m = r.m;
  EulerYPR e;
  double s = -m(2, 0);  // sin(pitch)
  if (std::abs(s) > 1.0 - 1e-6) {
    // Gimbal lock: only yaw +/- roll is observable; roll is pinned to 0.
    e.pitch_deg = s > 0 ? 90.0 : -90.0;
    e.roll_deg = 0.0;
    if (s > 0)
      e.yaw_deg = std::atan2(-m(0, 1), m(0, 2)) * kRad2Deg;
    else
      e.yaw_deg = std::atan2(-m(0, 1), -m(0, 2)) * kRad2Deg;
  } else {
    e.pitch_deg = std::asin(clamp1(s)) * kRad2Deg;
    e.yaw_deg = std::atan2(m(1, 0), m(0, 0)) * kRad2Deg;
    e.roll_deg = std::atan2(m(2, 1), m(2, 2)) * kRad2Deg;
  }
  e.yaw_deg = wrap_angle_deg(e.yaw_deg);
  e.roll_deg = wrap_angle_deg(e.roll_deg);
  return e;
}

double wrap_angle_deg(double deg) {
  double w = std::fmod(deg + 180.0, 360.0);
  if (w <= 0.0) w += 360.0;
  return w - 180.0;
}

EulerMae euler_mae(std::span<const EulerYPR> predicted, std::span<const EulerYPR> reference) {
  if (predicted.size() != reference.size())
    throw ValidationError("euler_mae: prediction and reference lengths differ");
  if (predicted.empty()) throw ValidationError("euler_mae: empty input");
  EulerMae acc;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    acc.yaw += std::abs(wrap_angle_deg(predicted[i].yaw_deg - reference[i].yaw_deg));
    acc.pitch += std::abs(wrap_angle_deg(predicted[i].pitch_deg - reference[i].pitch_deg));
    acc.roll += std::abs(wrap_angle_deg(predicted[i].roll_deg - reference[i].roll_deg));
  }
  double n = static_cast<double>(predicted.size());
  acc.yaw /= n;
  acc.pitch /= n;
  acc.roll /= n;
  return acc;
}

}  // namespace veridict
