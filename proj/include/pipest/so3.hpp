#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>

#include "pipest/types.hpp"

namespace pipest {

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),  //
      v.z(), 0.0, -v.x(),   //
      -v.y(), v.x(), 0.0;
  return m;
}

/// Quaternion exponential of a rotation vector r: the unit quaternion
/// representing a rotation of angle |r| about r/|r|.
inline Eigen::Quaterniond quatExp(const Vec3& r) {
  const double theta = r.norm();
  const double half = 0.5 * theta;
  // sin(theta/2)/theta with a series fallback near zero
  double k;
  if (theta < 1e-8) {
    k = 0.5 - theta * theta / 48.0;
  } else {
    k = std::sin(half) / theta;
  }
  return Eigen::Quaterniond(std::cos(half), k * r.x(), k * r.y(), k * r.z());
}

/// Rotation vector of a unit quaternion (inverse of quatExp). The shorter
/// rotation is returned: the result has norm in [0, pi].
inline Vec3 quatLog(const Eigen::Quaterniond& q) {
  double w = q.w();
  Vec3 v(q.x(), q.y(), q.z());
  if (w < 0.0) {  // q and -q encode the same rotation
    w = -w;
    v = -v;
  }
  const double n = v.norm();
  if (n < 1e-12) {
    // atan2(n, w)/n -> 1/w as n -> 0
    return (2.0 / w) * v;
  }
  return (2.0 * std::atan2(n, w) / n) * v;
}

/// Right Jacobian of the SO(3) exponential: for R(t) = R0 * exp(skew(r(t))),
/// the body angular velocity is rightJacobian(r) * dr/dt.
inline Mat3 rightJacobian(const Vec3& r) {
  const double theta2 = r.squaredNorm();
  const double theta = std::sqrt(theta2);
  double c1;  // (1 - cos t) / t^2
  double c2;  // (t - sin t) / t^3
  if (theta < 1e-5) {
    c1 = 0.5 - theta2 / 24.0;
    c2 = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    c1 = (1.0 - std::cos(theta)) / theta2;
    c2 = (theta - std::sin(theta)) / (theta2 * theta);
  }
  const Mat3 rx = skew(r);
  return Mat3::Identity() - c1 * rx + c2 * rx * rx;
}

}  // namespace pipest
