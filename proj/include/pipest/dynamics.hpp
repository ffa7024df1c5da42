#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>

#include "pipest/so3.hpp"
#include "pipest/types.hpp"

namespace pipest {

/// Newton-Euler wrench exerted on the sensor by a rigid payload:
///
///   f   = m*a + m*g + alpha x (m*c) + omega x (omega x (m*c))
///   tau = I*alpha + omega x (I*omega) + (m*c) x a + (m*c) x g
///
/// All quantities are in the sensor frame; `a` is gravity-free.
inline Wrench newtonEulerWrench(const InertialParams& p,
                                const KinematicSample& kin) {
  const Vec3 mc = p.mass * p.com;
  Wrench w;
  w.force = p.mass * kin.linAcc + p.mass * kin.gravity +
            kin.angAcc.cross(mc) + kin.angVel.cross(kin.angVel.cross(mc));
  w.torque = p.inertia.apply(kin.angAcc) +
             kin.angVel.cross(p.inertia.apply(kin.angVel)) +
             mc.cross(kin.linAcc) + mc.cross(kin.gravity);
  return w;
}

/// Same wrench as a function of the linear parametrization phi. Unlike
/// newtonEulerWrench this needs no division by the mass, so it is defined
/// for any phi (including phi[0] <= 0); the nonlinear solvers iterate on it.
inline Wrench wrenchFromPhi(const PhiVector& phi, const KinematicSample& kin) {
  const Vec3 h = phi.segment<3>(1);  // m*c
  const SymmetricMatrix3 inertia(phi[4], phi[5], phi[6], phi[7], phi[8],
                                 phi[9]);
  Wrench w;
  w.force = phi[0] * (kin.linAcc + kin.gravity) + kin.angAcc.cross(h) +
            kin.angVel.cross(kin.angVel.cross(h));
  w.torque = inertia.apply(kin.angAcc) +
             kin.angVel.cross(inertia.apply(kin.angVel)) +
             h.cross(kin.linAcc + kin.gravity);
  return w;
}

namespace detail {

/// 3x6 map K(v) with K(v)*vech(I) = I*v for vech order (xx,xy,xz,yy,yz,zz).
inline Eigen::Matrix<double, 3, 6> inertiaProductMap(const Vec3& v) {
  Eigen::Matrix<double, 3, 6> k = Eigen::Matrix<double, 3, 6>::Zero();
  k(0, 0) = v.x();
  k(0, 1) = v.y();
  k(0, 2) = v.z();
  k(1, 1) = v.x();
  k(1, 3) = v.y();
  k(1, 4) = v.z();
  k(2, 2) = v.x();
  k(2, 4) = v.y();
  k(2, 5) = v.z();
  return k;
}

}  // namespace detail

/// Per-sample 6x10 regressor: rows [force; torque], columns matching phi.
/// For every p: regressorBlock(kin) * toPhi(p) == newtonEulerWrench(p, kin).
inline Eigen::Matrix<double, 6, 10> regressorBlock(const KinematicSample& kin) {
  Eigen::Matrix<double, 6, 10> block = Eigen::Matrix<double, 6, 10>::Zero();
  const Vec3 ag = kin.linAcc + kin.gravity;
  const Mat3 wx = skew(kin.angVel);

  // force rows: f = (a+g)*m + [skew(alpha) + skew(w)^2] * (m*c)
  block.block<3, 1>(0, 0) = ag;
  block.block<3, 3>(0, 1) = skew(kin.angAcc) + wx * wx;
  // inertia columns of the force rows stay identically zero

  // torque rows: tau = -skew(a+g) * (m*c) + [K(alpha) + skew(w)*K(w)] * vech(I)
  block.block<3, 3>(3, 1) = -skew(ag);
  block.block<3, 6>(3, 4) = detail::inertiaProductMap(kin.angAcc) +
                            wx * detail::inertiaProductMap(kin.angVel);
  return block;
}

/// Stacks per-sample regressor blocks and wrenches into one linear system.
/// Requires a non-empty sequence with strictly increasing timestamps and
/// finite values throughout.
inline RegressorSystem buildSystem(std::span<const MeasuredSample> samples) {
  if (samples.empty()) throw EmptyRecordingError();
  const std::size_t n = samples.size();
  RegressorSystem sys;
  sys.sampleCount = n;
  sys.matrix.resize(static_cast<Eigen::Index>(6 * n), 10);
  sys.rhs.resize(static_cast<Eigen::Index>(6 * n));
  double prevT = samples[0].kin.t;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = samples[i];
    if (!s.kin.isFinite() || !s.wrench.isFinite()) {
      throw NonFiniteValueError(i);
    }
    if (i > 0 && !(s.kin.t > prevT)) throw NonMonotonicTimeError(i);
    prevT = s.kin.t;
    const Eigen::Index row = static_cast<Eigen::Index>(6 * i);
    sys.matrix.block<6, 10>(row, 0) = regressorBlock(s.kin);
    sys.rhs.segment<3>(row) = s.wrench.force;
    sys.rhs.segment<3>(row + 3) = s.wrench.torque;
  }
  return sys;
}

/// Diagnostic result of the physical-consistency checks. Violations are
/// reported, never enforced.
struct ConsistencyReport {
  bool massPositive = false;
  bool inertiaPositiveSemidefinite = false;
  bool triangleInequality = false;

  bool allPass() const {
    return massPositive && inertiaPositiveSemidefinite && triangleInequality;
  }
};

/// Checks mass positivity, positive semidefiniteness of the inertia tensor,
/// and the triangle inequality on its principal moments.
inline ConsistencyReport physicalConsistency(const InertialParams& p) {
  ConsistencyReport report;
  report.massPositive = p.mass > 0.0;

  Eigen::SelfAdjointEigenSolver<Mat3> eig(p.inertia.matrix());
  const Vec3 lambda = eig.eigenvalues();  // ascending
  const double scale = lambda.cwiseAbs().maxCoeff();
  const double slack = 1e-12 * std::max(scale, 1e-300);
  report.inertiaPositiveSemidefinite = lambda[0] >= -slack;
  report.triangleInequality = lambda[0] + lambda[1] >= lambda[2] - slack;
  return report;
}

}  // namespace pipest
