#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace pipest {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Standard gravitational acceleration [m/s^2].
inline constexpr double kGravity = 9.80665;

// ---------------------------------------------------------------------------
// Errors. The CLI maps the category bases onto process exit codes, so new
// error types should derive from the narrowest fitting category.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad flags, options, or parameter files (CLI exit code 2).
struct ConfigError : Error {
  using Error::Error;
};

/// Malformed or inconsistent input data (CLI exit code 4).
struct IngestionError : Error {
  using Error::Error;
};

/// Solver cannot produce a solution (CLI exit code 5).
struct SolverError : Error {
  using Error::Error;
};

struct EmptyRecordingError : IngestionError {
  EmptyRecordingError() : IngestionError("recording contains no samples") {}
};

struct NonMonotonicTimeError : IngestionError {
  explicit NonMonotonicTimeError(std::size_t index)
      : IngestionError("timestamps not strictly increasing at sample " +
                       std::to_string(index)),
        index(index) {}
  std::size_t index;
};

struct NonFiniteValueError : IngestionError {
  explicit NonFiniteValueError(std::size_t index)
      : IngestionError("non-finite value at sample " + std::to_string(index)),
        index(index) {}
  std::size_t index;
};

struct TooFewSamplesError : IngestionError {
  explicit TooFewSamplesError(std::size_t have, std::size_t need)
      : IngestionError("recording has " + std::to_string(have) +
                       " samples, need at least " + std::to_string(need)) {}
};

struct NonUniformRateError : IngestionError {
  explicit NonUniformRateError(std::size_t index)
      : IngestionError("sample spacing deviates from 1/rate at sample " +
                       std::to_string(index)),
        index(index) {}
  std::size_t index;
};

struct InvalidWindowError : ConfigError {
  explicit InvalidWindowError(const std::string& what) : ConfigError(what) {}
};

struct FractionOutOfRangeError : ConfigError {
  explicit FractionOutOfRangeError(double fraction)
      : ConfigError("trim fraction " + std::to_string(fraction) +
                    " outside [0, 0.5)") {}
};

struct MissingKnownParamsError : ConfigError {
  MissingKnownParamsError()
      : ConfigError("estimation mode requires known parameters for the "
                    "non-estimated groups") {}
};

struct InvalidPhiError : ConfigError {
  InvalidPhiError()
      : ConfigError("phi[0] (mass) must be positive to recover a center of "
                    "mass") {}
};

struct DegenerateSystemError : SolverError {
  DegenerateSystemError() : SolverError("regressor system is all zero") {}
};

struct TlsDegenerateError : SolverError {
  TlsDegenerateError()
      : SolverError("total least squares is degenerate: right singular "
                    "vector has (numerically) zero last component") {}
};

struct InsufficientRowsError : SolverError {
  explicit InsufficientRowsError(std::size_t rows, std::size_t need)
      : SolverError("system has " + std::to_string(rows) +
                    " rows, need more than " + std::to_string(need)) {}
};

struct UnsupportedModeError : SolverError {
  explicit UnsupportedModeError(const std::string& what) : SolverError(what) {}
};

struct ZeroGroundTruthError : Error {
  ZeroGroundTruthError()
      : Error("relative error undefined: ground truth has zero norm") {}
};

struct WorkspaceViolationError : Error {
  explicit WorkspaceViolationError(double t)
      : Error("trajectory leaves the workspace box at t = " +
              std::to_string(t)),
        time(t) {}
  double time;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Symmetric 3x3 matrix stored as its 6 unique elements in the order
/// (xx, xy, xz, yy, yz, zz). Reconstruction is symmetric bit-for-bit.
class SymmetricMatrix3 {
 public:
  SymmetricMatrix3() : e_{} {}
  SymmetricMatrix3(double xx, double xy, double xz, double yy, double yz,
                   double zz)
      : e_{xx, xy, xz, yy, yz, zz} {}

  static SymmetricMatrix3 Zero() { return SymmetricMatrix3(); }

  static SymmetricMatrix3 diagonal(double xx, double yy, double zz) {
    return SymmetricMatrix3(xx, 0.0, 0.0, yy, 0.0, zz);
  }

  /// Takes the symmetric part of `m` (off-diagonal pairs are averaged).
  static SymmetricMatrix3 fromMatrix(const Mat3& m) {
    return SymmetricMatrix3(m(0, 0), 0.5 * (m(0, 1) + m(1, 0)),
                            0.5 * (m(0, 2) + m(2, 0)), m(1, 1),
                            0.5 * (m(1, 2) + m(2, 1)), m(2, 2));
  }

  double xx() const { return e_[0]; }
  double xy() const { return e_[1]; }
  double xz() const { return e_[2]; }
  double yy() const { return e_[3]; }
  double yz() const { return e_[4]; }
  double zz() const { return e_[5]; }

  const std::array<double, 6>& elements() const { return e_; }
  double& operator[](std::size_t i) { return e_[i]; }
  double operator[](std::size_t i) const { return e_[i]; }

  Mat3 matrix() const {
    Mat3 m;
    m << e_[0], e_[1], e_[2],  //
        e_[1], e_[3], e_[4],   //
        e_[2], e_[4], e_[5];
    return m;
  }

  /// Matrix-vector product without forming the full matrix.
  Vec3 apply(const Vec3& v) const {
    return Vec3(e_[0] * v.x() + e_[1] * v.y() + e_[2] * v.z(),
                e_[1] * v.x() + e_[3] * v.y() + e_[4] * v.z(),
                e_[2] * v.x() + e_[4] * v.y() + e_[5] * v.z());
  }

  double frobeniusNorm() const { return matrix().norm(); }

  bool isFinite() const {
    for (double v : e_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

 private:
  std::array<double, 6> e_;
};

/// Payload inertial parameters: the estimation target.
///
/// `com` is the offset from the sensor origin to the payload center of mass,
/// in the sensor frame. `inertia` is taken about the sensor origin and
/// expressed in sensor axes. No positivity is enforced here: estimators may
/// legitimately produce non-physical values (see physicalConsistency).
struct InertialParams {
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  SymmetricMatrix3 inertia;
};

/// The 10-element linear parametrization [m, m*cx, m*cy, m*cz,
/// Ixx, Ixy, Ixz, Iyy, Iyz, Izz] in which the wrench model is linear.
using PhiVector = Eigen::Matrix<double, 10, 1>;

inline PhiVector toPhi(const InertialParams& p) {
  PhiVector phi;
  phi[0] = p.mass;
  phi.segment<3>(1) = p.mass * p.com;
  for (int i = 0; i < 6; ++i) phi[4 + i] = p.inertia[static_cast<std::size_t>(i)];
  return phi;
}

/// Inverse of toPhi. Throws InvalidPhiError when phi[0] <= 0 (the center of
/// mass is undefined).
inline InertialParams fromPhi(const PhiVector& phi) {
  if (!(phi[0] > 0.0)) throw InvalidPhiError();
  InertialParams p;
  p.mass = phi[0];
  p.com = phi.segment<3>(1) / phi[0];
  p.inertia = SymmetricMatrix3(phi[4], phi[5], phi[6], phi[7], phi[8], phi[9]);
  return p;
}

/// One time step of sensor-frame kinematics. `linAcc` is the kinematic
/// (gravity-free) acceleration of the sensor origin; gravity enters the
/// wrench model separately through `gravity`.
struct KinematicSample {
  double t = 0.0;
  Vec3 linVel = Vec3::Zero();
  Vec3 angVel = Vec3::Zero();
  Vec3 linAcc = Vec3::Zero();
  Vec3 angAcc = Vec3::Zero();
  Vec3 gravity = Vec3::Zero();

  bool isFinite() const {
    return std::isfinite(t) && linVel.allFinite() && angVel.allFinite() &&
           linAcc.allFinite() && angAcc.allFinite() && gravity.allFinite();
  }
};

/// Force/torque measurement in the sensor frame.
struct Wrench {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();

  bool isFinite() const { return force.allFinite() && torque.allFinite(); }
};

/// A kinematic sample paired with the wrench observed at the same instant.
struct MeasuredSample {
  KinematicSample kin;
  Wrench wrench;
};

/// Stacked linear system A*phi = b. Per sample the 6-row block is ordered
/// [force rows; torque rows]; samples appear in time order.
struct RegressorSystem {
  Eigen::MatrixXd matrix;  // (6N) x 10
  Eigen::VectorXd rhs;     // 6N
  std::size_t sampleCount = 0;
};

}  // namespace pipest
