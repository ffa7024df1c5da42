#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pipest/dynamics.hpp"
#include "pipest/signal.hpp"
#include "pipest/so3.hpp"
#include "pipest/types.hpp"

namespace pipest::synth {

/// One sinusoidal component of a pose coordinate: amplitude*sin(2*pi*f*t + phase).
struct SineTerm {
  double amplitude = 0.0;  // [m] or [rad]
  double frequency = 0.0;  // [Hz]
  double phase = 0.0;      // [rad]
};

using AxisSeries = std::vector<SineTerm>;

/// Superposition of sine terms per pose coordinate. Translation drives the
/// world-frame position offset, rotation drives a rotation-vector offset
/// applied on top of the base orientation.
struct FourierTrajectorySpec {
  double duration = 20.0;  // [s]
  double rate = 1000.0;    // [Hz]
  std::array<AxisSeries, 3> translation;
  std::array<AxisSeries, 3> rotation;
  Vec3 basePosition = Vec3(0.4, 0.0, 0.5);
  Eigen::Quaterniond baseOrientation = Eigen::Quaterniond::Identity();
  /// Motion must stay inside basePosition +/- workspaceHalfExtents.
  Vec3 workspaceHalfExtents = Vec3(0.8, 0.8, 0.8);
};

struct GroundTruthScenario {
  FourierTrajectorySpec spec;
  InertialParams truth;
  signal::NoiseSpec noise;
  std::uint64_t seed = 0;
};

/// A generated trajectory: the pose recording (wrench columns zero) plus the
/// analytic sensor-frame kinematics at every sample.
struct TrajectoryData {
  signal::Recording recording;
  std::vector<KinematicSample> kinematics;
};

namespace detail {

struct SeriesEval {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

inline SeriesEval evalSeries(const AxisSeries& series, double t) {
  SeriesEval out;
  for (const auto& term : series) {
    const double w = 2.0 * M_PI * term.frequency;
    const double arg = w * t + term.phase;
    const double s = std::sin(arg);
    const double c = std::cos(arg);
    out.value += term.amplitude * s;
    out.d1 += term.amplitude * w * c;
    out.d2 -= term.amplitude * w * w * s;
  }
  return out;
}

inline Vec3 rotationVectorAt(const FourierTrajectorySpec& spec, double t) {
  return Vec3(evalSeries(spec.rotation[0], t).value,
              evalSeries(spec.rotation[1], t).value,
              evalSeries(spec.rotation[2], t).value);
}

inline Vec3 bodyAngularVelocityAt(const FourierTrajectorySpec& spec,
                                  double t) {
  const Vec3 r = rotationVectorAt(spec, t);
  const Vec3 rDot(evalSeries(spec.rotation[0], t).d1,
                  evalSeries(spec.rotation[1], t).d1,
                  evalSeries(spec.rotation[2], t).d1);
  return rightJacobian(r) * rDot;
}

}  // namespace detail

/// Evaluates the trajectory per sample: closed-form pose and twist, body
/// angular acceleration by a narrow central difference of the analytic
/// angular velocity (step 1e-6 s).
inline TrajectoryData generateTrajectory(const FourierTrajectorySpec& spec) {
  const std::size_t n = static_cast<std::size_t>(
      std::llround(spec.duration * spec.rate));
  if (n == 0) throw EmptyRecordingError();

  TrajectoryData out;
  out.recording.rate = spec.rate;
  out.recording.samples.resize(n);
  out.kinematics.resize(n);

  const Eigen::Quaterniond qBase = spec.baseOrientation.normalized();
  constexpr double kAlphaStep = 1e-6;

  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / spec.rate;

    Vec3 pos;
    Vec3 vel;
    Vec3 acc;
    for (int axis = 0; axis < 3; ++axis) {
      const auto e = detail::evalSeries(spec.translation[axis], t);
      pos[axis] = spec.basePosition[axis] + e.value;
      vel[axis] = e.d1;
      acc[axis] = e.d2;
    }
    const Vec3 excursion = pos - spec.basePosition;
    if ((excursion.cwiseAbs().array() > spec.workspaceHalfExtents.array())
            .any()) {
      throw WorkspaceViolationError(t);
    }

    const Vec3 r = detail::rotationVectorAt(spec, t);
    const Eigen::Quaterniond q = qBase * quatExp(r);
    const Mat3 rotT = q.toRotationMatrix().transpose();

    auto& raw = out.recording.samples[i];
    raw.t = t;
    raw.position = pos;
    raw.orientation = q;

    auto& kin = out.kinematics[i];
    kin.t = t;
    kin.linVel = rotT * vel;
    kin.angVel = detail::bodyAngularVelocityAt(spec, t);
    kin.angAcc = (detail::bodyAngularVelocityAt(spec, t + kAlphaStep) -
                  detail::bodyAngularVelocityAt(spec, t - kAlphaStep)) /
                 (2.0 * kAlphaStep);
    kin.linAcc = rotT * acc;
    kin.gravity = rotT * Vec3(0.0, 0.0, -kGravity);
  }
  return out;
}

/// Ground-truth wrench per sample: the forward model evaluated on the given
/// kinematics. This is the validation-data construction.
inline std::vector<Wrench> synthesizeWrenches(
    std::span<const KinematicSample> kins, const InertialParams& truth) {
  std::vector<Wrench> out(kins.size());
  for (std::size_t i = 0; i < kins.size(); ++i) {
    out[i] = newtonEulerWrench(truth, kins[i]);
  }
  return out;
}

inline std::vector<MeasuredSample> pairSamples(
    std::span<const KinematicSample> kins, std::span<const Wrench> wrenches) {
  std::vector<MeasuredSample> out(kins.size());
  for (std::size_t i = 0; i < kins.size(); ++i) {
    out[i] = MeasuredSample{kins[i], wrenches[i]};
  }
  return out;
}

enum class ScenarioKind { Predefined, PickPlaceLike, FreeMotionLike };

/// Builds physically consistent parameters from a center-of-mass inertia
/// diagonal, shifting the tensor to the sensor origin.
inline InertialParams makePayload(double mass, const Vec3& com,
                                  const Vec3& comInertiaDiag) {
  InertialParams p;
  p.mass = mass;
  p.com = com;
  const Mat3 shift =
      mass * (com.squaredNorm() * Mat3::Identity() - com * com.transpose());
  p.inertia = SymmetricMatrix3::fromMatrix(
      Vec3(comInertiaDiag).asDiagonal().toDenseMatrix() + shift);
  return p;
}

/// 0.3 kg test payload of the kind mounted directly to the sensor.
inline InertialParams predefinedClassPayload() {
  return makePayload(0.3, Vec3(0.02, -0.015, 0.06),
                     Vec3(3.2e-4, 3.0e-4, 1.6e-4));
}

/// 0.8 kg gripper-class payload.
inline InertialParams gripperClassPayload() {
  return makePayload(0.8, Vec3(0.0, 0.01, 0.045),
                     Vec3(1.2e-3, 1.1e-3, 6.0e-4));
}

namespace detail {

inline AxisSeries jitteredSeries(std::mt19937_64& rng,
                                 std::initializer_list<SineTerm> base) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  AxisSeries out;
  for (const auto& term : base) {
    SineTerm jittered;
    jittered.amplitude = term.amplitude * (1.0 + 0.15 * unit(rng));
    jittered.frequency = term.frequency * (1.0 + 0.10 * unit(rng));
    jittered.phase = angle(rng);
    out.push_back(jittered);
  }
  return out;
}

}  // namespace detail

/// Fixed excitation recipes. Predefined is the rich 20 s calibration-style
/// motion; the other two emulate 10 s hand-guided motions with much lower
/// angular excitation (PickPlaceLike being dominantly translational with
/// slow dwell-like turnarounds).
inline GroundTruthScenario makeScenario(ScenarioKind kind,
                                        const InertialParams& truth,
                                        std::uint64_t seed) {
  if (!(truth.mass > 0.0)) {
    throw ConfigError("scenario ground truth needs a positive mass");
  }
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  GroundTruthScenario scenario;
  scenario.truth = truth;
  scenario.seed = seed;
  auto& spec = scenario.spec;
  spec.rate = 1000.0;
  spec.baseOrientation = Eigen::Quaterniond(
      Eigen::AngleAxisd(2.7, Vec3(0.9, 0.3, 0.3).normalized()));

  using detail::jitteredSeries;
  switch (kind) {
    case ScenarioKind::Predefined:
      spec.duration = 20.0;
      spec.translation[0] = jitteredSeries(
          rng, {{0.10, 0.25, 0.0}, {0.045, 0.80, 0.0}, {0.020, 1.60, 0.0}});
      spec.translation[1] = jitteredSeries(
          rng, {{0.09, 0.30, 0.0}, {0.040, 0.95, 0.0}, {0.018, 1.85, 0.0}});
      spec.translation[2] = jitteredSeries(
          rng, {{0.08, 0.22, 0.0}, {0.035, 0.70, 0.0}, {0.016, 1.45, 0.0}});
      spec.rotation[0] = jitteredSeries(
          rng, {{0.45, 0.50, 0.0}, {0.22, 1.20, 0.0}, {0.10, 2.00, 0.0}});
      spec.rotation[1] = jitteredSeries(
          rng, {{0.50, 0.45, 0.0}, {0.20, 1.10, 0.0}, {0.09, 1.90, 0.0}});
      spec.rotation[2] = jitteredSeries(
          rng, {{0.40, 0.55, 0.0}, {0.18, 1.30, 0.0}, {0.08, 2.10, 0.0}});
      break;
    case ScenarioKind::PickPlaceLike:
      spec.duration = 10.0;
      spec.translation[0] =
          jitteredSeries(rng, {{0.18, 0.10, 0.0}, {0.040, 0.30, 0.0}});
      spec.translation[1] =
          jitteredSeries(rng, {{0.12, 0.10, 0.0}, {0.030, 0.30, 0.0}});
      spec.translation[2] =
          jitteredSeries(rng, {{0.10, 0.20, 0.0}, {0.020, 0.40, 0.0}});
      spec.rotation[0] = jitteredSeries(rng, {{0.05, 0.15, 0.0}});
      spec.rotation[1] = jitteredSeries(rng, {{0.08, 0.20, 0.0}});
      spec.rotation[2] = jitteredSeries(rng, {{0.12, 0.18, 0.0}});
      break;
    case ScenarioKind::FreeMotionLike:
      spec.duration = 10.0;
      spec.translation[0] =
          jitteredSeries(rng, {{0.08, 0.35, 0.0}, {0.030, 0.80, 0.0}});
      spec.translation[1] =
          jitteredSeries(rng, {{0.07, 0.40, 0.0}, {0.025, 0.90, 0.0}});
      spec.translation[2] =
          jitteredSeries(rng, {{0.06, 0.30, 0.0}, {0.020, 0.75, 0.0}});
      spec.rotation[0] = jitteredSeries(rng, {{0.25, 0.40, 0.0}, {0.10, 0.90, 0.0}});
      spec.rotation[1] = jitteredSeries(rng, {{0.22, 0.45, 0.0}, {0.09, 0.85, 0.0}});
      spec.rotation[2] = jitteredSeries(rng, {{0.20, 0.38, 0.0}, {0.08, 0.95, 0.0}});
      break;
  }
  return scenario;
}

}  // namespace pipest::synth
