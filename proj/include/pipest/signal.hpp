#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pipest/so3.hpp"
#include "pipest/types.hpp"

namespace pipest::signal {

/// Raw pose + wrench sample as recorded. Position and orientation are in the
/// world frame (orientation maps sensor to world); force/torque are in the
/// sensor frame.
struct RawSample {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
};

/// Uniformly sampled time series of raw samples.
struct Recording {
  double rate = 0.0;  // [Hz]
  std::vector<RawSample> samples;
};

struct SavGolSpec {
  int order = 3;
  int window = 11;
};

struct NoiseSpec {
  double sigmaForce = 0.0;   // [N]
  double sigmaTorque = 0.0;  // [N m]
  double quantStep = 0.0;    // quantization step for position/orientation
};

namespace detail {

inline void validateWindow(int order, int window) {
  if (window % 2 == 0) {
    throw InvalidWindowError("filter window must be odd, got " +
                             std::to_string(window));
  }
  if (window <= order || order < 0) {
    throw InvalidWindowError("filter window " + std::to_string(window) +
                             " too small for polynomial order " +
                             std::to_string(order));
  }
}

/// Projection onto polynomials of degree <= order over `window` uniformly
/// spaced nodes. Row j gives the smoothing weights for the value at node j.
inline Eigen::MatrixXd polynomialProjection(int order, int window) {
  const int half = window / 2;
  Eigen::MatrixXd vander(window, order + 1);
  for (int i = 0; i < window; ++i) {
    double x = 1.0;
    for (int j = 0; j <= order; ++j) {
      vander(i, j) = x;
      x *= static_cast<double>(i - half);
    }
  }
  const Eigen::MatrixXd q =
      Eigen::HouseholderQR<Eigen::MatrixXd>(vander).householderQ() *
      Eigen::MatrixXd::Identity(window, order + 1);
  return q * q.transpose();
}

}  // namespace detail

/// Savitzky-Golay smoothing: least-squares polynomial fit of the given order
/// over a sliding window. Interior samples use the centered fit; the first
/// and last half-window samples are taken from one-sided fits of the same
/// order over the leading/trailing window.
inline std::vector<double> savGolFilter(std::span<const double> input,
                                        int order, int window) {
  detail::validateWindow(order, window);
  const std::size_t n = input.size();
  if (n < static_cast<std::size_t>(window)) {
    throw TooFewSamplesError(n, static_cast<std::size_t>(window));
  }
  const Eigen::MatrixXd proj = detail::polynomialProjection(order, window);
  const int half = window / 2;

  std::vector<double> out(n);
  const auto dotWindow = [&](std::size_t start, int row) {
    double acc = 0.0;
    for (int j = 0; j < window; ++j) {
      acc += proj(row, j) * input[start + static_cast<std::size_t>(j)];
    }
    return acc;
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (i < static_cast<std::size_t>(half)) {
      out[i] = dotWindow(0, static_cast<int>(i));
    } else if (i + static_cast<std::size_t>(half) >= n) {
      const int row = window - 1 - static_cast<int>(n - 1 - i);
      out[i] = dotWindow(n - static_cast<std::size_t>(window), row);
    } else {
      out[i] = dotWindow(i - static_cast<std::size_t>(half), half);
    }
  }
  return out;
}

/// Removes floor(fraction * N) samples from each end, preserving order.
template <typename T>
std::vector<T> trimEnds(std::span<const T> samples, double fraction) {
  if (!(fraction >= 0.0 && fraction < 0.5)) {
    throw FractionOutOfRangeError(fraction);
  }
  const std::size_t cut = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(samples.size())));
  return std::vector<T>(samples.begin() + static_cast<std::ptrdiff_t>(cut),
                        samples.end() - static_cast<std::ptrdiff_t>(cut));
}

template <typename T>
std::vector<T> trimEnds(const std::vector<T>& samples, double fraction) {
  return trimEnds(std::span<const T>(samples), fraction);
}

namespace detail {

inline void validateUniformRate(const Recording& rec) {
  const double dt = 1.0 / rec.rate;
  for (std::size_t i = 1; i < rec.samples.size(); ++i) {
    const double spacing = rec.samples[i].t - rec.samples[i - 1].t;
    if (!(spacing > 0.0)) throw NonMonotonicTimeError(i);
    if (std::abs(spacing - dt) > 1e-6) throw NonUniformRateError(i);
  }
}

}  // namespace detail

/// Derives sensor-frame kinematics from a pose recording:
///  1. body angular velocity from relative-quaternion logarithms and linear
///     velocity from position differences (central, one-sided at the ends),
///  2. Savitzky-Golay smoothing of the six velocity channels,
///  3. accelerations by central differences of the filtered velocities,
///  4. per-sample gravity from the orientation.
inline std::vector<KinematicSample> differentiateKinematics(
    const Recording& rec, const SavGolSpec& filter = {}) {
  detail::validateWindow(filter.order, filter.window);
  const std::size_t n = rec.samples.size();
  const std::size_t minSamples =
      2 * static_cast<std::size_t>(filter.window) + 5;
  if (n < minSamples) throw TooFewSamplesError(n, minSamples);
  detail::validateUniformRate(rec);

  const double rate = rec.rate;
  std::vector<Eigen::Quaterniond> q(n);
  std::vector<Mat3> rot(n);
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = rec.samples[i].orientation.normalized();
    rot[i] = q[i].toRotationMatrix();
  }

  // velocities (step 1)
  std::vector<Vec3> angVel(n);
  std::vector<Vec3> linVelWorld(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) {
      angVel[i] = quatLog(q[0].conjugate() * q[1]) * rate;
      linVelWorld[i] = (rec.samples[1].position - rec.samples[0].position) * rate;
    } else if (i + 1 == n) {
      angVel[i] = quatLog(q[n - 2].conjugate() * q[n - 1]) * rate;
      linVelWorld[i] =
          (rec.samples[n - 1].position - rec.samples[n - 2].position) * rate;
    } else {
      angVel[i] = quatLog(q[i - 1].conjugate() * q[i + 1]) * (0.5 * rate);
      linVelWorld[i] =
          (rec.samples[i + 1].position - rec.samples[i - 1].position) *
          (0.5 * rate);
    }
  }
  std::vector<Vec3> linVel(n);
  for (std::size_t i = 0; i < n; ++i) {
    linVel[i] = rot[i].transpose() * linVelWorld[i];
  }

  // smoothing (step 2): all six sensor-frame velocity channels
  {
    std::vector<double> channel(n);
    for (int axis = 0; axis < 3; ++axis) {
      for (std::size_t i = 0; i < n; ++i) channel[i] = linVel[i][axis];
      auto smooth = savGolFilter(channel, filter.order, filter.window);
      for (std::size_t i = 0; i < n; ++i) linVel[i][axis] = smooth[i];

      for (std::size_t i = 0; i < n; ++i) channel[i] = angVel[i][axis];
      smooth = savGolFilter(channel, filter.order, filter.window);
      for (std::size_t i = 0; i < n; ++i) angVel[i][axis] = smooth[i];
    }
  }

  // accelerations (step 3). The linear acceleration is the world-frame
  // derivative expressed in sensor axes, so differentiate R*v, not v.
  for (std::size_t i = 0; i < n; ++i) {
    linVelWorld[i] = rot[i] * linVel[i];
  }
  std::vector<KinematicSample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 accWorld;
    Vec3 angAcc;
    if (i == 0) {
      accWorld = (linVelWorld[1] - linVelWorld[0]) * rate;
      angAcc = (angVel[1] - angVel[0]) * rate;
    } else if (i + 1 == n) {
      accWorld = (linVelWorld[n - 1] - linVelWorld[n - 2]) * rate;
      angAcc = (angVel[n - 1] - angVel[n - 2]) * rate;
    } else {
      accWorld = (linVelWorld[i + 1] - linVelWorld[i - 1]) * (0.5 * rate);
      angAcc = (angVel[i + 1] - angVel[i - 1]) * (0.5 * rate);
    }
    out[i].t = rec.samples[i].t;
    out[i].linVel = linVel[i];
    out[i].angVel = angVel[i];
    out[i].linAcc = rot[i].transpose() * accWorld;
    out[i].angAcc = angAcc;
    out[i].gravity = rot[i].transpose() * Vec3(0.0, 0.0, -kGravity);
  }
  return out;
}

/// Adds seeded Gaussian noise to the wrench channels and optionally
/// quantizes position/orientation components. Reproducible per seed.
inline Recording injectNoise(const Recording& rec, const NoiseSpec& model,
                             std::uint64_t seed) {
  if (model.sigmaForce < 0.0 || model.sigmaTorque < 0.0 ||
      model.quantStep < 0.0) {
    throw ConfigError("noise sigmas and quantization step must be >= 0");
  }
  Recording out = rec;
  std::mt19937_64 rng(seed);
  if (model.sigmaForce > 0.0 || model.sigmaTorque > 0.0) {
    std::normal_distribution<double> forceNoise(0.0, model.sigmaForce);
    std::normal_distribution<double> torqueNoise(0.0, model.sigmaTorque);
    for (auto& s : out.samples) {
      if (model.sigmaForce > 0.0) {
        for (int i = 0; i < 3; ++i) s.force[i] += forceNoise(rng);
      }
      if (model.sigmaTorque > 0.0) {
        for (int i = 0; i < 3; ++i) s.torque[i] += torqueNoise(rng);
      }
    }
  }
  if (model.quantStep > 0.0) {
    const double q = model.quantStep;
    const auto quantize = [q](double x) { return std::round(x / q) * q; };
    for (auto& s : out.samples) {
      for (int i = 0; i < 3; ++i) s.position[i] = quantize(s.position[i]);
      s.orientation = Eigen::Quaterniond(
          quantize(s.orientation.w()), quantize(s.orientation.x()),
          quantize(s.orientation.y()), quantize(s.orientation.z()));
      s.orientation.normalize();
    }
  }
  return out;
}

}  // namespace pipest::signal
