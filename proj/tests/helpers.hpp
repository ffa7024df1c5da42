#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "pipest/types.hpp"

namespace testutil {

using pipest::InertialParams;
using pipest::KinematicSample;
using pipest::SymmetricMatrix3;
using pipest::Vec3;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 randomVec(std::mt19937_64& rng, double scale) {
  return Vec3(uniform(rng, -scale, scale), uniform(rng, -scale, scale),
              uniform(rng, -scale, scale));
}

inline Vec3 randomUnit(std::mt19937_64& rng) {
  while (true) {
    Vec3 v = randomVec(rng, 1.0);
    const double n = v.norm();
    if (n > 1e-3 && n < 1.0) return v / n;
  }
}

inline KinematicSample randomKinematics(std::mt19937_64& rng, double t = 0.0) {
  KinematicSample kin;
  kin.t = t;
  kin.linVel = randomVec(rng, 1.0);
  kin.angVel = randomVec(rng, 3.0);
  kin.linAcc = randomVec(rng, 5.0);
  kin.angAcc = randomVec(rng, 20.0);
  kin.gravity = pipest::kGravity * randomUnit(rng);
  return kin;
}

inline InertialParams randomParams(std::mt19937_64& rng) {
  InertialParams p;
  p.mass = uniform(rng, 0.1, 2.0);
  p.com = randomVec(rng, 0.15);
  // random symmetric matrix; physical consistency is not required here
  p.inertia = SymmetricMatrix3(
      uniform(rng, -0.01, 0.05), uniform(rng, -0.01, 0.01),
      uniform(rng, -0.01, 0.01), uniform(rng, -0.01, 0.05),
      uniform(rng, -0.01, 0.01), uniform(rng, -0.01, 0.05));
  return p;
}

/// Largest |a-b| over the 6 wrench components, scaled by the wrench magnitude.
inline double wrenchRelDiff(const pipest::Wrench& got, const double fRef[3],
                            const double tauRef[3]) {
  double refMag = 0.0;
  for (int i = 0; i < 3; ++i) {
    refMag = std::max({refMag, std::abs(fRef[i]), std::abs(tauRef[i])});
  }
  const double scale = std::max(refMag, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    worst = std::max(worst, std::abs(got.force[i] - fRef[i]));
    worst = std::max(worst, std::abs(got.torque[i] - tauRef[i]));
  }
  return worst / scale;
}

inline double relDiff(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

}  // namespace testutil
