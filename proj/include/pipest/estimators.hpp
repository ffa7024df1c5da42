#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "pipest/dynamics.hpp"
#include "pipest/parallel.hpp"
#include "pipest/types.hpp"

namespace pipest::estimators {

enum class Method { LeastSquares, TotalLeastSquares, LevenbergMarquardt, BruteForce };

enum class ModeKind { MassOnly, MassCom, FullPip };

/// Which parameter groups to estimate. MassOnly estimates the mass and
/// substitutes the known center of mass and inertia; MassCom estimates mass
/// and center of mass and substitutes the known inertia; FullPip estimates
/// everything and ignores `known`.
struct EstimationMode {
  ModeKind kind = ModeKind::FullPip;
  std::optional<InertialParams> known;

  static EstimationMode massOnly(const InertialParams& known) {
    return {ModeKind::MassOnly, known};
  }
  static EstimationMode massCom(const InertialParams& known) {
    return {ModeKind::MassCom, known};
  }
  static EstimationMode fullPip() { return {ModeKind::FullPip, std::nullopt}; }
};

inline int freeParameterCount(ModeKind kind) {
  switch (kind) {
    case ModeKind::MassOnly:
      return 1;
    case ModeKind::MassCom:
      return 4;
    case ModeKind::FullPip:
      return 10;
  }
  return 10;
}

/// Masked linear system: only the estimated phi columns remain, the known
/// contribution is moved to the right-hand side.
struct ReducedSystem {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;
  std::size_t sampleCount = 0;
  ModeKind kind = ModeKind::FullPip;
  PhiVector knownPhi = PhiVector::Zero();
  std::optional<InertialParams> known;
};

struct EstimationResult {
  InertialParams params;
  PhiVector phi = PhiVector::Zero();
  double residualNorm = 0.0;
  int iterations = 0;
  std::chrono::duration<double> runtime{0.0};
  double conditionNumber = 0.0;
  Method method = Method::LeastSquares;
  bool rankDeficient = false;
  bool reachedMaxIterations = false;
  std::size_t rowsUsed = 0;
};

namespace detail {

/// Numerical-rank threshold on singular values.
inline double rankThreshold(double sigmaMax, Eigen::Index rows,
                            Eigen::Index cols) {
  const double dim = static_cast<double>(std::max(rows, cols));
  return sigmaMax * dim * std::numeric_limits<double>::epsilon() * 16.0;
}

inline double conditionFromSingularValues(const Eigen::VectorXd& sigma) {
  const double smallest = sigma(sigma.size() - 1);
  if (smallest <= 0.0) return std::numeric_limits<double>::infinity();
  return sigma(0) / smallest;
}

/// Full phi vector from the estimated sub-vector plus the known entries.
inline PhiVector assemblePhi(ModeKind kind, const PhiVector& knownPhi,
                             const Eigen::VectorXd& x) {
  PhiVector phi = knownPhi;
  const int k = freeParameterCount(kind);
  for (int i = 0; i < k; ++i) phi[i] = x[i];
  return phi;
}

/// InertialParams view of a phi vector that tolerates non-physical values:
/// a negative mass stays negative, and the center of mass falls back to
/// zero only when the mass is exactly zero.
inline InertialParams paramsFromPhiLenient(const PhiVector& phi) {
  InertialParams p;
  p.mass = phi[0];
  p.com = phi[0] != 0.0 ? Vec3(phi.segment<3>(1) / phi[0]) : Vec3::Zero();
  p.inertia = SymmetricMatrix3(phi[4], phi[5], phi[6], phi[7], phi[8], phi[9]);
  return p;
}

inline InertialParams paramsFromSolution(
    ModeKind kind, const std::optional<InertialParams>& known,
    const PhiVector& phi) {
  switch (kind) {
    case ModeKind::MassOnly: {
      InertialParams p = *known;
      p.mass = phi[0];
      return p;
    }
    case ModeKind::MassCom: {
      InertialParams p = paramsFromPhiLenient(phi);
      p.inertia = known->inertia;
      return p;
    }
    case ModeKind::FullPip:
      break;
  }
  return paramsFromPhiLenient(phi);
}

class Stopwatch {
 public:
  std::chrono::duration<double> elapsed() const {
    return std::chrono::steady_clock::now() - start_;
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

/// Condition number and rank flag of the (already reduced) regressor.
inline void attachSystemDiagnostics(const Eigen::MatrixXd& matrix,
                                    EstimationResult& result) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(matrix);
  const Eigen::VectorXd& sigma = svd.singularValues();
  result.conditionNumber = conditionFromSingularValues(sigma);
  result.rankDeficient = sigma(sigma.size() - 1) <=
                         rankThreshold(sigma(0), matrix.rows(), matrix.cols());
}

}  // namespace detail

/// Reduces the stacked system to the estimated columns of the chosen mode,
/// moving contributions of the known parameters to the right-hand side.
inline ReducedSystem maskSystem(const RegressorSystem& sys,
                                const EstimationMode& mode) {
  if (mode.kind != ModeKind::FullPip && !mode.known.has_value()) {
    throw MissingKnownParamsError();
  }
  ReducedSystem out;
  out.sampleCount = sys.sampleCount;
  out.kind = mode.kind;
  out.known = mode.known;
  out.knownPhi = mode.known ? toPhi(*mode.known) : PhiVector::Zero();

  const int k = freeParameterCount(mode.kind);
  out.matrix = sys.matrix.leftCols(k);
  if (mode.kind == ModeKind::FullPip) {
    out.rhs = sys.rhs;
  } else {
    out.rhs =
        sys.rhs - sys.matrix.rightCols(10 - k) * out.knownPhi.tail(10 - k);
  }
  return out;
}

/// Minimum-norm linear least squares via singular value decomposition.
/// Reports the condition number of the reduced matrix; a rank-deficient
/// system is solved in the pseudo-inverse sense and flagged.
inline EstimationResult solveLeastSquares(const ReducedSystem& sys) {
  const detail::Stopwatch watch;
  const Eigen::Index rows = sys.matrix.rows();
  const Eigen::Index cols = sys.matrix.cols();
  if (rows < cols) {
    throw InsufficientRowsError(static_cast<std::size_t>(rows),
                                static_cast<std::size_t>(cols));
  }
  if (sys.matrix.isZero(0.0)) throw DegenerateSystemError();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(sys.matrix,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double threshold = detail::rankThreshold(sigma(0), rows, cols);

  Eigen::VectorXd projected = svd.matrixU().transpose() * sys.rhs;
  int rank = 0;
  for (Eigen::Index i = 0; i < cols; ++i) {
    if (sigma(i) > threshold) {
      projected(i) /= sigma(i);
      ++rank;
    } else {
      projected(i) = 0.0;  // minimum-norm completion
    }
  }
  const Eigen::VectorXd x = svd.matrixV() * projected;

  EstimationResult result;
  result.method = Method::LeastSquares;
  result.iterations = 1;
  result.rowsUsed = static_cast<std::size_t>(rows);
  result.conditionNumber = detail::conditionFromSingularValues(sigma);
  result.rankDeficient = rank < cols;
  result.residualNorm = (sys.matrix * x - sys.rhs).norm();
  result.phi = detail::assemblePhi(sys.kind, sys.knownPhi, x);
  result.params = detail::paramsFromSolution(sys.kind, sys.known, result.phi);
  result.runtime = watch.elapsed();
  return result;
}

enum class SvdMode { Fast, Exact };

struct TlsOptions {
  SvdMode svd = SvdMode::Fast;
  /// Keep every stride-th sample (6-row block); 1 keeps everything.
  int stride = 1;
};

/// Classical total least squares: the solution comes from the right singular
/// vector of the augmented matrix [A | b] belonging to its smallest singular
/// value. The fast mode pairs row subsampling with the divide-and-conquer
/// SVD; the exact mode runs the full-accuracy Jacobi SVD on all rows.
inline EstimationResult solveTotalLeastSquares(const ReducedSystem& sys,
                                               const TlsOptions& options = {}) {
  const detail::Stopwatch watch;
  if (options.stride < 1) {
    throw ConfigError("tls stride must be >= 1, got " +
                      std::to_string(options.stride));
  }
  const Eigen::Index cols = sys.matrix.cols();

  Eigen::MatrixXd used;
  Eigen::VectorXd usedRhs;
  if (options.stride == 1) {
    used = sys.matrix;
    usedRhs = sys.rhs;
  } else {
    const std::size_t stride = static_cast<std::size_t>(options.stride);
    const std::size_t kept = (sys.sampleCount + stride - 1) / stride;
    used.resize(static_cast<Eigen::Index>(6 * kept), cols);
    usedRhs.resize(static_cast<Eigen::Index>(6 * kept));
    std::size_t row = 0;
    for (std::size_t i = 0; i < sys.sampleCount; i += stride, ++row) {
      used.middleRows(static_cast<Eigen::Index>(6 * row), 6) =
          sys.matrix.middleRows(static_cast<Eigen::Index>(6 * i), 6);
      usedRhs.segment(static_cast<Eigen::Index>(6 * row), 6) =
          sys.rhs.segment(static_cast<Eigen::Index>(6 * i), 6);
    }
  }
  if (used.rows() <= cols + 1) {
    throw InsufficientRowsError(static_cast<std::size_t>(used.rows()),
                                static_cast<std::size_t>(cols + 1));
  }

  Eigen::MatrixXd augmented(used.rows(), cols + 1);
  augmented << used, usedRhs;

  Eigen::VectorXd nullDirection;
  if (options.svd == SvdMode::Fast) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(augmented, Eigen::ComputeThinV);
    nullDirection = svd.matrixV().col(cols);
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(augmented, Eigen::ComputeThinV);
    nullDirection = svd.matrixV().col(cols);
  }
  if (std::abs(nullDirection(cols)) < 1e-12) throw TlsDegenerateError();
  const Eigen::VectorXd x = -nullDirection.head(cols) / nullDirection(cols);

  EstimationResult result;
  result.method = Method::TotalLeastSquares;
  result.iterations = 1;
  result.rowsUsed = static_cast<std::size_t>(used.rows());
  detail::attachSystemDiagnostics(used, result);
  result.residualNorm = (used * x - usedRhs).norm();
  result.phi = detail::assemblePhi(sys.kind, sys.knownPhi, x);
  result.params = detail::paramsFromSolution(sys.kind, sys.known, result.phi);
  result.runtime = watch.elapsed();
  return result;
}

struct LmOptions {
  double initialDamping = 1e-3;
  double jacobianStepRelative = 1e-7;
  double jacobianStepAbsolute = 1e-9;
  double relativeStepTolerance = 1e-10;
  double relativeCostTolerance = 1e-12;
  int maxIterations = 200;
};

namespace detail {

inline Eigen::Matrix<double, 6, 1> residualAt(const PhiVector& phi,
                                              const MeasuredSample& sample) {
  const Wrench w = wrenchFromPhi(phi, sample.kin);
  Eigen::Matrix<double, 6, 1> r;
  r << w.force - sample.wrench.force, w.torque - sample.wrench.torque;
  return r;
}

}  // namespace detail

/// Levenberg-Marquardt over the free parameters of the chosen mode,
/// initialized at phi = 0, with a forward-difference Jacobian. Damping
/// grows tenfold on a rejected step and shrinks tenfold on an accepted one;
/// every attempted step counts toward the iteration cap.
inline EstimationResult solveLevenbergMarquardt(
    std::span<const MeasuredSample> samples, const EstimationMode& mode,
    const LmOptions& options = {}) {
  const detail::Stopwatch watch;
  if (samples.empty()) throw EmptyRecordingError();
  if (mode.kind != ModeKind::FullPip && !mode.known.has_value()) {
    throw MissingKnownParamsError();
  }
  const int k = freeParameterCount(mode.kind);
  const PhiVector knownPhi =
      mode.known ? toPhi(*mode.known) : PhiVector::Zero();

  const auto costAt = [&](const Eigen::VectorXd& x) {
    const PhiVector phi = detail::assemblePhi(mode.kind, knownPhi, x);
    double cost = 0.0;
    for (const auto& s : samples) {
      cost += detail::residualAt(phi, s).squaredNorm();
    }
    return cost;
  };

  // One pass over the samples accumulates J^T J, J^T r, and the cost; the
  // Jacobian block of each sample is formed column-wise by forward
  // differences.
  struct NormalEquations {
    Eigen::MatrixXd hessian;
    Eigen::VectorXd gradient;
    double cost = 0.0;
  };
  const auto normalEquations = [&](const Eigen::VectorXd& x) {
    NormalEquations eq{Eigen::MatrixXd::Zero(k, k), Eigen::VectorXd::Zero(k),
                       0.0};
    Eigen::VectorXd step(k);
    std::vector<PhiVector> perturbed(static_cast<std::size_t>(k));
    const PhiVector phi = detail::assemblePhi(mode.kind, knownPhi, x);
    for (int j = 0; j < k; ++j) {
      step(j) = std::max(options.jacobianStepRelative * std::abs(x(j)),
                         options.jacobianStepAbsolute);
      Eigen::VectorXd xj = x;
      xj(j) += step(j);
      perturbed[static_cast<std::size_t>(j)] =
          detail::assemblePhi(mode.kind, knownPhi, xj);
    }
    Eigen::Matrix<double, 6, Eigen::Dynamic> block(6, k);
    for (const auto& s : samples) {
      const Eigen::Matrix<double, 6, 1> r0 = detail::residualAt(phi, s);
      for (int j = 0; j < k; ++j) {
        block.col(j) =
            (detail::residualAt(perturbed[static_cast<std::size_t>(j)], s) -
             r0) /
            step(j);
      }
      eq.hessian.noalias() += block.transpose() * block;
      eq.gradient.noalias() += block.transpose() * r0;
      eq.cost += r0.squaredNorm();
    }
    return eq;
  };

  Eigen::VectorXd x = Eigen::VectorXd::Zero(k);
  double damping = options.initialDamping;
  double cost = costAt(x);
  int iterations = 0;
  bool reachedMax = false;
  bool converged = cost == 0.0;

  while (!converged && !reachedMax) {
    const NormalEquations eq = normalEquations(x);
    if (eq.hessian.isZero(0.0)) throw DegenerateSystemError();

    bool accepted = false;
    while (!accepted) {
      if (iterations >= options.maxIterations) {
        reachedMax = true;
        break;
      }
      ++iterations;
      Eigen::MatrixXd damped = eq.hessian;
      damped.diagonal().array() += damping;
      const Eigen::VectorXd delta = damped.ldlt().solve(-eq.gradient);
      const double candidateCost = costAt(x + delta);
      if (candidateCost < cost) {
        const double costDrop =
            (cost - candidateCost) / std::max(cost, 1e-300);
        const double relStep = delta.norm() / std::max(x.norm(), 1e-300);
        x += delta;
        cost = candidateCost;
        damping /= 10.0;
        accepted = true;
        converged = relStep < options.relativeStepTolerance ||
                    costDrop < options.relativeCostTolerance || cost == 0.0;
      } else {
        damping *= 10.0;
      }
    }
  }

  EstimationResult result;
  result.method = Method::LevenbergMarquardt;
  result.iterations = iterations;
  result.reachedMaxIterations = reachedMax;
  result.residualNorm = std::sqrt(cost);
  result.phi = detail::assemblePhi(mode.kind, knownPhi, x);
  result.params = detail::paramsFromSolution(mode.kind, mode.known, result.phi);
  result.rowsUsed = 6 * samples.size();
  detail::attachSystemDiagnostics(
      maskSystem(buildSystem(samples), mode).matrix, result);
  result.runtime = watch.elapsed();
  return result;
}

/// Regular evaluation grid centered on the known parameters.
struct GridSpec {
  double halfWidthFraction = 0.2;
  int massPoints = 101;    // MassOnly
  int pointsPerAxis = 11;  // MassCom, per dimension
};

/// Exhaustive search of the forward-model cost over a regular grid around
/// the known parameters. Supported for MassOnly and MassCom; the full
/// parameter set is rejected as computationally infeasible.
inline EstimationResult solveBruteForce(std::span<const MeasuredSample> samples,
                                        const EstimationMode& mode,
                                        const GridSpec& grid = {}) {
  const detail::Stopwatch watch;
  if (mode.kind == ModeKind::FullPip) {
    throw UnsupportedModeError(
        "brute force over the full parameter set is not supported");
  }
  if (samples.empty()) throw EmptyRecordingError();
  if (!mode.known.has_value()) throw MissingKnownParamsError();

  const InertialParams center = *mode.known;
  const auto axisValue = [&](double base, int index, int points) {
    if (points <= 1) return base;
    const double lo = base * (1.0 - grid.halfWidthFraction);
    const double hi = base * (1.0 + grid.halfWidthFraction);
    return lo + (hi - lo) * static_cast<double>(index) /
                    static_cast<double>(points - 1);
  };

  std::vector<InertialParams> candidates;
  if (mode.kind == ModeKind::MassOnly) {
    candidates.reserve(static_cast<std::size_t>(grid.massPoints));
    for (int i = 0; i < grid.massPoints; ++i) {
      InertialParams p = center;
      p.mass = axisValue(center.mass, i, grid.massPoints);
      candidates.push_back(p);
    }
  } else {
    const int p = grid.pointsPerAxis;
    candidates.reserve(static_cast<std::size_t>(p) * p * p * p);
    for (int im = 0; im < p; ++im) {
      for (int ix = 0; ix < p; ++ix) {
        for (int iy = 0; iy < p; ++iy) {
          for (int iz = 0; iz < p; ++iz) {
            InertialParams c = center;
            c.mass = axisValue(center.mass, im, p);
            c.com = Vec3(axisValue(center.com.x(), ix, p),
                         axisValue(center.com.y(), iy, p),
                         axisValue(center.com.z(), iz, p));
            candidates.push_back(c);
          }
        }
      }
    }
  }

  std::vector<double> costs(candidates.size());
  parallelFor(candidates.size(), [&](std::size_t i) {
    double cost = 0.0;
    for (const auto& s : samples) {
      const Wrench w = newtonEulerWrench(candidates[i], s.kin);
      cost += (w.force - s.wrench.force).squaredNorm() +
              (w.torque - s.wrench.torque).squaredNorm();
    }
    costs[i] = cost;
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < costs.size(); ++i) {
    if (costs[i] < costs[best]) best = i;
  }

  EstimationResult result;
  result.method = Method::BruteForce;
  result.iterations = static_cast<int>(candidates.size());
  result.params = candidates[best];
  result.phi = toPhi(result.params);
  result.residualNorm = std::sqrt(costs[best]);
  result.rowsUsed = 6 * samples.size();
  detail::attachSystemDiagnostics(
      maskSystem(buildSystem(samples), mode).matrix, result);
  result.runtime = watch.elapsed();
  return result;
}

}  // namespace pipest::estimators
