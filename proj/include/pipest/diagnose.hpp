#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "pipest/dynamics.hpp"
#include "pipest/estimators.hpp"
#include "pipest/types.hpp"

namespace pipest::diagnose {

using estimators::EstimationResult;
using estimators::Method;
using estimators::ModeKind;

struct MissingTruthError : ConfigError {
  MissingTruthError()
      : ConfigError("comparison requires the ground-truth parameters") {}
};

/// Relative error |est - gt| / |gt| of a scalar group.
inline double relativeError(double estimate, double truth) {
  if (truth == 0.0) throw ZeroGroundTruthError();
  return std::abs(estimate - truth) / std::abs(truth);
}

/// Relative error in the Euclidean norm of a vector group.
inline double relativeError(const Vec3& estimate, const Vec3& truth) {
  const double norm = truth.norm();
  if (norm == 0.0) throw ZeroGroundTruthError();
  return (estimate - truth).norm() / norm;
}

/// Relative error in the Frobenius norm of a matrix group.
inline double relativeError(const SymmetricMatrix3& estimate,
                            const SymmetricMatrix3& truth) {
  const double norm = truth.frobeniusNorm();
  if (norm == 0.0) throw ZeroGroundTruthError();
  return (estimate.matrix() - truth.matrix()).norm() / norm;
}

/// Per-group relative errors of one estimate. A group is absent when it was
/// not estimated in the given mode or when its ground truth has zero norm
/// (the error is undefined there, not zero).
struct ErrorReport {
  std::optional<double> mass;
  std::optional<double> com;
  std::optional<double> inertia;
  bool rankDeficient = false;
  bool nonPhysical = false;
};

inline ErrorReport computeErrors(const EstimationResult& result, ModeKind mode,
                                 const InertialParams& truth) {
  ErrorReport report;
  report.rankDeficient = result.rankDeficient;
  report.nonPhysical = !physicalConsistency(result.params).allPass();

  const auto guarded = [](auto&& compute) -> std::optional<double> {
    try {
      return compute();
    } catch (const ZeroGroundTruthError&) {
      return std::nullopt;
    }
  };
  report.mass =
      guarded([&] { return relativeError(result.params.mass, truth.mass); });
  if (mode == ModeKind::MassCom || mode == ModeKind::FullPip) {
    report.com =
        guarded([&] { return relativeError(result.params.com, truth.com); });
  }
  if (mode == ModeKind::FullPip) {
    report.inertia = guarded(
        [&] { return relativeError(result.params.inertia, truth.inertia); });
  }
  return report;
}

/// Identifiability summary of a stacked regressor system.
struct ExcitationDiagnostics {
  double conditionNumber = 0.0;
  int numericalRank = 0;
  double massColumnCond = 0.0;
  double massComCond = 0.0;
  /// Condition of the inertia columns restricted to the torque rows: the
  /// only rows that carry inertia information.
  double inertiaTorqueCond = 0.0;
  bool inertiaUnidentifiable = false;
  double maxAngVel = 0.0;
  double maxAngAcc = 0.0;
};

namespace detail {

inline double condOf(const Eigen::MatrixXd& m) {
  const Eigen::VectorXd sigma = Eigen::BDCSVD<Eigen::MatrixXd>(m).singularValues();
  const double smallest = sigma(sigma.size() - 1);
  if (smallest <= 0.0) return std::numeric_limits<double>::infinity();
  return sigma(0) / smallest;
}

}  // namespace detail

/// Condition numbers, numerical rank, per-group sub-conditioning, and (when
/// kinematics are supplied) the angular excitation extremes.
inline ExcitationDiagnostics excitationDiagnostics(
    const RegressorSystem& sys, std::span<const KinematicSample> kins = {}) {
  ExcitationDiagnostics out;

  const Eigen::VectorXd sigma =
      Eigen::BDCSVD<Eigen::MatrixXd>(sys.matrix).singularValues();
  out.conditionNumber = sigma(sigma.size() - 1) > 0.0
                            ? sigma(0) / sigma(sigma.size() - 1)
                            : std::numeric_limits<double>::infinity();
  const double threshold = estimators::detail::rankThreshold(
      sigma(0), sys.matrix.rows(), sys.matrix.cols());
  out.numericalRank = static_cast<int>(
      (sigma.array() > threshold).count());

  out.massColumnCond = detail::condOf(sys.matrix.leftCols(1));
  out.massComCond = detail::condOf(sys.matrix.leftCols(4));

  // torque rows are the second half of each 6-row sample block
  Eigen::MatrixXd inertiaTorque(
      static_cast<Eigen::Index>(3 * sys.sampleCount), 6);
  for (std::size_t i = 0; i < sys.sampleCount; ++i) {
    inertiaTorque.middleRows(static_cast<Eigen::Index>(3 * i), 3) =
        sys.matrix.block(static_cast<Eigen::Index>(6 * i + 3), 4, 3, 6);
  }
  const Eigen::VectorXd subSigma =
      Eigen::BDCSVD<Eigen::MatrixXd>(inertiaTorque).singularValues();
  const double subMax = subSigma(0);
  const double subMin = subSigma(subSigma.size() - 1);
  out.inertiaTorqueCond =
      subMin > 0.0 ? subMax / subMin : std::numeric_limits<double>::infinity();
  out.inertiaUnidentifiable = subMax == 0.0 || subMin < 1e-8 * subMax;

  for (const auto& kin : kins) {
    out.maxAngVel = std::max(out.maxAngVel, kin.angVel.norm());
    out.maxAngAcc = std::max(out.maxAngAcc, kin.angAcc.norm());
  }
  return out;
}

enum class DataKind { Validation, Measured };

/// One estimate with the labels that identify its table row.
struct LabeledResult {
  Method method = Method::LeastSquares;
  ModeKind mode = ModeKind::FullPip;
  DataKind dataKind = DataKind::Validation;
  EstimationResult result;
};

struct ComparisonRow {
  Method method = Method::LeastSquares;
  ModeKind mode = ModeKind::FullPip;
  DataKind dataKind = DataKind::Validation;
  ErrorReport errors;
  double runtimeMs = 0.0;
  double conditionNumber = 0.0;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
};

/// Assembles the method-comparison table with deterministic row ordering
/// (method, then mode, then data kind).
inline ComparisonTable buildComparison(
    std::span<const LabeledResult> results,
    const std::optional<InertialParams>& truth) {
  ComparisonTable table;
  if (results.empty()) return table;
  if (!truth.has_value()) throw MissingTruthError();

  for (const auto& labeled : results) {
    ComparisonRow row;
    row.method = labeled.method;
    row.mode = labeled.mode;
    row.dataKind = labeled.dataKind;
    row.errors = computeErrors(labeled.result, labeled.mode, *truth);
    row.runtimeMs = labeled.result.runtime.count() * 1e3;
    row.conditionNumber = labeled.result.conditionNumber;
    table.rows.push_back(row);
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const ComparisonRow& a, const ComparisonRow& b) {
                     if (a.method != b.method) return a.method < b.method;
                     if (a.mode != b.mode) return a.mode < b.mode;
                     return a.dataKind < b.dataKind;
                   });
  return table;
}

}  // namespace pipest::diagnose
