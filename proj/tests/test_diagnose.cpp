#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "pipest/diagnose.hpp"
#include "pipest/estimators.hpp"
#include "pipest/synth.hpp"

using namespace pipest;
using namespace pipest::diagnose;
using estimators::EstimationMode;
using estimators::ModeKind;
using synth::ScenarioKind;

namespace {

std::vector<MeasuredSample> scenarioSamples(ScenarioKind kind,
                                            const InertialParams& truth,
                                            std::uint64_t seed,
                                            double duration) {
  auto scenario = synth::makeScenario(kind, truth, seed);
  scenario.spec.duration = duration;
  const auto data = synth::generateTrajectory(scenario.spec);
  const auto wrenches = synth::synthesizeWrenches(data.kinematics, truth);
  return synth::pairSamples(data.kinematics, wrenches);
}

RegressorSystem staticSystem(std::size_t n) {
  std::vector<MeasuredSample> samples(n);
  InertialParams truth;
  truth.mass = 0.5;
  truth.com = Vec3(0.01, 0.0, 0.05);
  for (std::size_t i = 0; i < n; ++i) {
    samples[i].kin.t = static_cast<double>(i) * 1e-3;
    samples[i].kin.gravity = Vec3(0.0, 0.0, -kGravity);
    samples[i].wrench = newtonEulerWrench(truth, samples[i].kin);
  }
  return buildSystem(samples);
}

}  // namespace

TEST_CASE("relative error of a perfect estimate is zero") {
  CHECK(relativeError(0.37, 0.37) == 0.0);
  const Vec3 c(0.1, -0.2, 0.3);
  CHECK(relativeError(c, c) == 0.0);
  const SymmetricMatrix3 inertia(1e-3, 1e-4, 0.0, 2e-3, -1e-4, 3e-3);
  CHECK(relativeError(inertia, inertia) == 0.0);
}

TEST_CASE("doubling the estimate gives a relative error of one") {
  CHECK(relativeError(0.74, 0.37) == 1.0);
  const Vec3 c(0.1, -0.2, 0.3);
  CHECK(relativeError(Vec3(2.0 * c), c) == 1.0);
}

TEST_CASE("mass error matches the measured-data magnitude class") {
  const double truth = 0.37;
  CHECK(std::abs(relativeError(1.0446 * truth, truth) - 0.0446) < 1e-12);
}

TEST_CASE("scalar relative error is scale aware") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 200; ++trial) {
    const double m = testutil::uniform(rng, 0.05, 3.0);
    const double s = testutil::uniform(rng, -2.0, 2.0);
    CHECK(std::abs(relativeError(s * m, m) - std::abs(s - 1.0)) < 1e-14);
  }
  CHECK(relativeError(2.0 * 0.3, 0.3) == 1.0);
  CHECK(relativeError(0.5 * 0.3, 0.3) == 0.5);
}

TEST_CASE("zero ground truth makes the error undefined") {
  CHECK_THROWS_AS(relativeError(1.0, 0.0), ZeroGroundTruthError);
  CHECK_THROWS_AS(relativeError(Vec3(1.0, 0.0, 0.0), Vec3::Zero()),
                  ZeroGroundTruthError);
  CHECK_THROWS_AS(relativeError(SymmetricMatrix3::diagonal(1, 1, 1),
                                SymmetricMatrix3::Zero()),
                  ZeroGroundTruthError);
}

TEST_CASE("vector and matrix errors are rotation invariant") {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 100; ++trial) {
    const Mat3 rot = Eigen::AngleAxisd(testutil::uniform(rng, -3.0, 3.0),
                                       testutil::randomUnit(rng))
                         .toRotationMatrix();
    const Vec3 est = testutil::randomVec(rng, 0.2);
    const Vec3 truth = testutil::randomVec(rng, 0.2) + Vec3(0.05, 0.0, 0.0);
    CHECK(std::abs(relativeError(Vec3(rot * est), Vec3(rot * truth)) -
                   relativeError(est, truth)) < 1e-12);

    const SymmetricMatrix3 ie = testutil::randomParams(rng).inertia;
    const SymmetricMatrix3 it = testutil::randomParams(rng).inertia;
    const auto rotated = [&](const SymmetricMatrix3& m) {
      return SymmetricMatrix3::fromMatrix(rot * m.matrix() * rot.transpose());
    };
    CHECK(std::abs(relativeError(rotated(ie), rotated(it)) -
                   relativeError(ie, it)) < 1e-12);
  }
}

TEST_CASE("static single-orientation data is flagged unidentifiable") {
  const RegressorSystem sys = staticSystem(40);
  const auto diag = excitationDiagnostics(sys);
  CHECK(diag.numericalRank < 10);
  CHECK(diag.inertiaUnidentifiable);
  CHECK(std::isinf(diag.conditionNumber));
}

TEST_CASE("the predefined scenario has full rank and finite conditioning") {
  const auto truth = synth::predefinedClassPayload();
  const auto samples = scenarioSamples(ScenarioKind::Predefined, truth, 3, 2.0);
  const RegressorSystem sys = buildSystem(samples);
  std::vector<KinematicSample> kins(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) kins[i] = samples[i].kin;

  const auto diag = excitationDiagnostics(sys, kins);
  CHECK(diag.numericalRank == 10);
  CHECK(std::isfinite(diag.conditionNumber));
  CHECK_FALSE(diag.inertiaUnidentifiable);
  CHECK(diag.maxAngVel > 0.5);
  CHECK(diag.maxAngAcc > 1.0);
}

TEST_CASE("weak angular excitation worsens the inertia conditioning") {
  const auto truth = synth::gripperClassPayload();
  const auto predefined = excitationDiagnostics(
      buildSystem(scenarioSamples(ScenarioKind::Predefined, truth, 5, 4.0)));
  const auto pickPlace = excitationDiagnostics(
      buildSystem(scenarioSamples(ScenarioKind::PickPlaceLike, truth, 5, 4.0)));
  CHECK(pickPlace.inertiaTorqueCond > predefined.inertiaTorqueCond);
}

TEST_CASE("condition number ignores row order and duplication") {
  const auto truth = synth::predefinedClassPayload();
  const auto samples =
      scenarioSamples(ScenarioKind::FreeMotionLike, truth, 7, 1.0);
  const RegressorSystem sys = buildSystem(samples);
  const double baseCond = excitationDiagnostics(sys).conditionNumber;

  // permute whole sample blocks
  RegressorSystem permuted = sys;
  std::vector<std::size_t> order(sys.sampleCount);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), std::mt19937_64(71));
  for (std::size_t i = 0; i < order.size(); ++i) {
    permuted.matrix.middleRows(static_cast<Eigen::Index>(6 * i), 6) =
        sys.matrix.middleRows(static_cast<Eigen::Index>(6 * order[i]), 6);
  }
  const double permutedCond = excitationDiagnostics(permuted).conditionNumber;
  CHECK(std::abs(permutedCond - baseCond) < 1e-10 * baseCond);

  // duplicate all rows
  RegressorSystem doubled;
  doubled.sampleCount = 2 * sys.sampleCount;
  doubled.matrix.resize(2 * sys.matrix.rows(), 10);
  doubled.matrix << sys.matrix, sys.matrix;
  doubled.rhs.resize(2 * sys.rhs.size());
  doubled.rhs << sys.rhs, sys.rhs;
  const double doubledCond = excitationDiagnostics(doubled).conditionNumber;
  CHECK(std::abs(doubledCond - baseCond) < 1e-10 * baseCond);
}

TEST_CASE("rank flag is consistent between diagnostics and least squares") {
  const RegressorSystem sys = staticSystem(40);
  const auto diag = excitationDiagnostics(sys);
  const auto result = estimators::solveLeastSquares(
      estimators::maskSystem(sys, EstimationMode::fullPip()));
  CHECK(diag.numericalRank < 10);
  CHECK(result.rankDeficient);
}

TEST_CASE("per-mode error reports omit non-estimated groups") {
  const auto truth = synth::predefinedClassPayload();
  const auto samples = scenarioSamples(ScenarioKind::Predefined, truth, 9, 1.0);
  const RegressorSystem sys = buildSystem(samples);

  const auto full = estimators::solveLeastSquares(
      estimators::maskSystem(sys, EstimationMode::fullPip()));
  const auto massOnly = estimators::solveLeastSquares(
      estimators::maskSystem(sys, EstimationMode::massOnly(truth)));

  const ErrorReport fullErrors = computeErrors(full, ModeKind::FullPip, truth);
  CHECK(fullErrors.mass.has_value());
  CHECK(fullErrors.com.has_value());
  CHECK(fullErrors.inertia.has_value());

  const ErrorReport massErrors =
      computeErrors(massOnly, ModeKind::MassOnly, truth);
  CHECK(massErrors.mass.has_value());
  CHECK_FALSE(massErrors.com.has_value());
  CHECK_FALSE(massErrors.inertia.has_value());
}

TEST_CASE("zero-norm truth groups are reported as undefined") {
  const auto truth = synth::predefinedClassPayload();
  InertialParams zeroComTruth = truth;
  zeroComTruth.com = Vec3::Zero();
  const auto samples = scenarioSamples(ScenarioKind::Predefined, truth, 11, 1.0);
  const auto result = estimators::solveLeastSquares(
      estimators::maskSystem(buildSystem(samples), EstimationMode::fullPip()));
  const ErrorReport errors =
      computeErrors(result, ModeKind::FullPip, zeroComTruth);
  CHECK(errors.mass.has_value());
  CHECK_FALSE(errors.com.has_value());
}

TEST_CASE("comparison table carries clean full-pip errors") {
  const auto truth = synth::predefinedClassPayload();
  const auto samples = scenarioSamples(ScenarioKind::Predefined, truth, 13, 2.0);
  LabeledResult labeled;
  labeled.method = Method::LeastSquares;
  labeled.mode = ModeKind::FullPip;
  labeled.dataKind = DataKind::Validation;
  labeled.result = estimators::solveLeastSquares(
      estimators::maskSystem(buildSystem(samples), EstimationMode::fullPip()));

  const std::vector<LabeledResult> results{labeled};
  const ComparisonTable table = buildComparison(results, truth);
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0].errors.mass.value() < 1e-8);
  CHECK(table.rows[0].errors.com.value() < 1e-8);
  CHECK(table.rows[0].errors.inertia.value() < 1e-8);
  CHECK(table.rows[0].runtimeMs > 0.0);
}

TEST_CASE("empty comparison input yields an empty table") {
  const ComparisonTable table =
      buildComparison(std::span<const LabeledResult>(), std::nullopt);
  CHECK(table.rows.empty());
}

TEST_CASE("comparison without truth is an error") {
  std::vector<LabeledResult> results(1);
  CHECK_THROWS_AS(buildComparison(results, std::nullopt), MissingTruthError);
}

TEST_CASE("comparison rows come out in deterministic order") {
  const auto truth = synth::predefinedClassPayload();
  const auto samples = scenarioSamples(ScenarioKind::Predefined, truth, 15, 1.0);
  const auto result = estimators::solveLeastSquares(
      estimators::maskSystem(buildSystem(samples), EstimationMode::fullPip()));

  std::vector<LabeledResult> results;
  for (const auto dataKind : {DataKind::Measured, DataKind::Validation}) {
    for (const auto method :
         {Method::LevenbergMarquardt, Method::LeastSquares}) {
      LabeledResult labeled;
      labeled.method = method;
      labeled.dataKind = dataKind;
      labeled.result = result;
      results.push_back(labeled);
    }
  }
  const ComparisonTable table = buildComparison(results, truth);
  REQUIRE(table.rows.size() == 4);
  CHECK(table.rows[0].method == Method::LeastSquares);
  CHECK(table.rows[0].dataKind == DataKind::Validation);
  CHECK(table.rows[1].method == Method::LeastSquares);
  CHECK(table.rows[1].dataKind == DataKind::Measured);
  CHECK(table.rows[2].method == Method::LevenbergMarquardt);
  CHECK(table.rows[3].method == Method::LevenbergMarquardt);
}

TEST_CASE("non-physical estimates are flagged in the report") {
  const auto truth = synth::predefinedClassPayload();
  estimators::EstimationResult result;
  result.params.mass = -0.2;
  result.params.com = truth.com;
  result.params.inertia = truth.inertia;
  const ErrorReport errors =
      computeErrors(result, ModeKind::FullPip, truth);
  CHECK(errors.nonPhysical);
}
