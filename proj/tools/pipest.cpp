// pipest: payload inertial parameter estimation from pose + force/torque
// recordings. Subcommands: simulate, estimate, validate, diagnose, compare.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pipest/diagnose.hpp"
#include "pipest/dynamics.hpp"
#include "pipest/estimators.hpp"
#include "pipest/io.hpp"
#include "pipest/signal.hpp"
#include "pipest/synth.hpp"

namespace {

using namespace pipest;
using estimators::EstimationMode;
using estimators::EstimationResult;
using estimators::Method;
using estimators::ModeKind;

constexpr int kExitConfig = 2;
constexpr int kExitWorkspace = 3;
constexpr int kExitIngestion = 4;
constexpr int kExitSolver = 5;

struct PipelineOptions {
  int sgOrder = 3;
  int sgWindow = 11;
  double trim = 0.1;
};

struct TlsFlags {
  std::string svd = "fast";
  int stride = 0;  // 0: pick the mode default (fast 10, exact 1)

  estimators::TlsOptions resolve() const {
    if (svd != "fast" && svd != "exact") {
      throw ConfigError("--tls-svd must be fast or exact, got '" + svd + "'");
    }
    estimators::TlsOptions options;
    options.svd = svd == "exact" ? estimators::SvdMode::Exact
                                 : estimators::SvdMode::Fast;
    options.stride = stride > 0
                         ? stride
                         : (options.svd == estimators::SvdMode::Fast ? 10 : 1);
    return options;
  }
};

std::vector<MeasuredSample> preprocess(const signal::Recording& rec,
                                       const PipelineOptions& opts) {
  const auto kins = signal::differentiateKinematics(
      rec, signal::SavGolSpec{opts.sgOrder, opts.sgWindow});
  std::vector<MeasuredSample> samples(kins.size());
  for (std::size_t i = 0; i < kins.size(); ++i) {
    samples[i].kin = kins[i];
    samples[i].wrench = Wrench{rec.samples[i].force, rec.samples[i].torque};
  }
  return signal::trimEnds(samples, opts.trim);
}

EstimationResult runEstimator(Method method,
                              std::span<const MeasuredSample> samples,
                              const EstimationMode& mode,
                              const estimators::TlsOptions& tls,
                              const estimators::GridSpec& grid) {
  switch (method) {
    case Method::LeastSquares:
      return estimators::solveLeastSquares(
          estimators::maskSystem(buildSystem(samples), mode));
    case Method::TotalLeastSquares:
      return estimators::solveTotalLeastSquares(
          estimators::maskSystem(buildSystem(samples), mode), tls);
    case Method::LevenbergMarquardt:
      return estimators::solveLevenbergMarquardt(samples, mode);
    case Method::BruteForce:
      return estimators::solveBruteForce(samples, mode, grid);
  }
  throw ConfigError("unknown method");
}

InertialParams defaultTruth(synth::ScenarioKind kind) {
  return kind == synth::ScenarioKind::Predefined
             ? synth::predefinedClassPayload()
             : synth::gripperClassPayload();
}

io::Report assembleReport(Method method, ModeKind modeKind,
                          const std::string& dataKind,
                          const EstimationResult& result,
                          const std::optional<InertialParams>& truth,
                          bool inertiaUnidentifiable,
                          const std::string& inputDigest) {
  io::Report report;
  report.method = io::methodName(method);
  report.mode = io::modeName(modeKind);
  report.dataKind = dataKind;
  report.params = result.params;
  report.nonPhysical = !physicalConsistency(result.params).allPass();
  if (truth.has_value()) {
    const auto errors = diagnose::computeErrors(result, modeKind, *truth);
    report.errMass = errors.mass;
    report.errCom = errors.com;
    report.errInertia = errors.inertia;
  }
  report.conditionNumber = result.conditionNumber;
  report.rankDeficient = result.rankDeficient;
  report.inertiaUnidentifiable = inertiaUnidentifiable;
  report.residualNorm = result.residualNorm;
  report.iterations = result.iterations;
  report.rowsUsed = result.rowsUsed;
  report.runtimeMs = result.runtime.count() * 1e3;
  report.inputDigest = inputDigest;
  return report;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string kind = "predefined";
  std::uint64_t seed = 0;
  double duration = 0.0;  // 0: scenario default
  double rate = 0.0;      // 0: scenario default
  std::string gtPath;
  std::string outPath;
  std::string truthOutPath;
  double noiseSigmaF = 0.0;
  double noiseSigmaTau = 0.0;
  double noiseQuant = 0.0;
  double workspace = 0.0;  // 0: scenario default
  bool cleanWrench = false;
};

int cmdSimulate(const SimulateArgs& args) {
  const synth::ScenarioKind kind = io::scenarioKindFromName(args.kind);
  const InertialParams truth = args.gtPath.empty()
                                   ? defaultTruth(kind)
                                   : io::readParamsJson(args.gtPath);

  auto scenario = synth::makeScenario(kind, truth, args.seed);
  if (args.duration > 0.0) scenario.spec.duration = args.duration;
  if (args.rate > 0.0) scenario.spec.rate = args.rate;
  if (args.workspace > 0.0) {
    scenario.spec.workspaceHalfExtents = Vec3::Constant(args.workspace);
  }
  scenario.noise.sigmaForce = args.noiseSigmaF;
  scenario.noise.sigmaTorque = args.noiseSigmaTau;
  scenario.noise.quantStep = args.noiseQuant;

  auto data = synth::generateTrajectory(scenario.spec);
  const auto wrenches = synth::synthesizeWrenches(data.kinematics, truth);
  for (std::size_t i = 0; i < wrenches.size(); ++i) {
    data.recording.samples[i].force = wrenches[i].force;
    data.recording.samples[i].torque = wrenches[i].torque;
  }

  signal::NoiseSpec noise = scenario.noise;
  if (args.cleanWrench) {
    noise.sigmaForce = 0.0;  // validation-data mode: model wrenches stay exact
    noise.sigmaTorque = 0.0;
  }
  const signal::Recording out =
      signal::injectNoise(data.recording, noise, args.seed);

  io::writeRecordingCsv(args.outPath, out);
  if (!args.truthOutPath.empty()) {
    io::writeParamsJson(args.truthOutPath, truth);
  }
  std::printf("wrote %s: %s, %zu samples @ %g Hz, seed %llu\n",
              args.outPath.c_str(), args.kind.c_str(), out.samples.size(),
              scenario.spec.rate,
              static_cast<unsigned long long>(args.seed));
  return 0;
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

struct EstimateArgs {
  std::string inPath;
  std::string method = "ls";
  std::string mode = "full";
  std::string gtPath;
  std::string outPath;
  std::string dataKind = "measured";
  PipelineOptions pipeline;
  TlsFlags tls;
  double bruteHalfWidth = 0.2;
  int bruteMassPoints = 101;
  int brutePointsPerAxis = 11;
};

int cmdEstimate(const EstimateArgs& args) {
  const Method method = io::methodFromName(args.method);
  const ModeKind modeKind = io::modeFromName(args.mode);
  io::dataKindFromName(args.dataKind);  // validate the label

  std::optional<InertialParams> truth;
  if (!args.gtPath.empty()) truth = io::readParamsJson(args.gtPath);
  if (modeKind != ModeKind::FullPip && !truth.has_value()) {
    throw ConfigError("--gt is required for mode '" + args.mode + "'");
  }

  const std::string bytes = io::readFileBytes(args.inPath);
  const signal::Recording rec = io::decodeRecordingCsv(bytes);
  const auto samples = preprocess(rec, args.pipeline);

  EstimationMode mode;
  mode.kind = modeKind;
  mode.known = truth;

  const auto diag = diagnose::excitationDiagnostics(buildSystem(samples));
  const EstimationResult result = runEstimator(
      method, samples, mode, args.tls.resolve(),
      estimators::GridSpec{args.bruteHalfWidth, args.bruteMassPoints,
                           args.brutePointsPerAxis});

  const io::Report report = assembleReport(
      method, modeKind, args.dataKind, result, truth,
      diag.inertiaUnidentifiable, io::digestString(bytes));
  if (!args.outPath.empty()) io::writeReportJson(args.outPath, report);

  std::printf(
      "%s %s on %zu samples: m=%.6g kg |r|=%.3g cond=%.3g rank_deficient=%d "
      "(%.1f ms)\n",
      args.method.c_str(), args.mode.c_str(), samples.size(),
      result.params.mass, result.residualNorm, result.conditionNumber,
      result.rankDeficient ? 1 : 0, report.runtimeMs);
  return 0;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

struct ValidateArgs {
  std::string inPath;
  std::string gtPath;
  std::string outPath;
  int sgOrder = 3;
  int sgWindow = 11;
};

int cmdValidate(const ValidateArgs& args) {
  const InertialParams truth = io::readParamsJson(args.gtPath);
  signal::Recording rec = io::readRecordingCsv(args.inPath);
  const auto kins = signal::differentiateKinematics(
      rec, signal::SavGolSpec{args.sgOrder, args.sgWindow});
  for (std::size_t i = 0; i < rec.samples.size(); ++i) {
    const Wrench w = newtonEulerWrench(truth, kins[i]);
    rec.samples[i].force = w.force;
    rec.samples[i].torque = w.torque;
  }
  io::writeRecordingCsv(args.outPath, rec);
  std::printf("wrote %s: wrench columns replaced by model predictions "
              "(%zu samples)\n",
              args.outPath.c_str(), rec.samples.size());
  return 0;
}

// ---------------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------------

struct DiagnoseArgs {
  std::string inPath;
  std::string outPath;
  bool json = false;
  PipelineOptions pipeline;
};

int cmdDiagnose(const DiagnoseArgs& args) {
  const signal::Recording rec = io::readRecordingCsv(args.inPath);
  const auto samples = preprocess(rec, args.pipeline);
  std::vector<KinematicSample> kins(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) kins[i] = samples[i].kin;

  const auto diag =
      diagnose::excitationDiagnostics(buildSystem(samples), kins);

  const nlohmann::json j{
      {"samples", samples.size()},
      {"conditionNumber", io::detail::finiteOrNull(diag.conditionNumber)},
      {"numericalRank", diag.numericalRank},
      {"massColumnCond", io::detail::finiteOrNull(diag.massColumnCond)},
      {"massComCond", io::detail::finiteOrNull(diag.massComCond)},
      {"inertiaTorqueCond", io::detail::finiteOrNull(diag.inertiaTorqueCond)},
      {"inertiaUnidentifiable", diag.inertiaUnidentifiable},
      {"maxAngVel", diag.maxAngVel},
      {"maxAngAcc", diag.maxAngAcc}};

  if (!args.outPath.empty()) {
    io::atomicWriteFile(args.outPath, j.dump(2) + "\n");
  }
  if (args.json) {
    std::printf("%s\n", j.dump(2).c_str());
  } else {
    std::printf("samples                 %zu\n", samples.size());
    std::printf("condition number        %.6g\n", diag.conditionNumber);
    std::printf("numerical rank          %d\n", diag.numericalRank);
    std::printf("mass column cond        %.6g\n", diag.massColumnCond);
    std::printf("mass+com cond           %.6g\n", diag.massComCond);
    std::printf("inertia (torque) cond   %.6g\n", diag.inertiaTorqueCond);
    std::printf("inertia identifiable    %s\n",
                diag.inertiaUnidentifiable ? "no" : "yes");
    std::printf("max |ang vel|           %.6g rad/s\n", diag.maxAngVel);
    std::printf("max |ang acc|           %.6g rad/s^2\n", diag.maxAngAcc);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CompareArgs {
  std::vector<std::string> reportPaths;
  std::string sweepKind;
  std::string methods = "ls,lm";
  std::string mode = "full";
  std::uint64_t seed = 0;
  double duration = 0.0;
  double rate = 0.0;
  double noiseSigmaF = 0.1;
  double noiseSigmaTau = 0.01;
  std::string gtPath;
  std::string outPath;
  std::string plotPath;
  PipelineOptions pipeline;
  TlsFlags tls;
};

std::vector<std::string> splitList(const std::string& csv) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(csv.substr(start));
      break;
    }
    out.push_back(csv.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

diagnose::ComparisonTable sweepComparison(const CompareArgs& args) {
  const synth::ScenarioKind kind = io::scenarioKindFromName(args.sweepKind);
  const InertialParams truth = args.gtPath.empty()
                                   ? defaultTruth(kind)
                                   : io::readParamsJson(args.gtPath);
  const ModeKind modeKind = io::modeFromName(args.mode);

  auto scenario = synth::makeScenario(kind, truth, args.seed);
  if (args.duration > 0.0) scenario.spec.duration = args.duration;
  if (args.rate > 0.0) scenario.spec.rate = args.rate;

  auto data = synth::generateTrajectory(scenario.spec);
  const auto wrenches = synth::synthesizeWrenches(data.kinematics, truth);
  for (std::size_t i = 0; i < wrenches.size(); ++i) {
    data.recording.samples[i].force = wrenches[i].force;
    data.recording.samples[i].torque = wrenches[i].torque;
  }
  signal::NoiseSpec noise;
  noise.sigmaForce = args.noiseSigmaF;
  noise.sigmaTorque = args.noiseSigmaTau;
  const signal::Recording noisy =
      signal::injectNoise(data.recording, noise, args.seed);

  EstimationMode mode;
  mode.kind = modeKind;
  if (modeKind != ModeKind::FullPip) mode.known = truth;

  std::vector<diagnose::LabeledResult> results;
  for (const auto& name : splitList(args.methods)) {
    const Method method = io::methodFromName(name);
    for (const auto dataKind :
         {diagnose::DataKind::Validation, diagnose::DataKind::Measured}) {
      const auto& rec =
          dataKind == diagnose::DataKind::Validation ? data.recording : noisy;
      const auto samples = preprocess(rec, args.pipeline);
      diagnose::LabeledResult labeled;
      labeled.method = method;
      labeled.mode = modeKind;
      labeled.dataKind = dataKind;
      labeled.result = runEstimator(method, samples, mode, args.tls.resolve(),
                                    estimators::GridSpec{});
      results.push_back(std::move(labeled));
    }
  }
  return diagnose::buildComparison(results, truth);
}

diagnose::ComparisonTable reportComparison(const CompareArgs& args) {
  diagnose::ComparisonTable table;
  for (const auto& path : args.reportPaths) {
    const io::Report report = io::readReportJson(path);
    diagnose::ComparisonRow row;
    row.method = io::methodFromName(report.method);
    row.mode = io::modeFromName(report.mode);
    row.dataKind = io::dataKindFromName(report.dataKind);
    row.errors.mass = report.errMass;
    row.errors.com = report.errCom;
    row.errors.inertia = report.errInertia;
    row.errors.rankDeficient = report.rankDeficient;
    row.errors.nonPhysical = report.nonPhysical;
    row.runtimeMs = report.runtimeMs;
    row.conditionNumber = report.conditionNumber;
    table.rows.push_back(row);
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const diagnose::ComparisonRow& a,
                      const diagnose::ComparisonRow& b) {
                     if (a.method != b.method) return a.method < b.method;
                     if (a.mode != b.mode) return a.mode < b.mode;
                     return a.dataKind < b.dataKind;
                   });
  return table;
}

int cmdCompare(const CompareArgs& args) {
  if (!args.sweepKind.empty() && !args.reportPaths.empty()) {
    throw ConfigError("pass report files or --sweep, not both");
  }
  const diagnose::ComparisonTable table = args.sweepKind.empty()
                                              ? reportComparison(args)
                                              : sweepComparison(args);
  std::printf("%s", io::comparisonToText(table).c_str());
  if (!args.outPath.empty()) {
    io::atomicWriteFile(args.outPath,
                        io::comparisonToJson(table).dump(2) + "\n");
  }
  if (!args.plotPath.empty()) {
    io::atomicWriteFile(args.plotPath, io::comparisonToPlotCsv(table));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"payload inertial parameter estimation from pose and "
               "force/torque recordings"};
  app.require_subcommand(1);

  SimulateArgs simulateArgs;
  auto* simulate = app.add_subcommand(
      "simulate", "generate a synthetic recording with known parameters");
  simulate->add_option("--kind", simulateArgs.kind,
                       "scenario: predefined, pick-place, free");
  simulate->add_option("--seed", simulateArgs.seed, "scenario + noise seed");
  simulate->add_option("--duration", simulateArgs.duration, "override [s]");
  simulate->add_option("--rate", simulateArgs.rate, "override [Hz]");
  simulate->add_option("--gt", simulateArgs.gtPath,
                       "ground-truth params JSON (default: built-in payload)");
  simulate->add_option("--out", simulateArgs.outPath, "output recording CSV")
      ->required();
  simulate->add_option("--truth-out", simulateArgs.truthOutPath,
                       "write the ground truth params JSON here");
  simulate->add_option("--noise-sigma-f", simulateArgs.noiseSigmaF,
                       "force noise sigma [N]");
  simulate->add_option("--noise-sigma-tau", simulateArgs.noiseSigmaTau,
                       "torque noise sigma [N m]");
  simulate->add_option("--noise-quant", simulateArgs.noiseQuant,
                       "pose quantization step");
  simulate->add_option("--workspace", simulateArgs.workspace,
                       "workspace box half extent [m]");
  simulate->add_flag("--clean-wrench", simulateArgs.cleanWrench,
                     "keep wrench columns noise-free (validation data)");

  EstimateArgs estimateArgs;
  auto* estimate = app.add_subcommand(
      "estimate", "estimate payload parameters from a recording");
  estimate->add_option("--in", estimateArgs.inPath, "input recording CSV")
      ->required();
  estimate->add_option("--method", estimateArgs.method,
                       "ls, tls, lm, or brute");
  estimate->add_option("--mode", estimateArgs.mode, "mass, mass-com, or full");
  estimate->add_option("--gt", estimateArgs.gtPath,
                       "known params JSON (required unless mode=full)");
  estimate->add_option("--out", estimateArgs.outPath, "output report JSON");
  estimate->add_option("--data-kind", estimateArgs.dataKind,
                       "report label: validation or measured");
  estimate->add_option("--trim", estimateArgs.pipeline.trim,
                       "fraction discarded at each end");
  estimate->add_option("--sg-order", estimateArgs.pipeline.sgOrder,
                       "smoothing polynomial order");
  estimate->add_option("--sg-window", estimateArgs.pipeline.sgWindow,
                       "smoothing window (odd)");
  estimate->add_option("--tls-svd", estimateArgs.tls.svd, "fast or exact");
  estimate->add_option("--tls-stride", estimateArgs.tls.stride,
                       "keep every n-th sample (0: mode default)");
  estimate->add_option("--brute-half-width", estimateArgs.bruteHalfWidth,
                       "grid half width as a fraction of the center");
  estimate->add_option("--brute-mass-points", estimateArgs.bruteMassPoints,
                       "grid points for mass-only search");
  estimate->add_option("--brute-axis-points", estimateArgs.brutePointsPerAxis,
                       "grid points per axis for mass-com search");

  ValidateArgs validateArgs;
  auto* validate = app.add_subcommand(
      "validate",
      "replace wrench columns with model predictions from the recording's "
      "own kinematics");
  validate->add_option("--in", validateArgs.inPath, "input recording CSV")
      ->required();
  validate->add_option("--gt", validateArgs.gtPath, "params JSON")->required();
  validate->add_option("--out", validateArgs.outPath, "output recording CSV")
      ->required();
  validate->add_option("--sg-order", validateArgs.sgOrder,
                       "smoothing polynomial order");
  validate->add_option("--sg-window", validateArgs.sgWindow,
                       "smoothing window (odd)");

  DiagnoseArgs diagnoseArgs;
  auto* diagnoseCmd = app.add_subcommand(
      "diagnose", "excitation and identifiability diagnostics");
  diagnoseCmd->add_option("--in", diagnoseArgs.inPath, "input recording CSV")
      ->required();
  diagnoseCmd->add_option("--out", diagnoseArgs.outPath,
                          "write diagnostics JSON here");
  diagnoseCmd->add_flag("--json", diagnoseArgs.json,
                        "print JSON instead of the text block");
  diagnoseCmd->add_option("--trim", diagnoseArgs.pipeline.trim,
                          "fraction discarded at each end");
  diagnoseCmd->add_option("--sg-order", diagnoseArgs.pipeline.sgOrder,
                          "smoothing polynomial order");
  diagnoseCmd->add_option("--sg-window", diagnoseArgs.pipeline.sgWindow,
                          "smoothing window (odd)");

  CompareArgs compareArgs;
  auto* compare = app.add_subcommand(
      "compare", "merge reports or sweep methods into a comparison table");
  compare->add_option("reports", compareArgs.reportPaths,
                      "report JSON files to merge");
  compare->add_option("--sweep", compareArgs.sweepKind,
                      "run a fresh sweep on this scenario kind instead");
  compare->add_option("--methods", compareArgs.methods,
                      "comma-separated method list for the sweep");
  compare->add_option("--mode", compareArgs.mode, "estimation mode");
  compare->add_option("--seed", compareArgs.seed, "sweep seed");
  compare->add_option("--duration", compareArgs.duration, "override [s]");
  compare->add_option("--rate", compareArgs.rate, "override [Hz]");
  compare->add_option("--noise-sigma-f", compareArgs.noiseSigmaF,
                      "wrench noise sigma for the measured rows [N]");
  compare->add_option("--noise-sigma-tau", compareArgs.noiseSigmaTau,
                      "torque noise sigma for the measured rows [N m]");
  compare->add_option("--gt", compareArgs.gtPath, "sweep ground truth JSON");
  compare->add_option("--out", compareArgs.outPath, "output table JSON");
  compare->add_option("--emit-plot-data", compareArgs.plotPath,
                      "write per-group error CSV for plotting");
  compare->add_option("--trim", compareArgs.pipeline.trim,
                      "fraction discarded at each end");
  compare->add_option("--sg-order", compareArgs.pipeline.sgOrder,
                      "smoothing polynomial order");
  compare->add_option("--sg-window", compareArgs.pipeline.sgWindow,
                      "smoothing window (odd)");
  compare->add_option("--tls-svd", compareArgs.tls.svd, "fast or exact");
  compare->add_option("--tls-stride", compareArgs.tls.stride,
                      "keep every n-th sample (0: mode default)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (simulate->parsed()) return cmdSimulate(simulateArgs);
    if (estimate->parsed()) return cmdEstimate(estimateArgs);
    if (validate->parsed()) return cmdValidate(validateArgs);
    if (diagnoseCmd->parsed()) return cmdDiagnose(diagnoseArgs);
    if (compare->parsed()) return cmdCompare(compareArgs);
  } catch (const WorkspaceViolationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitWorkspace;
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const IngestionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIngestion;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
