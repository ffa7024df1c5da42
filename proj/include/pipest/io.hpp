#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pipest/diagnose.hpp"
#include "pipest/estimators.hpp"
#include "pipest/signal.hpp"
#include "pipest/synth.hpp"
#include "pipest/types.hpp"

namespace pipest::io {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr std::string_view kRecordingHeader =
    "t,px,py,pz,qw,qx,qy,qz,fx,fy,fz,tx,ty,tz";
inline constexpr const char* kReportSchema = "pipest-report/1";
inline constexpr const char* kComparisonSchema = "pipest-comparison/1";

// ---------------------------------------------------------------------------
// Number and enum formatting
// ---------------------------------------------------------------------------

/// Shortest decimal representation that parses back to the same double.
inline std::string formatDouble(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline double parseDouble(std::string_view text, std::size_t line,
                          std::size_t column) {
  double value = 0.0;
  const auto res =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw IngestionError("line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": cannot parse number '" +
                         std::string(text) + "'");
  }
  return value;
}

inline std::string methodName(estimators::Method method) {
  switch (method) {
    case estimators::Method::LeastSquares:
      return "ls";
    case estimators::Method::TotalLeastSquares:
      return "tls";
    case estimators::Method::LevenbergMarquardt:
      return "lm";
    case estimators::Method::BruteForce:
      return "brute";
  }
  return "ls";
}

inline estimators::Method methodFromName(const std::string& name) {
  if (name == "ls") return estimators::Method::LeastSquares;
  if (name == "tls") return estimators::Method::TotalLeastSquares;
  if (name == "lm") return estimators::Method::LevenbergMarquardt;
  if (name == "brute") return estimators::Method::BruteForce;
  throw ConfigError("unknown method '" + name + "'");
}

inline std::string modeName(estimators::ModeKind mode) {
  switch (mode) {
    case estimators::ModeKind::MassOnly:
      return "mass";
    case estimators::ModeKind::MassCom:
      return "mass-com";
    case estimators::ModeKind::FullPip:
      return "full";
  }
  return "full";
}

inline estimators::ModeKind modeFromName(const std::string& name) {
  if (name == "mass") return estimators::ModeKind::MassOnly;
  if (name == "mass-com") return estimators::ModeKind::MassCom;
  if (name == "full") return estimators::ModeKind::FullPip;
  throw ConfigError("unknown mode '" + name + "'");
}

inline std::string dataKindName(diagnose::DataKind kind) {
  return kind == diagnose::DataKind::Validation ? "validation" : "measured";
}

inline diagnose::DataKind dataKindFromName(const std::string& name) {
  if (name == "validation") return diagnose::DataKind::Validation;
  if (name == "measured") return diagnose::DataKind::Measured;
  throw ConfigError("unknown data kind '" + name + "'");
}

inline synth::ScenarioKind scenarioKindFromName(const std::string& name) {
  if (name == "predefined") return synth::ScenarioKind::Predefined;
  if (name == "pick-place") return synth::ScenarioKind::PickPlaceLike;
  if (name == "free") return synth::ScenarioKind::FreeMotionLike;
  throw ConfigError("unknown scenario kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// Content digest and atomic file writes
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::string digestString(std::string_view bytes) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

inline std::string readFileBytes(const std::filesystem::path& path) {
  std::ifstream input(path, std::ios::binary);
  if (!input) {
    throw IngestionError("cannot open '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << input.rdbuf();
  return buffer.str();
}

/// Writes through a temporary sibling and renames, so a failed command never
/// leaves a partial output file behind.
inline void atomicWriteFile(const std::filesystem::path& path,
                            std::string_view content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot write '" + tmp.string() + "'");
    }
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    if (!out) {
      throw Error("short write to '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// RecordingFileV1: CSV pose + wrench time series
// ---------------------------------------------------------------------------

inline std::string encodeRecordingCsv(const signal::Recording& rec) {
  std::string out;
  out.reserve(rec.samples.size() * 200 + 64);
  out += kRecordingHeader;
  out += '\n';
  for (const auto& s : rec.samples) {
    out += formatDouble(s.t);
    for (const double v : {s.position.x(), s.position.y(), s.position.z(),
                           s.orientation.w(), s.orientation.x(),
                           s.orientation.y(), s.orientation.z(), s.force.x(),
                           s.force.y(), s.force.z(), s.torque.x(),
                           s.torque.y(), s.torque.z()}) {
      out += ',';
      out += formatDouble(v);
    }
    out += '\n';
  }
  return out;
}

inline void writeRecordingCsv(const std::filesystem::path& path,
                              const signal::Recording& rec) {
  atomicWriteFile(path, encodeRecordingCsv(rec));
}

inline signal::Recording decodeRecordingCsv(std::string_view content) {
  signal::Recording rec;
  std::size_t line = 0;
  std::size_t pos = 0;
  double prevT = 0.0;

  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    std::string_view row = content.substr(pos, eol - pos);
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    pos = eol + 1;
    ++line;

    if (line == 1) {
      if (row != kRecordingHeader) {
        throw IngestionError("line 1: expected header '" +
                             std::string(kRecordingHeader) + "'");
      }
      continue;
    }
    if (row.empty()) {
      if (pos >= content.size()) break;  // trailing newline
      throw IngestionError("line " + std::to_string(line) + ": empty row");
    }

    double fields[14];
    std::size_t column = 0;
    std::size_t fieldStart = 0;
    for (std::size_t i = 0; i <= row.size(); ++i) {
      if (i == row.size() || row[i] == ',') {
        if (column >= 14) {
          throw IngestionError("line " + std::to_string(line) +
                               ": expected 14 columns");
        }
        fields[column] = parseDouble(row.substr(fieldStart, i - fieldStart),
                                     line, column + 1);
        ++column;
        fieldStart = i + 1;
      }
    }
    if (column != 14) {
      throw IngestionError("line " + std::to_string(line) +
                           ": expected 14 columns, got " +
                           std::to_string(column));
    }

    signal::RawSample s;
    s.t = fields[0];
    s.position = Vec3(fields[1], fields[2], fields[3]);
    s.orientation =
        Eigen::Quaterniond(fields[4], fields[5], fields[6], fields[7]);
    s.force = Vec3(fields[8], fields[9], fields[10]);
    s.torque = Vec3(fields[11], fields[12], fields[13]);

    const double norm = s.orientation.norm();
    if (std::abs(norm - 1.0) > 1e-3) {
      throw IngestionError("line " + std::to_string(line) +
                           ": quaternion norm " + formatDouble(norm) +
                           " too far from 1");
    }
    if (std::abs(norm - 1.0) > 1e-6) {
      std::cerr << "warning: line " << line << ": quaternion norm " << norm
                << " renormalized\n";
    }
    // renormalize only when actually off; already-unit quaternions pass
    // through bit-exact so reprocessing a file is idempotent
    if (std::abs(norm - 1.0) > 1e-9) s.orientation.normalize();

    if (!rec.samples.empty() && !(s.t > prevT)) {
      throw IngestionError("line " + std::to_string(line) +
                           ": timestamps must be strictly increasing");
    }
    prevT = s.t;
    rec.samples.push_back(s);
  }

  if (rec.samples.empty()) throw EmptyRecordingError();
  if (rec.samples.size() > 1) {
    rec.rate = static_cast<double>(rec.samples.size() - 1) /
               (rec.samples.back().t - rec.samples.front().t);
  }
  return rec;
}

inline signal::Recording readRecordingCsv(const std::filesystem::path& path) {
  return decodeRecordingCsv(readFileBytes(path));
}

// ---------------------------------------------------------------------------
// ParamsFileV1: JSON inertial parameters
// ---------------------------------------------------------------------------

inline nlohmann::json paramsToJson(const InertialParams& p) {
  return nlohmann::json{
      {"mass", p.mass},
      {"com", {p.com.x(), p.com.y(), p.com.z()}},
      {"inertia",
       {p.inertia.xx(), p.inertia.xy(), p.inertia.xz(), p.inertia.yy(),
        p.inertia.yz(), p.inertia.zz()}}};
}

inline InertialParams paramsFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("params: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "mass" && key != "com" && key != "inertia") {
      throw ConfigError("params: unknown key '" + key + "'");
    }
  }
  if (!j.contains("mass") || !j.contains("com") || !j.contains("inertia")) {
    throw ConfigError("params: keys mass, com, inertia are required");
  }
  const auto& com = j.at("com");
  const auto& inertia = j.at("inertia");
  if (!com.is_array() || com.size() != 3) {
    throw ConfigError("params: com must be an array of 3 numbers");
  }
  if (!inertia.is_array() || inertia.size() != 6) {
    throw ConfigError(
        "params: inertia must be an array of 6 numbers (xx,xy,xz,yy,yz,zz)");
  }
  InertialParams p;
  p.mass = j.at("mass").get<double>();
  p.com = Vec3(com[0].get<double>(), com[1].get<double>(),
               com[2].get<double>());
  p.inertia = SymmetricMatrix3(
      inertia[0].get<double>(), inertia[1].get<double>(),
      inertia[2].get<double>(), inertia[3].get<double>(),
      inertia[4].get<double>(), inertia[5].get<double>());
  if (!(p.mass > 0.0)) {
    throw ConfigError("params: mass must be positive");
  }
  if (!std::isfinite(p.mass) || !p.com.allFinite() || !p.inertia.isFinite()) {
    throw ConfigError("params: values must be finite");
  }
  return p;
}

inline void writeParamsJson(const std::filesystem::path& path,
                            const InertialParams& p) {
  atomicWriteFile(path, paramsToJson(p).dump(2) + "\n");
}

inline InertialParams readParamsJson(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(readFileBytes(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse '" + path.string() + "': " + e.what());
  }
  return paramsFromJson(j);
}

// ---------------------------------------------------------------------------
// ReportFileV1
// ---------------------------------------------------------------------------

struct Report {
  std::string method;
  std::string mode;
  std::string dataKind;
  InertialParams params;
  std::optional<double> errMass;
  std::optional<double> errCom;
  std::optional<double> errInertia;
  double conditionNumber = 0.0;
  bool rankDeficient = false;
  bool inertiaUnidentifiable = false;
  bool nonPhysical = false;
  double residualNorm = 0.0;
  int iterations = 0;
  std::uint64_t rowsUsed = 0;
  double runtimeMs = 0.0;
  std::string toolVersion = kToolVersion;
  std::string inputDigest;
};

namespace detail {

inline nlohmann::json finiteOrNull(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

inline double numberOrInf(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  return j.get<double>();
}

inline nlohmann::json optionalToJson(const std::optional<double>& v) {
  if (v.has_value()) return *v;
  return nullptr;
}

inline std::optional<double> optionalFromJson(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace detail

inline nlohmann::json reportToJson(const Report& r) {
  return nlohmann::json{
      {"schema", kReportSchema},
      {"method", r.method},
      {"mode", r.mode},
      {"dataKind", r.dataKind},
      {"params", paramsToJson(r.params)},
      {"errors",
       {{"mass", detail::optionalToJson(r.errMass)},
        {"com", detail::optionalToJson(r.errCom)},
        {"inertia", detail::optionalToJson(r.errInertia)}}},
      {"conditionNumber", detail::finiteOrNull(r.conditionNumber)},
      {"rankFlags",
       {{"rankDeficient", r.rankDeficient},
        {"inertiaUnidentifiable", r.inertiaUnidentifiable},
        {"nonPhysical", r.nonPhysical}}},
      {"residualNorm", r.residualNorm},
      {"iterations", r.iterations},
      {"rowsUsed", r.rowsUsed},
      {"runtimeMs", r.runtimeMs},
      {"toolVersion", r.toolVersion},
      {"inputDigest", r.inputDigest}};
}

inline Report reportFromJson(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("schema") ||
      j.at("schema").get<std::string>() != kReportSchema) {
    throw IngestionError("not a " + std::string(kReportSchema) + " document");
  }
  Report r;
  r.method = j.at("method").get<std::string>();
  r.mode = j.at("mode").get<std::string>();
  r.dataKind = j.at("dataKind").get<std::string>();
  {
    // report params may be non-physical; bypass the ground-truth checks
    const auto& p = j.at("params");
    r.params.mass = p.at("mass").get<double>();
    const auto& com = p.at("com");
    r.params.com = Vec3(com[0].get<double>(), com[1].get<double>(),
                        com[2].get<double>());
    const auto& inertia = p.at("inertia");
    r.params.inertia = SymmetricMatrix3(
        inertia[0].get<double>(), inertia[1].get<double>(),
        inertia[2].get<double>(), inertia[3].get<double>(),
        inertia[4].get<double>(), inertia[5].get<double>());
  }
  const auto& errors = j.at("errors");
  r.errMass = detail::optionalFromJson(errors.at("mass"));
  r.errCom = detail::optionalFromJson(errors.at("com"));
  r.errInertia = detail::optionalFromJson(errors.at("inertia"));
  r.conditionNumber = detail::numberOrInf(j.at("conditionNumber"));
  const auto& flags = j.at("rankFlags");
  r.rankDeficient = flags.at("rankDeficient").get<bool>();
  r.inertiaUnidentifiable = flags.at("inertiaUnidentifiable").get<bool>();
  r.nonPhysical = flags.value("nonPhysical", false);
  r.residualNorm = j.at("residualNorm").get<double>();
  r.iterations = j.at("iterations").get<int>();
  r.rowsUsed = j.at("rowsUsed").get<std::uint64_t>();
  r.runtimeMs = j.at("runtimeMs").get<double>();
  r.toolVersion = j.at("toolVersion").get<std::string>();
  r.inputDigest = j.at("inputDigest").get<std::string>();
  return r;
}

inline void writeReportJson(const std::filesystem::path& path,
                            const Report& r) {
  atomicWriteFile(path, reportToJson(r).dump(2) + "\n");
}

inline Report readReportJson(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(readFileBytes(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw IngestionError("cannot parse '" + path.string() + "': " + e.what());
  }
  return reportFromJson(j);
}

// ---------------------------------------------------------------------------
// Comparison table emission
// ---------------------------------------------------------------------------

inline nlohmann::json comparisonToJson(const diagnose::ComparisonTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    rows.push_back(nlohmann::json{
        {"method", methodName(row.method)},
        {"mode", modeName(row.mode)},
        {"dataKind", dataKindName(row.dataKind)},
        {"errors",
         {{"mass", detail::optionalToJson(row.errors.mass)},
          {"com", detail::optionalToJson(row.errors.com)},
          {"inertia", detail::optionalToJson(row.errors.inertia)}}},
        {"rankDeficient", row.errors.rankDeficient},
        {"nonPhysical", row.errors.nonPhysical},
        {"conditionNumber", detail::finiteOrNull(row.conditionNumber)},
        {"runtimeMs", row.runtimeMs}});
  }
  return nlohmann::json{{"schema", kComparisonSchema}, {"rows", rows}};
}

inline std::string comparisonToText(const diagnose::ComparisonTable& table) {
  const auto cell = [](const std::optional<double>& v) -> std::string {
    if (!v.has_value()) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.5g", *v);
    return buf;
  };
  std::vector<std::array<std::string, 8>> lines;
  lines.push_back({"method", "mode", "data", "e_mass", "e_com", "e_inertia",
                   "cond", "runtime_ms"});
  for (const auto& row : table.rows) {
    char cond[32];
    std::snprintf(cond, sizeof(cond), "%.4g", row.conditionNumber);
    char runtime[32];
    std::snprintf(runtime, sizeof(runtime), "%.3f", row.runtimeMs);
    lines.push_back({methodName(row.method), modeName(row.mode),
                     dataKindName(row.dataKind), cell(row.errors.mass),
                     cell(row.errors.com), cell(row.errors.inertia), cond,
                     runtime});
  }
  std::array<std::size_t, 8> widths{};
  for (const auto& line : lines) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      widths[i] = std::max(widths[i], line[i].size());
    }
  }
  std::string out;
  for (const auto& line : lines) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      out += line[i];
      if (i + 1 < line.size()) {
        out.append(widths[i] - line[i].size() + 2, ' ');
      }
    }
    out += '\n';
  }
  return out;
}

/// Long-form CSV of the error cells, one row per (method, group), ready for
/// external plotting.
inline std::string comparisonToPlotCsv(const diagnose::ComparisonTable& table) {
  std::string out = "method,mode,dataKind,group,error\n";
  for (const auto& row : table.rows) {
    const auto emit = [&](const char* group,
                          const std::optional<double>& value) {
      if (!value.has_value()) return;
      out += methodName(row.method);
      out += ',';
      out += modeName(row.mode);
      out += ',';
      out += dataKindName(row.dataKind);
      out += ',';
      out += group;
      out += ',';
      out += formatDouble(*value);
      out += '\n';
    };
    emit("mass", row.errors.mass);
    emit("com", row.errors.com);
    emit("inertia", row.errors.inertia);
  }
  return out;
}

}  // namespace pipest::io
