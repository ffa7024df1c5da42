#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "pipest/dynamics.hpp"
#include "pipest/io.hpp"
#include "pipest/signal.hpp"
#include "pipest/synth.hpp"

using namespace pipest;
namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "pipest_cli_test";

std::string path(const std::string& name) { return (kDir / name).string(); }

int runCli(const std::string& args) {
  fs::create_directories(kDir);
  const std::string cmd =
      std::string(PIPEST_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::size_t lineCount(const std::string& file) {
  const std::string bytes = io::readFileBytes(file);
  std::size_t count = 0;
  for (const char c : bytes) {
    if (c == '\n') ++count;
  }
  return count;
}

nlohmann::json loadJson(const std::string& file) {
  return nlohmann::json::parse(io::readFileBytes(file));
}

}  // namespace

TEST_CASE("simulate emits the requested number of rows") {
  REQUIRE(runCli("simulate --kind predefined --duration 20 --rate 1000 "
                 "--seed 7 --out " +
                 path("pre20.csv")) == 0);
  CHECK(lineCount(path("pre20.csv")) == 20001);  // header + 20000 rows

  REQUIRE(runCli("simulate --kind free --duration 10 --seed 1 --out " +
                 path("free10.csv")) == 0);
  CHECK(lineCount(path("free10.csv")) == 10001);
}

TEST_CASE("validate then estimate recovers the file parameters") {
  REQUIRE(runCli("simulate --kind predefined --duration 2 --seed 9 --out " +
                 path("rt.csv") + " --truth-out " + path("rt_truth.json")) ==
          0);
  REQUIRE(runCli("validate --in " + path("rt.csv") + " --gt " +
                 path("rt_truth.json") + " --out " + path("rt_val.csv")) == 0);
  REQUIRE(runCli("estimate --in " + path("rt_val.csv") +
                 " --method ls --mode full --gt " + path("rt_truth.json") +
                 " --out " + path("rt_report.json")) == 0);

  const auto report = loadJson(path("rt_report.json"));
  CHECK(report.at("errors").at("mass").get<double>() < 1e-6);
  CHECK(report.at("errors").at("com").get<double>() < 1e-6);
  CHECK(report.at("errors").at("inertia").get<double>() < 1e-6);
}

TEST_CASE("validate is idempotent") {
  REQUIRE(runCli("validate --in " + path("rt_val.csv") + " --gt " +
                 path("rt_truth.json") + " --out " + path("rt_val2.csv")) ==
          0);
  CHECK(io::readFileBytes(path("rt_val.csv")) ==
        io::readFileBytes(path("rt_val2.csv")));
}

TEST_CASE("a static recording yields flags, not a failure") {
  signal::Recording rec;
  rec.rate = 1000.0;
  rec.samples.resize(1000);
  const InertialParams payload = synth::predefinedClassPayload();
  const Eigen::Quaterniond pose(
      Eigen::AngleAxisd(0.9, Vec3(0.3, -1.0, 0.5).normalized()));
  KinematicSample staticKin;
  staticKin.gravity =
      pose.toRotationMatrix().transpose() * Vec3(0.0, 0.0, -kGravity);
  const Wrench w = newtonEulerWrench(payload, staticKin);
  for (std::size_t i = 0; i < rec.samples.size(); ++i) {
    rec.samples[i].t = static_cast<double>(i) * 1e-3;
    rec.samples[i].position = Vec3(0.5, 0.1, 0.4);
    rec.samples[i].orientation = pose;
    rec.samples[i].force = w.force;
    rec.samples[i].torque = w.torque;
  }
  fs::create_directories(kDir);
  io::writeRecordingCsv(path("static.csv"), rec);

  REQUIRE(runCli("estimate --in " + path("static.csv") +
                 " --method ls --mode full --out " +
                 path("static_report.json")) == 0);
  const auto report = loadJson(path("static_report.json"));
  CHECK(report.at("rankFlags").at("rankDeficient").get<bool>());
  CHECK(report.at("rankFlags").at("inertiaUnidentifiable").get<bool>());
}

TEST_CASE("broken inputs and modes map to the documented exit codes") {
  // full-parameter brute force is rejected by the solver
  CHECK(runCli("estimate --in " + path("rt.csv") +
               " --method brute --mode full --gt " + path("rt_truth.json")) ==
        5);

  // flag errors
  CHECK(runCli("estimate --in " + path("rt.csv") + " --mode mass") == 2);
  CHECK(runCli("estimate --in " + path("rt.csv") + " --no-such-flag") == 2);
  CHECK(runCli("simulate --kind nope --out " + path("x.csv")) == 2);

  // ingestion errors
  io::atomicWriteFile(path("bad.csv"), "not,a,recording\n");
  CHECK(runCli("estimate --in " + path("bad.csv")) == 4);
  CHECK(runCli("estimate --in " + path("missing.csv")) == 4);

  // invalid ground-truth parameters
  io::atomicWriteFile(
      path("zero_mass.json"),
      R"({"mass":0.0,"com":[0,0,0],"inertia":[0,0,0,0,0,0]})");
  CHECK(runCli("validate --in " + path("rt.csv") + " --gt " +
               path("zero_mass.json") + " --out " + path("v0.csv")) == 2);

  // workspace violation
  CHECK(runCli("simulate --kind predefined --duration 1 --workspace 0.01 "
               "--out " +
               path("w.csv")) == 3);
}

TEST_CASE("estimation results do not depend on the thread cap") {
  const std::string base = "estimate --in " + path("rt.csv") +
                           " --method brute --mode mass-com --gt " +
                           path("rt_truth.json") + " --brute-axis-points 5";
  fs::create_directories(kDir);
  const std::string one = "PIPEST_THREADS=1 " + std::string(PIPEST_CLI_PATH) +
                          " " + base + " --out " + path("b1.json") +
                          " > /dev/null 2>&1";
  const std::string four = "PIPEST_THREADS=4 " + std::string(PIPEST_CLI_PATH) +
                           " " + base + " --out " + path("b4.json") +
                           " > /dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(one.c_str())) == 0);
  REQUIRE(WEXITSTATUS(std::system(four.c_str())) == 0);

  auto a = loadJson(path("b1.json"));
  auto b = loadJson(path("b4.json"));
  a["runtimeMs"] = 0.0;
  b["runtimeMs"] = 0.0;
  CHECK(a.dump() == b.dump());
}

TEST_CASE("clean-wrench keeps the model wrenches under noise flags") {
  REQUIRE(runCli("simulate --kind free --duration 1 --seed 4 --out " +
                 path("cw_plain.csv")) == 0);
  REQUIRE(runCli("simulate --kind free --duration 1 --seed 4 "
                 "--noise-sigma-f 0.5 --noise-sigma-tau 0.05 --clean-wrench "
                 "--out " +
                 path("cw_clean.csv")) == 0);
  CHECK(io::readFileBytes(path("cw_plain.csv")) ==
        io::readFileBytes(path("cw_clean.csv")));
}

TEST_CASE("sweep reproduces the clean-versus-noisy inertia gap") {
  REQUIRE(runCli("compare --sweep predefined --methods ls,lm --mode full "
                 "--seed 7 --duration 4 --out " +
                 path("sweep.json")) == 0);
  const auto table = loadJson(path("sweep.json"));
  REQUIRE(table.at("rows").size() == 4);
  for (const auto& method : {"ls", "lm"}) {
    double clean = 0.0;
    double noisy = 0.0;
    for (const auto& row : table.at("rows")) {
      if (row.at("method").get<std::string>() != method) continue;
      const double inertia = row.at("errors").at("inertia").get<double>();
      if (row.at("dataKind").get<std::string>() == "validation") {
        clean = inertia;
      } else {
        noisy = inertia;
      }
    }
    CHECK(clean > 0.0);
    CHECK(noisy > 10.0 * clean);
  }
}

TEST_CASE("compare merges reports and tolerates an empty list") {
  REQUIRE(runCli("estimate --in " + path("rt.csv") +
                 " --method lm --mode full --gt " + path("rt_truth.json") +
                 " --data-kind measured --out " + path("lm_report.json")) ==
          0);
  REQUIRE(runCli("compare " + path("rt_report.json") + " " +
                 path("lm_report.json") + " --out " + path("table.json")) ==
          0);
  const auto table = loadJson(path("table.json"));
  CHECK(table.at("rows").size() == 2);

  REQUIRE(runCli("compare --out " + path("empty.json")) == 0);
  CHECK(loadJson(path("empty.json")).at("rows").empty());
}
