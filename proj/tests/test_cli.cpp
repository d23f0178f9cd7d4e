#include "ppm/cli.hpp"
#include "ppm/solvers.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ppm;
using namespace ppm::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
  fs::path d = fs::temp_directory_path() / ("ppm_cli_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

json read_json(const fs::path &p) {
  std::ifstream is(p);
  return json::parse(is);
}

Flags to(const fs::path &dir, bool force = false) {
  Flags f;
  f.out = dir.string();
  f.force = force;
  return f;
}

int shell(const std::string &cmd) {
  int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const json kProxAccel = {{"problem", {{"name", "quadratic"}, {"params", {{"dim", 1}, {"gamma", 1.0}}}}},
                         {"solver", {{"name", "prox"}, {"params", {{"tau0", 1.0}, {"accel", true}, {"gamma", 1.0}}}}},
                         {"N", 1000}};

} // namespace

TEST(Config, StrictParsing) {
  EXPECT_NO_THROW(parse_config(kProxAccel));
  json j = kProxAccel;
  j["bogus"] = 1;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = kProxAccel;
  j["N"] = "many";
  EXPECT_THROW(parse_config(j), ConfigError);
  j = kProxAccel;
  j["N"] = 0;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = kProxAccel;
  j["solver"]["extra"] = true;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = kProxAccel;
  j["certificates"] = {"QF", "nope"};
  EXPECT_THROW(parse_config(j), ConfigError);
  j.erase("problem");
  EXPECT_THROW(parse_config(j), ConfigError);
  EXPECT_THROW(parse_config_text("{\"problem\": "), ConfigError);
}

TEST(Config, UnknownSolverParamRejectedAtBuild) {
  json j = kProxAccel;
  j["solver"]["params"]["tau1"] = 2;
  EXPECT_THROW(build(parse_config(j)), ConfigError);
}

TEST(Config, CertificateAliases) {
  EXPECT_EQ(canonical_certificate("CI-tilde"), "CI~");
  EXPECT_EQ(canonical_certificate("CI-Gamma"), "CI-Γ");
  EXPECT_EQ(canonical_certificate("DE"), "D𝓔");
  EXPECT_EQ(canonical_certificate("DI-G"), "DI-𝒢");
  EXPECT_EQ(canonical_certificate("QF"), "QF");
}

TEST(Run, AcceleratedProxSummaryAndRoundTrip) {
  auto dir = scratch("run");
  ASSERT_EQ(cmd_run(parse_config(kProxAccel), to(dir)), kOk);
  ASSERT_TRUE(fs::exists(dir / "trajectory.csv"));
  json s = read_json(dir / "summary.json");
  EXPECT_LE(s["rates"]["power"]["parameter"].get<double>(), -1.9);

  // Same run in process: the serialized value must come back bit for bit.
  auto p = std::get<CompositeProblem>(catalog("quadratic", {{"dim", 1}, {"gamma", 1.0}}));
  auto sol = make_prox(p, 1, 1, true);
  auto log = run(*sol, BlockVec(Vec::Ones(1)), 1000);
  EXPECT_EQ(s["final"]["err_sq"].get<double>(), log.iterates.back().squaredNorm());
  EXPECT_EQ(json::parse(s.dump(2)), s);
}

TEST(Run, CpStepBoundViolationExits3) {
  json j = {{"problem", "saddle_toy"}, {"solver", {{"name", "cp"}, {"params", {{"tau0", 1.1}, {"sigma0", 1.1}}}}}, {"N", 10}};
  auto dir = scratch("cp_bound");
  testing::internal::CaptureStderr();
  EXPECT_EQ(cmd_run(parse_config(j), to(dir)), kPreconditionError);
  EXPECT_NE(testing::internal::GetCapturedStderr().find("1.21"), std::string::npos);
}

TEST(Certify, ProxToyPasses) {
  json j = {{"problem", {{"name", "quadratic"}, {"params", {{"dim", 1}, {"gamma", 1.0}}}}},
            {"solver", {{"name", "prox"}, {"params", {{"tau0", 1.0}}}}},
            {"N", 50},
            {"certificates", {"CI~", "QF", "DI"}}};
  auto dir = scratch("certify_prox");
  EXPECT_EQ(cmd_certify(parse_config(j), to(dir)), kOk);
  json c = read_json(dir / "certificates.json");
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(read_json(dir / "summary.json")["certificates"], c);
}

TEST(Certify, CpScalarToyGammaAndGap) {
  json j = {{"problem", "saddle_toy"},
            {"solver", {{"name", "cp"}, {"params", {{"tau0", 0.9}, {"sigma0", 0.9}, {"gap_mode", true}}}}},
            {"N", 200},
            {"certificates", {"CI-Gamma", "DI-G"}}};
  EXPECT_EQ(cmd_certify(parse_config(j), to(scratch("certify_cp"))), kOk);
}

TEST(Certify, ForcedOversizedStepFailsQf) {
  json j = {{"problem", {{"name", "quadratic"}, {"params", {{"dim", 1}, {"part", "J"}, {"gamma", 1.0}}}}},
            {"solver", {{"name", "graddesc"}, {"params", {{"tau0", 3.0}}}}},
            {"N", 100},
            {"certificates", {"QF"}}};
  EXPECT_EQ(cmd_certify(parse_config(j), to(scratch("forced"))), kPreconditionError);
  EXPECT_EQ(cmd_certify(parse_config(j), to(scratch("forced"), true)), kCertificateFailure);
}

TEST(Certify, MissingSolutionExits3) {
  json j = {{"problem", {{"name", "rof"}, {"params", {{"nx", 4}, {"ny", 4}, {"reference_iters", 0}}}}},
            {"solver", "cp"},
            {"N", 10}};
  EXPECT_EQ(cmd_certify(parse_config(j), to(scratch("no_ustar"))), kPreconditionError);
}

TEST(Propcheck, SuitesAndAdversarialFixture) {
  EXPECT_EQ(cmd_propcheck("three-point", 2000, 1, "", scratch("pc3").string()), kOk);
  EXPECT_EQ(cmd_propcheck("subspace", 2000, 1, "", scratch("pcs").string()), kOk);
  EXPECT_EQ(cmd_propcheck("subspace", 2000, 1, "understated", scratch("pcu").string()), kCertificateFailure);
  auto dir = scratch("pcsa");
  EXPECT_EQ(cmd_propcheck("sampler", 10000, 1, "", dir.string()), kOk);
  EXPECT_TRUE(fs::exists(dir / "propcheck.json"));
}

TEST(Report, AggregatesSummaries) {
  auto dir = scratch("report_in");
  json j = kProxAccel;
  j["N"] = 100;
  ASSERT_EQ(cmd_run(parse_config(j), to(dir / "a")), kOk);
  auto out = scratch("report_out");
  EXPECT_EQ(cmd_report({dir.string()}, out.string()), kOk);
  std::ifstream is(out / "report.csv");
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_NE(header.find("problem"), std::string::npos);
  EXPECT_NE(row.find(",quadratic,prox,100,"), std::string::npos) << row;
}

TEST(Binary, ExitCodes) {
  const std::string bin = PPM_CLI_PATH;
  auto dir = scratch("binary");
  {
    std::ofstream os(dir / "bad.json");
    os << "{ not json";
  }
  EXPECT_EQ(shell(bin + " run --config " + (dir / "bad.json").string()), 2);
  EXPECT_EQ(shell(bin), 2);
  {
    std::ofstream os(dir / "ok.json");
    os << kProxAccel.dump();
  }
  EXPECT_EQ(shell(bin + " run --config " + (dir / "ok.json").string() + " --out " + (dir / "o").string()), 0);
  EXPECT_EQ(shell(bin + " propcheck --suite subspace --fixture understated --samples 500 --out " + (dir / "p").string()), 4);
}
