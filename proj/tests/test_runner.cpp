#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nuh/runner.hpp"
#include "support.hpp"

using namespace nuh;

namespace {

RunConfig quick(IntMatrix m) {
  RunConfig c;
  c.matrix = m;
  c.matrixSet = true;
  c.samples = 40;
  c.depth = 2;
  c.grid = {4, 4, 8};
  c.lyapunovSteps = 2000;
  c.lyapunovSeeds = 2;
  c.burnIn = 10;
  c.fixedClock = true;
  return c;
}

int run_cli(const std::string& args, std::string* out = nullptr) {
  const auto tmp = std::filesystem::temp_directory_path() / ("nuh_cli_" + std::to_string(::getpid()) + ".json");
  const std::string cmd = std::string(NUH_CLI_PATH) + " " + args + " > " + tmp.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  if (out) {
    std::ifstream is(tmp);
    std::ostringstream ss;
    ss << is.rdbuf();
    *out = ss.str();
  }
  std::filesystem::remove(tmp);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, DefaultRoundTrip) {
  const RunConfig c;
  EXPECT_EQ(parse_config(serialize(c)), c);
}

TEST(Config, PopulatedRoundTrip) {
  RunConfig c;
  c.matrix = {2, 1, 0, 4};
  c.matrixSet = true;
  c.mode = "general";
  c.profile = "0; 1:0:1; 2:0:0.125";
  c.profileA = 1.5;
  c.profileB = 6.5;
  c.halfSize = 0.04;
  c.criticalLength = 0.03;
  c.centers = std::pair{0.2, 0.8};
  c.permissive = true;
  c.alpha = 8.5;
  c.t = 1234.5;
  c.r = 3.25;
  c.tGrid = {1, 2.5, 10};
  c.rGrid = {3, 4};
  c.tilde = "0.01; 1:0:0.002";
  c.depth = 3;
  c.grid = {8, 6, 12};
  c.seed = 99;
  c.samples = 77;
  c.lyapunovSteps = 5000;
  c.lyapunovSeeds = 3;
  c.burnIn = 50;
  c.nodeBudget = 123456;
  c.reportPath = "report.json";
  c.csvPath = "series.csv";
  c.fixedClock = true;
  EXPECT_EQ(parse_config(serialize(c)), c);
}

TEST(Config, UnknownKeyNamesField) {
  try {
    parse_config("[map]\nmatrix = 5,0,0,5\n[lab]\nsamplez = 3\n");
    FAIL() << "accepted unknown key";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
    EXPECT_NE(std::string(e.what()).find("lab.samplez"), std::string::npos) << e.what();
  }
}

TEST(Config, BadValuesRejected) {
  EXPECT_NUH_ERROR(parse_config("[lab]\nsamples = many\n"), ErrorKind::InvalidInput);
  EXPECT_NUH_ERROR(parse_config("[cone]\nalpha = 0.5\n"), ErrorKind::InvalidInput);
  EXPECT_NUH_ERROR(parse_config("[map]\nmatrix = 1,2,3\n"), ErrorKind::InvalidInput);
  EXPECT_NUH_ERROR(parse_config("[nowhere]\nx = 1\n"), ErrorKind::InvalidInput);
  EXPECT_NUH_ERROR(parse_grid("4x4x3"), ErrorKind::InvalidInput);
}

TEST(ExitCodes, CertifyFollowsVerdict) {
  const auto res = run_verb("certify", quick(IntMatrix::scalar(5)));
  const bool certified = res.report["certificate"]["verdict"] == "certified";
  EXPECT_EQ(res.exitCode, certified ? kExitPass : kExitNegative);
}

TEST(ExitCodes, CertifyLargeShearPasses) {
  auto c = quick(IntMatrix::scalar(5));
  c.t = c.r = 1000;
  EXPECT_EQ(run_verb("certify", c).exitCode, kExitPass);
}

TEST(ExitCodes, SmallHomothetyGated) {
  const auto res = run_verb("certify", quick(IntMatrix::scalar(3)));
  EXPECT_EQ(res.exitCode, kExitNegative);
  EXPECT_EQ(res.report["certificate"]["reason"], "k < 5: coefficient non-positive");
}

TEST(ExitCodes, ExcludedPairGated) {
  const auto res = run_verb("certify", quick({1, 0, 0, 2}));
  EXPECT_EQ(res.exitCode, kExitNegative);
  EXPECT_EQ(res.report["certificate"]["reason"], "(τ₁,τ₂)=(1,2) excluded, d ≤ 4");
}

TEST(ExitCodes, BrokenProfileIsInvalid) {
  auto c = quick(IntMatrix::scalar(5));
  c.profileA = 3.0;
  EXPECT_EQ(run_verb("certify", c).exitCode, kExitInvalid);
  EXPECT_EQ(run_verb("validate-profile", c).exitCode, kExitInvalid);
}

TEST(ExitCodes, DegenerateMatrixIsInvalid) {
  EXPECT_EQ(run_verb("certify", quick({0, 0, 0, 0})).exitCode, kExitInvalid);
  EXPECT_EQ(run_verb("normalize", quick(IntMatrix::scalar(5))).exitCode, kExitInvalid);
}

TEST(ExitCodes, BudgetExceeded) {
  auto c = quick(IntMatrix::scalar(5));
  c.depth = 5;
  EXPECT_EQ(run_verb("verify", c).exitCode, kExitBudget);
}

TEST(ExitCodes, UnshearedVerifyIsNegative) {
  auto c = quick(IntMatrix::scalar(5));
  c.t = c.r = 0.0;
  const auto res = run_verb("verify", c);
  EXPECT_EQ(res.exitCode, kExitNegative);
  EXPECT_NEAR(res.report["empirical"]["gridMinJ"]["minAverageI"].get<double>(), -std::log(5.0), 1e-9);
}

TEST(ExitCodes, ShearedVerifyPasses) {
  EXPECT_EQ(run_verb("verify", quick(IntMatrix::scalar(5))).exitCode, kExitPass);
}

TEST(ExitCodes, LyapunovAndCensus) {
  EXPECT_EQ(run_verb("lyapunov", quick(IntMatrix::scalar(5))).exitCode, kExitPass);
  EXPECT_EQ(run_verb("census", quick(IntMatrix::scalar(5))).exitCode, kExitPass);
  auto flat = quick(IntMatrix::scalar(5));
  flat.t = flat.r = 0.0;
  EXPECT_EQ(run_verb("lyapunov", flat).exitCode, kExitNegative);
}

TEST(ExitCodes, UnknownVerb) { EXPECT_EQ(run_verb("prove", quick(IntMatrix::scalar(5))).exitCode, kExitInvalid); }

TEST(Normalize, ReportsChange) {
  const auto res = run_verb("normalize", quick({2, 0, 0, 4}));
  EXPECT_EQ(res.exitCode, kExitPass);
  EXPECT_EQ(res.report["normalization"]["G"], nlohmann::json({{4, 2}, {0, 2}}));
  EXPECT_EQ(res.report["divisors"]["tau2"], 4);
}

TEST(Report, DeterministicWithFixedClock) {
  const auto c = quick(IntMatrix::scalar(5));
  const auto a = run_verb("verify", c).report.dump();
  const auto b = run_verb("verify", c).report.dump();
  EXPECT_EQ(a, b);
  const auto j = nlohmann::json::parse(a);
  EXPECT_EQ(j["schema"], kReportSchema);
  EXPECT_EQ(j["generatedAt"], "1970-01-01T00:00:00Z");
  EXPECT_EQ(parse_config(j["input"].get<std::string>()), c);
}

TEST(Cli, ExitCodesAndOutput) {
  std::string out;
  EXPECT_EQ(run_cli("certify --matrix 3,0,0,3 --fixed-clock", &out), kExitNegative);
  EXPECT_EQ(nlohmann::json::parse(out)["certificate"]["reason"], "k < 5: coefficient non-positive");
  EXPECT_EQ(run_cli("certify --matrix 5,0,0,5 -t 1000 -r 1000"), kExitPass);
  EXPECT_EQ(run_cli("normalize --matrix 2,0,0,4"), kExitPass);
  EXPECT_EQ(run_cli("certify --matrix 0,0,0,0"), kExitInvalid);
  EXPECT_EQ(run_cli("prove"), kExitInvalid);
  EXPECT_EQ(run_cli("certify --config /nonexistent/file.ini"), kExitInvalid);
  EXPECT_EQ(run_cli("verify --matrix 5,0,0,5 --depth 5"), kExitBudget);
}

TEST(Cli, ByteIdenticalReports) {
  std::string a, b;
  const std::string args = "certify --matrix 5,0,0,5 -t 50 -r 50 --fixed-clock --seed 3";
  run_cli(args, &a);
  run_cli(args, &b);
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
}
