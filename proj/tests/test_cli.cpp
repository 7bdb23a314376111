#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bsos/cli.hpp"
#include "test_support.hpp"

using namespace bsos;
using bsos::testing::fixture_path;

namespace {

struct CliRun {
  int code = -1;
  std::string out, err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "bsos");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string temp_file(const std::string& name, const std::string& text) {
  const auto dir = std::filesystem::temp_directory_path() / "bsos_cli_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / name).string();
  std::ofstream(path) << text;
  return path;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Cli, SolveJsonSchema) {
  const auto r = run({"solve", "--input", fixture_path("qp.pop"), "--hierarchy", "bsos", "--level", "1", "--k", "1",
                      "--format", "json", "--oracle", "grid"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j["rows"].size(), 1u);
  const auto& row = j["rows"][0];
  for (const char* key : {"hierarchy", "d", "k", "bound", "status", "residual", "iterations", "time_ms"}) {
    EXPECT_TRUE(row.contains(key)) << key;
  }
  EXPECT_EQ(row["hierarchy"], "bsos");
  EXPECT_EQ(row["status"], "optimal");
  EXPECT_NEAR(row["bound"].get<double>(), 0.125, 1e-6);
  EXPECT_LE(row["residual"].get<double>(), kCertificateTolerance);
  EXPECT_EQ(j["oracle"]["method"], "grid");
  EXPECT_NEAR(j["oracle"]["value"].get<double>(), 0.125, 1e-9);
}

TEST(Cli, BoundIsInOriginalUnits) {
  // u = (x + 1)/2, so min 3x + 2 over [-1, 1] is -1 while the normalized bound is 0.
  const auto path = temp_file("affine.pop", "vars: x\nminimize: 3*x + 2\nbox: -1 1\n");
  const auto r = run({"solve", "--input", path, "--hierarchy", "lp", "--level", "1", "--format", "json"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  const double bound = j["rows"][0]["bound"].get<double>();
  const auto inst = normalize(read_problem_file(path));
  const auto res = solve(build_lp(inst, 1));
  ASSERT_EQ(res.status, SolveStatus::Optimal);
  EXPECT_NEAR(bound, inst.to_original_units(res.objective), 1e-12);
  EXPECT_NEAR(bound, -1.0, 1e-6);
}

TEST(Cli, CompareCsvShape) {
  const auto r = run({"compare", "--input", fixture_path("qp.pop"), "--hierarchy", "lp,bsos", "--levels", "1..2",
                      "--k", "1,2", "--format", "csv", "--oracle", "grid"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto ls = lines(r.out);
  ASSERT_GE(ls.size(), 2u);
  EXPECT_EQ(ls[0], "hierarchy,d,k,bound,status,residual,iterations,time_ms");
  for (const auto& l : ls) EXPECT_EQ(std::count(l.begin(), l.end(), ','), 7) << l;
  EXPECT_EQ(ls.back().rfind("oracle,", 0), 0u);
  // lp at d = 1, 2 and bsos at d = 1, 2; k = 2 clamps to 1 for a quadratic
  EXPECT_EQ(ls.size(), 1u + 4u + 1u);
}

TEST(Cli, CompareTextHasChecks) {
  const auto r = run({"compare", "--input", fixture_path("sq.pop"), "--levels", "2..3", "--oracle", "grid"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("check: bsos d=2 k=1 >= lp d=2: holds"), std::string::npos) << r.out;
  EXPECT_EQ(r.out.find("FAILS"), std::string::npos);
}

TEST(Cli, OutFileOption) {
  const auto dir = std::filesystem::temp_directory_path() / "bsos_cli_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "report.json").string();
  std::filesystem::remove(path);
  const auto r = run({"solve", "--input", fixture_path("lin.pop"), "--hierarchy", "lp", "--format", "json", "--out", path});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream f(path);
  const auto j = nlohmann::json::parse(f);
  EXPECT_EQ(j["rows"][0]["status"], "optimal");
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"solve", "--hierarchy", "lp"}).code, kExitUsage);
  EXPECT_EQ(run({"solve", "--input", fixture_path("qp.pop"), "--hierarchy", "bogus"}).code, kExitUsage);
  EXPECT_EQ(run({"solve", "--input", fixture_path("qp.pop"), "--hierarchy", "lp", "--format", "xml"}).code, kExitUsage);
  EXPECT_EQ(run({"solve", "--input", "/nonexistent/x.pop", "--hierarchy", "lp"}).code, kExitUsage);
  EXPECT_EQ(run({"compare", "--input", fixture_path("qp.pop"), "--levels", "3..1"}).code, kExitUsage);
  const auto bad = temp_file("bad.pop", "vars: x\nminimize: x +\n");
  const auto parse = run({"solve", "--input", bad, "--hierarchy", "lp"});
  EXPECT_EQ(parse.code, kExitUsage);
  EXPECT_NE(parse.err.find("line 2"), std::string::npos) << parse.err;

  // theta_1 of (2x-1)^2 has no feasible multipliers
  EXPECT_EQ(run({"solve", "--input", fixture_path("sq.pop"), "--hierarchy", "lp", "--level", "1"}).code,
            kExitInfeasible);
  EXPECT_EQ(run({"solve", "--input", fixture_path("quartic4.pop"), "--hierarchy", "lp", "--oracle", "grid"}).code,
            kExitInfeasible);
  EXPECT_EQ(run({"solve", "--input", fixture_path("qp.pop"), "--hierarchy", "rlt01"}).code, kExitUsage);

  // a tolerance below machine precision cannot be met
  EXPECT_EQ(run({"solve", "--input", fixture_path("qp.pop"), "--hierarchy", "bsos", "--tol", "1e-16"}).code,
            kExitNumerical);
}

TEST(Cli, HelpIsSuccess) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("solve"), std::string::npos);
}

TEST(Cli, CertifyReportsVariety) {
  const auto r = run({"certify", "--input", fixture_path("lin.pop"), "--hierarchy", "lp", "--level", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["exactness"]["exact"].get<bool>());
  EXPECT_TRUE(j["exactness"]["sound"].get<bool>());
  const auto& v = j["variety"];
  for (const char* key : {"threshold", "residual", "x_star", "f_star", "active_sets", "omega", "generators_vanish",
                          "samples", "constancy", "witnesses"}) {
    EXPECT_TRUE(v.contains(key)) << key;
  }
  EXPECT_EQ(v["omega"].size(), 1u);
  EXPECT_TRUE(v["generators_vanish"].get<bool>());
  EXPECT_EQ(v["constancy"], "constant");
}

TEST(Cli, CertifyBinaryUsesEnumeration) {
  const auto r = run({"certify", "--input", fixture_path("cut3.pop"), "--hierarchy", "rlt01", "--level", "3"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["oracle"]["method"], "enumerate");
  EXPECT_EQ(j["oracle"]["value"].get<double>(), -2.0);
  EXPECT_NEAR(j["row"]["bound"].get<double>(), -2.0, 1e-6);
}

TEST(Cli, CertifyInfeasibleRelaxation) {
  const auto r = run({"certify", "--input", fixture_path("sq.pop"), "--hierarchy", "lp", "--level", "1"});
  EXPECT_EQ(r.code, kExitInfeasible);
}

TEST(Cli, LagrangeJsonAndTrace) {
  const auto dir = std::filesystem::temp_directory_path() / "bsos_cli_test";
  std::filesystem::create_directories(dir);
  const auto trace = (dir / "trace.csv").string();
  const auto r = run({"lagrange", "--input", fixture_path("qp.pop"), "--level", "1", "--mode", "certified",
                      "--format", "json", "--oracle", "grid", "--trace", trace});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["quality"], "certified");
  EXPECT_NEAR(j["rho_estimate"].get<double>(), 0.125, 1e-3);
  EXPECT_LE(j["rho_estimate"].get<double>(), j["oracle"]["value"].get<double>() + 1e-8);
  std::ifstream f(trace);
  std::stringstream ss;
  ss << f.rdbuf();
  const auto ls = lines(ss.str());
  ASSERT_GT(ls.size(), 1u);
  EXPECT_EQ(ls.size() - 1, j["iterations"].get<std::size_t>());
}

TEST(Cli, LagrangeModes) {
  // certified mode refuses the 4-variable quartic
  const auto refused = run({"lagrange", "--input", fixture_path("quartic4.pop"), "--mode", "certified"});
  EXPECT_EQ(refused.code, kExitInfeasible) << refused.out;
  const auto heur = run({"lagrange", "--input", fixture_path("quartic4.pop"), "--mode", "heuristic", "--iterations",
                         "20", "--format", "json"});
  ASSERT_EQ(heur.code, kExitOk) << heur.err;
  EXPECT_EQ(nlohmann::json::parse(heur.out)["quality"], "heuristic");
  EXPECT_EQ(run({"lagrange", "--input", fixture_path("qp.pop")}).code, kExitUsage);
}
