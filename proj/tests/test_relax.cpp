#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "bsos/lp_reference.hpp"
#include "bsos/relax.hpp"
#include "bsos/solver.hpp"
#include "test_support.hpp"

using namespace bsos;
using bsos::testing::from_text;
using bsos::testing::load_fixture;

namespace {

std::string read_golden(const std::string& name) {
  std::ifstream in(std::string(BSOS_GOLDEN_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double optimum(const ConicProgram& p) {
  const auto r = solve(p);
  EXPECT_EQ(r.status, SolveStatus::Optimal) << r.message;
  return r.objective;
}

ProblemInstance k3() { return load_fixture("cut3.pop"); }

}  // namespace

TEST(BuildLp, LinearObjective) {
  const auto inst = load_fixture("lin.pop");
  const auto p = build_lp(inst, 1);
  const auto r = solve(p);
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  EXPECT_NEAR(r.objective, 0.0, 1e-7);
  // pairs: (0)(1) = 1 - x, (1)(0) = x
  ASSERT_EQ(r.nonneg_values.size(), 2u);
  EXPECT_NEAR(r.nonneg_values[0], 0.0, 1e-7);
  EXPECT_NEAR(r.nonneg_values[1], 1.0, 1e-7);
  EXPECT_EQ(solve_lp_reference(p).status, SolveStatus::Optimal);
  EXPECT_NEAR(solve_lp_reference(p).objective, 0.0, 1e-9);
}

TEST(BuildLp, SquareLevels) {
  const auto inst = load_fixture("sq.pop");
  const auto p1 = build_lp(inst, 1);
  EXPECT_EQ(solve(p1).status, SolveStatus::Infeasible);
  EXPECT_EQ(solve_lp_reference(p1).status, SolveStatus::Infeasible);
  const auto p2 = build_lp(inst, 2);
  EXPECT_NEAR(optimum(p2), -1.0, 1e-6);
  EXPECT_NEAR(solve_lp_reference(p2).objective, -1.0, 1e-9);
}

TEST(BuildLp, RowsCoverBudget) {
  for (const auto& inst : bsos::testing::random_suite(6)) {
    for (int d = 1; d <= 3; ++d) {
      const auto p = build_lp(inst, d);
      p.validate();
      EXPECT_EQ(p.degree_budget, std::max(inst.objective.degree(), d * inst.max_constraint_degree()));
      EXPECT_EQ(p.num_rows(), binomial(static_cast<int>(inst.n()) + p.degree_budget, p.degree_budget));
      EXPECT_TRUE(std::is_sorted(p.row_monomials.begin(), p.row_monomials.end()));
      for (const auto& m : p.row_monomials) EXPECT_LE(m.degree(), p.degree_budget);
      EXPECT_EQ(p.num_nonneg, lift_products(inst, d).size());
      EXPECT_TRUE(p.psd_sizes.empty());
    }
  }
}

TEST(BuildBsos, SquareIsItsOwnCertificate) {
  const auto inst = load_fixture("sq.pop");
  const auto p = build_bsos(inst, 1, 1);
  const auto r = solve(p);
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  EXPECT_NEAR(r.objective, 0.0, 1e-7);
  Eigen::Matrix2d Q;
  Q << 1, -2, -2, 4;
  EXPECT_LT((r.psd_values.at(0) - Q).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(BuildBsos, KZeroMatchesLp) {
  for (const auto& inst : bsos::testing::random_suite(6)) {
    for (int d = 1; d <= 2; ++d) {
      const auto lp = solve(build_lp(inst, d));
      const auto b0 = solve(build_bsos(inst, d, 0));
      ASSERT_EQ(lp.status, b0.status) << inst.name << " d=" << d;
      if (lp.status == SolveStatus::Optimal) EXPECT_NEAR(lp.objective, b0.objective, 1e-6) << inst.name;
    }
  }
}

TEST(BuildBsos, ConvexQp) {
  EXPECT_NEAR(optimum(build_bsos(load_fixture("qp.pop"), 1, 1)), 0.125, 1e-6);
}

TEST(BuildBsos, BlockSizeIndependentOfD) {
  for (const auto& inst : bsos::testing::random_suite(8)) {
    for (int k = 0; k <= 1; ++k) {
      for (int d = 1; d <= 3; ++d) {
        const auto p = build_bsos(inst, d, k);
        ASSERT_EQ(p.psd_sizes.size(), 1u);
        EXPECT_EQ(static_cast<std::uint64_t>(p.psd_sizes[0]), binomial(static_cast<int>(inst.n()) + p.k, p.k));
        if (2 * k <= p.degree_budget) EXPECT_EQ(p.k, k);
      }
    }
  }
}

TEST(BuildBsos, KIsClampedWithWarning) {
  const auto p = build_bsos(load_fixture("sq.pop"), 1, 2);
  EXPECT_EQ(p.k, 1);
  ASSERT_EQ(p.warnings.size(), 1u);
  EXPECT_NE(p.warnings[0].find("clamped"), std::string::npos);
  EXPECT_TRUE(build_bsos(load_fixture("sq.pop"), 1, 1).warnings.empty());
  EXPECT_THROW(build_bsos(load_fixture("sq.pop"), 1, -1), ProblemError);
}

TEST(BuildPutinar, Examples) {
  EXPECT_NEAR(optimum(build_putinar(load_fixture("sq.pop"), 1)), 0.0, 1e-6);
  EXPECT_NEAR(optimum(build_putinar(load_fixture("qp.pop"), 1)), 0.125, 1e-6);
  EXPECT_NEAR(optimum(build_putinar(load_fixture("lin.pop"), 1)), 0.0, 1e-6);
}

TEST(BuildPutinar, BlockSizes) {
  const auto inst = load_fixture("qp.pop");
  const auto p = build_putinar(inst, 2);
  // sigma_0 of size C(2+2,2); multipliers g, u1, u2 and the complements 1-u1, 1-u2.
  const auto mult = putinar_multipliers(inst);
  ASSERT_EQ(mult.size(), 5u);
  ASSERT_EQ(p.psd_sizes.size(), 1 + mult.size());
  EXPECT_EQ(p.psd_sizes[0], 6);
  for (std::size_t j = 1; j < p.psd_sizes.size(); ++j) EXPECT_EQ(p.psd_sizes[j], 3);
  EXPECT_EQ(p.degree_budget, 4);
}

TEST(BuildPutinar, DegreeFloor) {
  EXPECT_THROW(build_putinar(load_fixture("quartic4.pop"), 1), ProblemError);
  EXPECT_NO_THROW(build_putinar(load_fixture("quartic4.pop"), 2));
  EXPECT_THROW(build_putinar(load_fixture("sq.pop"), 0), ProblemError);
}

TEST(BuildRlt01, SingleBinary) {
  const auto inst = from_text("vars: x\nminimize: x\nbinary: x\n");
  const auto p = build_rlt01(inst, 1);
  EXPECT_NEAR(optimum(p), 0.0, 1e-7);
  EXPECT_NEAR(solve_lp_reference(p).objective, 0.0, 1e-9);
}

TEST(BuildRlt01, TriangleCut) {
  const auto inst = k3();
  const auto p1 = build_rlt01(inst, 1);
  const auto ref = solve_lp_reference(p1);
  const auto ipm = solve(p1);
  ASSERT_EQ(ref.status, ipm.status);
  if (ipm.status == SolveStatus::Optimal) {
    EXPECT_NEAR(ipm.objective, ref.objective, 1e-6);
    EXPECT_LE(ipm.objective, -2.0 + 1e-6);
  }
  int exact_d = -1;
  for (int d = 1; d <= 3 && exact_d < 0; ++d) {
    const auto r = solve(build_rlt01(inst, d));
    if (r.status == SolveStatus::Optimal && std::abs(r.objective + 2.0) <= 1e-6) exact_d = d;
  }
  EXPECT_GE(exact_d, 1);
  EXPECT_LE(exact_d, 3);
}

TEST(BuildRlt01, TermStructure) {
  const auto inst = from_text("vars: a b c\nminimize: a\nst: 2 - a - b - c >= 0\nbinary: a b c\n");
  const auto terms = rlt_terms(inst, 2);
  // |I u J| <= 2 on 3 variables: 1 + 3*2 + 3*4 = 19 sets, times 2 for l = 0, 1, minus the empty l = 0 term.
  EXPECT_EQ(terms.size(), 2u * 19u - 1u);
  for (const auto& t : terms) {
    EXPECT_LE(t.I.size() + t.J.size(), 2u);
    for (auto i : t.I) EXPECT_EQ(std::count(t.J.begin(), t.J.end(), i), 0);
  }
  const auto p = build_rlt01(inst, 2);
  // h_i of degree <= d - 1 = 1 per variable.
  EXPECT_EQ(p.num_free, 1u + 3u * 4u);
  EXPECT_EQ(p.degree_budget, 3);
}

TEST(BuildRlt01, Preconditions) {
  EXPECT_THROW(build_rlt01(load_fixture("lin.pop"), 1), ProblemError);
  EXPECT_THROW(build_rlt01(from_text("vars: a b\nminimize: a\nst: 1 - a*b >= 0\nbinary: a b\n"), 1), ProblemError);
  EXPECT_THROW(build_bsos01(load_fixture("qp.pop"), 1, 1), ProblemError);
  EXPECT_THROW(build_rlt01(k3(), 0), ProblemError);
}

TEST(BuildBsos01, KZeroMatchesRlt) {
  const auto inst = k3();
  for (int d = 1; d <= 3; ++d) {
    const auto a = solve(build_rlt01(inst, d));
    const auto b = solve(build_bsos01(inst, d, 0));
    ASSERT_EQ(a.status, b.status) << d;
    if (a.status == SolveStatus::Optimal) EXPECT_NEAR(a.objective, b.objective, 1e-6) << d;
  }
}

TEST(BuildBsos01, TriangleCutLevelTwo) {
  const auto inst = k3();
  const double q = optimum(build_bsos01(inst, 2, 1));
  const double theta = optimum(build_rlt01(inst, 2));
  const double gamma = optimum(build_putinar(inst, 1));
  EXPECT_GE(q, theta - 1e-6);
  EXPECT_GE(q, gamma - 1e-6);
  EXPECT_LE(q, -2.0 + 1e-6);
  const auto p = build_bsos01(inst, 2, 1);
  ASSERT_EQ(p.psd_sizes.size(), 1u);
  EXPECT_EQ(p.psd_sizes[0], 4);
}

TEST(CanonicalDump, Golden) {
  EXPECT_EQ(build_lp(load_fixture("lin.pop"), 1).dump(), read_golden("lp_lin_d1.txt"));
  EXPECT_EQ(build_bsos(load_fixture("sq.pop"), 1, 1).dump(), read_golden("bsos_sq_d1_k1.txt"));
  EXPECT_EQ(build_rlt01(from_text("vars: x\nminimize: x\nbinary: x\n"), 1).dump(), read_golden("rlt01_x_d1.txt"));
}

TEST(CanonicalDump, Deterministic) {
  const auto inst = load_fixture("qp.pop");
  EXPECT_EQ(build_putinar(inst, 2).dump(), build_putinar(inst, 2).dump());
  EXPECT_EQ(build_bsos(inst, 2, 1).dump(), build_bsos(inst, 2, 1).dump());
}

TEST(Certificate, FromLinearSolve) {
  const auto inst = load_fixture("lin.pop");
  const auto p = build_lp(inst, 1);
  const auto cert = make_certificate(inst, p, solve(p));
  EXPECT_EQ(cert.hierarchy, Hierarchy::Lp);
  EXPECT_NEAR(cert.t, 0.0, 1e-7);
  EXPECT_NEAR(cert.lambda.at(1), 1.0, 1e-7);
  EXPECT_TRUE(cert.satisfies_sign_conditions());
  EXPECT_NEAR(cert.bound_original_units, cert.t, 0.0);

  Certificate bad = cert;
  bad.lambda[0] = -1e-6;
  EXPECT_FALSE(bad.satisfies_sign_conditions());
  bad = cert;
  bad.gram.push_back((Eigen::Matrix2d() << 1, 0, 0, -1e-3).finished());
  EXPECT_FALSE(bad.satisfies_sign_conditions());
}

TEST(Certificate, BoundInOriginalUnits) {
  const auto inst = from_text("vars: x\nminimize: x\nst: x >= -1\nbox: -2 2\noffset: 3\nscale: 2\n");
  const auto p = build_lp(inst, 1);
  const auto r = solve(p);
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  const auto cert = make_certificate(inst, p, r);
  EXPECT_NEAR(cert.bound_original_units, 2.0 * r.objective + 3.0, 1e-12);
  EXPECT_NEAR(r.objective, -1.0, 1e-6);
}
