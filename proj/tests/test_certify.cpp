#include <gtest/gtest.h>

#include <random>

#include "bsos/certify.hpp"
#include "bsos/relax.hpp"
#include "bsos/solver.hpp"
#include "test_support.hpp"

using namespace bsos;
using bsos::testing::from_text;
using bsos::testing::load_fixture;

namespace {

Certificate solve_certificate(const ProblemInstance& inst, Hierarchy h, int d, int k, const SolverConfig& cfg = {}) {
  const auto prog = build_relaxation(inst, h, d, k);
  const auto res = solve(prog, cfg);
  EXPECT_EQ(res.status, SolveStatus::Optimal) << res.message;
  return make_certificate(inst, prog, res);
}

// Hand certificate of q^1_1 on (2x-1)^2: t = 0, lambda = 0, Q = Gram of f.
Certificate square_hand_certificate(const ProblemInstance& inst) {
  Certificate c;
  c.hierarchy = Hierarchy::Bsos;
  c.d = 1;
  c.k = 1;
  c.t = 0.0;
  c.lambda = {{0, 0.0}, {1, 0.0}};
  c.gram = {(Eigen::Matrix2d() << 1, -2, -2, 4).finished()};
  c.h.assign(inst.n(), Polynomial(inst.n()));
  return c;
}

}  // namespace

TEST(VerifyCertificate, HandCertificateIsExact) {
  const auto inst = load_fixture("sq.pop");
  EXPECT_EQ(verify_certificate(inst, square_hand_certificate(inst), 1, 1), 0.0);
}

TEST(VerifyCertificate, PerturbationShowsInResidual) {
  const auto inst = load_fixture("sq.pop");
  auto c = square_hand_certificate(inst);
  c.lambda[1] = 1e-3;  // pair (1)(0): x
  EXPECT_NEAR(verify_certificate(inst, c, 1, 1), 1e-3, 1e-15);
}

TEST(VerifyCertificate, SolverOutputOnConvexQp) {
  const auto inst = load_fixture("qp.pop");
  for (auto [h, d, k] : {std::tuple{Hierarchy::Bsos, 1, 1}, {Hierarchy::Putinar, 1, 0}, {Hierarchy::Lp, 2, 0}}) {
    const auto c = solve_certificate(inst, h, d, k);
    EXPECT_LE(verify_certificate(inst, c, d, c.k), kCertificateTolerance) << hierarchy_name(h);
    EXPECT_TRUE(c.satisfies_sign_conditions());
  }
}

TEST(VerifyCertificate, ZeroOneHierarchies) {
  const auto inst = load_fixture("cut3.pop");
  for (auto [h, d, k] : {std::tuple{Hierarchy::Rlt01, 3, 0}, {Hierarchy::Bsos01, 2, 1}, {Hierarchy::Putinar, 1, 0}}) {
    const auto c = solve_certificate(inst, h, d, k);
    EXPECT_LE(verify_certificate(inst, c, d, c.k), kCertificateTolerance) << hierarchy_name(h);
  }
}

TEST(VerifyCertificate, MismatchErrors) {
  const auto inst = load_fixture("sq.pop");
  auto c = square_hand_certificate(inst);
  EXPECT_THROW(verify_certificate(inst, c, 2, 1), std::invalid_argument);
  EXPECT_THROW(verify_certificate(inst, c, 1, 0), std::invalid_argument);
  auto wrong_n = c;
  wrong_n.h.assign(2, Polynomial(2));
  EXPECT_THROW(verify_certificate(inst, wrong_n, 1, 1), std::invalid_argument);
  auto wrong_gram = c;
  wrong_gram.gram = {Eigen::MatrixXd::Identity(3, 3)};
  EXPECT_THROW(verify_certificate(inst, wrong_gram, 1, 1), std::invalid_argument);
  auto wrong_lambda = c;
  wrong_lambda.lambda[7] = 1.0;
  EXPECT_THROW(verify_certificate(inst, wrong_lambda, 1, 1), std::invalid_argument);
}

TEST(VerifyCertificate, EvaluationConsistency) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& inst : bsos::testing::random_suite(6)) {
    const auto prog = build_bsos(inst, 2, 1);
    const auto res = solve(prog);
    if (res.status != SolveStatus::Optimal) continue;
    const auto c = make_certificate(inst, prog, res);
    const Polynomial rhs = certificate_rhs(inst, c, 2, c.k);
    const double residual = verify_certificate(inst, c, 2, c.k);
    const auto terms = static_cast<double>((inst.objective - rhs).num_terms());
    for (int s = 0; s < 100; ++s) {
      std::vector<double> x(inst.n());
      for (auto& v : x) v = u(rng);
      // max |x^gamma| <= 1 on the unit box
      EXPECT_LE(std::abs(inst.objective.eval(x) - rhs.eval(x)), residual * terms + 1e-15) << inst.name;
    }
  }
}

TEST(Oracle, Enumerate) {
  const auto o = oracle_enumerate(load_fixture("cut3.pop"));
  EXPECT_EQ(o.value, -2.0);
  EXPECT_EQ(o.kind, OracleKind::Enumerate);
  EXPECT_EQ(load_fixture("cut3.pop").objective.eval(o.minimizer), -2.0);
}

TEST(Oracle, GridOnFixtures) {
  const auto qp = oracle_grid(load_fixture("qp.pop"));
  EXPECT_NEAR(qp.value, 0.125, 1e-9);
  EXPECT_NEAR(qp.minimizer[0], 0.25, 1e-4);
  EXPECT_NEAR(qp.minimizer[1], 0.25, 1e-4);
  const auto sq = oracle_grid(load_fixture("sq.pop"));
  EXPECT_NEAR(sq.value, 0.0, 1e-12);
}

TEST(Oracle, AgreesWithBruteForce) {
  for (const auto& inst : bsos::testing::random_suite()) {
    const auto o = oracle_grid(inst);
    ASSERT_TRUE(inst.is_feasible(o.minimizer, 0.0)) << inst.name;
    EXPECT_NEAR(o.value, inst.objective.eval(o.minimizer), 1e-12);
    // The oracle value is attained at a feasible point and should beat grids finer than its own.
    for (int per_axis : {11, 41, inst.n() <= 2 ? 401 : 61}) {
      EXPECT_LE(o.value, bsos::testing::brute_force_grid_min(inst, per_axis) + 1e-12) << inst.name << " " << per_axis;
    }
  }
}

TEST(Oracle, ScopeErrors) {
  EXPECT_THROW(oracle_grid(load_fixture("quartic4.pop")), ScopeError);
  EXPECT_THROW(oracle_enumerate(load_fixture("qp.pop")), ScopeError);
  std::string text = "vars:";
  for (int i = 0; i < 13; ++i) text += " x" + std::to_string(i);
  text += "\nminimize: x0\nbinary:";
  for (int i = 0; i < 13; ++i) text += " x" + std::to_string(i);
  EXPECT_THROW(oracle_enumerate(from_text(text)), ScopeError);
}

TEST(Exactness, Examples) {
  const auto qp = load_fixture("qp.pop");
  const auto r = solve(build_bsos(qp, 1, 1));
  const auto e = exactness_check(qp, r.objective, OracleKind::Grid);
  EXPECT_TRUE(e.exact);
  EXPECT_TRUE(e.sound);
  EXPECT_LE(e.gap, 1e-5);

  const auto sq = load_fixture("sq.pop");
  const auto t2 = solve(build_lp(sq, 2));
  const auto e2 = exactness_check(sq, t2.objective, OracleKind::Grid);
  EXPECT_FALSE(e2.exact);
  EXPECT_NEAR(e2.gap, 1.0, 1e-6);

  const auto unsound = exactness_check(1.0, OracleResult{0.5, {0.0}, OracleKind::Grid});
  EXPECT_FALSE(unsound.sound);
}

TEST(Exactness, ConstantObjective) {
  const auto cont = from_text("vars: x y\nminimize: 3\nst: x + y - 0.5 >= 0\nbox: 0 1\n");
  for (auto h : {Hierarchy::Lp, Hierarchy::Bsos, Hierarchy::Putinar}) {
    const auto r = solve(build_relaxation(cont, h, 1, 1));
    ASSERT_EQ(r.status, SolveStatus::Optimal);
    const auto e = exactness_check(cont, r.objective, OracleKind::Grid);
    EXPECT_TRUE(e.exact) << hierarchy_name(h);
    EXPECT_NEAR(e.gap, 0.0, 1e-7);
  }
  const auto bin = from_text("vars: a b\nminimize: -1.5\nbinary: a b\n");
  for (auto h : {Hierarchy::Rlt01, Hierarchy::Bsos01}) {
    const auto r = solve(build_relaxation(bin, h, 1, 1));
    ASSERT_EQ(r.status, SolveStatus::Optimal);
    EXPECT_NEAR(exactness_check(bin, r.objective, OracleKind::Enumerate).gap, 0.0, 1e-7);
  }
}

TEST(Variety, LinearObjective) {
  const auto inst = load_fixture("lin.pop");
  const auto c = solve_certificate(inst, Hierarchy::Lp, 1, 0);
  const auto rep = extract_variety(inst, c, {0.0});
  ASSERT_EQ(rep.omega.size(), 1u);
  EXPECT_EQ(rep.omega[0].alpha, std::vector<int>{1});
  EXPECT_EQ(rep.omega[0].beta, std::vector<int>{0});
  EXPECT_EQ(rep.omega[0].J1, std::vector<std::size_t>{1});
  EXPECT_TRUE(rep.omega[0].generator.approx_equal(Polynomial::variable(1, 0)));
  EXPECT_EQ(rep.active_g, std::vector<std::size_t>{1});
  EXPECT_TRUE(rep.generators_vanish);
  ASSERT_EQ(rep.samples.size(), 1u);
  EXPECT_NEAR(rep.samples[0][0], 0.0, 1e-9);
  EXPECT_EQ(rep.constancy, Constancy::Constant);
  EXPECT_EQ(rep.threshold, 1e-7);
}

TEST(Variety, ConvexQpIsMinimizedOnV) {
  const auto inst = load_fixture("qp.pop");
  SolverConfig tight;
  tight.tolerance = 1e-10;
  const auto c = solve_certificate(inst, Hierarchy::Bsos, 1, 1, tight);
  const auto o = oracle_grid(inst);
  const auto rep = extract_variety(inst, c, o.minimizer);
  ASSERT_EQ(rep.omega.size(), 1u);
  // the only active pair is g_1 itself
  EXPECT_EQ(rep.omega[0].J1, std::vector<std::size_t>{1});
  EXPECT_TRUE(rep.omega[0].J2.empty());
  EXPECT_EQ(rep.active_g, std::vector<std::size_t>{1});
  EXPECT_TRUE(rep.generators_vanish);
  EXPECT_TRUE(rep.sigma_vanishes);
  EXPECT_GT(rep.samples.size(), 1u);
  EXPECT_EQ(rep.constancy, Constancy::Minimized);
  EXPECT_TRUE(rep.witnesses.empty());
}

TEST(Variety, BinaryInteriorMinimizer) {
  // a + b <= 2 is never active on {0,1}^2.
  const auto inst = from_text("vars: a b\nminimize: b - a + a*b\nst: 2 - a - b >= 0\nbinary: a b\n");
  const auto o = oracle_enumerate(inst);
  ASSERT_EQ(o.value, -1.0);
  SolverConfig tight;
  tight.tolerance = 1e-10;
  const auto c = solve_certificate(inst, Hierarchy::Rlt01, 2, 0, tight);
  ASSERT_TRUE(exactness_check(c.t, o).exact);
  const auto rep = extract_variety(inst, c, o.minimizer);
  // constraint 1 is the user constraint; the rest are box constraints
  ASSERT_EQ(inst.constraint_info[0].origin, ConstraintOrigin::Inequality);
  EXPECT_EQ(std::count(rep.active_g.begin(), rep.active_g.end(), 1u), 0);
  EXPECT_EQ(std::count(rep.active_one_minus_g.begin(), rep.active_one_minus_g.end(), 1u), 0);
  const auto terms = rlt_terms(inst, 2);
  for (const auto& e : rep.omega) {
    const auto& term = terms.at(e.index);
    double prod = 1.0;
    for (auto i : term.I) prod *= o.minimizer[i];
    for (auto j : term.J) prod *= 1.0 - o.minimizer[j];
    EXPECT_NEAR(prod, 0.0, 1e-8) << e.label;
  }
  EXPECT_TRUE(rep.generators_vanish);
  ASSERT_FALSE(rep.samples.empty());
  for (const auto& s : rep.samples) EXPECT_NEAR(inst.objective.eval(s), -1.0, 1e-6);
}

TEST(Variety, Errors) {
  const auto inst = load_fixture("sq.pop");
  auto c = square_hand_certificate(inst);
  c.t = 0.5;  // residual 0.5
  EXPECT_THROW(extract_variety(inst, c, {0.5}), std::invalid_argument);
  EXPECT_THROW(extract_variety(inst, square_hand_certificate(inst), {0.5, 0.5}), std::invalid_argument);
}

TEST(Variety, ThresholdIsConfigurable) {
  const auto inst = load_fixture("lin.pop");
  const auto c = solve_certificate(inst, Hierarchy::Lp, 1, 0);
  VarietyOptions opt;
  opt.threshold = 2.0;
  const auto rep = extract_variety(inst, c, {0.0}, opt);
  EXPECT_TRUE(rep.omega.empty());
  EXPECT_EQ(rep.threshold, 2.0);
}
