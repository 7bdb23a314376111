#include <gtest/gtest.h>

#include <random>

#include "bsos/certify.hpp"
#include "bsos/problem.hpp"
#include "bsos/problem_io.hpp"
#include "test_support.hpp"

using namespace bsos;
using bsos::testing::from_text;
using bsos::testing::load_fixture;

TEST(Parse, UnivariateSquare) {
  const auto p = parse_problem("vars: x\nminimize: 4*x^2 - 4*x + 1\nbox: 0 1");
  ASSERT_EQ(p.n(), 1u);
  EXPECT_EQ(p.m(), 0u);
  EXPECT_DOUBLE_EQ(p.objective.coefficient(Monomial({2})), 4.0);
  EXPECT_DOUBLE_EQ(p.objective.coefficient(Monomial({1})), -4.0);
  EXPECT_DOUBLE_EQ(p.objective.constant_term(), 1.0);
  EXPECT_EQ(p.kinds[0].lo, 0.0);
  EXPECT_EQ(p.kinds[0].hi, 1.0);
  EXPECT_FALSE(p.normalized);
}

TEST(Parse, UnknownVariable) {
  try {
    parse_problem("vars: x\nminimize: y\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("unknown variable y"), std::string::npos);
  }
}

TEST(Parse, SyntaxErrorsCarryLineAndColumn) {
  try {
    parse_problem("vars: x\n\nminimize: x + * 2\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_GT(e.column(), 1);
  }
  EXPECT_THROW(parse_problem("minimize: x\n"), ParseError);
  EXPECT_THROW(parse_problem("vars: x\n"), ParseError);
  EXPECT_THROW(parse_problem("vars: x\nminimize: x\nst: x\n"), ParseError);
  EXPECT_THROW(parse_problem("vars: x\nminimize: x\nfoo: 1\n"), ParseError);
  EXPECT_THROW(parse_problem("vars: x x\nminimize: x\n"), ParseError);
}

TEST(Parse, NonFiniteLiteral) {
  EXPECT_THROW(parse_problem("vars: x\nminimize: inf*x\n"), ParseError);
  EXPECT_THROW(parse_problem("vars: x\nminimize: 1e999*x\n"), ParseError);
  EXPECT_THROW(parse_problem("vars: x\nminimize: x\nbox: 0 nan\n"), ParseError);
}

TEST(Parse, EqualityIsSplit) {
  const auto p = parse_problem("vars: x y\nminimize: x\nst: x + y == 1\nst: x <= 0.5\nbox: 0 1\n");
  ASSERT_EQ(p.m(), 3u);
  EXPECT_EQ(p.constraint_info[0].origin, ConstraintOrigin::EqualitySplit);
  EXPECT_TRUE((p.constraints[0] + p.constraints[1]).is_zero());
  const double pt[] = {0.25, 0.0};
  EXPECT_DOUBLE_EQ(p.constraints[2].eval(pt), 0.25);
}

TEST(Serialize, RoundTripRaw) {
  const auto p = parse_problem("vars: x y\nminimize: x*y - 0.3*x^2\nst: x + y == 1\nbox x: -1 2\nbox y: 0 3\n");
  EXPECT_EQ(parse_problem(serialize_problem(p)), p);
}

TEST(Serialize, RoundTripNormalizedFixtures) {
  for (const char* name : {"qp.pop", "sq.pop", "lin.pop", "cut3.pop", "quartic4.pop"}) {
    const auto p = load_fixture(name);
    EXPECT_EQ(parse_problem(serialize_problem(p)), p) << name;
  }
  for (const auto& p : bsos::testing::random_suite(10)) EXPECT_EQ(parse_problem(serialize_problem(p)), p) << p.name;
}

TEST(Normalize, AffineSubstitution) {
  const auto p = from_text("vars: x\nminimize: x^2\nbox: -1 1\n");
  const Polynomial u = Polynomial::variable(1, 0);
  const Polynomial expect = (u * 2.0 - Polynomial::constant(1, 1.0)).pow(2);
  EXPECT_TRUE(p.objective.approx_equal(expect));
  EXPECT_EQ(p.objective_offset, 0.0);
  EXPECT_EQ(p.objective_scale, 1.0);
  ASSERT_EQ(p.transform.size(), 1u);
  EXPECT_EQ(p.transform[0].offset, -1.0);
  EXPECT_EQ(p.transform[0].width, 2.0);
  const double u0[] = {0.75};
  EXPECT_DOUBLE_EQ(p.to_original_point(u0)[0], 0.5);
}

TEST(Normalize, IntervalScaling) {
  const auto p = from_text("vars: x1 x2\nminimize: x1\nst: x1 + x2 - 0.5 >= 0\nbox: 0 1\n");
  const auto& g = p.constraints[0];
  EXPECT_NEAR(g.coefficient(Monomial({1, 0})), 1.0 / 1.5, 1e-15);
  EXPECT_NEAR(g.constant_term(), -0.5 / 1.5, 1e-15);
  EXPECT_EQ(p.constraint_info[0].hi, 1.0);
}

TEST(Normalize, BoxConstraintsPresent) {
  const auto p = from_text("vars: x1 x2\nminimize: x1\nst: x1 + x2 - 0.5 >= 0\nbox: 0 1\n");
  // u1 and u2 are appended; 1 - u_i comes from the (1 - g) factors.
  ASSERT_EQ(p.m(), 3u);
  EXPECT_EQ(p.constraint_info[1].origin, ConstraintOrigin::Box);
  EXPECT_EQ(p.constraint_info[2].origin, ConstraintOrigin::Box);
  EXPECT_TRUE(p.constraints[1].approx_equal(Polynomial::variable(2, 0)));
  EXPECT_TRUE(p.constraints[2].approx_equal(Polynomial::variable(2, 1)));
  for (const auto& info : p.constraint_info) {
    EXPECT_GE(info.lo, 0.0);
    EXPECT_LE(info.hi, 1.0);
  }
}

TEST(Normalize, Idempotent) {
  const auto p = load_fixture("qp.pop");
  EXPECT_EQ(normalize(p), p);
}

TEST(Normalize, Errors) {
  EXPECT_THROW(from_text("vars: x\nminimize: x\n"), ProblemError);
  EXPECT_THROW(from_text("vars: x\nminimize: x\nst: -1 - x >= 0\nbox: 0 1\n"), ProblemError);
  EXPECT_THROW(from_text("vars: x\nminimize: x\nbox: 1 1\n"), ProblemError);
}

TEST(Normalize, PreservesOptimum) {
  const char* texts[] = {
      "vars: x\nminimize: x^2 - x\nbox: -2 3\n",
      "vars: x y\nminimize: x*y + 0.5*x\nst: x + y >= 0\nbox x: -1 2\nbox y: -2 1\n",
      "vars: x y\nminimize: (x - 1)^2 + (y + 0.5)^2\nst: 4 - x^2 - y^2 >= 0\nbox: -2 2\n",
  };
  for (const char* t : texts) {
    const auto raw = parse_problem(t);
    const auto norm = normalize(raw);
    // Grid over the original box.
    const int N = 201;
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> idx(raw.n(), 0);
    std::vector<double> x(raw.n());
    while (true) {
      for (std::size_t i = 0; i < raw.n(); ++i) x[i] = raw.kinds[i].lo + (raw.kinds[i].hi - raw.kinds[i].lo) * idx[i] / (N - 1);
      bool ok = true;
      for (const auto& g : raw.constraints) ok = ok && g.eval(x) >= 0.0;
      if (ok) best = std::min(best, raw.objective.eval(x));
      std::size_t pos = 0;
      while (pos < raw.n() && ++idx[pos] == N) idx[pos++] = 0;
      if (pos == raw.n()) break;
    }
    const double normalized_best = bsos::testing::brute_force_grid_min(norm, N);
    EXPECT_NEAR(norm.to_original_units(normalized_best), best, 1e-9) << t;
  }
}

TEST(LiftProducts, SingleConstraint) {
  const auto p = from_text("vars: x\nminimize: x\nst: x >= 0\nbox: 0 1\n");
  ASSERT_EQ(p.m(), 1u);
  const auto l1 = lift_products(p, 1);
  ASSERT_EQ(l1.size(), 2u);
  const Polynomial x = Polynomial::variable(1, 0), one = Polynomial::constant(1, 1.0);
  EXPECT_TRUE(l1.pairs[0].poly.approx_equal(one - x));
  EXPECT_TRUE(l1.pairs[1].poly.approx_equal(x));

  const auto l2 = lift_products(p, 2);
  ASSERT_EQ(l2.size(), 5u);
  std::vector<Polynomial> expect = {one - x, x, (one - x).pow(2), x * (one - x), x * x};
  for (const auto& e : expect) {
    bool found = false;
    for (const auto& pr : l2.pairs) found = found || pr.poly.approx_equal(e);
    EXPECT_TRUE(found) << e.to_string();
  }
  EXPECT_TRUE(l2.empty_pair.approx_equal(one));
}

TEST(LiftProducts, TwoConstraintsLevelTwo) {
  const auto p = from_text("vars: x1 x2\nminimize: x1\nst: x1 >= 0\nst: x2 >= 0\nbox: 0 1\n");
  ASSERT_EQ(p.m(), 2u);
  EXPECT_EQ(lift_products(p, 2).size(), 14u);
}

TEST(LiftProducts, Errors) {
  const auto p = load_fixture("lin.pop");
  EXPECT_THROW(lift_products(p, 0), ProblemError);
  EXPECT_THROW(lift_products(parse_problem("vars: x\nminimize: x\nbox: 0 1\n"), 1), ProblemError);
}

TEST(LiftProducts, PairCountFormula) {
  for (int m = 1; m <= 3; ++m) {
    ProblemInstance inst;
    for (int i = 0; i < m; ++i) {
      inst.var_names.push_back("x" + std::to_string(i));
      inst.kinds.push_back(VariableDomain::box(0, 1));
    }
    inst.objective = Polynomial(static_cast<std::size_t>(m));
    const auto norm = normalize(inst);
    ASSERT_EQ(norm.m(), static_cast<std::size_t>(m));
    for (int d = 1; d <= 4; ++d) {
      const auto lift = lift_products(norm, d);
      EXPECT_EQ(lift.size(), binomial(2 * m + d, d) - 1);
      for (std::size_t i = 0; i < lift.size(); ++i) {
        const auto& pr = lift.pairs[i];
        EXPECT_LE(pr.order(), d);
        EXPECT_LE(pr.poly.degree(), d * norm.max_constraint_degree());
        const auto cp = constraint_product(norm.constraints, pr.alpha, pr.beta);
        EXPECT_TRUE(pr.poly.approx_equal(cp));
      }
    }
  }
}

TEST(LiftProducts, NonnegativeOnFeasibleSamples) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& inst : bsos::testing::random_suite(8)) {
    const auto lift = lift_products(inst, 3);
    int accepted = 0;
    double worst = 0.0;
    for (int tries = 0; tries < 200000 && accepted < 1000; ++tries) {
      std::vector<double> x(inst.n());
      for (auto& v : x) v = u(rng);
      if (!inst.is_feasible(x, 0.0)) continue;
      ++accepted;
      for (const auto& pr : lift.pairs) worst = std::min(worst, pr.poly.eval(x));
    }
    EXPECT_EQ(accepted, 1000) << inst.name;
    EXPECT_GE(worst, -1e-9) << inst.name;
  }
}
