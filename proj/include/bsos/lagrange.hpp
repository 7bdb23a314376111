#pragma once

// Lagrangian side: L_d(x, lambda) = f - sum lambda_ab p_ab, the dual function
// G_d(lambda) = min over R^n of L_d, and projected supgradient ascent on G_d.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bsos/polynomial.hpp"
#include "bsos/problem.hpp"
#include "bsos/relax.hpp"
#include "bsos/solver.hpp"

namespace bsos {

enum class GMethod { Auto, UnivariateRoots, ConvexDescent, MultistartGrid };
enum class GQuality { CertifiedExact, Heuristic };

inline const char* quality_name(GQuality q) { return q == GQuality::CertifiedExact ? "certified" : "heuristic"; }

inline GMethod parse_g_method(const std::string& s) {
  if (s == "auto") return GMethod::Auto;
  if (s == "univariate-roots") return GMethod::UnivariateRoots;
  if (s == "convex-descent") return GMethod::ConvexDescent;
  if (s == "multistart-grid") return GMethod::MultistartGrid;
  throw std::invalid_argument("unknown G evaluation method '" + s + "'");
}

struct GValue {
  double value = 0.0;  // -inf when L_d is unbounded below
  std::vector<double> minimizer;
  GQuality quality = GQuality::Heuristic;
  std::vector<double> supgradient;
  std::string method;
  bool unbounded() const { return std::isinf(value) && value < 0; }
};

/// Coefficients of L_d below this fraction of its largest coefficient are
/// treated as numerical cancellation.
inline constexpr double kLagrangianCancellation = 1e-8;

/// f - sum_i lambda_i p_i over the pairs of lift_products(instance, d).
inline Polynomial assemble_lagrangian(const ProblemInstance& inst, int d, const std::vector<double>& lambda) {
  const auto lift = lift_products(inst, d);
  if (lambda.size() != lift.size()) {
    throw std::invalid_argument("assemble_lagrangian: lambda has " + std::to_string(lambda.size()) +
                                " entries, expected " + std::to_string(lift.size()));
  }
  Polynomial L = inst.objective;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (lambda[i] != 0.0) L = L - lift.pairs[i].poly * lambda[i];
  }
  return L;
}

namespace detail {

// Dense-evaluation form of a polynomial for repeated evaluation.
class FastPoly {
 public:
  explicit FastPoly(const Polynomial& p) : n_(p.num_vars()), deg_(p.degree()) {
    for (const auto& [m, c] : p.terms()) {
      exps_.insert(exps_.end(), m.exponents().begin(), m.exponents().end());
      coefs_.push_back(c);
    }
    pows_.resize(n_ * static_cast<std::size_t>(deg_ + 1));
  }
  double operator()(std::span<const double> x) const {
    for (std::size_t i = 0; i < n_; ++i) {
      double v = 1.0;
      for (int e = 0; e <= deg_; ++e) {
        pows_[i * static_cast<std::size_t>(deg_ + 1) + static_cast<std::size_t>(e)] = v;
        v *= x[i];
      }
    }
    double s = 0.0;
    for (std::size_t t = 0; t < coefs_.size(); ++t) {
      double term = coefs_[t];
      for (std::size_t i = 0; i < n_; ++i) {
        term *= pows_[i * static_cast<std::size_t>(deg_ + 1) + static_cast<std::size_t>(exps_[t * n_ + i])];
      }
      s += term;
    }
    return s;
  }

 private:
  std::size_t n_;
  int deg_;
  std::vector<int> exps_;
  std::vector<double> coefs_;
  mutable std::vector<double> pows_;
};

inline Polynomial drop_cancelled(const Polynomial& L) {
  const double scale = std::max(1.0, L.max_abs_coefficient());
  Polynomial out(L.num_vars());
  for (const auto& [m, c] : L.terms()) {
    if (std::abs(c) > kLagrangianCancellation * scale) out.add_term(m, c);
  }
  return out;
}

inline std::vector<double> supgradient_at(const ProductConstraintSet& lift, std::span<const double> x) {
  std::vector<double> g;
  g.reserve(lift.size());
  for (const auto& p : lift.pairs) g.push_back(-p.poly.eval(x));
  return g;
}

// Real roots of a univariate polynomial given by ascending coefficients.
inline std::vector<double> real_roots(std::vector<double> c) {
  while (!c.empty() && c.back() == 0.0) c.pop_back();
  const int deg = static_cast<int>(c.size()) - 1;
  if (deg < 1) return {};
  if (deg == 1) return {-c[0] / c[1]};
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -c[static_cast<std::size_t>(i)] / c.back();
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  std::vector<double> roots;
  for (int i = 0; i < deg; ++i) {
    const std::complex<double> z = es.eigenvalues()(i);
    if (std::abs(z.imag()) <= 1e-6 * (1.0 + std::abs(z.real()))) {
      double r = z.real();
      // Newton polish on the original coefficients.
      for (int it = 0; it < 20; ++it) {
        double p = 0.0, dp = 0.0;
        for (int e = deg; e >= 0; --e) {
          dp = dp * r + p;
          p = p * r + c[static_cast<std::size_t>(e)];
        }
        if (dp == 0.0) break;
        const double step = p / dp;
        r -= step;
        if (std::abs(step) <= 1e-16 * (1.0 + std::abs(r))) break;
      }
      roots.push_back(r);
    }
  }
  return roots;
}

inline GValue eval_univariate(const Polynomial& Lraw, const ProductConstraintSet& lift) {
  const Polynomial L = drop_cancelled(Lraw);
  GValue gv;
  gv.method = "univariate-roots";
  gv.quality = GQuality::CertifiedExact;
  const int D = L.degree();
  const double lead = L.coefficient(Monomial{D});
  if (D == 0) {
    gv.value = L.constant_term();
    gv.minimizer = {0.0};
    gv.supgradient = supgradient_at(lift, gv.minimizer);
    return gv;
  }
  if (D % 2 == 1 || lead < 0) {
    // Unbounded below along s with lead * s^D < 0.
    const double s = (D % 2 == 1) ? (lead > 0 ? -1.0 : 1.0) : 1.0;
    gv.value = -std::numeric_limits<double>::infinity();
    gv.minimizer = {s};
    const double sD = std::pow(s, D);
    for (const auto& p : lift.pairs) gv.supgradient.push_back(-p.poly.coefficient(Monomial{D}) * sD);
    return gv;
  }
  std::vector<double> dc(static_cast<std::size_t>(D), 0.0);
  for (const auto& [m, c] : L.terms()) {
    if (m[0] > 0) dc[static_cast<std::size_t>(m[0] - 1)] += c * m[0];
  }
  double best = std::numeric_limits<double>::infinity();
  double arg = 0.0;
  for (double r : real_roots(dc)) {
    const double v = L.eval(std::vector<double>{r});
    if (v < best || (v == best && r < arg)) {
      best = v;
      arg = r;
    }
  }
  gv.value = best;
  gv.minimizer = {arg};
  gv.supgradient = supgradient_at(lift, gv.minimizer);
  return gv;
}

// Quadratic form data of a degree <= 2 polynomial: L = c + b^T x + x^T H x / 2.
struct Quadratic {
  double c = 0.0;
  Eigen::VectorXd b;
  Eigen::MatrixXd H;
};

inline Quadratic quadratic_of(const Polynomial& L) {
  const auto n = static_cast<Eigen::Index>(L.num_vars());
  Quadratic q{0.0, Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
  for (const auto& [m, c] : L.terms()) {
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (int e = 0; e < m[i]; ++e) idx.push_back(static_cast<Eigen::Index>(i));
    }
    if (idx.empty()) {
      q.c += c;
    } else if (idx.size() == 1) {
      q.b(idx[0]) += c;
    } else if (idx[0] == idx[1]) {
      q.H(idx[0], idx[0]) += 2.0 * c;
    } else {
      q.H(idx[0], idx[1]) += c;
      q.H(idx[1], idx[0]) += c;
    }
  }
  return q;
}

inline bool is_convex_quadratic(const Polynomial& L) {
  if (L.degree() > 2) return false;
  const Quadratic q = quadratic_of(L);
  if (q.H.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q.H, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0) >= -kLagrangianCancellation * std::max(1.0, q.H.cwiseAbs().maxCoeff());
}

inline GValue eval_convex(const Polynomial& Lraw, const ProductConstraintSet& lift) {
  const Polynomial L = drop_cancelled(Lraw);
  const Quadratic q = quadratic_of(L);
  const std::size_t n = L.num_vars();
  GValue gv;
  gv.method = "convex-descent";
  gv.quality = GQuality::CertifiedExact;
  // One Newton step from 0 is exact for a quadratic; the minimum-norm
  // solution is taken when H is singular.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(q.H);
  cod.setThreshold(kLagrangianCancellation);
  Eigen::VectorXd x = n ? Eigen::VectorXd(-cod.solve(q.b)) : Eigen::VectorXd();
  const Eigen::VectorXd grad = q.H * x + q.b;
  const double bscale = 1.0 + (n ? q.b.lpNorm<Eigen::Infinity>() : 0.0);
  std::vector<double> xs(x.data(), x.data() + x.size());
  if (n && grad.lpNorm<Eigen::Infinity>() > 1e-8 * bscale) {
    // Gradient component in the null space of H: linear decrease along -grad.
    const Eigen::VectorXd v = -grad / grad.norm();
    gv.value = -std::numeric_limits<double>::infinity();
    std::vector<double> xv(n);
    for (std::size_t i = 0; i < n; ++i) xv[i] = xs[i] + v(static_cast<Eigen::Index>(i));
    gv.minimizer = xv;
    for (const auto& p : lift.pairs) gv.supgradient.push_back(-(p.poly.eval(xv) - p.poly.eval(xs)));
    return gv;
  }
  gv.minimizer = xs;
  gv.value = Lraw.eval(xs);
  gv.supgradient = supgradient_at(lift, xs);
  return gv;
}

inline int grid_points_per_axis(std::size_t n) {
  if (n <= 2) return 101;
  if (n == 3) return 41;
  return std::max(3, static_cast<int>(std::pow(2.0e5, 1.0 / static_cast<double>(n))));
}

inline GValue eval_grid(const Polynomial& L, const ProductConstraintSet& lift) {
  const std::size_t n = L.num_vars();
  const FastPoly fp(L);
  const int per_axis = grid_points_per_axis(n);
  std::vector<int> idx(n, 0);
  std::vector<double> x(n), best_x(n);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(idx[i]) / (per_axis - 1);
    const double v = fp(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
    std::size_t pos = 0;
    while (pos < n && ++idx[pos] == per_axis) idx[pos++] = 0;
    if (pos == n) break;
  }
  // Unconstrained compass polish.
  double step = 1.0 / (per_axis - 1);
  while (step > 1e-10) {
    bool improved = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (double dir : {-1.0, 1.0}) {
        x = best_x;
        x[i] += dir * step;
        const double v = fp(x);
        if (v < best) {
          best = v;
          best_x = x;
          improved = true;
        }
      }
    }
    if (improved) {
      step *= 2.0;
      if (step > 1e6) break;
    } else {
      step *= 0.5;
    }
  }
  GValue gv;
  gv.method = "multistart-grid";
  gv.quality = GQuality::Heuristic;
  gv.minimizer = best_x;
  gv.value = L.eval(best_x);
  gv.supgradient = supgradient_at(lift, best_x);
  return gv;
}

}  // namespace detail

/// G_d(lambda) with the requested method. Auto picks univariate roots for
/// n = 1, exact convex minimization for convex quadratics, and the grid
/// heuristic otherwise.
inline GValue eval_G(const ProblemInstance& inst, int d, const std::vector<double>& lambda, GMethod method = GMethod::Auto) {
  const auto lift = lift_products(inst, d);
  const Polynomial L = assemble_lagrangian(inst, d, lambda);
  const std::size_t n = inst.n();
  switch (method) {
    case GMethod::UnivariateRoots:
      if (n != 1) throw ScopeError("univariate root isolation requires n = 1");
      return detail::eval_univariate(L, lift);
    case GMethod::ConvexDescent:
      if (!detail::is_convex_quadratic(detail::drop_cancelled(L))) {
        throw ScopeError("L_d is not a convex quadratic; certified convex evaluation does not apply");
      }
      return detail::eval_convex(L, lift);
    case GMethod::MultistartGrid: return detail::eval_grid(L, lift);
    case GMethod::Auto:
      if (n == 1) return detail::eval_univariate(L, lift);
      if (detail::is_convex_quadratic(detail::drop_cancelled(L))) return detail::eval_convex(L, lift);
      return detail::eval_grid(L, lift);
  }
  throw std::logic_error("eval_G: unreachable");
}

struct AscentConfig {
  double a = 2.0;
  double b = 10.0;
  int iterations = 1000;
  GMethod method = GMethod::Auto;
  bool allow_heuristic = false;
  // Start from the multipliers of the theta_d LP when G(0) is -inf.
  bool warm_start = true;
};

struct AscentStep {
  int iter = 0;
  double G = 0.0;
  double step = 0.0;
  std::size_t active = 0;  // lambda entries > 0
};

struct AscentResult {
  double rho_estimate = -std::numeric_limits<double>::infinity();
  std::vector<double> lambda;  // multipliers attaining rho_estimate
  std::vector<double> minimizer;
  std::vector<AscentStep> trace;
  GQuality quality = GQuality::CertifiedExact;
  bool converged = false;         // projected supgradient vanished
  bool budget_exhausted = false;  // stopped at the iteration limit
  bool warm_started = false;
};

/// Projected supgradient ascent lambda <- max(0, lambda + a/(b+iter) * g).
inline AscentResult maximize_G(const ProblemInstance& inst, int d, const AscentConfig& cfg = {}) {
  if (cfg.iterations < 1) throw std::invalid_argument("maximize_G: iterations must be >= 1");
  if (!(cfg.a > 0) || !(cfg.b > 0)) throw std::invalid_argument("maximize_G: step parameters must be positive");
  const auto lift = lift_products(inst, d);
  std::vector<double> lambda(lift.size(), 0.0);
  AscentResult res;

  auto evaluate = [&](const std::vector<double>& lam) {
    GValue gv = eval_G(inst, d, lam, cfg.method);
    if (gv.quality == GQuality::Heuristic && !cfg.allow_heuristic) {
      throw ScopeError("G_d cannot be evaluated with a certificate for this instance; request heuristic mode");
    }
    return gv;
  };

  GValue gv = evaluate(lambda);
  if (gv.unbounded() && cfg.warm_start) {
    const auto sol = solve(build_lp(inst, d));
    if (sol.status == SolveStatus::Optimal) {
      // Entries at interior-point noise level are complementary zeros.
      for (std::size_t i = 0; i < lambda.size(); ++i) {
        lambda[i] = sol.nonneg_values[i] > 1e-7 ? sol.nonneg_values[i] : 0.0;
      }
      gv = evaluate(lambda);
      res.warm_started = true;
    }
  }

  for (int it = 0; it < cfg.iterations; ++it) {
    if (gv.quality == GQuality::Heuristic) res.quality = GQuality::Heuristic;
    if (gv.value > res.rho_estimate || res.lambda.empty()) {
      if (gv.value > res.rho_estimate) res.rho_estimate = gv.value;
      res.lambda = lambda;
      res.minimizer = gv.minimizer;
    }
    const double step = cfg.a / (cfg.b + it);
    double moved = 0.0;
    std::size_t active = 0;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
      const double next = std::max(0.0, lambda[i] + step * gv.supgradient[i]);
      moved = std::max(moved, std::abs(next - lambda[i]));
      lambda[i] = next;
      if (next > 0) ++active;
    }
    res.trace.push_back({it, gv.value, step, active});
    if (moved == 0.0) {
      res.converged = true;
      return res;
    }
    gv = evaluate(lambda);
  }
  if (gv.value > res.rho_estimate) {
    res.rho_estimate = gv.value;
    res.lambda = lambda;
    res.minimizer = gv.minimizer;
  }
  res.budget_exhausted = true;
  return res;
}

inline std::string ascent_trace_csv(const std::vector<AscentStep>& trace) {
  std::ostringstream os;
  os << "iter,G,step,active\n";
  char buf[64];
  for (const auto& s : trace) {
    std::snprintf(buf, sizeof buf, "%.17g", s.G);
    os << s.iter << "," << buf << ",";
    std::snprintf(buf, sizeof buf, "%.17g", s.step);
    os << buf << "," << s.active << "\n";
  }
  return os.str();
}

/// Largest t with L - t a degree-2k SOS (max over the Gram cone).
inline SolveResult sos_lower_bound(const Polynomial& L, int k, const SolverConfig& cfg = {}) {
  return solve(build_sos_bound(L, k), cfg);
}

}  // namespace bsos
