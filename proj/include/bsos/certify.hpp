#pragma once

// Certificate verification, oracle optima for small instances, exactness
// diagnostics and the obstruction variety of an exact certificate.

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bsos/polynomial.hpp"
#include "bsos/problem.hpp"
#include "bsos/relax.hpp"

namespace bsos {

inline constexpr double kCertificateTolerance = 1e-6;

/// The right-hand side t + (products) + (SOS) + (free multipliers) of a certificate.
inline Polynomial certificate_rhs(const ProblemInstance& inst, const Certificate& cert, int d, int k) {
  if (!inst.normalized) throw ProblemError("verify_certificate requires a normalized instance");
  if (cert.d != d) throw std::invalid_argument("certificate level does not match d");
  const std::size_t n = inst.n();
  if (cert.h.size() != n) throw std::invalid_argument("certificate multiplier count does not match the instance");
  Polynomial rhs = Polynomial::constant(n, cert.t);

  auto add_products = [&](const std::vector<Polynomial>& polys) {
    for (const auto& [i, v] : cert.lambda) {
      if (i >= polys.size()) throw std::invalid_argument("certificate lambda index out of range");
      rhs = rhs + polys[i] * v;
    }
  };
  auto add_sos = [&](std::size_t block, int degree) {
    if (block >= cert.gram.size()) throw std::invalid_argument("certificate is missing a Gram block");
    const GramBasis gb = gram_basis(n, degree);
    if (static_cast<std::size_t>(cert.gram[block].rows()) != gb.basis_size()) {
      throw std::invalid_argument("certificate Gram block has the wrong size");
    }
    return gb.sos_polynomial(cert.gram[block]);
  };
  auto add_h = [&]() {
    for (std::size_t i = 0; i < n; ++i) {
      if (cert.h[i].num_vars() != n) throw std::invalid_argument("certificate multiplier variable count mismatch");
      if (!cert.h[i].is_zero()) rhs = rhs + cert.h[i] * binary_identity(n, i);
    }
  };

  switch (cert.hierarchy) {
    case Hierarchy::Lp:
    case Hierarchy::Bsos: {
      std::vector<Polynomial> polys;
      for (auto& p : lift_products(inst, d).pairs) polys.push_back(std::move(p.poly));
      add_products(polys);
      if (cert.hierarchy == Hierarchy::Bsos) {
        if (cert.k != k) throw std::invalid_argument("certificate k does not match");
        rhs = rhs + add_sos(0, k);
      } else if (!cert.gram.empty()) {
        throw std::invalid_argument("LP certificate carries a Gram block");
      }
      break;
    }
    case Hierarchy::Rlt01:
    case Hierarchy::Bsos01: {
      std::vector<Polynomial> polys;
      for (auto& term : rlt_terms(inst, d)) polys.push_back(std::move(term.poly));
      add_products(polys);
      add_h();
      if (cert.hierarchy == Hierarchy::Bsos01) {
        if (cert.k != k) throw std::invalid_argument("certificate k does not match");
        rhs = rhs + add_sos(0, k);
      }
      break;
    }
    case Hierarchy::Putinar: {
      if (!cert.lambda.empty()) throw std::invalid_argument("Putinar certificate carries product multipliers");
      const auto mult = putinar_multipliers(inst);
      if (cert.gram.size() != mult.size() + 1) throw std::invalid_argument("Putinar certificate block count mismatch");
      rhs = rhs + add_sos(0, d);
      for (std::size_t j = 0; j < mult.size(); ++j) {
        rhs = rhs + add_sos(j + 1, putinar_sigma_degree(d, mult[j].degree())) * mult[j];
      }
      add_h();
      break;
    }
    default: throw std::invalid_argument("verify_certificate: unsupported hierarchy");
  }
  return rhs;
}

/// Max absolute coefficient of f - (certificate right-hand side).
inline double verify_certificate(const ProblemInstance& inst, const Certificate& cert, int d, int k) {
  return (inst.objective - certificate_rhs(inst, cert, d, k)).max_abs_coefficient();
}

/// The SOS part of a certificate (sigma for bsos variants, sigma_0 for Putinar, 0 otherwise).
inline Polynomial certificate_sigma(const ProblemInstance& inst, const Certificate& cert) {
  const std::size_t n = inst.n();
  switch (cert.hierarchy) {
    case Hierarchy::Bsos:
    case Hierarchy::Bsos01: return gram_basis(n, cert.k).sos_polynomial(cert.gram.at(0));
    case Hierarchy::Putinar: return gram_basis(n, cert.d).sos_polynomial(cert.gram.at(0));
    default: return Polynomial(n);
  }
}

// ---------------------------------------------------------------- oracles

enum class OracleKind { Grid, Enumerate };

inline const char* oracle_name(OracleKind k) { return k == OracleKind::Grid ? "grid" : "enumerate"; }

struct OracleResult {
  double value = std::numeric_limits<double>::infinity();
  std::vector<double> minimizer;
  OracleKind kind = OracleKind::Grid;
};

inline constexpr std::size_t kEnumerateMaxVars = 12;
inline constexpr std::size_t kGridMaxVars = 3;

/// Exact optimum over {0,1}^n by enumeration (n <= 12).
inline OracleResult oracle_enumerate(const ProblemInstance& inst) {
  const std::size_t n = inst.n();
  if (!inst.all_binary()) throw ScopeError("enumeration oracle requires every variable to be binary");
  if (n > kEnumerateMaxVars) throw ScopeError("enumeration oracle scope exceeded: n = " + std::to_string(n) + " > 12");
  OracleResult best;
  best.kind = OracleKind::Enumerate;
  std::vector<double> x(n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>((mask >> i) & 1U);
    if (!inst.is_feasible(x)) continue;
    const double v = inst.objective.eval(x);
    if (v < best.value) {
      best.value = v;
      best.minimizer = x;
    }
  }
  if (best.minimizer.empty()) throw ScopeError("enumeration oracle found no feasible point");
  return best;
}

namespace detail {

inline bool within_domain(const ProblemInstance& inst, const std::vector<double>& x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < inst.kinds[i].lo || x[i] > inst.kinds[i].hi) return false;
  }
  return true;
}

inline bool strictly_feasible(const ProblemInstance& inst, const std::vector<double>& x) {
  if (!within_domain(inst, x)) return false;
  for (const auto& g : inst.constraints) {
    if (g.eval(x) < 0.0) return false;
  }
  return true;
}

// Compass search on the continuous coordinates, staying feasible.
inline void polish(const ProblemInstance& inst, std::vector<double>& x, double& fx, double step) {
  const std::size_t n = x.size();
  while (step > 1e-12) {
    bool improved = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (inst.kinds[i].is_binary()) continue;
      for (double dir : {-1.0, 1.0}) {
        std::vector<double> y = x;
        y[i] = std::clamp(y[i] + dir * step, 0.0, 1.0);
        if (!strictly_feasible(inst, y)) continue;
        const double fy = inst.objective.eval(y);
        if (fy < fx - 1e-16) {
          x = y;
          fx = fy;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
}

}  // namespace detail

/// Dense grid over the normalized box plus local polish (n <= 3). The value is
/// attained at a feasible point, so it is an upper estimate of f*.
inline OracleResult oracle_grid(const ProblemInstance& inst) {
  if (!inst.normalized) throw ProblemError("grid oracle requires a normalized instance");
  const std::size_t n = inst.n();
  if (n > kGridMaxVars) throw ScopeError("grid oracle scope exceeded: n = " + std::to_string(n) + " > 3");
  const int per_axis = n <= 2 ? 101 : 41;
  std::vector<std::vector<double>> axis(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (inst.kinds[i].is_binary()) {
      axis[i] = {0.0, 1.0};
    } else {
      for (int p = 0; p < per_axis; ++p) axis[i].push_back(static_cast<double>(p) / (per_axis - 1));
    }
  }
  struct Candidate {
    double f;
    std::vector<double> x;
  };
  std::vector<Candidate> top;
  std::vector<std::size_t> idx(n, 0);
  std::vector<double> x(n);
  while (true) {
    for (std::size_t i = 0; i < n; ++i) x[i] = axis[i][idx[i]];
    if (detail::strictly_feasible(inst, x)) {
      top.push_back({inst.objective.eval(x), x});
      std::sort(top.begin(), top.end(), [](const Candidate& a, const Candidate& b) { return a.f < b.f; });
      if (top.size() > 8) top.pop_back();
    }
    std::size_t pos = 0;
    while (pos < n && ++idx[pos] == axis[pos].size()) idx[pos++] = 0;
    if (pos == n) break;
  }
  if (top.empty()) throw ScopeError("grid oracle found no feasible grid point");
  OracleResult best;
  best.kind = OracleKind::Grid;
  for (auto& c : top) {
    detail::polish(inst, c.x, c.f, 1.0 / (per_axis - 1));
    if (c.f < best.value) {
      best.value = c.f;
      best.minimizer = c.x;
    }
  }
  return best;
}

inline OracleResult run_oracle(const ProblemInstance& inst, OracleKind kind) {
  return kind == OracleKind::Enumerate ? oracle_enumerate(inst) : oracle_grid(inst);
}

struct ExactnessResult {
  bool exact = false;
  double gap = 0.0;
  bool sound = true;  // gap >= -1e-6
};

inline ExactnessResult exactness_check(double bound, const OracleResult& oracle) {
  ExactnessResult r;
  r.gap = oracle.value - bound;
  r.exact = r.gap <= 1e-5;
  r.sound = r.gap >= -1e-6;
  return r;
}

inline ExactnessResult exactness_check(const ProblemInstance& inst, double bound, OracleKind kind) {
  return exactness_check(bound, run_oracle(inst, kind));
}

// ---------------------------------------------------------------- variety

struct OmegaEntry {
  std::size_t index = 0;  // multiplier column
  std::string label;
  std::vector<int> alpha;  // product exponents (alpha, beta) or RLT (I, J) indicator
  std::vector<int> beta;
  double value = 0.0;
  std::vector<std::size_t> J1;  // 1-based constraint indices in the g-part
  std::vector<std::size_t> J2;  // 1-based constraint indices in the (1 - g)-part
  Polynomial generator;
  double generator_at_xstar = 0.0;
};

enum class Constancy { Constant, Minimized, Violated, NoSamples };

inline const char* constancy_name(Constancy c) {
  switch (c) {
    case Constancy::Constant: return "constant";
    case Constancy::Minimized: return "minimized";
    case Constancy::Violated: return "violated";
    case Constancy::NoSamples: return "no samples";
  }
  return "no samples";
}

struct VarietyReport {
  double threshold = 1e-7;
  double residual = 0.0;
  std::vector<double> x_star;
  double f_star = 0.0;
  std::vector<std::size_t> active_g;       // I1: g_j(x*) = 0, 1-based
  std::vector<std::size_t> active_one_minus_g;  // I2: g_j(x*) = 1, 1-based
  std::vector<OmegaEntry> omega;
  bool generators_vanish = true;  // every generator |.| <= 1e-8 at x*
  double sigma_at_xstar = 0.0;
  bool sigma_vanishes = true;     // |sigma(x*)| <= 1e-6
  std::vector<std::vector<double>> samples;
  Constancy constancy = Constancy::NoSamples;
  std::vector<std::vector<double>> witnesses;  // violating samples, if any
};

struct VarietyOptions {
  double threshold = 1e-7;
  double residual_gate = kCertificateTolerance;
  std::size_t max_samples = 200;
};

namespace detail {

inline double max_abs_at(const std::vector<Polynomial>& gens, std::span<const double> x) {
  double m = 0.0;
  for (const auto& g : gens) m = std::max(m, std::abs(g.eval(x)));
  return m;
}

using GradientTable = std::vector<std::vector<Polynomial>>;

inline GradientTable gradients(const std::vector<Polynomial>& gens, std::size_t n) {
  GradientTable grad(gens.size());
  for (std::size_t a = 0; a < gens.size(); ++a) {
    for (std::size_t i = 0; i < n; ++i) grad[a].push_back(gens[a].derivative(i));
  }
  return grad;
}

// Gauss-Newton projection of x onto {gens = 0}, clamped to [0,1]^n.
inline bool project_onto(const std::vector<Polynomial>& gens, const GradientTable& grad, std::vector<double>& x) {
  const std::size_t n = x.size();
  const auto rows = static_cast<Eigen::Index>(gens.size());
  Eigen::VectorXd r(rows);
  Eigen::MatrixXd J(rows, static_cast<Eigen::Index>(n));
  double last = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 30; ++it) {
    for (std::size_t a = 0; a < gens.size(); ++a) {
      r(static_cast<Eigen::Index>(a)) = gens[a].eval(x);
      for (std::size_t i = 0; i < n; ++i) J(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(i)) = grad[a][i].eval(x);
    }
    const double res = r.lpNorm<Eigen::Infinity>();
    if (res <= 1e-12) return true;
    // Stalled: no quadratic convergence in sight.
    if (it >= 5 && res > 0.5 * last) return false;
    last = res;
    const Eigen::VectorXd step = J.completeOrthogonalDecomposition().solve(r);
    if (!step.allFinite()) return false;
    for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i] - step(static_cast<Eigen::Index>(i)), 0.0, 1.0);
  }
  return max_abs_at(gens, x) <= 1e-10;
}

}  // namespace detail

/// Omega, active sets, generators and a sampled constancy check of f on the
/// variety cut out by the generators (intersected with K).
inline VarietyReport extract_variety(const ProblemInstance& inst, const Certificate& cert,
                                     const std::vector<double>& x_star, const VarietyOptions& opt = {}) {
  const std::size_t n = inst.n();
  if (x_star.size() != n) throw std::invalid_argument("extract_variety: minimizer dimension mismatch");
  VarietyReport rep;
  rep.threshold = opt.threshold;
  rep.residual = verify_certificate(inst, cert, cert.d, cert.k);
  if (!(rep.residual <= opt.residual_gate)) {
    throw std::invalid_argument("extract_variety: certificate not verified (residual " + std::to_string(rep.residual) + ")");
  }
  rep.x_star = x_star;
  rep.f_star = inst.objective.eval(x_star);
  for (std::size_t j = 0; j < inst.m(); ++j) {
    const double g = inst.constraints[j].eval(x_star);
    if (std::abs(g) <= 1e-8) rep.active_g.push_back(j + 1);
    if (std::abs(1.0 - g) <= 1e-8) rep.active_one_minus_g.push_back(j + 1);
  }

  const Polynomial one = Polynomial::constant(n, 1.0);
  switch (cert.hierarchy) {
    case Hierarchy::Lp:
    case Hierarchy::Bsos: {
      const auto lift = lift_products(inst, cert.d);
      for (const auto& [i, v] : cert.lambda) {
        if (v <= opt.threshold) continue;
        const auto& pair = lift.pairs.at(i);
        OmegaEntry e{i, pair.label(), pair.alpha, pair.beta, v, {}, {}, one, 0.0};
        for (std::size_t j = 0; j < inst.m(); ++j) {
          if (pair.alpha[j] > 0) {
            e.J1.push_back(j + 1);
            e.generator = e.generator * inst.constraints[j];
          }
          if (pair.beta[j] > 0) {
            e.J2.push_back(j + 1);
            e.generator = e.generator * (one - inst.constraints[j]);
          }
        }
        rep.omega.push_back(std::move(e));
      }
      break;
    }
    case Hierarchy::Rlt01:
    case Hierarchy::Bsos01: {
      const auto terms = rlt_terms(inst, cert.d);
      for (const auto& [i, v] : cert.lambda) {
        if (v <= opt.threshold) continue;
        const auto& term = terms.at(i);
        OmegaEntry e{i, term.label(), std::vector<int>(n, 0), std::vector<int>(n, 0), v, {}, {}, term.poly, 0.0};
        for (std::size_t a : term.I) e.alpha[a] = 1;
        for (std::size_t b : term.J) e.beta[b] = 1;
        if (term.ell > 0) e.J1.push_back(term.ell);
        rep.omega.push_back(std::move(e));
      }
      break;
    }
    case Hierarchy::Putinar: {
      // At an exact level every term sigma_j(x*) g_j(x*) is zero.
      const auto mult = putinar_multipliers(inst);
      for (std::size_t j = 0; j < mult.size(); ++j) {
        const GramBasis gb = gram_basis(n, putinar_sigma_degree(cert.d, mult[j].degree()));
        const double s = gb.sos_polynomial(cert.gram.at(j + 1)).eval(x_star);
        if (s <= opt.threshold) continue;
        OmegaEntry e{j, "sigma" + std::to_string(j + 1), {}, {}, s, {j + 1}, {}, mult[j], 0.0};
        rep.omega.push_back(std::move(e));
      }
      break;
    }
    default: throw std::invalid_argument("extract_variety: unsupported hierarchy");
  }

  std::vector<Polynomial> gens;
  for (auto& e : rep.omega) {
    e.generator_at_xstar = e.generator.eval(x_star);
    if (std::abs(e.generator_at_xstar) > 1e-8) rep.generators_vanish = false;
    gens.push_back(e.generator);
  }
  rep.sigma_at_xstar = certificate_sigma(inst, cert).eval(x_star);
  rep.sigma_vanishes = std::abs(rep.sigma_at_xstar) <= 1e-6;

  // Sample V intersected with K.
  std::set<std::vector<long long>> seen;
  auto consider = [&](const std::vector<double>& p) {
    if (rep.samples.size() >= opt.max_samples) return;
    if (!inst.is_feasible(p, 1e-9)) return;
    if (detail::max_abs_at(gens, p) > 1e-9) return;
    std::vector<long long> key;
    for (double v : p) key.push_back(std::llround(v * 1e6));
    if (seen.insert(key).second) rep.samples.push_back(p);
  };
  if (inst.all_binary() && n <= kEnumerateMaxVars) {
    std::vector<double> p(n);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
      for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<double>((mask >> i) & 1U);
      consider(p);
    }
  } else if (n <= kGridMaxVars) {
    const int per_axis = n == 1 ? 101 : (n == 2 ? 41 : 11);
    const auto grad = detail::gradients(gens, n);
    std::vector<int> idx(n, 0);
    std::vector<double> p(n);
    while (true) {
      for (std::size_t i = 0; i < n; ++i) {
        p[i] = inst.kinds[i].is_binary() ? static_cast<double>(idx[i] % 2) : static_cast<double>(idx[i]) / (per_axis - 1);
      }
      std::vector<double> q = p;
      if (gens.empty() || detail::max_abs_at(gens, q) <= 1e-9 || detail::project_onto(gens, grad, q)) consider(q);
      if (rep.samples.size() >= opt.max_samples) break;
      std::size_t pos = 0;
      while (pos < n && ++idx[pos] == (inst.kinds[pos].is_binary() ? 2 : per_axis)) idx[pos++] = 0;
      if (pos == n) break;
    }
  }

  if (rep.samples.empty()) {
    rep.constancy = Constancy::NoSamples;
  } else {
    const bool lp_only = cert.hierarchy == Hierarchy::Lp || cert.hierarchy == Hierarchy::Rlt01 ||
                         ((cert.hierarchy == Hierarchy::Bsos || cert.hierarchy == Hierarchy::Bsos01) && cert.k == 0);
    bool constant = true;
    bool minimized = true;
    for (const auto& p : rep.samples) {
      const double fv = inst.objective.eval(p);
      if (std::abs(fv - rep.f_star) > 1e-6) constant = false;
      if (fv < rep.f_star - 1e-6) {
        minimized = false;
        rep.witnesses.push_back(p);
      } else if (lp_only && std::abs(fv - rep.f_star) > 1e-6) {
        rep.witnesses.push_back(p);
      }
    }
    if (constant) {
      rep.constancy = Constancy::Constant;
    } else if (minimized && !lp_only) {
      rep.constancy = Constancy::Minimized;
    } else {
      rep.constancy = Constancy::Violated;
    }
  }
  return rep;
}

}  // namespace bsos
