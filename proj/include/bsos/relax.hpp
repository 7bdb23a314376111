#pragma once

// Relaxation builders. Each one writes the identity
//   f - t = (nonnegative combination of products) + (SOS terms) + (free multipliers)
// coefficient-wise, one equality row per monomial, maximizing t.

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bsos/conic.hpp"
#include "bsos/polynomial.hpp"
#include "bsos/problem.hpp"
#include "bsos/solver.hpp"

namespace bsos {

/// One nonnegative RLT multiplier: g_l * prod_{i in I} x_i * prod_{j in J} (1 - x_j).
struct RltTerm {
  std::size_t ell = 0;  // 0 is the constant constraint 1
  std::vector<std::size_t> I;
  std::vector<std::size_t> J;
  Polynomial poly;

  std::string label() const {
    auto set = [](const std::vector<std::size_t>& s) {
      std::string out = "{";
      for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i] + 1);
      return out + "}";
    };
    return "l" + std::to_string(ell) + set(I) + set(J);
  }
};

/// Free multiplier column: coefficient of x^mono in h_var.
struct FreeMultiplierColumn {
  std::size_t var = 0;
  Monomial mono;
};

namespace detail {

inline int ceil_half(int v) { return (v + 1) / 2; }

// Equality rows indexed by monomials of degree <= budget, in graded-lex order.
class RowIndex {
 public:
  RowIndex(ConicProgram& prog, std::size_t n, int budget) : prog_(prog), budget_(budget) {
    auto monos = mono_index_set(n, budget);
    std::sort(monos.begin(), monos.end());
    for (const auto& m : monos) {
      index_.emplace(m, prog_.rows.size());
      prog_.rows.emplace_back();
      prog_.row_monomials.push_back(m);
    }
  }

  std::size_t row(const Monomial& m) const {
    auto it = index_.find(m);
    if (it == index_.end()) {
      throw std::logic_error("monomial " + m.to_string() + " exceeds the degree budget " + std::to_string(budget_));
    }
    return it->second;
  }

  void set_rhs(const Polynomial& f) {
    for (const auto& [m, c] : f.terms()) prog_.rows[row(m)].rhs = c;
  }
  void add_free(int col, const Polynomial& p) {
    for (const auto& [m, c] : p.terms()) prog_.rows[row(m)].free.emplace_back(col, c);
  }
  void add_nonneg(int col, const Polynomial& p) {
    for (const auto& [m, c] : p.terms()) prog_.rows[row(m)].nonneg.emplace_back(col, c);
  }
  // sigma * g with sigma = v^T Q v over the given basis.
  void add_gram(int block, const std::vector<Monomial>& basis, const Polynomial& g) {
    std::map<std::pair<std::size_t, std::pair<int, int>>, double> acc;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      for (std::size_t j = i; j < basis.size(); ++j) {
        const Monomial bij = basis[i] * basis[j];
        for (const auto& [m, c] : g.terms()) {
          acc[{row(bij * m), {static_cast<int>(i), static_cast<int>(j)}}] += c;
        }
      }
    }
    for (const auto& [key, v] : acc) {
      if (v != 0.0) prog_.rows[key.first].psd.push_back({block, key.second.first, key.second.second, v});
    }
  }

 private:
  ConicProgram& prog_;
  int budget_;
  std::map<Monomial, std::size_t> index_;
};

inline void require_normalized(const ProblemInstance& inst, int d) {
  if (!inst.normalized) throw ProblemError("relaxation builders require a normalized instance");
  if (d < 1) throw ProblemError("relaxation level d must be >= 1");
}

inline void require_01(const ProblemInstance& inst) {
  if (!inst.all_binary()) throw ProblemError("0/1 hierarchy requires every variable to be binary");
  for (const auto& g : inst.constraints) {
    if (g.degree() > 1) throw ProblemError("0/1 hierarchy requires affine constraints");
  }
}

inline int clamp_k(ConicProgram& prog, int k, int budget) {
  if (k < 0) throw ProblemError("k must be >= 0");
  if (2 * k > budget) {
    const int kk = budget / 2;
    prog.warnings.push_back("k = " + std::to_string(k) + " exceeds half the degree budget " + std::to_string(budget) +
                            "; clamped to " + std::to_string(kk));
    return kk;
  }
  return k;
}

inline void add_gram_block(ConicProgram& prog, RowIndex& rows, std::size_t n, int k) {
  const GramBasis gb = gram_basis(n, k);
  const int blk = prog.add_psd(static_cast<int>(gb.basis_size()), "Q");
  rows.add_gram(blk, gb.basis, Polynomial::constant(n, 1.0));
}

}  // namespace detail

/// Degree budget of the Krivine-Stengle and bounded-SOS programs.
inline int lp_degree_budget(const ProblemInstance& inst, int d) {
  return std::max(inst.objective.degree(), d * inst.max_constraint_degree());
}

/// Multiplier polynomials of the Putinar program: every g_j, then 1 - g_j
/// for box constraints whose complement is not already present.
inline std::vector<Polynomial> putinar_multipliers(const ProblemInstance& inst) {
  std::vector<Polynomial> out = inst.constraints;
  const std::size_t n = inst.n();
  for (std::size_t j = 0; j < inst.m(); ++j) {
    if (inst.constraint_info[j].origin != ConstraintOrigin::Box) continue;
    Polynomial comp = Polynomial::constant(n, 1.0) - inst.constraints[j];
    bool present = false;
    for (const auto& g : out) present = present || g.approx_equal(comp, 1e-12);
    if (!present) out.push_back(comp);
  }
  return out;
}

/// Gram basis degree of sigma_j for a multiplier of degree deg_g at level d.
inline int putinar_sigma_degree(int d, int deg_g) { return d - detail::ceil_half(deg_g); }

/// Columns of the free multipliers h_i (binary variables only), degree <= deg.
inline std::vector<FreeMultiplierColumn> free_multiplier_columns(const ProblemInstance& inst, int deg) {
  std::vector<FreeMultiplierColumn> cols;
  if (deg < 0) return cols;
  auto monos = mono_index_set(inst.n(), deg);
  std::sort(monos.begin(), monos.end());
  for (std::size_t i = 0; i < inst.n(); ++i) {
    if (!inst.kinds[i].is_binary()) continue;
    for (const auto& m : monos) cols.push_back({i, m});
  }
  return cols;
}

inline Polynomial binary_identity(std::size_t n, std::size_t i) {
  const Polynomial x = Polynomial::variable(n, i);
  return x - x * x;
}

/// Linear constraints entering the RLT products (l = 1..L); box constraints
/// are implied by the x_i / (1 - x_j) factors.
inline std::vector<Polynomial> rlt_constraints(const ProblemInstance& inst) {
  std::vector<Polynomial> out;
  for (std::size_t j = 0; j < inst.m(); ++j) {
    if (inst.constraint_info[j].origin != ConstraintOrigin::Box) out.push_back(inst.constraints[j]);
  }
  return out;
}

/// All RLT multipliers at level d: l in {0..L}, disjoint I, J with |I u J| <= d,
/// excluding (0, {}, {}). Ordered by l, then |I u J|, then (I, J) lexicographically.
inline std::vector<RltTerm> rlt_terms(const ProblemInstance& inst, int d) {
  const std::size_t n = inst.n();
  std::vector<Polynomial> gl{Polynomial::constant(n, 1.0)};
  for (auto& g : rlt_constraints(inst)) gl.push_back(std::move(g));
  // assignment per variable: 0 absent, 1 in I, 2 in J
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> sets;
  for (int size = 0; size <= std::min<int>(d, static_cast<int>(n)); ++size) {
    std::vector<int> a(n, 0);
    auto rec = [&](auto&& self, std::size_t pos, int left) -> void {
      if (pos == n) {
        if (left != 0) return;
        std::vector<std::size_t> I, J;
        for (std::size_t i = 0; i < n; ++i) {
          if (a[i] == 1) I.push_back(i);
          if (a[i] == 2) J.push_back(i);
        }
        sets.emplace_back(I, J);
        return;
      }
      for (int v = 0; v <= 2; ++v) {
        if (v > 0 && left == 0) continue;
        a[pos] = v;
        self(self, pos + 1, v > 0 ? left - 1 : left);
      }
      a[pos] = 0;
    };
    rec(rec, 0, size);
  }
  std::vector<RltTerm> out;
  for (std::size_t ell = 0; ell < gl.size(); ++ell) {
    for (const auto& [I, J] : sets) {
      if (ell == 0 && I.empty() && J.empty()) continue;
      RltTerm term{ell, I, J, gl[ell]};
      for (std::size_t i : I) term.poly = term.poly * Polynomial::variable(n, i);
      for (std::size_t j : J) term.poly = term.poly * (Polynomial::constant(n, 1.0) - Polynomial::variable(n, j));
      out.push_back(std::move(term));
    }
  }
  return out;
}

inline int rlt_degree_budget(const ProblemInstance& inst, int d) {
  return std::max(inst.objective.degree(), d + 1);
}

/// theta_d: max t s.t. f - t = sum lambda_ab g^a (1-g)^b, lambda >= 0.
inline ConicProgram build_lp(const ProblemInstance& inst, int d) {
  detail::require_normalized(inst, d);
  ConicProgram prog;
  prog.hierarchy = Hierarchy::Lp;
  prog.d = d;
  prog.num_vars = inst.n();
  prog.degree_budget = lp_degree_budget(inst, d);
  detail::RowIndex rows(prog, inst.n(), prog.degree_budget);
  rows.set_rhs(inst.objective);
  const int t = prog.add_free("t", 1.0);
  rows.add_free(t, Polynomial::constant(inst.n(), 1.0));
  const auto lift = lift_products(inst, d);
  for (const auto& pair : lift.pairs) rows.add_nonneg(prog.add_nonneg("lambda" + pair.label()), pair.poly);
  return prog;
}

/// q^k_d: build_lp plus one SOS term of degree 2k (Gram block of size C(n+k, n)).
inline ConicProgram build_bsos(const ProblemInstance& inst, int d, int k) {
  detail::require_normalized(inst, d);
  ConicProgram prog;
  prog.hierarchy = Hierarchy::Bsos;
  prog.d = d;
  prog.num_vars = inst.n();
  prog.degree_budget = lp_degree_budget(inst, d);
  prog.k = detail::clamp_k(prog, k, prog.degree_budget);
  detail::RowIndex rows(prog, inst.n(), prog.degree_budget);
  rows.set_rhs(inst.objective);
  const int t = prog.add_free("t", 1.0);
  rows.add_free(t, Polynomial::constant(inst.n(), 1.0));
  const auto lift = lift_products(inst, d);
  for (const auto& pair : lift.pairs) rows.add_nonneg(prog.add_nonneg("lambda" + pair.label()), pair.poly);
  detail::add_gram_block(prog, rows, inst.n(), prog.k);
  return prog;
}

/// gamma_d: max t s.t. f - t = sigma_0 + sum_j sigma_j g_j (+ sum_i h_i x_i(1-x_i) on binaries).
inline ConicProgram build_putinar(const ProblemInstance& inst, int d) {
  detail::require_normalized(inst, d);
  const int floor_f = detail::ceil_half(inst.objective.degree());
  const int floor_g = detail::ceil_half(inst.max_constraint_degree());
  if (d < floor_f || d < floor_g) {
    throw ProblemError("Putinar level d = " + std::to_string(d) + " is below the degree floor " +
                       std::to_string(std::max(floor_f, floor_g)));
  }
  const std::size_t n = inst.n();
  ConicProgram prog;
  prog.hierarchy = Hierarchy::Putinar;
  prog.d = d;
  prog.num_vars = n;
  prog.degree_budget = 2 * d;
  detail::RowIndex rows(prog, n, prog.degree_budget);
  rows.set_rhs(inst.objective);
  const int t = prog.add_free("t", 1.0);
  rows.add_free(t, Polynomial::constant(n, 1.0));
  const Polynomial one = Polynomial::constant(n, 1.0);
  {
    const GramBasis gb = gram_basis(n, d);
    rows.add_gram(prog.add_psd(static_cast<int>(gb.basis_size()), "sigma0"), gb.basis, one);
  }
  const auto mult = putinar_multipliers(inst);
  for (std::size_t j = 0; j < mult.size(); ++j) {
    const GramBasis gb = gram_basis(n, putinar_sigma_degree(d, mult[j].degree()));
    rows.add_gram(prog.add_psd(static_cast<int>(gb.basis_size()), "sigma" + std::to_string(j + 1)), gb.basis,
                  mult[j]);
  }
  for (const auto& col : free_multiplier_columns(inst, 2 * d - 2)) {
    const int c = prog.add_free("h" + std::to_string(col.var + 1) + col.mono.to_string());
    rows.add_free(c, Polynomial::monomial(col.mono) * binary_identity(n, col.var));
  }
  return prog;
}

namespace detail {

inline ConicProgram build_rlt_common(const ProblemInstance& inst, int d, Hierarchy tag) {
  require_normalized(inst, d);
  require_01(inst);
  const std::size_t n = inst.n();
  ConicProgram prog;
  prog.hierarchy = tag;
  prog.d = d;
  prog.num_vars = n;
  prog.degree_budget = rlt_degree_budget(inst, d);
  return prog;
}

inline void fill_rlt(ConicProgram& prog, RowIndex& rows, const ProblemInstance& inst, int d) {
  const std::size_t n = inst.n();
  rows.set_rhs(inst.objective);
  const int t = prog.add_free("t", 1.0);
  rows.add_free(t, Polynomial::constant(n, 1.0));
  for (const auto& term : rlt_terms(inst, d)) rows.add_nonneg(prog.add_nonneg("lambda" + term.label()), term.poly);
  for (const auto& col : free_multiplier_columns(inst, d - 1)) {
    const int c = prog.add_free("h" + std::to_string(col.var + 1) + col.mono.to_string());
    rows.add_free(c, Polynomial::monomial(col.mono) * binary_identity(n, col.var));
  }
}

}  // namespace detail

/// theta_d in RLT form for 0/1 programs with affine constraints.
inline ConicProgram build_rlt01(const ProblemInstance& inst, int d) {
  ConicProgram prog = detail::build_rlt_common(inst, d, Hierarchy::Rlt01);
  detail::RowIndex rows(prog, inst.n(), prog.degree_budget);
  detail::fill_rlt(prog, rows, inst, d);
  return prog;
}

/// q^k_d in 0/1 form: build_rlt01 plus one Gram block of size C(n+k, n).
inline ConicProgram build_bsos01(const ProblemInstance& inst, int d, int k) {
  ConicProgram prog = detail::build_rlt_common(inst, d, Hierarchy::Bsos01);
  prog.k = detail::clamp_k(prog, k, prog.degree_budget);
  detail::RowIndex rows(prog, inst.n(), prog.degree_budget);
  detail::fill_rlt(prog, rows, inst, d);
  detail::add_gram_block(prog, rows, inst.n(), prog.k);
  return prog;
}

/// max t s.t. p - t is a degree-2k SOS.
inline ConicProgram build_sos_bound(const Polynomial& p, int k) {
  if (k < 0) throw ProblemError("k must be >= 0");
  const std::size_t n = p.num_vars();
  ConicProgram prog;
  prog.hierarchy = Hierarchy::SosBound;
  prog.k = k;
  prog.num_vars = n;
  prog.degree_budget = std::max(p.degree(), 2 * k);
  detail::RowIndex rows(prog, n, prog.degree_budget);
  rows.set_rhs(p);
  const int t = prog.add_free("t", 1.0);
  rows.add_free(t, Polynomial::constant(n, 1.0));
  detail::add_gram_block(prog, rows, n, k);
  return prog;
}

/// Dispatch by hierarchy tag. k is ignored by lp, putinar and rlt01.
inline ConicProgram build_relaxation(const ProblemInstance& inst, Hierarchy h, int d, int k) {
  switch (h) {
    case Hierarchy::Lp: return build_lp(inst, d);
    case Hierarchy::Bsos: return build_bsos(inst, d, k);
    case Hierarchy::Putinar: return build_putinar(inst, d);
    case Hierarchy::Rlt01: return build_rlt01(inst, d);
    case Hierarchy::Bsos01: return build_bsos01(inst, d, k);
    default: throw std::invalid_argument("build_relaxation: unsupported hierarchy");
  }
}

/// Decomposition data of an Optimal solve.
struct Certificate {
  Hierarchy hierarchy = Hierarchy::Generic;
  int d = 0;
  int k = 0;
  double t = 0.0;
  std::map<std::size_t, double> lambda;  // multiplier index -> value
  std::vector<Eigen::MatrixXd> gram;     // Q, or sigma_0, sigma_1, ... for Putinar
  std::vector<Polynomial> h;             // one per variable; zero for non-binary
  double bound_original_units = 0.0;

  /// Checks lambda >= -1e-9 and every Gram block PSD to a relative 1e-7.
  bool satisfies_sign_conditions() const {
    for (const auto& [i, v] : lambda) {
      if (v < -1e-9) return false;
    }
    for (const auto& Q : gram) {
      if (Q.size() == 0) continue;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, Eigen::EigenvaluesOnly);
      const double lo = es.eigenvalues()(0);
      const double hi = es.eigenvalues()(es.eigenvalues().size() - 1);
      if (lo < -1e-7 * (1.0 + std::max(hi, 0.0))) return false;
    }
    return true;
  }
};

/// Assemble a Certificate from the solver output of a builder program.
inline Certificate make_certificate(const ProblemInstance& inst, const ConicProgram& prog, const SolveResult& res) {
  if (res.free_values.size() != prog.num_free || res.nonneg_values.size() != prog.num_nonneg ||
      res.psd_values.size() != prog.psd_sizes.size()) {
    throw std::invalid_argument("make_certificate: solution does not match the program");
  }
  Certificate cert;
  cert.hierarchy = prog.hierarchy;
  cert.d = prog.d;
  cert.k = prog.k;
  cert.t = res.free_values.empty() ? 0.0 : res.free_values[0];
  for (std::size_t i = 0; i < res.nonneg_values.size(); ++i) cert.lambda[i] = res.nonneg_values[i];
  cert.gram = res.psd_values;
  const std::size_t n = inst.n();
  cert.h.assign(n, Polynomial(n));
  int hdeg = -1;
  if (prog.hierarchy == Hierarchy::Putinar) hdeg = 2 * prog.d - 2;
  if (prog.hierarchy == Hierarchy::Rlt01 || prog.hierarchy == Hierarchy::Bsos01) hdeg = prog.d - 1;
  const auto cols = free_multiplier_columns(inst, hdeg);
  if (cols.size() + 1 != prog.num_free) {
    throw std::invalid_argument("make_certificate: free multiplier layout mismatch");
  }
  for (std::size_t c = 0; c < cols.size(); ++c) cert.h[cols[c].var].add_term(cols[c].mono, res.free_values[c + 1]);
  cert.bound_original_units = inst.to_original_units(cert.t);
  return cert;
}

}  // namespace bsos
