#pragma once

// Dense two-phase tableau simplex with Bland's rule in long double.
// Independent of the interior-point code; meant for cross-checking small LPs.

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bsos/conic.hpp"
#include "bsos/solver.hpp"

namespace bsos {

inline constexpr std::size_t kLpReferenceMaxVars = 200;

namespace detail {

class Tableau {
 public:
  using Real = long double;

  Tableau(std::size_t rows, std::size_t cols) : m_(rows), n_(cols), t_((rows + 1) * (cols + 1), 0.0L), basis_(rows) {}

  Real& at(std::size_t r, std::size_t c) { return t_[r * (n_ + 1) + c]; }
  Real& rhs(std::size_t r) { return at(r, n_); }
  Real& cost(std::size_t c) { return at(m_, c); }
  std::vector<std::size_t>& basis() { return basis_; }

  // Minimizes the cost row over columns [0, limit). Returns false if unbounded.
  bool optimize(std::size_t limit, const Real eps) {
    for (std::size_t guard = 0; guard < 100000; ++guard) {
      std::size_t enter = n_;
      for (std::size_t c = 0; c < limit; ++c) {
        if (cost(c) < -eps) {
          enter = c;
          break;
        }
      }
      if (enter == n_) return true;
      std::size_t leave = m_;
      Real best = std::numeric_limits<Real>::infinity();
      for (std::size_t r = 0; r < m_; ++r) {
        if (at(r, enter) > eps) {
          const Real ratio = rhs(r) / at(r, enter);
          if (ratio < best - eps || (std::abs(ratio - best) <= eps && leave < m_ && basis_[r] < basis_[leave])) {
            best = ratio;
            leave = r;
          }
        }
      }
      if (leave == m_) return false;
      pivot(leave, enter);
    }
    throw std::runtime_error("simplex: pivot guard exceeded");
  }

  void pivot(std::size_t r, std::size_t c) {
    const Real p = at(r, c);
    for (std::size_t j = 0; j <= n_; ++j) at(r, j) /= p;
    for (std::size_t i = 0; i <= m_; ++i) {
      if (i == r) continue;
      const Real f = at(i, c);
      if (f == 0.0L) continue;
      for (std::size_t j = 0; j <= n_; ++j) at(i, j) -= f * at(r, j);
    }
    basis_[r] = c;
  }

 private:
  std::size_t m_, n_;
  std::vector<Real> t_;
  std::vector<std::size_t> basis_;
};

}  // namespace detail

/// Reference LP solve of a PSD-free ConicProgram.
inline SolveResult solve_lp_reference(const ConicProgram& prog) {
  prog.validate();
  if (!prog.psd_sizes.empty()) throw std::invalid_argument("solve_lp_reference: program has PSD blocks");
  if (prog.num_free + prog.num_nonneg > kLpReferenceMaxVars) {
    throw std::invalid_argument("solve_lp_reference: " + std::to_string(prog.num_free + prog.num_nonneg) +
                                " variables exceed the oracle cap of " + std::to_string(kLpReferenceMaxVars));
  }
  using Real = long double;
  const auto start = std::chrono::steady_clock::now();
  const std::size_t m = prog.num_rows();
  const std::size_t nf = prog.num_free;
  const std::size_t nn = prog.num_nonneg;
  // Columns: free+ , free-, nonneg, artificials.
  const std::size_t nx = 2 * nf + nn;
  const std::size_t ncol = nx + m;
  std::vector<std::vector<Real>> A(m, std::vector<Real>(nx, 0.0L));
  std::vector<Real> b(m);
  for (std::size_t r = 0; r < m; ++r) {
    for (auto [i, v] : prog.rows[r].free) {
      A[r][static_cast<std::size_t>(i)] += v;
      A[r][nf + static_cast<std::size_t>(i)] -= v;
    }
    for (auto [i, v] : prog.rows[r].nonneg) A[r][2 * nf + static_cast<std::size_t>(i)] += v;
    b[r] = prog.rows[r].rhs;
    if (b[r] < 0) {
      b[r] = -b[r];
      for (auto& a : A[r]) a = -a;
    }
  }
  std::vector<Real> cmin(nx, 0.0L);
  for (std::size_t i = 0; i < nf; ++i) {
    cmin[i] = -prog.objective_free[i];
    cmin[nf + i] = prog.objective_free[i];
  }
  for (std::size_t i = 0; i < nn; ++i) cmin[2 * nf + i] = -prog.objective_nonneg[i];

  const Real eps = 1e-12L;
  detail::Tableau T(m, ncol);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < nx; ++j) T.at(r, j) = A[r][j];
    T.at(r, nx + r) = 1.0L;
    T.rhs(r) = b[r];
    T.basis()[r] = nx + r;
  }
  // Phase 1 cost: sum of artificials, reduced against the artificial basis.
  for (std::size_t j = 0; j < nx; ++j) {
    Real s = 0;
    for (std::size_t r = 0; r < m; ++r) s += A[r][j];
    T.cost(j) = -s;
  }
  Real bs = 0;
  for (std::size_t r = 0; r < m; ++r) bs += b[r];
  T.at(m, ncol) = -bs;

  SolveResult res;
  res.free_values.assign(nf, 0.0);
  res.nonneg_values.assign(nn, 0.0);
  T.optimize(ncol, eps);
  Real bnorm = 1;
  for (Real v : b) bnorm = std::max(bnorm, v);
  if (-T.at(m, ncol) > 1e-9L * bnorm) {
    res.status = SolveStatus::Infeasible;
    res.message = "phase one ended with positive artificial sum";
    res.objective = -std::numeric_limits<double>::infinity();
    res.time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    return res;
  }
  // Drive remaining artificials out of the basis where possible.
  for (std::size_t r = 0; r < m; ++r) {
    if (T.basis()[r] < nx) continue;
    for (std::size_t j = 0; j < nx; ++j) {
      if (std::abs(T.at(r, j)) > 1e-9L) {
        T.pivot(r, j);
        break;
      }
    }
  }
  // Phase 2: artificial columns are barred from entering.
  for (std::size_t j = 0; j <= ncol; ++j) T.cost(j) = 0.0L;
  for (std::size_t j = 0; j < nx; ++j) T.cost(j) = cmin[j];
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t bj = T.basis()[r];
    if (bj >= nx) continue;
    const Real f = T.cost(bj);
    if (f == 0.0L) continue;
    for (std::size_t j = 0; j <= ncol; ++j) T.cost(j) -= f * T.at(r, j);
  }
  const bool bounded = T.optimize(nx, eps);
  res.iterations = 0;
  if (!bounded) {
    res.status = SolveStatus::Unbounded;
    res.message = "phase two found an unbounded edge";
    res.objective = std::numeric_limits<double>::infinity();
  } else {
    std::vector<Real> x(nx, 0.0L);
    for (std::size_t r = 0; r < m; ++r) {
      if (T.basis()[r] < nx) x[T.basis()[r]] = T.rhs(r);
    }
    Real obj = 0;
    for (std::size_t j = 0; j < nx; ++j) obj -= cmin[j] * x[j];
    for (std::size_t i = 0; i < nf; ++i) res.free_values[i] = static_cast<double>(x[i] - x[nf + i]);
    for (std::size_t i = 0; i < nn; ++i) res.nonneg_values[i] = static_cast<double>(x[2 * nf + i]);
    res.status = SolveStatus::Optimal;
    res.objective = static_cast<double>(obj);
    res.dual_objective = res.objective;
    res.primal_residual = res.dual_residual = res.duality_gap = 0.0;
  }
  res.time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace bsos
