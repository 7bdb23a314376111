#pragma once

// Reference conic solver: primal-dual path following on the homogeneous
// self-dual embedding, Nesterov-Todd scaling on PSD blocks, log-barrier
// scaling on the nonnegative block, free variables kept in the Newton
// system as a saddle-point block.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bsos/conic.hpp"

namespace bsos {

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalTrouble, IterationLimit };

inline const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericalTrouble: return "numerical_trouble";
    case SolveStatus::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

struct SolverConfig {
  double tolerance = 1e-8;
  int max_iterations = 200;
  double step_fraction = 0.98;
  double infeasibility_threshold = 1e-10;
  bool predictor_corrector = true;

  void validate() const {
    if (!(tolerance > 0)) throw std::invalid_argument("SolverConfig: tolerance must be positive");
    if (!(step_fraction > 0 && step_fraction < 1)) throw std::invalid_argument("SolverConfig: step fraction must lie in (0,1)");
    if (max_iterations < 1) throw std::invalid_argument("SolverConfig: max_iterations must be >= 1");
    if (!(infeasibility_threshold > 0)) throw std::invalid_argument("SolverConfig: infeasibility threshold must be positive");
  }
};

/// Per-iterate diagnostics in maximization form (original data).
struct IterateRecord {
  int iteration = 0;
  double primal_objective = 0.0;  // o^T x / tau
  double dual_objective = 0.0;    // b^T y / tau (an upper bound when feasible)
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  // |x^T r_d| + |y^T r_p|: how far weak duality may be violated by infeasibility.
  double infeasibility_slack = 0.0;
  double mu = 0.0;
  double tau = 0.0;
  double kappa = 0.0;
  double step = 0.0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::NumericalTrouble;
  double objective = -std::numeric_limits<double>::infinity();
  double dual_objective = std::numeric_limits<double>::infinity();
  std::vector<double> free_values;
  std::vector<double> nonneg_values;
  std::vector<Eigen::MatrixXd> psd_values;
  std::vector<double> duals;  // y with sum_r rhs_r y_r = dual objective
  double primal_residual = std::numeric_limits<double>::infinity();
  double dual_residual = std::numeric_limits<double>::infinity();
  double duality_gap = std::numeric_limits<double>::infinity();
  int iterations = 0;
  long long time_ms = 0;

  // Infeasible: y with A_free^T y = 0, -A_cone^T y in the cone, rhs^T y = 1.
  std::vector<double> farkas_ray;
  // Unbounded: direction with A d = 0, d in the cone, objective^T d = 1.
  std::vector<double> ray_free;
  std::vector<double> ray_nonneg;
  std::vector<Eigen::MatrixXd> ray_psd;

  std::vector<IterateRecord> trace;
  std::string message;
};

namespace detail {

inline int svec_dim(int n) { return n * (n + 1) / 2; }
inline int svec_index(int i, int j) { return j * (j + 1) / 2 + i; }  // i <= j

inline Eigen::VectorXd svec(const Eigen::MatrixXd& X) {
  const int n = static_cast<int>(X.rows());
  Eigen::VectorXd v(svec_dim(n));
  const double r2 = std::sqrt(2.0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) v(svec_index(i, j)) = (i == j) ? X(i, i) : r2 * 0.5 * (X(i, j) + X(j, i));
  }
  return v;
}

inline Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, int n) {
  Eigen::MatrixXd X(n, n);
  const double r2 = std::sqrt(2.0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      double val = v(svec_index(i, j));
      if (i == j) {
        X(i, i) = val;
      } else {
        X(i, j) = X(j, i) = val / r2;
      }
    }
  }
  return X;
}

struct ConeLayout {
  int nl = 0;
  std::vector<int> sizes;
  std::vector<int> offsets;
  int dim = 0;
  int barrier = 0;  // nl + sum n_b

  explicit ConeLayout(int nonneg, const std::vector<int>& psd) : nl(nonneg), sizes(psd) {
    dim = nl;
    barrier = nl;
    for (int s : sizes) {
      offsets.push_back(dim);
      dim += svec_dim(s);
      barrier += s;
    }
  }

  Eigen::VectorXd identity() const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    e.head(nl).setOnes();
    for (std::size_t b = 0; b < sizes.size(); ++b) {
      for (int i = 0; i < sizes[b]; ++i) e(offsets[b] + svec_index(i, i)) = 1.0;
    }
    return e;
  }

  Eigen::MatrixXd block(const Eigen::VectorXd& v, std::size_t b) const {
    return smat(v.segment(offsets[b], svec_dim(sizes[b])), sizes[b]);
  }

  /// Smallest "eigenvalue" of v in the cone (min over LP entries and PSD eigenvalues).
  double min_eig(const Eigen::VectorXd& v) const {
    double m = std::numeric_limits<double>::infinity();
    if (nl > 0) m = v.head(nl).minCoeff();
    for (std::size_t b = 0; b < sizes.size(); ++b) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block(v, b), Eigen::EigenvaluesOnly);
      m = std::min(m, es.eigenvalues()(0));
    }
    return m;
  }

  /// Largest alpha with v + alpha dv in the cone (infinity if unbounded).
  std::optional<double> max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) const {
    double a = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nl; ++i) {
      if (dv(i) < 0) a = std::min(a, -v(i) / dv(i));
    }
    for (std::size_t b = 0; b < sizes.size(); ++b) {
      Eigen::LLT<Eigen::MatrixXd> llt(block(v, b));
      if (llt.info() != Eigen::Success) return std::nullopt;
      Eigen::MatrixXd L = llt.matrixL();
      Eigen::MatrixXd Z = L.triangularView<Eigen::Lower>().solve(block(dv, b));
      Z = L.triangularView<Eigen::Lower>().solve(Z.transpose()).transpose();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Z + Z.transpose()), Eigen::EigenvaluesOnly);
      double lmin = es.eigenvalues()(0);
      if (lmin < 0) a = std::min(a, -1.0 / lmin);
    }
    return a;
  }
};

// Nesterov-Todd scaling for one PSD block: W S W = X.
struct NtBlock {
  Eigen::MatrixXd W;
  Eigen::MatrixXd Sinv;
  Eigen::MatrixXd H;  // svec(W E W) as a matrix acting on svec coordinates
};

inline std::optional<NtBlock> nt_scaling(const Eigen::MatrixXd& X, const Eigen::MatrixXd& S) {
  Eigen::LLT<Eigen::MatrixXd> lx(X), ls(S);
  if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return std::nullopt;
  const Eigen::MatrixXd Lx = lx.matrixL();
  const Eigen::MatrixXd Ls = ls.matrixL();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Ls.transpose() * Lx, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd sig = svd.singularValues();
  if (sig.minCoeff() <= 0) return std::nullopt;
  const Eigen::MatrixXd G = Lx * svd.matrixV();
  NtBlock nt;
  nt.W = G * sig.cwiseInverse().asDiagonal() * G.transpose();
  nt.W = 0.5 * (nt.W + nt.W.transpose());
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd Linv = Ls.triangularView<Eigen::Lower>().solve(I);
  nt.Sinv = Linv.transpose() * Linv;
  const int p = svec_dim(n);
  nt.H.resize(p, p);
  const double r2 = std::sqrt(2.0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      Eigen::MatrixXd E;
      if (i == j) {
        E = nt.W.col(i) * nt.W.col(i).transpose();
      } else {
        E = (nt.W.col(i) * nt.W.col(j).transpose() + nt.W.col(j) * nt.W.col(i).transpose()) / r2;
      }
      nt.H.col(svec_index(i, j)) = svec(E);
    }
  }
  return nt;
}

}  // namespace detail

/// Solves a ConicProgram to the requested tolerance.
class InteriorPointSolver {
 public:
  explicit InteriorPointSolver(SolverConfig config = {}) : cfg_(config) { cfg_.validate(); }

  SolveResult solve(const ConicProgram& prog) const {
    prog.validate();
    const auto start = std::chrono::steady_clock::now();
    SolveResult res = run(prog);
    res.time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    return res;
  }

 private:
  using Mat = Eigen::MatrixXd;
  using Vec = Eigen::VectorXd;

  struct Dense {
    Mat Af;  // m x nf
    Mat Ak;  // m x N (nonneg then svec blocks)
    Vec b;
    Vec cf;  // minimization costs
    Vec ck;
  };

  static Dense densify(const ConicProgram& prog, const detail::ConeLayout& cone) {
    const auto m = static_cast<Eigen::Index>(prog.num_rows());
    Dense D;
    D.Af = Mat::Zero(m, static_cast<Eigen::Index>(prog.num_free));
    D.Ak = Mat::Zero(m, cone.dim);
    D.b.resize(m);
    const double r2 = std::sqrt(2.0);
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto& row = prog.rows[static_cast<std::size_t>(r)];
      D.b(r) = row.rhs;
      for (auto [i, v] : row.free) D.Af(r, i) += v;
      for (auto [i, v] : row.nonneg) D.Ak(r, i) += v;
      for (const auto& e : row.psd) {
        const int col = cone.offsets[static_cast<std::size_t>(e.block)] + detail::svec_index(e.i, e.j);
        D.Ak(r, col) += (e.i == e.j) ? e.value : r2 * e.value;
      }
    }
    D.cf = -Eigen::Map<const Vec>(prog.objective_free.data(), static_cast<Eigen::Index>(prog.num_free));
    D.ck = Vec::Zero(cone.dim);
    for (std::size_t i = 0; i < prog.num_nonneg; ++i) D.ck(static_cast<Eigen::Index>(i)) = -prog.objective_nonneg[i];
    return D;
  }

  // Residual summary of a candidate (x, y, s) on the original data.
  struct Quality {
    double pres, dres, gap, pobj, dobj, slack;
  };

  static Quality measure(const Dense& D, const Vec& xf, const Vec& xk, const Vec& y, const Vec& s) {
    Quality q{};
    const Vec rp = D.Af * xf + D.Ak * xk - D.b;
    const Vec rdf = D.Af.transpose() * y - D.cf;
    const Vec rdk = D.Ak.transpose() * y + s - D.ck;
    const double bnorm = D.b.size() ? D.b.lpNorm<Eigen::Infinity>() : 0.0;
    double cnorm = 0.0;
    if (D.cf.size()) cnorm = std::max(cnorm, D.cf.lpNorm<Eigen::Infinity>());
    if (D.ck.size()) cnorm = std::max(cnorm, D.ck.lpNorm<Eigen::Infinity>());
    q.pres = (rp.size() ? rp.lpNorm<Eigen::Infinity>() : 0.0) / (1.0 + bnorm);
    double dr = 0.0;
    if (rdf.size()) dr = std::max(dr, rdf.lpNorm<Eigen::Infinity>());
    if (rdk.size()) dr = std::max(dr, rdk.lpNorm<Eigen::Infinity>());
    q.dres = dr / (1.0 + cnorm);
    const double cx = D.cf.dot(xf) + D.ck.dot(xk);
    const double by = D.b.dot(y);
    q.gap = std::abs(cx - by) / (1.0 + std::abs(cx));
    q.pobj = -cx;
    q.dobj = -by;
    q.slack = std::abs(xf.dot(rdf) + xk.dot(rdk)) + std::abs(y.dot(rp));
    return q;
  }

  SolveResult run(const ConicProgram& prog) const {
    const detail::ConeLayout cone(static_cast<int>(prog.num_nonneg), prog.psd_sizes);
    const Dense D = densify(prog, cone);
    const Eigen::Index m = D.b.size();
    const Eigen::Index nf = D.Af.cols();
    const Eigen::Index N = cone.dim;

    SolveResult res;
    res.free_values.assign(static_cast<std::size_t>(nf), 0.0);
    res.nonneg_values.assign(prog.num_nonneg, 0.0);
    for (int s : cone.sizes) res.psd_values.push_back(Mat::Zero(s, s));
    res.duals.assign(static_cast<std::size_t>(m), 0.0);

    // ---- presolve: row equilibration, zero rows, dependent rows, dependent free columns.
    Vec rowscale = Vec::Ones(m);
    Mat A(m, nf + N);
    A << D.Af, D.Ak;
    Vec b = D.b;
    for (Eigen::Index r = 0; r < m; ++r) {
      const double mx = A.row(r).cwiseAbs().maxCoeff();
      if (mx > 0) {
        rowscale(r) = 1.0 / mx;
        A.row(r) *= rowscale(r);
        b(r) *= rowscale(r);
      }
    }
    const double bscale = 1.0 + (b.size() ? b.lpNorm<Eigen::Infinity>() : 0.0);
    std::vector<Eigen::Index> keep_rows;
    for (Eigen::Index r = 0; r < m; ++r) {
      if (A.row(r).cwiseAbs().maxCoeff() == 0.0) {
        if (std::abs(b(r)) > 1e-12 * bscale) {
          Vec y = Vec::Zero(m);
          y(r) = (b(r) > 0 ? 1.0 : -1.0) * rowscale(r);
          return report_infeasible(res, D, cone, y, "row " + std::to_string(r) + " has no variables but a nonzero right-hand side");
        }
        continue;
      }
      keep_rows.push_back(r);
    }
    if (!keep_rows.empty()) {
      Mat Ar(static_cast<Eigen::Index>(keep_rows.size()), A.cols());
      Vec br(static_cast<Eigen::Index>(keep_rows.size()));
      for (std::size_t i = 0; i < keep_rows.size(); ++i) {
        Ar.row(static_cast<Eigen::Index>(i)) = A.row(keep_rows[i]);
        br(static_cast<Eigen::Index>(i)) = b(keep_rows[i]);
      }
      Eigen::ColPivHouseholderQR<Mat> qr(Ar.transpose());
      qr.setThreshold(1e-11);
      const Eigen::Index rank = qr.rank();
      if (rank < Ar.rows()) {
        Eigen::CompleteOrthogonalDecomposition<Mat> cod(Ar);
        cod.setThreshold(1e-11);
        const Vec xls = cod.solve(br);
        const Vec resid = br - Ar * xls;
        if (resid.lpNorm<Eigen::Infinity>() > 1e-9 * bscale) {
          Vec y = Vec::Zero(m);
          for (std::size_t i = 0; i < keep_rows.size(); ++i) {
            y(keep_rows[i]) = resid(static_cast<Eigen::Index>(i)) * rowscale(keep_rows[i]);
          }
          return report_infeasible(res, D, cone, y, "equality rows are inconsistent");
        }
        std::vector<Eigen::Index> indep;
        for (Eigen::Index i = 0; i < rank; ++i) indep.push_back(keep_rows[static_cast<std::size_t>(qr.colsPermutation().indices()(i))]);
        std::sort(indep.begin(), indep.end());
        keep_rows = indep;
      }
    }
    const Eigen::Index mr = static_cast<Eigen::Index>(keep_rows.size());
    Mat Ared(mr, A.cols());
    Vec bred(mr);
    for (Eigen::Index i = 0; i < mr; ++i) {
      Ared.row(i) = A.row(keep_rows[static_cast<std::size_t>(i)]);
      bred(i) = b(keep_rows[static_cast<std::size_t>(i)]);
    }

    std::vector<Eigen::Index> keep_free;
    if (nf > 0) {
      const Mat Afr = Ared.leftCols(nf);
      Eigen::ColPivHouseholderQR<Mat> qr(Afr);
      qr.setThreshold(1e-11);
      const Eigen::Index rank = (Afr.rows() > 0) ? qr.rank() : 0;
      std::vector<Eigen::Index> indep;
      for (Eigen::Index i = 0; i < rank; ++i) indep.push_back(qr.colsPermutation().indices()(i));
      std::sort(indep.begin(), indep.end());
      // A dependent free column with a cost not explained by the others is an unbounded ray.
      Mat AB(Afr.rows(), static_cast<Eigen::Index>(indep.size()));
      Vec cB(static_cast<Eigen::Index>(indep.size()));
      for (std::size_t i = 0; i < indep.size(); ++i) {
        AB.col(static_cast<Eigen::Index>(i)) = Afr.col(indep[i]);
        cB(static_cast<Eigen::Index>(i)) = D.cf(indep[i]);
      }
      for (Eigen::Index j = 0; j < nf; ++j) {
        if (std::find(indep.begin(), indep.end(), j) != indep.end()) continue;
        Vec z = indep.empty() ? Vec() : Vec(AB.colPivHouseholderQr().solve(Afr.col(j)));
        const double dc = D.cf(j) - (indep.empty() ? 0.0 : cB.dot(z));
        if (std::abs(dc) > 1e-9 * (1.0 + D.cf.lpNorm<Eigen::Infinity>())) {
          Vec dfree = Vec::Zero(nf);
          const double sign = dc > 0 ? -1.0 : 1.0;
          dfree(j) = sign;
          for (std::size_t i = 0; i < indep.size(); ++i) dfree(indep[i]) = -sign * z(static_cast<Eigen::Index>(i));
          if (report_unbounded(res, D, cone, dfree, Vec::Zero(N))) return res;
        }
      }
      keep_free = indep;
    }
    const Eigen::Index nfr = static_cast<Eigen::Index>(keep_free.size());
    Mat Af(mr, nfr);
    Vec cf(nfr);
    for (Eigen::Index i = 0; i < nfr; ++i) {
      Af.col(i) = Ared.col(keep_free[static_cast<std::size_t>(i)]);
      cf(i) = D.cf(keep_free[static_cast<std::size_t>(i)]);
    }
    const Mat Ak = Ared.rightCols(N);
    const Vec& ck = D.ck;

    // Lift a reduced iterate back to the original variable/row spaces.
    auto lift = [&](const Vec& xf_r, const Vec& y_r, Vec& xf_full, Vec& y_full) {
      xf_full = Vec::Zero(nf);
      for (Eigen::Index i = 0; i < nfr; ++i) xf_full(keep_free[static_cast<std::size_t>(i)]) = xf_r(i);
      y_full = Vec::Zero(m);
      for (Eigen::Index i = 0; i < mr; ++i) {
        const Eigen::Index r = keep_rows[static_cast<std::size_t>(i)];
        y_full(r) = y_r(i) * rowscale(r);
      }
    };

    // ---- homogeneous self-dual embedding
    Vec xf = Vec::Zero(nfr);
    Vec xk = cone.identity();
    Vec s = cone.identity();
    Vec y = Vec::Zero(mr);
    double tau = 1.0;
    double kappa = 1.0;
    const double nu = static_cast<double>(cone.barrier) + 1.0;
    int small_steps = 0;

    for (int it = 0; it <= cfg_.max_iterations; ++it) {
      res.iterations = it;
      Vec xf_full, y_full;
      lift(xf, y, xf_full, y_full);
      const Quality q = measure(D, xf_full / tau, xk / tau, y_full / tau, s / tau);
      const double mu = (xk.dot(s) + tau * kappa) / nu;
      IterateRecord rec;
      rec.iteration = it;
      rec.primal_objective = q.pobj;
      rec.dual_objective = q.dobj;
      rec.primal_residual = q.pres;
      rec.dual_residual = q.dres;
      rec.infeasibility_slack = q.slack;
      rec.mu = mu;
      rec.tau = tau;
      rec.kappa = kappa;
      res.trace.push_back(rec);

      if (q.pres <= cfg_.tolerance && q.dres <= cfg_.tolerance && q.gap <= cfg_.tolerance) {
        fill_solution(res, D, cone, xf_full / tau, xk / tau, y_full / tau, s / tau, q);
        res.status = SolveStatus::Optimal;
        return res;
      }

      // Infeasibility certificates from the embedding rays.
      const double by = bred.dot(y);
      if (by > 0) {
        const Vec yr = y / by;
        const double free_viol = nfr ? (Af.transpose() * yr).lpNorm<Eigen::Infinity>() : 0.0;
        const double cone_viol = std::max(0.0, -cone.min_eig(-(Ak.transpose() * yr)));
        const double scale = 1.0 + yr.lpNorm<Eigen::Infinity>();
        if (free_viol <= cfg_.infeasibility_threshold * scale && cone_viol <= cfg_.infeasibility_threshold * scale) {
          Vec yfull;
          Vec dummy;
          lift(Vec::Zero(nfr), yr, dummy, yfull);
          return report_infeasible(res, D, cone, yfull, "infeasibility detected by the self-dual embedding");
        }
      }
      const double cx = cf.dot(xf) + ck.dot(xk);
      if (cx < 0) {
        const Vec xfr = xf / (-cx);
        const Vec xkr = xk / (-cx);
        const double viol = (Af * xfr + Ak * xkr).lpNorm<Eigen::Infinity>();
        const double scale = 1.0 + std::max(xfr.size() ? xfr.lpNorm<Eigen::Infinity>() : 0.0, xkr.lpNorm<Eigen::Infinity>());
        if (viol <= cfg_.infeasibility_threshold * scale) {
          Vec dfree, dummy;
          lift(xfr, Vec::Zero(mr), dfree, dummy);
          if (report_unbounded(res, D, cone, dfree, xkr)) return res;
        }
      }

      if (it == cfg_.max_iterations) break;

      // ---- scaling
      std::vector<detail::NtBlock> nt;
      Vec dlp = xk.head(cone.nl).cwiseQuotient(s.head(cone.nl));
      bool ok = true;
      for (std::size_t blk = 0; blk < cone.sizes.size(); ++blk) {
        auto sc = detail::nt_scaling(cone.block(xk, blk), cone.block(s, blk));
        if (!sc) {
          ok = false;
          break;
        }
        nt.push_back(std::move(*sc));
      }
      if (!ok) return trouble(res, D, cone, xf_full / tau, xk / tau, y_full / tau, s / tau, q, "lost positive definiteness of an iterate");

      auto applyH = [&](const Vec& v) {
        Vec out(N);
        out.head(cone.nl) = dlp.cwiseProduct(v.head(cone.nl));
        for (std::size_t blk = 0; blk < nt.size(); ++blk) {
          const int off = cone.offsets[blk];
          const int p = detail::svec_dim(cone.sizes[blk]);
          out.segment(off, p) = nt[blk].H * v.segment(off, p);
        }
        return out;
      };

      // M = Ak H Ak^T
      Mat M = Ak.leftCols(cone.nl) * dlp.asDiagonal() * Ak.leftCols(cone.nl).transpose();
      for (std::size_t blk = 0; blk < nt.size(); ++blk) {
        const int off = cone.offsets[blk];
        const int p = detail::svec_dim(cone.sizes[blk]);
        const Mat Ab = Ak.middleCols(off, p);
        M.noalias() += Ab * nt[blk].H * Ab.transpose();
      }
      const Eigen::Index ksz = mr + nfr;
      Mat K = Mat::Zero(ksz, ksz);
      K.topLeftCorner(mr, mr) = 0.5 * (M + M.transpose());
      K.topRightCorner(mr, nfr) = Af;
      K.bottomLeftCorner(nfr, mr) = Af.transpose();
      Vec eq(ksz);
      for (Eigen::Index i = 0; i < ksz; ++i) {
        const double mx = K.row(i).cwiseAbs().maxCoeff();
        eq(i) = mx > 0 ? 1.0 / std::sqrt(mx) : 1.0;
      }
      const Mat Ks = eq.asDiagonal() * K * eq.asDiagonal();
      Eigen::PartialPivLU<Mat> lu(Ks);
      const double Knorm = K.cwiseAbs().rowwise().sum().maxCoeff();
      auto ksolve = [&](const Vec& rhs) -> std::optional<Vec> {
        Vec z = eq.cwiseProduct(lu.solve(eq.cwiseProduct(rhs)));
        for (int ref = 0; ref < 2; ++ref) {
          const Vec r = rhs - K * z;
          z += eq.cwiseProduct(lu.solve(eq.cwiseProduct(r)));
        }
        if (!z.allFinite()) return std::nullopt;
        // Normwise backward error; the forward error is allowed to grow with
        // the conditioning of the scaled system near the boundary.
        const double denom = Knorm * z.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>();
        const double berr = (rhs - K * z).lpNorm<Eigen::Infinity>() / (denom > 0 ? denom : 1.0);
        if (berr > 1e-9) return std::nullopt;
        return z;
      };

      const Vec rp = Af * xf + Ak * xk - bred * tau;
      const Vec rdf = Af.transpose() * y - cf * tau;
      const Vec rdk = Ak.transpose() * y + s - ck * tau;
      const double rg = bred.dot(y) - cf.dot(xf) - ck.dot(xk) - kappa;

      Vec rhs2(ksz);
      rhs2 << bred + Ak * applyH(ck), cf;
      const auto sol2 = ksolve(rhs2);
      if (!sol2) return trouble(res, D, cone, xf_full / tau, xk / tau, y_full / tau, s / tau, q, "Newton system is numerically singular");
      const Vec u2 = sol2->head(mr);
      const Vec v2 = sol2->tail(nfr);
      const Vec HAtu2 = applyH(Ak.transpose() * u2);
      const Vec Hck = applyH(ck);
      const double a1 = bred.dot(u2) - cf.dot(v2) - ck.dot(HAtu2) + ck.dot(Hck);

      struct Direction {
        Vec dxf, dxk, dy, ds;
        double dtau, dkappa;
      };
      // Newton direction for centering sigma; corr carries the affine direction
      // for the second-order (Mehrotra) terms.
      auto direction = [&](double sigma, const Direction* corr) -> std::optional<Direction> {
        const double eta = 1.0 - sigma;
        Vec Rc(N);
        for (int i = 0; i < cone.nl; ++i) {
          double t = sigma * mu - xk(i) * s(i);
          if (corr) t -= corr->dxk(i) * corr->ds(i);
          Rc(i) = t / s(i);
        }
        for (std::size_t blk = 0; blk < nt.size(); ++blk) {
          const int off = cone.offsets[blk];
          const int p = detail::svec_dim(cone.sizes[blk]);
          Rc.segment(off, p) = detail::svec(sigma * mu * nt[blk].Sinv) - xk.segment(off, p);
        }
        double rtk = sigma * mu - tau * kappa;
        if (corr) rtk -= corr->dtau * corr->dkappa;

        const Vec Hrdk = applyH(rdk);
        Vec rhs1(ksz);
        rhs1 << -eta * rp - Ak * (eta * Hrdk + Rc), -eta * rdf;
        const auto sol1 = ksolve(rhs1);
        if (!sol1) return std::nullopt;
        const Vec u1 = sol1->head(mr);
        const Vec v1 = sol1->tail(nfr);
        const double a0 = bred.dot(u1) - cf.dot(v1) - ck.dot(applyH(Ak.transpose() * u1)) - eta * ck.dot(Hrdk) - ck.dot(Rc);
        Direction dir;
        dir.dtau = (-eta * rg - a0 + rtk / tau) / (a1 + kappa / tau);
        dir.dy = u1 + dir.dtau * u2;
        dir.dxf = v1 + dir.dtau * v2;
        dir.dxk = applyH(Ak.transpose() * dir.dy - ck * dir.dtau + eta * rdk) + Rc;
        dir.ds = -(Ak.transpose() * dir.dy) + ck * dir.dtau - eta * rdk;
        dir.dkappa = (rtk - kappa * dir.dtau) / tau;
        if (!dir.dxk.allFinite() || !dir.ds.allFinite() || !std::isfinite(dir.dtau)) return std::nullopt;
        return dir;
      };
      auto max_step = [&](const Direction& dir) -> std::optional<double> {
        auto ax = cone.max_step(xk, dir.dxk);
        auto as = cone.max_step(s, dir.ds);
        if (!ax || !as) return std::nullopt;
        double a = std::min(*ax, *as);
        if (dir.dtau < 0) a = std::min(a, -tau / dir.dtau);
        if (dir.dkappa < 0) a = std::min(a, -kappa / dir.dkappa);
        return a;
      };

      std::optional<Direction> dir;
      if (cfg_.predictor_corrector) {
        auto aff = direction(0.0, nullptr);
        if (!aff) return trouble(res, D, cone, xf_full / tau, xk / tau, y_full / tau, s / tau, q, "Newton system is numerically singular");
        auto amax = max_step(*aff);
        if (!amax) return trouble(res, D, cone, xf_full / tau, xk / tau, y_full / tau, s / tau, q, "step length computation failed");
        const double aa = std::min(1.0, *amax);
        const double mu_aff = ((xk + aa * aff->dxk).dot(s + aa * aff->ds) +
                               (tau + aa * aff->dtau) * (kappa + aa * aff->dkappa)) / nu;
        double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);
        sigma = std::clamp(sigma, 1e-6, 1.0);
        dir = direction(sigma, &*aff);
      } else {
        dir = direction(0.1, nullptr);
      }
      if (!dir) return trouble(res, D, cone, xf_full / tau, xk / tau, y_full / tau, s / tau, q, "Newton system is numerically singular");
      auto amax = max_step(*dir);
      if (!amax) return trouble(res, D, cone, xf_full / tau, xk / tau, y_full / tau, s / tau, q, "step length computation failed");
      const double alpha = std::min(1.0, cfg_.step_fraction * *amax);
      res.trace.back().step = alpha;

      xf += alpha * dir->dxf;
      xk += alpha * dir->dxk;
      y += alpha * dir->dy;
      s += alpha * dir->ds;
      tau += alpha * dir->dtau;
      kappa += alpha * dir->dkappa;

      small_steps = alpha < 1e-8 ? small_steps + 1 : 0;
      if (small_steps >= 3 || !(tau > 0) || !(kappa > 0)) {
        Vec xf2, y2;
        lift(xf, y, xf2, y2);
        const Quality q2 = measure(D, xf2 / tau, xk / tau, y2 / tau, s / tau);
        return trouble(res, D, cone, xf2 / tau, xk / tau, y2 / tau, s / tau, q2, "no progress: step length collapsed");
      }
    }
    Vec xf_full, y_full;
    lift(xf, y, xf_full, y_full);
    const Quality q = measure(D, xf_full / tau, xk / tau, y_full / tau, s / tau);
    fill_solution(res, D, cone, xf_full / tau, xk / tau, y_full / tau, s / tau, q);
    res.status = SolveStatus::IterationLimit;
    res.message = "iteration limit reached";
    return res;
  }

  static void fill_solution(SolveResult& res, const Dense&, const detail::ConeLayout& cone, const Vec& xf, const Vec& xk,
                            const Vec& y, const Vec&, const Quality& q) {
    res.free_values.assign(xf.data(), xf.data() + xf.size());
    res.nonneg_values.assign(xk.data(), xk.data() + cone.nl);
    res.psd_values.clear();
    for (std::size_t b = 0; b < cone.sizes.size(); ++b) res.psd_values.push_back(cone.block(xk, b));
    // Report multipliers for the maximization form (rhs^T y is the upper bound).
    res.duals.resize(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) res.duals[static_cast<std::size_t>(i)] = -y(i);
    res.objective = q.pobj;
    res.dual_objective = q.dobj;
    res.primal_residual = q.pres;
    res.dual_residual = q.dres;
    res.duality_gap = q.gap;
  }

  SolveResult trouble(SolveResult& res, const Dense& D, const detail::ConeLayout& cone, const Vec& xf, const Vec& xk,
                      const Vec& y, const Vec& s, const Quality& q, const std::string& why) const {
    fill_solution(res, D, cone, xf, xk, y, s, q);
    res.status = SolveStatus::NumericalTrouble;
    res.message = why;
    return res;
  }

  // Verifies and records a Farkas certificate; y is in original row space.
  static SolveResult report_infeasible(SolveResult& res, const Dense& D, const detail::ConeLayout& cone, Vec y,
                                       const std::string& why) {
    const double by = D.b.dot(y);
    if (by > 0) {
      y /= by;
      const double free_viol = D.Af.cols() ? (D.Af.transpose() * y).lpNorm<Eigen::Infinity>() : 0.0;
      const double cone_viol = std::max(0.0, -cone.min_eig(-(D.Ak.transpose() * y)));
      if (free_viol <= 1e-6 && cone_viol <= 1e-6) {
        res.status = SolveStatus::Infeasible;
        res.farkas_ray.assign(y.data(), y.data() + y.size());
        res.objective = -std::numeric_limits<double>::infinity();
        res.message = why;
        return res;
      }
    }
    res.status = SolveStatus::NumericalTrouble;
    res.message = why + " (certificate failed verification)";
    return res;
  }

  // Verifies and records an improving ray; returns false when verification fails.
  static bool report_unbounded(SolveResult& res, const Dense& D, const detail::ConeLayout& cone, Vec dfree, Vec dk) {
    const double gain = -(D.cf.dot(dfree) + D.ck.dot(dk));
    if (!(gain > 0)) return false;
    dfree /= gain;
    dk /= gain;
    const double viol = (D.Af * dfree + D.Ak * dk).lpNorm<Eigen::Infinity>();
    const double cone_viol = dk.size() ? std::max(0.0, -cone.min_eig(dk)) : 0.0;
    if (viol > 1e-6 || cone_viol > 1e-6) return false;
    res.status = SolveStatus::Unbounded;
    res.ray_free.assign(dfree.data(), dfree.data() + dfree.size());
    res.ray_nonneg.assign(dk.data(), dk.data() + cone.nl);
    res.ray_psd.clear();
    for (std::size_t b = 0; b < cone.sizes.size(); ++b) res.ray_psd.push_back(cone.block(dk, b));
    res.objective = std::numeric_limits<double>::infinity();
    res.message = "objective is unbounded above";
    return true;
  }

  SolverConfig cfg_;
};

inline SolveResult solve(const ConicProgram& program, const SolverConfig& config = {}) {
  return InteriorPointSolver(config).solve(program);
}

}  // namespace bsos
