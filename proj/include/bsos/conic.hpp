#pragma once

// Unified conic standard form emitted by every relaxation builder:
//
//   maximize   sum_i c_free[i] t_i + sum_i c_nonneg[i] lambda_i
//   subject to for every row r:
//                sum_i a_ri t_i + sum_i b_ri lambda_i + sum_blk <A_r,blk, X_blk> = rhs_r
//              t free, lambda >= 0, X_blk symmetric PSD.

#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bsos/polynomial.hpp"

namespace bsos {

enum class Hierarchy { Lp, Bsos, Putinar, Rlt01, Bsos01, SosBound, Generic };

inline const char* hierarchy_name(Hierarchy h) {
  switch (h) {
    case Hierarchy::Lp: return "lp";
    case Hierarchy::Bsos: return "bsos";
    case Hierarchy::Putinar: return "putinar";
    case Hierarchy::Rlt01: return "rlt01";
    case Hierarchy::Bsos01: return "bsos01";
    case Hierarchy::SosBound: return "sosbound";
    case Hierarchy::Generic: return "generic";
  }
  return "generic";
}

inline Hierarchy parse_hierarchy(const std::string& s) {
  for (Hierarchy h : {Hierarchy::Lp, Hierarchy::Bsos, Hierarchy::Putinar, Hierarchy::Rlt01, Hierarchy::Bsos01}) {
    if (s == hierarchy_name(h)) return h;
  }
  throw std::invalid_argument("unknown hierarchy '" + s + "'");
}

/// Coefficient A[i][j] = A[j][i] = value of a symmetric row matrix, i <= j.
struct PsdEntry {
  int block = 0;
  int i = 0;
  int j = 0;
  double value = 0.0;
};

struct ConicRow {
  std::vector<std::pair<int, double>> free;
  std::vector<std::pair<int, double>> nonneg;
  std::vector<PsdEntry> psd;
  double rhs = 0.0;
};

struct ConicProgram {
  Hierarchy hierarchy = Hierarchy::Generic;
  int d = 0;
  int k = 0;
  int degree_budget = 0;
  std::size_t num_vars = 0;  // polynomial variable count n

  std::size_t num_free = 0;
  std::size_t num_nonneg = 0;
  std::vector<int> psd_sizes;

  std::vector<double> objective_free;
  std::vector<double> objective_nonneg;

  std::vector<ConicRow> rows;
  std::vector<Monomial> row_monomials;  // parallel to rows when built from polynomials

  std::vector<std::string> free_labels;
  std::vector<std::string> nonneg_labels;
  std::vector<std::string> psd_labels;
  std::vector<std::string> warnings;

  std::size_t num_rows() const { return rows.size(); }

  int add_free(std::string label, double objective = 0.0) {
    free_labels.push_back(std::move(label));
    objective_free.push_back(objective);
    return static_cast<int>(num_free++);
  }
  int add_nonneg(std::string label, double objective = 0.0) {
    nonneg_labels.push_back(std::move(label));
    objective_nonneg.push_back(objective);
    return static_cast<int>(num_nonneg++);
  }
  int add_psd(int size, std::string label) {
    psd_sizes.push_back(size);
    psd_labels.push_back(std::move(label));
    return static_cast<int>(psd_sizes.size() - 1);
  }

  /// Throws std::invalid_argument when indices or sizes are inconsistent.
  void validate() const {
    if (objective_free.size() != num_free || objective_nonneg.size() != num_nonneg) {
      throw std::invalid_argument("ConicProgram: objective size mismatch");
    }
    if (!row_monomials.empty() && row_monomials.size() != rows.size()) {
      throw std::invalid_argument("ConicProgram: row monomial count mismatch");
    }
    for (const auto& r : rows) {
      for (auto [i, v] : r.free) {
        if (i < 0 || static_cast<std::size_t>(i) >= num_free) throw std::invalid_argument("ConicProgram: free index out of range");
      }
      for (auto [i, v] : r.nonneg) {
        if (i < 0 || static_cast<std::size_t>(i) >= num_nonneg) throw std::invalid_argument("ConicProgram: nonneg index out of range");
      }
      for (const auto& e : r.psd) {
        if (e.block < 0 || static_cast<std::size_t>(e.block) >= psd_sizes.size()) {
          throw std::invalid_argument("ConicProgram: PSD block index out of range");
        }
        const int s = psd_sizes[static_cast<std::size_t>(e.block)];
        if (e.i < 0 || e.j < e.i || e.j >= s) throw std::invalid_argument("ConicProgram: PSD entry out of range");
      }
    }
  }

  /// Canonical text dump: header, then one line per equality row.
  std::string dump() const {
    auto num = [](double v) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return std::string(buf);
    };
    std::ostringstream os;
    os << "program " << hierarchy_name(hierarchy) << " d=" << d << " k=" << k << " budget=" << degree_budget
       << " rows=" << rows.size() << " free=" << num_free << " nonneg=" << num_nonneg << " psd=[";
    for (std::size_t b = 0; b < psd_sizes.size(); ++b) os << (b ? "," : "") << psd_sizes[b];
    os << "]\n";
    os << "objective";
    for (std::size_t i = 0; i < num_free; ++i) {
      if (objective_free[i] != 0.0) os << " f" << i << ":" << num(objective_free[i]);
    }
    for (std::size_t i = 0; i < num_nonneg; ++i) {
      if (objective_nonneg[i] != 0.0) os << " n" << i << ":" << num(objective_nonneg[i]);
    }
    os << "\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& row = rows[r];
      os << "row " << (row_monomials.empty() ? std::to_string(r) : row_monomials[r].to_string())
         << " rhs=" << num(row.rhs);
      for (auto [i, v] : row.free) os << " f" << i << ":" << num(v);
      for (auto [i, v] : row.nonneg) os << " n" << i << ":" << num(v);
      for (const auto& e : row.psd) os << " s" << e.block << "[" << e.i << "," << e.j << "]:" << num(e.value);
      os << "\n";
    }
    return os.str();
  }
};

}  // namespace bsos
