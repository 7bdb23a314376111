#pragma once

// Polynomial optimization problem model: min f(x) s.t. g_j(x) >= 0 over a
// box / binary domain, normalization to the unit cube with 0 <= g_j <= 1 on
// K, and the lifted product constraints g^alpha (1-g)^beta.

#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bsos/polynomial.hpp"

namespace bsos {

/// Raised for malformed or unsupported problem instances.
class ProblemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A valid instance outside the scope of an oracle or certified method.
class ScopeError : public ProblemError {
 public:
  using ProblemError::ProblemError;
};

enum class VarKind { Box, Binary };

struct VariableDomain {
  VarKind kind = VarKind::Box;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  static VariableDomain box(double lo, double hi) { return {VarKind::Box, lo, hi}; }
  static VariableDomain binary() { return {VarKind::Binary, 0.0, 1.0}; }
  bool is_binary() const { return kind == VarKind::Binary; }
  friend bool operator==(const VariableDomain&, const VariableDomain&) = default;
};

enum class ConstraintOrigin { Inequality, EqualitySplit, Box };

struct ConstraintInfo {
  ConstraintOrigin origin = ConstraintOrigin::Inequality;
  // Certified enclosure of g_j over K (filled in by normalize()).
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  friend bool operator==(const ConstraintInfo&, const ConstraintInfo&) = default;
};

/// x_original = offset + width * u, per variable.
struct AffineMap {
  double offset = 0.0;
  double width = 1.0;
  friend bool operator==(const AffineMap&, const AffineMap&) = default;
};

struct ProblemInstance {
  std::string name;
  std::vector<std::string> var_names;
  std::vector<VariableDomain> kinds;
  Polynomial objective;
  std::vector<Polynomial> constraints;  // g_j(x) >= 0
  std::vector<ConstraintInfo> constraint_info;
  bool normalized = false;
  double objective_offset = 0.0;
  double objective_scale = 1.0;
  std::vector<AffineMap> transform;  // empty until normalized

  std::size_t n() const { return var_names.size(); }
  std::size_t m() const { return constraints.size(); }

  bool all_binary() const {
    for (const auto& k : kinds) {
      if (!k.is_binary()) return false;
    }
    return !kinds.empty();
  }
  bool any_binary() const {
    for (const auto& k : kinds) {
      if (k.is_binary()) return true;
    }
    return false;
  }

  int max_constraint_degree() const {
    int d = 0;
    for (const auto& g : constraints) d = std::max(d, g.degree());
    return d;
  }

  void add_constraint(Polynomial g, ConstraintOrigin origin = ConstraintOrigin::Inequality) {
    constraints.push_back(std::move(g));
    constraint_info.push_back({origin});
  }

  /// Reported bound in the units of the original objective.
  double to_original_units(double normalized_value) const {
    return objective_scale * normalized_value + objective_offset;
  }

  /// Map a point in normalized coordinates back to the original variables.
  std::vector<double> to_original_point(std::span<const double> u) const {
    std::vector<double> x(u.begin(), u.end());
    for (std::size_t i = 0; i < transform.size() && i < x.size(); ++i) {
      x[i] = transform[i].offset + transform[i].width * u[i];
    }
    return x;
  }

  /// Feasibility of a normalized point: within the domain and all g_j >= -tol.
  bool is_feasible(std::span<const double> x, double tol = 1e-9) const {
    for (std::size_t i = 0; i < n(); ++i) {
      const auto& k = kinds[i];
      if (k.is_binary()) {
        if (std::abs(x[i]) > tol && std::abs(x[i] - 1.0) > tol) return false;
      } else if (x[i] < k.lo - tol || x[i] > k.hi + tol) {
        return false;
      }
    }
    for (const auto& g : constraints) {
      if (g.eval(x) < -tol) return false;
    }
    return true;
  }

  friend bool operator==(const ProblemInstance&, const ProblemInstance&) = default;
};

/// Monomial-wise interval enclosure of p over [0,1]^n.
inline std::pair<double, double> unit_box_enclosure(const Polynomial& p) {
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& [m, c] : p.terms()) {
    if (m.is_constant()) {
      lo += c;
      hi += c;
    } else if (c > 0) {
      hi += c;
    } else {
      lo += c;
    }
  }
  return {lo, hi};
}

namespace detail {

// True when g is exactly u_i or 1 - u_i for some i (after normalization).
inline bool matches_box_polynomial(const Polynomial& g, std::size_t i, bool complement) {
  const std::size_t n = g.num_vars();
  Polynomial target = complement ? Polynomial::constant(n, 1.0) - Polynomial::variable(n, i)
                                 : Polynomial::variable(n, i);
  return g.approx_equal(target, 1e-12);
}

}  // namespace detail

/// Affine change of variables onto [0,1]^n, box constraints so that the
/// family {g_j, 1-g_j} contains u_i and 1-u_i for every variable, and each
/// g_j divided by its interval upper bound over [0,1]^n.
inline ProblemInstance normalize(const ProblemInstance& in) {
  if (in.normalized) return in;
  const std::size_t n = in.n();
  if (n == 0) throw ProblemError("problem has no variables");
  if (in.kinds.size() != n) throw ProblemError("variable domain count does not match variable count");
  if (in.objective.num_vars() != n) throw ProblemError("objective variable count mismatch");

  ProblemInstance out;
  out.name = in.name;
  out.var_names = in.var_names;
  out.objective_offset = in.objective_offset;
  out.objective_scale = in.objective_scale;

  std::vector<Polynomial> images;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& k = in.kinds[i];
    AffineMap map;
    if (k.is_binary()) {
      out.kinds.push_back(VariableDomain::binary());
    } else {
      if (!std::isfinite(k.lo) || !std::isfinite(k.hi)) {
        throw ProblemError("variable '" + in.var_names[i] + "' is unbounded; a finite box is required");
      }
      if (!(k.hi > k.lo)) {
        throw ProblemError("variable '" + in.var_names[i] + "' has an empty or degenerate box");
      }
      map = {k.lo, k.hi - k.lo};
      out.kinds.push_back(VariableDomain::box(0.0, 1.0));
    }
    out.transform.push_back(map);
    images.push_back(Polynomial::constant(n, map.offset) + Polynomial::variable(n, i) * map.width);
  }

  out.objective = in.objective.compose(images);

  for (std::size_t j = 0; j < in.m(); ++j) {
    Polynomial g = in.constraints[j].compose(images);
    auto [lo, hi] = unit_box_enclosure(g);
    if (hi <= 0.0) {
      throw ProblemError("constraint " + std::to_string(j + 1) +
                         " is certifiably infeasible or vacuous over the box (interval upper bound " +
                         std::to_string(hi) + ")");
    }
    g = g * (1.0 / hi);
    out.constraints.push_back(std::move(g));
    ConstraintInfo info = j < in.constraint_info.size() ? in.constraint_info[j] : ConstraintInfo{};
    info.lo = std::max(0.0, lo / hi);
    info.hi = 1.0;
    out.constraint_info.push_back(info);
  }

  for (std::size_t i = 0; i < n; ++i) {
    bool covered = false;
    for (const auto& g : out.constraints) {
      if (detail::matches_box_polynomial(g, i, false) || detail::matches_box_polynomial(g, i, true)) {
        covered = true;
        break;
      }
    }
    if (!covered) {
      out.constraints.push_back(Polynomial::variable(n, i));
      out.constraint_info.push_back({ConstraintOrigin::Box, 0.0, 1.0});
    }
  }
  // Constraints equal to u_i / 1-u_i are box constraints whatever their source.
  for (std::size_t j = 0; j < out.m(); ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (detail::matches_box_polynomial(out.constraints[j], i, false) ||
          detail::matches_box_polynomial(out.constraints[j], i, true)) {
        out.constraint_info[j].origin = ConstraintOrigin::Box;
      }
    }
  }

  out.normalized = true;
  return out;
}

/// One lifted constraint g^alpha (1-g)^beta >= 0.
struct ProductPair {
  std::vector<int> alpha;
  std::vector<int> beta;
  Polynomial poly;

  int order() const {
    int s = 0;
    for (int a : alpha) s += a;
    for (int b : beta) s += b;
    return s;
  }
  std::string label() const {
    Monomial a(alpha), b(beta);
    return a.to_string() + b.to_string();
  }
};

/// The redundant constraints of the lifted problem at level d. The empty
/// pair (alpha, beta) = 0 is kept apart from the multiplier list.
struct ProductConstraintSet {
  int d = 0;
  std::vector<ProductPair> pairs;
  Polynomial empty_pair;

  std::size_t size() const { return pairs.size(); }
  int max_degree() const {
    int s = 0;
    for (const auto& p : pairs) s = std::max(s, p.poly.degree());
    return s;
  }
};

inline ProductConstraintSet lift_products(const ProblemInstance& inst, int d) {
  if (!inst.normalized) throw ProblemError("lift_products requires a normalized instance");
  if (d < 1) throw ProblemError("lift_products: level d must be >= 1 (d = 0 is an empty lift)");
  const std::size_t m = inst.m();
  if (m == 0) throw ProblemError("lift_products: instance has no constraints");
  const std::size_t n = inst.n();

  ProductConstraintSet set;
  set.d = d;
  set.empty_pair = Polynomial::constant(n, 1.0);

  std::vector<Polynomial> factors;  // g_1..g_m, 1-g_1..1-g_m
  for (const auto& g : inst.constraints) factors.push_back(g);
  for (const auto& g : inst.constraints) factors.push_back(Polynomial::constant(n, 1.0) - g);

  std::map<Monomial, Polynomial> memo;
  memo.emplace(Monomial(2 * m), set.empty_pair);
  for (const auto& ab : mono_index_set(2 * m, d)) {
    if (ab.is_constant()) continue;
    std::size_t first = 0;
    while (ab[first] == 0) ++first;
    Monomial prev = ab;
    prev[first] -= 1;
    Polynomial poly = memo.at(prev) * factors[first];
    memo.emplace(ab, poly);
    ProductPair pair;
    pair.alpha.assign(ab.exponents().begin(), ab.exponents().begin() + static_cast<std::ptrdiff_t>(m));
    pair.beta.assign(ab.exponents().begin() + static_cast<std::ptrdiff_t>(m), ab.exponents().end());
    pair.poly = std::move(poly);
    set.pairs.push_back(std::move(pair));
  }
  return set;
}

}  // namespace bsos
