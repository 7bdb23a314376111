#pragma once

// Sparse multivariate polynomials over the reals, monomial index sets and
// Gram-basis matrices. Everything downstream (problem model, relaxation
// builders, certificate checks) is expressed in terms of these types.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace bsos {

/// Coefficients with absolute value below this are dropped.
inline constexpr double kCanonicalZero = 1e-14;

/// Exponent vector alpha in N^n. Ordered graded-lexicographically: total
/// degree first, then lexicographically with x_1 most significant.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::size_t n) : exponents_(n, 0) {}
  explicit Monomial(std::vector<int> exponents) : exponents_(std::move(exponents)) {
    for (int e : exponents_) {
      if (e < 0) throw std::invalid_argument("Monomial: negative exponent");
    }
  }
  Monomial(std::initializer_list<int> exponents) : Monomial(std::vector<int>(exponents)) {}

  static Monomial unit(std::size_t n, std::size_t i) {
    Monomial m(n);
    m.exponents_.at(i) = 1;
    return m;
  }

  std::size_t size() const { return exponents_.size(); }
  int operator[](std::size_t i) const { return exponents_[i]; }
  int& operator[](std::size_t i) { return exponents_[i]; }
  const std::vector<int>& exponents() const { return exponents_; }

  int degree() const { return std::accumulate(exponents_.begin(), exponents_.end(), 0); }
  bool is_constant() const { return degree() == 0; }

  Monomial operator*(const Monomial& other) const {
    if (other.size() != size()) throw std::invalid_argument("Monomial: variable count mismatch");
    Monomial out(*this);
    for (std::size_t i = 0; i < size(); ++i) out.exponents_[i] += other.exponents_[i];
    return out;
  }

  /// Monomial value at x, computed by repeated multiplication.
  double eval(std::span<const double> x) const {
    double v = 1.0;
    for (std::size_t i = 0; i < size(); ++i) {
      for (int e = 0; e < exponents_[i]; ++e) v *= x[i];
    }
    return v;
  }

  friend bool operator==(const Monomial&, const Monomial&) = default;

  friend std::strong_ordering operator<=>(const Monomial& a, const Monomial& b) {
    if (auto c = a.degree() <=> b.degree(); c != 0) return c;
    return std::lexicographical_compare_three_way(a.exponents_.begin(), a.exponents_.end(),
                                                  b.exponents_.begin(), b.exponents_.end());
  }

  /// "(1,0,2)" form used in dumps and reports.
  std::string to_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < size(); ++i) {
      if (i) s += ',';
      s += std::to_string(exponents_[i]);
    }
    return s + ")";
  }

 private:
  std::vector<int> exponents_;
};

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

/// All alpha in N^n with |alpha| <= d, in graded-lex order. Size C(n+d, d).
inline std::vector<Monomial> mono_index_set(std::size_t n, int d) {
  if (n == 0) throw std::invalid_argument("mono_index_set: n must be >= 1");
  if (d < 0) throw std::invalid_argument("mono_index_set: d must be >= 0");
  std::vector<Monomial> out;
  out.reserve(binomial(static_cast<int>(n) + d, d));
  // Within a degree, lexicographic ascending means x_1's exponent increases
  // slowest-to-fastest from the front; enumerate compositions recursively.
  std::vector<int> e(n, 0);
  for (int deg = 0; deg <= d; ++deg) {
    auto rec = [&](auto&& self, std::size_t pos, int remaining) -> void {
      if (pos + 1 == n) {
        e[pos] = remaining;
        out.emplace_back(e);
        return;
      }
      for (int v = 0; v <= remaining; ++v) {
        e[pos] = v;
        self(self, pos + 1, remaining - v);
      }
    };
    rec(rec, 0, deg);
  }
  return out;
}

/// Sparse polynomial in n variables. Immutable in spirit: all arithmetic
/// returns new values.
class Polynomial {
 public:
  using TermMap = std::map<Monomial, double>;

  Polynomial() = default;
  explicit Polynomial(std::size_t n) : n_(n) {}
  Polynomial(std::size_t n, TermMap terms) : n_(n), terms_(std::move(terms)) {
    for (const auto& [m, c] : terms_) {
      if (m.size() != n_) throw std::invalid_argument("Polynomial: monomial length mismatch");
    }
    prune();
  }

  static Polynomial constant(std::size_t n, double c) {
    Polynomial p(n);
    p.add_term(Monomial(n), c);
    return p;
  }
  static Polynomial variable(std::size_t n, std::size_t i) {
    Polynomial p(n);
    p.add_term(Monomial::unit(n, i), 1.0);
    return p;
  }
  static Polynomial monomial(const Monomial& m, double c = 1.0) {
    Polynomial p(m.size());
    p.add_term(m, c);
    return p;
  }

  std::size_t num_vars() const { return n_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t num_terms() const { return terms_.size(); }

  int degree() const {
    int d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
    return d;
  }

  double coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? 0.0 : it->second;
  }

  double constant_term() const { return coefficient(Monomial(n_)); }

  /// Accumulate c * m, pruning the result if it cancels.
  void add_term(const Monomial& m, double c) {
    if (m.size() != n_) throw std::invalid_argument("Polynomial: monomial length mismatch");
    if (c == 0.0) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) it->second += c;
    if (std::abs(it->second) < kCanonicalZero) terms_.erase(it);
  }

  Polynomial operator+(const Polynomial& q) const {
    check_same(q);
    Polynomial r(*this);
    for (const auto& [m, c] : q.terms_) r.add_term(m, c);
    return r;
  }
  Polynomial operator-(const Polynomial& q) const { return *this + q * -1.0; }
  Polynomial operator-() const { return *this * -1.0; }

  Polynomial operator*(double s) const {
    Polynomial r(n_);
    for (const auto& [m, c] : terms_) r.add_term(m, c * s);
    return r;
  }
  friend Polynomial operator*(double s, const Polynomial& p) { return p * s; }

  Polynomial operator*(const Polynomial& q) const {
    check_same(q);
    Polynomial r(n_);
    for (const auto& [ma, ca] : terms_) {
      for (const auto& [mb, cb] : q.terms_) r.add_term(ma * mb, ca * cb);
    }
    return r;
  }

  Polynomial& operator+=(const Polynomial& q) { return *this = *this + q; }
  Polynomial& operator-=(const Polynomial& q) { return *this = *this - q; }
  Polynomial& operator*=(const Polynomial& q) { return *this = *this * q; }

  Polynomial pow(int e) const {
    if (e < 0) throw std::invalid_argument("Polynomial::pow: negative exponent");
    Polynomial r = constant(n_, 1.0);
    for (int i = 0; i < e; ++i) r = r * *this;
    return r;
  }

  /// Direct summation of c * x^alpha.
  double eval(std::span<const double> x) const {
    if (x.size() != n_) throw std::invalid_argument("Polynomial::eval: point dimension mismatch");
    double v = 0.0;
    for (const auto& [m, c] : terms_) v += c * m.eval(x);
    return v;
  }
  double operator()(std::span<const double> x) const { return eval(x); }

  Polynomial derivative(std::size_t i) const {
    Polynomial r(n_);
    for (const auto& [m, c] : terms_) {
      if (m[i] == 0) continue;
      Monomial dm = m;
      dm[i] -= 1;
      r.add_term(dm, c * m[i]);
    }
    return r;
  }

  /// p(images_1(y), ..., images_n(y)), all images in a common variable count.
  Polynomial compose(std::span<const Polynomial> images) const {
    if (images.size() != n_) throw std::invalid_argument("Polynomial::compose: image count mismatch");
    const std::size_t target = images.empty() ? n_ : images.front().num_vars();
    std::vector<std::vector<Polynomial>> powers(n_);
    int maxdeg = degree();
    for (std::size_t i = 0; i < n_; ++i) {
      powers[i].push_back(constant(target, 1.0));
      for (int e = 1; e <= maxdeg; ++e) powers[i].push_back(powers[i].back() * images[i]);
    }
    Polynomial r(target);
    for (const auto& [m, c] : terms_) {
      Polynomial t = constant(target, c);
      for (std::size_t i = 0; i < n_; ++i) {
        if (m[i] > 0) t = t * powers[i][m[i]];
      }
      r += t;
    }
    return r;
  }

  double max_abs_coefficient() const {
    double v = 0.0;
    for (const auto& [m, c] : terms_) v = std::max(v, std::abs(c));
    return v;
  }

  /// Structural equality up to an absolute coefficient tolerance.
  bool approx_equal(const Polynomial& q, double tol = 1e-12) const {
    return n_ == q.n_ && (*this - q).max_abs_coefficient() <= tol;
  }

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

  /// Human-readable form with x1..xn (or the supplied names).
  std::string to_string(const std::vector<std::string>& names = {}) const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      const auto& [m, c] = *it;
      double mag = std::abs(c);
      if (first) {
        if (c < 0) os << "-";
      } else {
        os << (c < 0 ? " - " : " + ");
      }
      first = false;
      bool need_star = false;
      if (m.is_constant() || mag != 1.0) {
        os << mag;
        need_star = true;
      }
      for (std::size_t i = 0; i < n_; ++i) {
        if (m[i] == 0) continue;
        if (need_star) os << "*";
        os << (i < names.size() ? names[i] : "x" + std::to_string(i + 1));
        if (m[i] > 1) os << "^" << m[i];
        need_star = true;
      }
    }
    return os.str();
  }

 private:
  void check_same(const Polynomial& q) const {
    if (q.n_ != n_) throw std::invalid_argument("Polynomial: variable count mismatch");
  }
  void prune() {
    std::erase_if(terms_, [](const auto& kv) { return std::abs(kv.second) < kCanonicalZero; });
  }

  std::size_t n_ = 0;
  TermMap terms_;
};

/// prod_j g_j^{alpha_j} * prod_j (1 - g_j)^{beta_j}; the empty product is 1.
inline Polynomial constraint_product(std::span<const Polynomial> g, std::span<const int> alpha,
                                     std::span<const int> beta) {
  if (g.size() != alpha.size() || g.size() != beta.size()) {
    throw std::invalid_argument("constraint_product: |g|, |alpha|, |beta| must agree");
  }
  if (g.empty()) throw std::invalid_argument("constraint_product: empty constraint list");
  const std::size_t n = g.front().num_vars();
  Polynomial r = Polynomial::constant(n, 1.0);
  const Polynomial one = Polynomial::constant(n, 1.0);
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (alpha[j] > 0) r = r * g[j].pow(alpha[j]);
    if (beta[j] > 0) r = r * (one - g[j]).pow(beta[j]);
  }
  return r;
}

/// Basis v_k(x) of monomials of degree <= k and the matrices B_beta with
/// v_k v_k^T = sum_beta x^beta B_beta.
struct GramBasis {
  std::size_t n = 0;
  int k = 0;
  std::vector<Monomial> basis;
  std::map<Monomial, Eigen::MatrixXd> matrices;

  std::size_t basis_size() const { return basis.size(); }

  /// Upper-triangle (i <= j) positions where B_beta is 1.
  std::vector<std::pair<int, int>> entries(const Monomial& beta) const {
    std::vector<std::pair<int, int>> out;
    auto it = matrices.find(beta);
    if (it == matrices.end()) return out;
    const auto& B = it->second;
    for (int i = 0; i < B.rows(); ++i) {
      for (int j = i; j < B.cols(); ++j) {
        if (B(i, j) != 0.0) out.emplace_back(i, j);
      }
    }
    return out;
  }

  /// sigma(x) = v_k(x)^T Q v_k(x) as a polynomial.
  Polynomial sos_polynomial(const Eigen::MatrixXd& Q) const {
    if (Q.rows() != static_cast<Eigen::Index>(basis.size()) || Q.cols() != Q.rows()) {
      throw std::invalid_argument("GramBasis::sos_polynomial: Gram matrix size mismatch");
    }
    Polynomial p(n);
    for (std::size_t i = 0; i < basis.size(); ++i) {
      for (std::size_t j = 0; j < basis.size(); ++j) {
        p.add_term(basis[i] * basis[j], Q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      }
    }
    return p;
  }
};

inline GramBasis gram_basis(std::size_t n, int k) {
  if (k < 0) throw std::invalid_argument("gram_basis: k must be >= 0");
  GramBasis g;
  g.n = n;
  g.k = k;
  g.basis = mono_index_set(n, k);
  const auto s = static_cast<Eigen::Index>(g.basis.size());
  for (const auto& beta : mono_index_set(n, 2 * k)) g.matrices.emplace(beta, Eigen::MatrixXd::Zero(s, s));
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) {
      g.matrices.at(g.basis[static_cast<std::size_t>(i)] * g.basis[static_cast<std::size_t>(j)])(i, j) = 1.0;
    }
  }
  return g;
}

}  // namespace bsos
