#pragma once

// Line-oriented problem text format.
//
//   # comment
//   name: <ident>                       (optional)
//   vars: x y z                         (first non-comment line besides name)
//   minimize: <expr>
//   st: <expr> >= <expr>                (also <= and ==)
//   box: <lo> <hi>                      (default for every non-binary variable)
//   box <ident>: <lo> <hi>
//   binary: <ident list>
//
// Normalized instances additionally carry
//   normalized: true
//   offset: <v>   scale: <v>   map <ident>: <offset> <width>
//   st[<ineq|split|box> <lo> <hi>]: <expr> >= 0
// so that serialize/parse round-trips every field.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bsos/polynomial.hpp"
#include "bsos/problem.hpp"

namespace bsos {

class ParseError : public ProblemError {
 public:
  ParseError(int line, int column, const std::string& msg)
      : ProblemError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Recursive-descent parser for + - * ^ ( ) over real literals and variables.
class ExprParser {
 public:
  ExprParser(std::string_view text, int line, int col0, const std::map<std::string, std::size_t>& vars)
      : text_(text), line_(line), col0_(col0), vars_(vars) {}

  Polynomial parse_all() {
    Polynomial p = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return p;
  }

  Polynomial parse_expr() {
    skip_ws();
    Polynomial acc = parse_term();
    for (;;) {
      skip_ws();
      if (peek('+')) {
        ++pos_;
        acc = acc + parse_term();
      } else if (peek('-')) {
        ++pos_;
        acc = acc - parse_term();
      } else {
        return acc;
      }
    }
  }

  std::size_t position() const { return pos_; }

 private:
  Polynomial parse_term() {
    Polynomial acc = parse_unary();
    for (;;) {
      skip_ws();
      if (!peek('*')) return acc;
      ++pos_;
      acc = acc * parse_unary();
    }
  }

  Polynomial parse_unary() {
    skip_ws();
    if (peek('-')) {
      ++pos_;
      return -parse_unary();
    }
    if (peek('+')) {
      ++pos_;
      return parse_unary();
    }
    return parse_power();
  }

  Polynomial parse_power() {
    Polynomial base = parse_primary();
    skip_ws();
    if (!peek('^')) return base;
    ++pos_;
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("exponent must be a nonnegative integer");
    int e = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, e);
    if (ec != std::errc() || e > 64) fail("exponent out of range", start);
    return base.pow(e);
  }

  Polynomial parse_primary() {
    skip_ws();
    const std::size_t n = vars_.size();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial p = parse_expr();
      skip_ws();
      if (!peek(')')) fail("expected ')'");
      ++pos_;
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t start = pos_;
      while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
        std::size_t save = pos_++;
        if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
        if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        } else {
          pos_ = save;
        }
      }
      return Polynomial::constant(n, parse_literal(text_.substr(start, pos_ - start), start));
    }
    if (is_ident_start(c)) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
      std::string name(text_.substr(start, pos_ - start));
      if (name == "inf" || name == "nan" || name == "infinity") fail("non-finite literal '" + name + "'", start);
      auto it = vars_.find(name);
      if (it == vars_.end()) fail("unknown variable " + name, start);
      return Polynomial::variable(n, it->second);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  double parse_literal(std::string_view s, std::size_t start) const {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc::result_out_of_range || (ec == std::errc() && !std::isfinite(v))) {
      fail("non-finite literal '" + std::string(s) + "'", start);
    }
    if (ec != std::errc() || ptr != s.data() + s.size()) fail("malformed number '" + std::string(s) + "'", start);
    return v;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool peek(char c) const { return pos_ < text_.size() && text_[pos_] == c; }

  [[noreturn]] void fail(const std::string& msg) const { fail(msg, pos_); }
  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw ParseError(line_, col0_ + static_cast<int>(at) + 1, msg);
  }

  std::string_view text_;
  int line_;
  int col0_;
  const std::map<std::string, std::size_t>& vars_;
  std::size_t pos_ = 0;
};

inline double parse_number_field(std::string_view tok, int line, int col) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    throw ParseError(line, col, "expected a finite number, got '" + std::string(tok) + "'");
  }
  return v;
}

inline std::vector<std::pair<std::string_view, int>> split_tokens(std::string_view s, int col0) {
  std::vector<std::pair<std::string_view, int>> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (std::isspace(static_cast<unsigned char>(s[i])) || s[i] == ',')) ++i;
    std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != ',') ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start), col0 + static_cast<int>(start) + 1);
  }
  return out;
}

inline ConstraintOrigin parse_origin(std::string_view s, int line, int col) {
  if (s == "ineq") return ConstraintOrigin::Inequality;
  if (s == "split") return ConstraintOrigin::EqualitySplit;
  if (s == "box") return ConstraintOrigin::Box;
  throw ParseError(line, col, "unknown constraint origin '" + std::string(s) + "'");
}

inline const char* origin_name(ConstraintOrigin o) {
  switch (o) {
    case ConstraintOrigin::Inequality: return "ineq";
    case ConstraintOrigin::EqualitySplit: return "split";
    case ConstraintOrigin::Box: return "box";
  }
  return "ineq";
}

}  // namespace detail

inline ProblemInstance parse_problem(std::string_view text) {
  ProblemInstance inst;
  std::map<std::string, std::size_t> vars;
  bool have_vars = false;
  bool have_objective = false;
  std::optional<std::pair<double, double>> default_box;
  std::map<std::size_t, std::pair<double, double>> var_box;
  std::map<std::size_t, AffineMap> var_map;
  std::vector<bool> binary;

  auto require_vars = [&](int line) {
    if (!have_vars) throw ParseError(line, 1, "'vars:' must be the first declaration");
  };
  auto lookup = [&](std::string_view name, int line, int col) -> std::size_t {
    auto it = vars.find(std::string(name));
    if (it == vars.end()) throw ParseError(line, col, "unknown variable " + std::string(name));
    return it->second;
  };

  int line_no = 0;
  std::size_t cursor = 0;
  while (cursor <= text.size()) {
    std::size_t eol = text.find('\n', cursor);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view raw = text.substr(cursor, eol - cursor);
    cursor = eol + 1;
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (detail::trim(raw).empty()) {
      if (eol == text.size()) break;
      continue;
    }
    auto colon = raw.find(':');
    if (colon == std::string_view::npos) throw ParseError(line_no, 1, "expected '<key>: <value>'");
    std::string_view key = detail::trim(raw.substr(0, colon));
    std::string_view value = raw.substr(colon + 1);
    const int vcol = static_cast<int>(colon + 1);

    if (key == "name") {
      inst.name = std::string(detail::trim(value));
    } else if (key == "vars") {
      if (have_vars) throw ParseError(line_no, 1, "duplicate 'vars:' line");
      for (auto [tok, col] : detail::split_tokens(value, vcol)) {
        if (!detail::is_ident_start(tok.front())) throw ParseError(line_no, col, "invalid variable name '" + std::string(tok) + "'");
        for (char c : tok) {
          if (!detail::is_ident_char(c)) throw ParseError(line_no, col, "invalid variable name '" + std::string(tok) + "'");
        }
        if (!vars.emplace(std::string(tok), inst.var_names.size()).second) {
          throw ParseError(line_no, col, "duplicate variable " + std::string(tok));
        }
        inst.var_names.emplace_back(tok);
      }
      if (inst.var_names.empty()) throw ParseError(line_no, vcol + 1, "no variables declared");
      have_vars = true;
      binary.assign(inst.n(), false);
    } else if (key == "minimize") {
      require_vars(line_no);
      if (have_objective) throw ParseError(line_no, 1, "duplicate 'minimize:' line");
      inst.objective = detail::ExprParser(value, line_no, vcol, vars).parse_all();
      if (inst.objective.num_vars() == 0) inst.objective = Polynomial(inst.n());
      have_objective = true;
    } else if (key.starts_with("st")) {
      require_vars(line_no);
      ConstraintInfo info;
      bool tagged = false;
      std::string_view rest = detail::trim(key.substr(2));
      if (!rest.empty()) {
        if (rest.front() != '[' || rest.back() != ']') throw ParseError(line_no, 1, "malformed constraint tag");
        auto toks = detail::split_tokens(rest.substr(1, rest.size() - 2), 1);
        if (toks.size() != 3) throw ParseError(line_no, 1, "constraint tag needs '<origin> <lo> <hi>'");
        info.origin = detail::parse_origin(toks[0].first, line_no, toks[0].second);
        info.lo = detail::parse_number_field(toks[1].first, line_no, toks[1].second);
        info.hi = detail::parse_number_field(toks[2].first, line_no, toks[2].second);
        tagged = true;
      }
      std::size_t op_pos = std::string_view::npos;
      std::string_view op;
      for (std::string_view cand : {">=", "<=", "=="}) {
        if (auto p = value.find(cand); p != std::string_view::npos) {
          op_pos = p;
          op = cand;
          break;
        }
      }
      if (op_pos == std::string_view::npos) throw ParseError(line_no, vcol + 1, "constraint needs one of >=, <=, ==");
      Polynomial lhs = detail::ExprParser(value.substr(0, op_pos), line_no, vcol, vars).parse_all();
      Polynomial rhs = detail::ExprParser(value.substr(op_pos + 2), line_no, vcol + static_cast<int>(op_pos) + 2, vars).parse_all();
      Polynomial g = lhs - rhs;
      if (op == "<=") g = -g;
      if (op == "==") {
        if (tagged) throw ParseError(line_no, vcol + static_cast<int>(op_pos) + 1, "tagged constraints must use >=");
        inst.constraints.push_back(g);
        inst.constraint_info.push_back({ConstraintOrigin::EqualitySplit});
        inst.constraints.push_back(-g);
        inst.constraint_info.push_back({ConstraintOrigin::EqualitySplit});
      } else {
        inst.constraints.push_back(std::move(g));
        inst.constraint_info.push_back(info);
      }
    } else if (key == "box" || key.starts_with("box ") || key.starts_with("map ")) {
      require_vars(line_no);
      auto toks = detail::split_tokens(value, vcol);
      if (toks.size() != 2) throw ParseError(line_no, vcol + 1, "expected two numbers");
      double a = detail::parse_number_field(toks[0].first, line_no, toks[0].second);
      double b = detail::parse_number_field(toks[1].first, line_no, toks[1].second);
      if (key == "box") {
        default_box = {a, b};
      } else {
        std::string_view name = detail::trim(key.substr(4));
        std::size_t i = lookup(name, line_no, 5);
        if (key.starts_with("box")) {
          var_box[i] = {a, b};
        } else {
          var_map[i] = {a, b};
        }
      }
    } else if (key == "binary") {
      require_vars(line_no);
      for (auto [tok, col] : detail::split_tokens(value, vcol)) binary[lookup(tok, line_no, col)] = true;
    } else if (key == "normalized") {
      require_vars(line_no);
      auto v = detail::trim(value);
      if (v != "true" && v != "false") throw ParseError(line_no, vcol + 1, "expected true or false");
      inst.normalized = v == "true";
    } else if (key == "offset") {
      inst.objective_offset = detail::parse_number_field(detail::trim(value), line_no, vcol + 1);
    } else if (key == "scale") {
      inst.objective_scale = detail::parse_number_field(detail::trim(value), line_no, vcol + 1);
      if (!(inst.objective_scale > 0)) throw ParseError(line_no, vcol + 1, "scale must be positive");
    } else {
      throw ParseError(line_no, 1, "unknown key '" + std::string(key) + "'");
    }
    if (eol == text.size()) break;
  }

  if (!have_vars) throw ParseError(line_no, 1, "missing 'vars:' line");
  if (!have_objective) throw ParseError(line_no, 1, "missing 'minimize:' line");

  for (std::size_t i = 0; i < inst.n(); ++i) {
    if (binary[i]) {
      inst.kinds.push_back(VariableDomain::binary());
    } else if (auto it = var_box.find(i); it != var_box.end()) {
      inst.kinds.push_back(VariableDomain::box(it->second.first, it->second.second));
    } else if (default_box) {
      inst.kinds.push_back(VariableDomain::box(default_box->first, default_box->second));
    } else {
      inst.kinds.push_back(VariableDomain{});
    }
  }
  if (inst.normalized) {
    inst.transform.assign(inst.n(), AffineMap{});
    for (auto [i, map] : var_map) inst.transform[i] = map;
  }
  return inst;
}

inline std::string serialize_problem(const ProblemInstance& inst) {
  using detail::format_double;
  std::ostringstream os;
  if (!inst.name.empty()) os << "name: " << inst.name << "\n";
  os << "vars:";
  for (const auto& v : inst.var_names) os << " " << v;
  os << "\n";
  os << "minimize: " << inst.objective.to_string(inst.var_names) << "\n";
  for (std::size_t j = 0; j < inst.m(); ++j) {
    const auto& g = inst.constraints[j];
    ConstraintInfo info = j < inst.constraint_info.size() ? inst.constraint_info[j] : ConstraintInfo{};
    if (inst.normalized) {
      os << "st[" << detail::origin_name(info.origin) << " " << format_double(info.lo) << " "
         << format_double(info.hi) << "]: " << g.to_string(inst.var_names) << " >= 0\n";
      continue;
    }
    if (info.origin == ConstraintOrigin::EqualitySplit && j + 1 < inst.m() &&
        j + 1 < inst.constraint_info.size() &&
        inst.constraint_info[j + 1].origin == ConstraintOrigin::EqualitySplit &&
        inst.constraints[j + 1] == -g) {
      os << "st: " << g.to_string(inst.var_names) << " == 0\n";
      ++j;
      continue;
    }
    os << "st: " << g.to_string(inst.var_names) << " >= 0\n";
  }
  std::vector<std::string> binaries;
  for (std::size_t i = 0; i < inst.n(); ++i) {
    const auto& k = inst.kinds[i];
    if (k.is_binary()) {
      binaries.push_back(inst.var_names[i]);
    } else if (std::isfinite(k.lo) && std::isfinite(k.hi)) {
      os << "box " << inst.var_names[i] << ": " << format_double(k.lo) << " " << format_double(k.hi) << "\n";
    }
  }
  if (!binaries.empty()) {
    os << "binary:";
    for (const auto& b : binaries) os << " " << b;
    os << "\n";
  }
  if (inst.normalized) {
    os << "normalized: true\n";
    os << "offset: " << format_double(inst.objective_offset) << "\n";
    os << "scale: " << format_double(inst.objective_scale) << "\n";
    for (std::size_t i = 0; i < inst.transform.size(); ++i) {
      os << "map " << inst.var_names[i] << ": " << format_double(inst.transform[i].offset) << " "
         << format_double(inst.transform[i].width) << "\n";
    }
  } else if (inst.objective_offset != 0.0 || inst.objective_scale != 1.0) {
    os << "offset: " << format_double(inst.objective_offset) << "\n";
    os << "scale: " << format_double(inst.objective_scale) << "\n";
  }
  return os.str();
}

/// Reads and parses a problem file; unreadable files raise ProblemError.
inline ProblemInstance read_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProblemError("cannot open problem file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

}  // namespace bsos
