#pragma once

// Command-line front end: solve, compare, certify, lagrange.
// Exit codes: 0 success, 1 usage error, 2 infeasible/unbounded or oracle
// scope exceeded, 3 numerical failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bsos/certify.hpp"
#include "bsos/lagrange.hpp"
#include "bsos/problem_io.hpp"
#include "bsos/relax.hpp"
#include "bsos/solver.hpp"

namespace bsos {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitInfeasible = 2, kExitNumerical = 3 };

struct BoundRow {
  Hierarchy hierarchy = Hierarchy::Lp;
  int d = 0;
  int k = 0;
  double bound = 0.0;  // original units
  SolveStatus status = SolveStatus::NumericalTrouble;
  std::optional<double> residual;
  int iterations = 0;
  long long time_ms = 0;
  std::vector<std::string> warnings;
};

struct OracleSummary {
  double value = 0.0;  // original units
  std::string method;
};

struct BoundReport {
  std::string instance;
  std::vector<BoundRow> rows;
  std::optional<OracleSummary> oracle;

  void sort_rows() {
    std::stable_sort(rows.begin(), rows.end(), [](const BoundRow& a, const BoundRow& b) {
      return std::tie(a.hierarchy, a.d, a.k) < std::tie(b.hierarchy, b.d, b.k);
    });
  }
};

namespace detail {

inline std::string fmt(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline nlohmann::json num_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline nlohmann::json point_json(const std::vector<double>& p) { return nlohmann::json(p); }

}  // namespace detail

inline nlohmann::json to_json(const BoundRow& r) {
  nlohmann::json j;
  j["hierarchy"] = hierarchy_name(r.hierarchy);
  j["d"] = r.d;
  j["k"] = r.k;
  j["bound"] = detail::num_or_null(r.bound);
  j["status"] = status_name(r.status);
  j["residual"] = r.residual ? nlohmann::json(*r.residual) : nlohmann::json(nullptr);
  j["iterations"] = r.iterations;
  j["time_ms"] = r.time_ms;
  return j;
}

inline nlohmann::json to_json(const BoundReport& rep) {
  nlohmann::json j;
  j["instance"] = rep.instance;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rep.rows) j["rows"].push_back(to_json(r));
  if (rep.oracle) {
    j["oracle"] = {{"value", rep.oracle->value}, {"method", rep.oracle->method}};
  } else {
    j["oracle"] = nullptr;
  }
  return j;
}

inline std::string bound_report_csv(const BoundReport& rep) {
  std::ostringstream os;
  os << "hierarchy,d,k,bound,status,residual,iterations,time_ms\n";
  for (const auto& r : rep.rows) {
    os << hierarchy_name(r.hierarchy) << "," << r.d << "," << r.k << "," << detail::fmt(r.bound) << ","
       << status_name(r.status) << "," << (r.residual ? detail::fmt(*r.residual) : "") << "," << r.iterations << ","
       << r.time_ms << "\n";
  }
  if (rep.oracle) os << "oracle,,," << detail::fmt(rep.oracle->value) << "," << rep.oracle->method << ",,,\n";
  return os.str();
}

inline std::string bound_report_text(const BoundReport& rep) {
  std::ostringstream os;
  os << "instance: " << rep.instance << "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-9s %3s %3s %18s %-18s %12s %6s %8s\n", "hierarchy", "d", "k", "bound", "status",
                "residual", "iters", "time_ms");
  os << line;
  for (const auto& r : rep.rows) {
    std::snprintf(line, sizeof line, "%-9s %3d %3d %18s %-18s %12s %6d %8lld\n", hierarchy_name(r.hierarchy), r.d, r.k,
                  detail::fmt(r.bound).c_str(), status_name(r.status),
                  r.residual ? detail::fmt(*r.residual).c_str() : "-", r.iterations, r.time_ms);
    os << line;
    for (const auto& w : r.warnings) os << "  warning: " << w << "\n";
  }
  if (rep.oracle) os << "oracle (" << rep.oracle->method << "): " << detail::fmt(rep.oracle->value) << "\n";
  return os.str();
}

inline nlohmann::json to_json(const VarietyReport& v) {
  nlohmann::json j;
  j["threshold"] = v.threshold;
  j["residual"] = v.residual;
  j["x_star"] = v.x_star;
  j["f_star"] = v.f_star;
  j["active_sets"] = {{"I1", v.active_g}, {"I2", v.active_one_minus_g}};
  j["omega"] = nlohmann::json::array();
  for (const auto& e : v.omega) {
    j["omega"].push_back({{"label", e.label},
                          {"index", e.index},
                          {"alpha", e.alpha},
                          {"beta", e.beta},
                          {"value", e.value},
                          {"J1", e.J1},
                          {"J2", e.J2},
                          {"generator", e.generator.to_string()},
                          {"generator_at_x_star", e.generator_at_xstar}});
  }
  j["generators_vanish"] = v.generators_vanish;
  j["sigma_at_x_star"] = v.sigma_at_xstar;
  j["sigma_vanishes"] = v.sigma_vanishes;
  j["samples"] = v.samples;
  j["constancy"] = constancy_name(v.constancy);
  j["witnesses"] = v.witnesses;
  return j;
}

namespace detail {

struct CommonOptions {
  std::string input;
  double tol = 1e-8;
  std::string format = "text";
  std::string oracle = "none";
  std::string out;
};

inline std::vector<Hierarchy> parse_hierarchy_list(const std::string& s) {
  std::vector<Hierarchy> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw std::invalid_argument("empty hierarchy name");
    const Hierarchy h = parse_hierarchy(item);
    if (std::find(out.begin(), out.end(), h) == out.end()) out.push_back(h);
  }
  if (out.empty()) throw std::invalid_argument("no hierarchy given");
  return out;
}

inline std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(item, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("invalid ") + what + " '" + item + "'");
    }
    if (pos != item.size()) throw std::invalid_argument(std::string("invalid ") + what + " '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument(std::string("empty ") + what + " list");
  return out;
}

// "A..B" or a single level.
inline std::vector<int> parse_levels(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) return parse_int_list(s, "level");
  const int a = parse_int_list(s.substr(0, dots), "level").at(0);
  const int b = parse_int_list(s.substr(dots + 2), "level").at(0);
  if (b < a) throw std::invalid_argument("empty level range '" + s + "'");
  std::vector<int> out;
  for (int d = a; d <= b; ++d) out.push_back(d);
  return out;
}

inline bool uses_k(Hierarchy h) { return h == Hierarchy::Bsos || h == Hierarchy::Bsos01; }

inline int exit_for(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return kExitOk;
    case SolveStatus::Infeasible:
    case SolveStatus::Unbounded: return kExitInfeasible;
    default: return kExitNumerical;
  }
}

struct SolvedCell {
  BoundRow row;
  ConicProgram program;
  SolveResult result;
  std::optional<Certificate> cert;
};

inline SolvedCell solve_cell(const ProblemInstance& inst, Hierarchy h, int d, int k, double tol) {
  SolvedCell c;
  c.program = build_relaxation(inst, h, d, k);
  SolverConfig cfg;
  cfg.tolerance = tol;
  c.result = solve(c.program, cfg);
  c.row.hierarchy = h;
  c.row.d = d;
  c.row.k = c.program.k;
  c.row.status = c.result.status;
  c.row.iterations = c.result.iterations;
  c.row.time_ms = c.result.time_ms;
  c.row.warnings = c.program.warnings;
  if (c.result.status == SolveStatus::Optimal) {
    c.cert = make_certificate(inst, c.program, c.result);
    c.row.residual = verify_certificate(inst, *c.cert, d, c.program.k);
    c.row.bound = c.cert->bound_original_units;
  } else if (c.result.status == SolveStatus::Infeasible) {
    c.row.bound = -std::numeric_limits<double>::infinity();
  } else if (c.result.status == SolveStatus::Unbounded) {
    c.row.bound = std::numeric_limits<double>::infinity();
  } else {
    c.row.bound = inst.to_original_units(c.result.objective);
  }
  return c;
}

inline std::optional<OracleResult> oracle_for(const ProblemInstance& inst, const std::string& which) {
  if (which == "none") return std::nullopt;
  if (which == "grid") return oracle_grid(inst);
  if (which == "enumerate") return oracle_enumerate(inst);
  if (which == "auto") return inst.all_binary() ? oracle_enumerate(inst) : oracle_grid(inst);
  throw std::invalid_argument("unknown oracle '" + which + "'");
}

inline OracleSummary summarize(const ProblemInstance& inst, const OracleResult& o) {
  return {inst.to_original_units(o.value), oracle_name(o.kind)};
}

// Writes to --out when given, otherwise to the output stream.
inline int emit(const CommonOptions& opt, std::ostream& out, std::ostream& err, const std::string& text) {
  if (opt.out.empty()) {
    out << text;
    return kExitOk;
  }
  std::ofstream f(opt.out);
  if (!f) {
    err << "error: cannot write '" << opt.out << "'\n";
    return kExitUsage;
  }
  f << text;
  return kExitOk;
}

inline void add_common(CLI::App* sub, CommonOptions& opt) {
  sub->add_option("--input", opt.input, "problem file")->required();
  sub->add_option("--tol", opt.tol, "solver tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--format", opt.format, "text|json|csv")->check(CLI::IsMember({"text", "json", "csv"}));
  sub->add_option("--out", opt.out, "write the report to FILE");
}

inline ProblemInstance load_normalized(const std::string& path) { return normalize(read_problem_file(path)); }

// Comparison notes for the text report: bsos rows against lp and putinar rows.
inline std::string comparison_notes(const BoundReport& rep) {
  std::ostringstream os;
  auto find = [&](Hierarchy h, int d) -> const BoundRow* {
    for (const auto& r : rep.rows) {
      if (r.hierarchy == h && r.d == d && r.status == SolveStatus::Optimal) return &r;
    }
    return nullptr;
  };
  for (const auto& r : rep.rows) {
    if (!uses_k(r.hierarchy) || r.status != SolveStatus::Optimal) continue;
    const Hierarchy base = r.hierarchy == Hierarchy::Bsos ? Hierarchy::Lp : Hierarchy::Rlt01;
    if (const BoundRow* lp = find(base, r.d)) {
      os << "check: " << hierarchy_name(r.hierarchy) << " d=" << r.d << " k=" << r.k << " >= "
         << hierarchy_name(base) << " d=" << r.d << ": " << (r.bound >= lp->bound - 1e-6 ? "holds" : "FAILS") << "\n";
    }
    for (const auto& p : rep.rows) {
      if (p.hierarchy != Hierarchy::Putinar || p.status != SolveStatus::Optimal || p.d > r.k || r.d < 2 * p.d) continue;
      os << "check: " << hierarchy_name(r.hierarchy) << " d=" << r.d << " k=" << r.k << " >= putinar d=" << p.d << ": "
         << (r.bound >= p.bound - 1e-6 ? "holds" : "FAILS") << "\n";
    }
  }
  if (rep.oracle) {
    for (const auto& r : rep.rows) {
      if (r.status == SolveStatus::Optimal && r.bound > rep.oracle->value + 1e-6) {
        os << "check: " << hierarchy_name(r.hierarchy) << " d=" << r.d << " k=" << r.k
           << " exceeds the oracle value: FAILS\n";
      }
    }
  }
  return os.str();
}

inline std::string render(const BoundReport& rep, const std::string& format) {
  if (format == "json") return to_json(rep).dump(2) + "\n";
  if (format == "csv") return bound_report_csv(rep);
  return bound_report_text(rep) + comparison_notes(rep);
}

}  // namespace detail

/// Runs the command line; never calls exit().
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Polynomial optimization relaxation hierarchies", "bsos"};
  app.require_subcommand(1);

  detail::CommonOptions sopt, copt, ceopt, lopt;
  std::string s_hier, c_hier = "lp,bsos", ce_hier = "lp";
  int s_level = 1, ce_level = 1, l_level = 1;
  int s_k = 1, ce_k = 1;
  std::string c_levels = "1..2", c_k = "1";
  std::string l_mode;
  int l_iters = 1000;
  double l_a = 2.0, l_b = 10.0;
  std::string l_trace;

  auto* solve_cmd = app.add_subcommand("solve", "build and solve one relaxation");
  detail::add_common(solve_cmd, sopt);
  solve_cmd->add_option("--hierarchy", s_hier, "lp|bsos|putinar|rlt01|bsos01")->required();
  solve_cmd->add_option("--level", s_level, "relaxation level d");
  solve_cmd->add_option("--k", s_k, "SOS degree parameter k");
  solve_cmd->add_option("--oracle", sopt.oracle, "none|grid|enumerate")
      ->check(CLI::IsMember({"none", "grid", "enumerate"}));

  auto* compare_cmd = app.add_subcommand("compare", "tabulate bounds over levels and k");
  detail::add_common(compare_cmd, copt);
  compare_cmd->add_option("--hierarchy", c_hier, "comma-separated hierarchies");
  auto* levels_opt = compare_cmd->add_option("--levels", c_levels, "A..B");
  compare_cmd->add_option("--level", c_levels, "single level")->excludes(levels_opt);
  compare_cmd->add_option("--k", c_k, "comma-separated k values");
  compare_cmd->add_option("--oracle", copt.oracle, "none|grid|enumerate")
      ->check(CLI::IsMember({"none", "grid", "enumerate"}));

  auto* certify_cmd = app.add_subcommand("certify", "solve, verify and extract the obstruction variety");
  detail::add_common(certify_cmd, ceopt);
  ceopt.oracle = "auto";
  ceopt.format = "json";
  certify_cmd->add_option("--hierarchy", ce_hier, "lp|bsos|putinar|rlt01|bsos01");
  certify_cmd->add_option("--level", ce_level, "relaxation level d");
  certify_cmd->add_option("--k", ce_k, "SOS degree parameter k");
  certify_cmd->add_option("--oracle", ceopt.oracle, "auto|grid|enumerate")
      ->check(CLI::IsMember({"auto", "grid", "enumerate"}));

  auto* lagrange_cmd = app.add_subcommand("lagrange", "maximize the Lagrangian dual function G_d");
  detail::add_common(lagrange_cmd, lopt);
  lagrange_cmd->add_option("--level", l_level, "relaxation level d");
  lagrange_cmd->add_option("--mode", l_mode, "certified|heuristic")
      ->required()
      ->check(CLI::IsMember({"certified", "heuristic"}));
  lagrange_cmd->add_option("--iterations", l_iters, "ascent iterations")->check(CLI::PositiveNumber);
  lagrange_cmd->add_option("--a", l_a, "step numerator")->check(CLI::PositiveNumber);
  lagrange_cmd->add_option("--b", l_b, "step offset")->check(CLI::PositiveNumber);
  lagrange_cmd->add_option("--trace", l_trace, "write the ascent trace as CSV to FILE");
  lagrange_cmd->add_option("--oracle", lopt.oracle, "none|grid|enumerate")
      ->check(CLI::IsMember({"none", "grid", "enumerate"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (solve_cmd->parsed()) {
      const Hierarchy h = parse_hierarchy(s_hier);
      const ProblemInstance inst = detail::load_normalized(sopt.input);
      BoundReport rep;
      rep.instance = inst.name.empty() ? sopt.input : inst.name;
      auto cell = detail::solve_cell(inst, h, s_level, detail::uses_k(h) ? s_k : 0, sopt.tol);
      rep.rows.push_back(cell.row);
      if (auto o = detail::oracle_for(inst, sopt.oracle)) rep.oracle = detail::summarize(inst, *o);
      int code = detail::exit_for(cell.result.status);
      if (cell.row.residual && *cell.row.residual > kCertificateTolerance) {
        err << "error: certificate residual " << *cell.row.residual << " exceeds " << kCertificateTolerance << "\n";
        code = kExitNumerical;
      }
      if (cell.result.status != SolveStatus::Optimal && !cell.result.message.empty()) {
        err << status_name(cell.result.status) << ": " << cell.result.message << "\n";
      }
      const int wcode = detail::emit(sopt, out, err, detail::render(rep, sopt.format));
      return wcode != kExitOk ? wcode : code;
    }

    if (compare_cmd->parsed()) {
      const auto hs = detail::parse_hierarchy_list(c_hier);
      const auto levels = detail::parse_levels(c_levels);
      const auto ks = detail::parse_int_list(c_k, "k");
      const ProblemInstance inst = detail::load_normalized(copt.input);
      BoundReport rep;
      rep.instance = inst.name.empty() ? copt.input : inst.name;
      int code = kExitOk;
      for (Hierarchy h : hs) {
        for (int d : levels) {
          std::vector<int> kk = detail::uses_k(h) ? ks : std::vector<int>{0};
          std::vector<int> done;
          for (int k : kk) {
            auto cell = detail::solve_cell(inst, h, d, k, copt.tol);
            // Clamped k values collapse onto one row.
            if (std::find(done.begin(), done.end(), cell.row.k) != done.end()) continue;
            done.push_back(cell.row.k);
            if (detail::exit_for(cell.result.status) == kExitNumerical ||
                (cell.row.residual && *cell.row.residual > kCertificateTolerance)) {
              code = kExitNumerical;
            }
            rep.rows.push_back(cell.row);
          }
        }
      }
      rep.sort_rows();
      if (auto o = detail::oracle_for(inst, copt.oracle)) rep.oracle = detail::summarize(inst, *o);
      const int wcode = detail::emit(copt, out, err, detail::render(rep, copt.format));
      return wcode != kExitOk ? wcode : code;
    }

    if (certify_cmd->parsed()) {
      const Hierarchy h = parse_hierarchy(ce_hier);
      const ProblemInstance inst = detail::load_normalized(ceopt.input);
      auto cell = detail::solve_cell(inst, h, ce_level, detail::uses_k(h) ? ce_k : 0, ceopt.tol);
      if (cell.result.status != SolveStatus::Optimal) {
        err << "relaxation not solved to optimality: " << status_name(cell.result.status) << "\n";
        return detail::exit_for(cell.result.status);
      }
      const OracleResult oracle = *detail::oracle_for(inst, ceopt.oracle);
      const auto ex = exactness_check(cell.cert->t, oracle);
      const VarietyReport var = extract_variety(inst, *cell.cert, oracle.minimizer);
      nlohmann::json j;
      j["instance"] = inst.name.empty() ? ceopt.input : inst.name;
      j["row"] = to_json(cell.row);
      j["oracle"] = {{"value", inst.to_original_units(oracle.value)},
                     {"method", oracle_name(oracle.kind)},
                     {"minimizer", inst.to_original_point(oracle.minimizer)}};
      j["exactness"] = {{"exact", ex.exact}, {"gap", ex.gap}, {"sound", ex.sound}};
      j["variety"] = to_json(var);
      std::string text;
      if (ceopt.format == "json") {
        text = j.dump(2) + "\n";
      } else {
        std::ostringstream os;
        os << "instance: " << j["instance"].get<std::string>() << "\n"
           << hierarchy_name(h) << " d=" << ce_level << " k=" << cell.row.k << " bound " << detail::fmt(cell.row.bound)
           << " residual " << detail::fmt(*cell.row.residual) << "\n"
           << "oracle (" << oracle_name(oracle.kind) << "): " << detail::fmt(inst.to_original_units(oracle.value))
           << " gap " << detail::fmt(ex.gap) << (ex.exact ? " (exact)" : " (not exact)") << "\n"
           << "omega:";
        for (const auto& e : var.omega) os << " " << e.label;
        os << "\nV samples: " << var.samples.size() << ", f on V: " << constancy_name(var.constancy) << "\n"
           << "generators vanish at x*: " << (var.generators_vanish ? "yes" : "no") << "\n";
        text = os.str();
      }
      return detail::emit(ceopt, out, err, text);
    }

    if (lagrange_cmd->parsed()) {
      const ProblemInstance inst = detail::load_normalized(lopt.input);
      AscentConfig cfg;
      cfg.a = l_a;
      cfg.b = l_b;
      cfg.iterations = l_iters;
      cfg.allow_heuristic = l_mode == "heuristic";
      const AscentResult r = maximize_G(inst, l_level, cfg);
      if (!l_trace.empty()) {
        std::ofstream f(l_trace);
        if (!f) {
          err << "error: cannot write '" << l_trace << "'\n";
          return kExitUsage;
        }
        f << ascent_trace_csv(r.trace);
      }
      std::optional<OracleResult> oracle = detail::oracle_for(inst, lopt.oracle);
      std::string text;
      if (lopt.format == "csv") {
        text = ascent_trace_csv(r.trace);
      } else if (lopt.format == "json") {
        nlohmann::json j;
        j["instance"] = inst.name.empty() ? lopt.input : inst.name;
        j["d"] = l_level;
        j["mode"] = l_mode;
        j["quality"] = quality_name(r.quality);
        j["rho_estimate"] = detail::num_or_null(inst.to_original_units(r.rho_estimate));
        j["converged"] = r.converged;
        j["budget_exhausted"] = r.budget_exhausted;
        j["warm_started"] = r.warm_started;
        j["iterations"] = r.trace.size();
        j["lambda"] = r.lambda;
        j["oracle"] = oracle ? nlohmann::json{{"value", inst.to_original_units(oracle->value)},
                                              {"method", oracle_name(oracle->kind)}}
                             : nlohmann::json(nullptr);
        text = j.dump(2) + "\n";
      } else {
        std::ostringstream os;
        os << "instance: " << (inst.name.empty() ? lopt.input : inst.name) << "\n"
           << "rho_" << l_level << " estimate: " << detail::fmt(inst.to_original_units(r.rho_estimate)) << " ("
           << quality_name(r.quality) << ")\n"
           << "iterations: " << r.trace.size() << (r.converged ? ", converged" : "")
           << (r.budget_exhausted ? ", budget exhausted" : "") << (r.warm_started ? ", warm start from LP" : "")
           << "\n";
        if (oracle) os << "oracle (" << oracle_name(oracle->kind) << "): " << detail::fmt(inst.to_original_units(oracle->value)) << "\n";
        text = os.str();
      }
      return detail::emit(lopt, out, err, text);
    }
  } catch (const ScopeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const ProblemError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace bsos
