#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adaptivity.hpp"
#include "assembly.hpp"
#include "error_metrics.hpp"
#include "generators.hpp"
#include "refine.hpp"

namespace oseen {

enum class RunMode { Uniform, Adaptive };

struct RunConfig {
  std::string problem = "p1";
  ElementKind element = ElementKind::RT0;
  RunMode mode = RunMode::Uniform;
  /// Number of meshes in a uniform study, the generator mesh included.
  int levels = 6;
  /// Defaults to 0.7 for p2 and 0.3 otherwise.
  std::optional<double> theta;
  std::optional<int> max_iters;
  long max_dofs = 200000;
  std::optional<std::string> mesh_file;
  std::optional<std::filesystem::path> out_dir;
};

inline double default_theta(const std::string &problem) { return problem == "p2" ? 0.7 : 0.3; }

/// Initial mesh for a named problem: the fixed 19-triangle square mesh for
/// p1, the 24-triangle L-shape for p2, a 4x4 grid otherwise.
inline Mesh initial_mesh(const std::string &problem) {
  if (problem == "p1")
    return make_square_piecewise_uniform();
  if (problem == "p2")
    return make_lshape_mesh();
  return make_square_grid(4);
}

inline std::shared_ptr<const Mesh> initial_mesh(const RunConfig &cfg) {
  return share(cfg.mesh_file ? load_mesh(*cfg.mesh_file) : initial_mesh(cfg.problem));
}

struct ConvergenceResult {
  ElementKind element = ElementKind::RT0;
  /// False when the problem has no exact solution; rows then carry nt only.
  bool has_errors = true;
  std::vector<ErrorRow> rows;
  std::optional<OrderRow> orders;
  std::shared_ptr<const Mesh> final_mesh;
  std::vector<std::string> warnings;
  /// Per level: relative linear residual and relative trace mean of sigma_h.
  std::vector<double> residuals;
  std::vector<double> trace_means;
};

/// Solves on `levels` uniformly refined meshes and collects the error table.
/// Without an exact solution only the element counts are recorded.
/// A solver failure rethrows after `on_row` has seen the completed levels.
inline ConvergenceResult run_convergence(const RunConfig &cfg,
                                         const std::function<void(const ErrorRow &)> &on_row = {}) {
  if (cfg.levels < 1)
    throw std::invalid_argument("at least one level is required");
  const ProblemSpec problem = problem_by_name(cfg.problem);
  ConvergenceResult res;
  res.element = cfg.element;
  res.has_errors = problem.exact.has_value();
  std::shared_ptr<const Mesh> mesh = initial_mesh(cfg);
  check_problem(problem, *mesh);
  for (int level = 0; level < cfg.levels; ++level) {
    if (level > 0)
      mesh = share(uniform_quad_refine(*mesh));
    const OseenSolution sol = solve_oseen(problem, mesh, cfg.element);
    res.residuals.push_back(sol.relative_residual);
    res.trace_means.push_back(relative_trace_mean(sol.sigma));
    for (const std::string &w : sol.warnings)
      res.warnings.push_back("nt = " + std::to_string(mesh->num_triangles()) + ": " + w);
    if (res.has_errors) {
      res.rows.push_back(compute_errors(sol, problem));
    } else {
      res.rows.emplace_back();
      res.rows.back().nt = mesh->num_triangles();
    }
    if (on_row)
      on_row(res.rows.back());
  }
  if (res.has_errors && res.rows.size() >= 3)
    res.orders = fit_orders(res.rows);
  res.final_mesh = mesh;
  return res;
}

/// Adaptive loop with RT0; theta defaults per problem.
inline AdaptiveHistory run_adaptive(const RunConfig &cfg,
                                    const std::function<void(const AdaptiveRecord &)> &progress = {}) {
  const ProblemSpec problem = problem_by_name(cfg.problem);
  AdaptiveOptions opt;
  opt.theta = cfg.theta.value_or(default_theta(cfg.problem));
  opt.max_iters = cfg.max_iters;
  opt.max_dofs = cfg.max_dofs;
  const auto mesh = initial_mesh(cfg);
  check_problem(problem, *mesh);
  return adaptive_solve(problem, mesh, opt, progress);
}

/// Four significant digits, exponent without padding and dropped when zero:
/// 2.032e-2, 1.372, 3.659e-4.
inline std::string format_sci(double v) {
  if (v == 0.0)
    return "0.000";
  if (!std::isfinite(v))
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  int e = static_cast<int>(std::floor(std::log10(std::abs(v))));
  double m = v / std::pow(10.0, e);
  if (std::abs(std::round(m * 1000.0)) >= 10000.0) {
    ++e;
    m = v / std::pow(10.0, e);
  }
  char buf[32];
  if (e == 0)
    std::snprintf(buf, sizeof buf, "%.3f", m);
  else
    std::snprintf(buf, sizeof buf, "%.3fe%d", m, e);
  return buf;
}

enum class TableFormat { Csv, Aligned };

inline std::vector<std::string> error_columns(ElementKind k) {
  if (k == ElementKind::RT0)
    return {"err_u", "err_eh", "err_ustar", "err_sigma", "err_xih", "err_sigmastar"};
  return {"err_u", "err_eh", "err_ustar", "err_sigma", "err_xih"};
}

namespace detail {

inline std::vector<double> table_values(const ErrorRow &r, ElementKind k) {
  std::vector<double> v{r.err_u, r.err_eh, r.err_ustar, r.err_sigma, r.err_xih};
  if (k == ElementKind::RT0)
    v.push_back(r.err_sigmastar.value_or(std::nan("")));
  return v;
}

inline std::vector<double> table_values(const OrderRow &o, ElementKind k) {
  std::vector<double> v{o.u, o.eh, o.ustar, o.sigma, o.xih};
  if (k == ElementKind::RT0)
    v.push_back(o.sigmastar.value_or(std::nan("")));
  return v;
}

inline void emit_line(std::ostream &out, const std::string &first, const std::vector<std::string> &cells,
                      TableFormat fmt) {
  if (fmt == TableFormat::Csv) {
    out << first;
    for (const std::string &c : cells)
      out << ',' << c;
  } else {
    out << std::setw(7) << first;
    for (const std::string &c : cells)
      out << std::setw(15) << c;
  }
  out << '\n';
}

inline std::vector<std::string> formatted(const std::vector<double> &v) {
  std::vector<std::string> s;
  for (double x : v)
    s.push_back(format_sci(x));
  return s;
}

} // namespace detail

/// Header, one line per level and, when present, a final "order" line.
inline void emit(std::ostream &out, const ConvergenceResult &res, TableFormat fmt) {
  if (res.rows.empty())
    throw std::invalid_argument("nothing to emit");
  if (!res.has_errors) {
    detail::emit_line(out, "nt", {}, fmt);
    for (const ErrorRow &r : res.rows)
      detail::emit_line(out, std::to_string(r.nt), {}, fmt);
    return;
  }
  detail::emit_line(out, "nt", error_columns(res.element), fmt);
  for (const ErrorRow &r : res.rows)
    detail::emit_line(out, std::to_string(r.nt), detail::formatted(detail::table_values(r, res.element)), fmt);
  if (res.orders)
    detail::emit_line(out, "order", detail::formatted(detail::table_values(*res.orders, res.element)), fmt);
}

/// Orders only.
inline void emit_orders(std::ostream &out, const ConvergenceResult &res, TableFormat fmt) {
  if (!res.orders)
    throw std::invalid_argument("orders need at least three levels");
  detail::emit_line(out, "", error_columns(res.element), fmt);
  detail::emit_line(out, "order", detail::formatted(detail::table_values(*res.orders, res.element)), fmt);
}

/// Secondary quantities: H(div) seminorm error and the interpolation errors.
inline void emit_diagnostics(std::ostream &out, const ConvergenceResult &res) {
  out << "nt,err_div,err_rho,err_zeta\n";
  for (const ErrorRow &r : res.rows)
    out << r.nt << ',' << format_sci(r.err_div) << ',' << format_sci(r.err_rho) << ',' << format_sci(r.err_zeta)
        << '\n';
}

inline void emit(std::ostream &out, const AdaptiveHistory &h, TableFormat fmt) {
  if (h.records.empty())
    throw std::invalid_argument("nothing to emit");
  if (fmt == TableFormat::Csv) {
    write_history_csv(out, h);
    return;
  }
  out << std::setw(5) << "iter" << std::setw(9) << "nt" << std::setw(10) << "dofs" << std::setw(12) << "estimator"
      << std::setw(12) << "true_error" << std::setw(13) << "effectivity" << std::setw(8) << "marked" << '\n';
  for (const AdaptiveRecord &r : h.records)
    out << std::setw(5) << r.iter << std::setw(9) << r.nt << std::setw(10) << r.dofs << std::setw(12)
        << format_sci(r.estimator) << std::setw(12) << (r.true_error ? format_sci(*r.true_error) : "-")
        << std::setw(13) << (r.effectivity ? format_sci(*r.effectivity) : "-") << std::setw(8) << r.marked << '\n';
}

/// Splits a CSV table into a header and rows of numbers; the first column
/// may hold a label such as "order", which is kept in `labels`.
struct ParsedTable {
  std::vector<std::string> header;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> rows;
};

inline ParsedTable parse_csv_table(std::istream &in) {
  ParsedTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ','))
      cells.push_back(cell);
    if (first) {
      t.header = cells;
      first = false;
      continue;
    }
    if (cells.size() != t.header.size())
      throw std::runtime_error("csv row has " + std::to_string(cells.size()) + " cells, header has " +
                               std::to_string(t.header.size()));
    t.labels.push_back(cells[0]);
    std::vector<double> v;
    for (std::size_t i = 1; i < cells.size(); ++i)
      v.push_back(std::stod(cells[i]));
    t.rows.push_back(std::move(v));
  }
  return t;
}

} // namespace oseen
