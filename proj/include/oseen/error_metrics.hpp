#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <type_traits>
#include <stdexcept>
#include <vector>

#include "assembly.hpp"
#include "postprocess.hpp"
#include "quadrature.hpp"

namespace oseen {

namespace detail {

inline Matrix2 eval_field(const PseudostressField &f, int t, const TriangleGeometry &g, const Point &x) {
  return f.value(t, g, x);
}
inline Vec2 eval_field(const VelocityField &f, int t, const TriangleGeometry &, const Point &) { return f.value(t); }
inline Vec2 eval_field(const P1VelocityField &f, int t, const TriangleGeometry &, const Point &x) {
  return f.value(t, x);
}
inline Matrix2 eval_field(const RecoveredTensorField &f, int t, const TriangleGeometry &g, const Point &x) {
  return f.value(t, g, x);
}
inline double eval_field(const P1ScalarField &f, int t, const TriangleGeometry &g, const Point &x) {
  return f.value(t, g, x);
}
inline double eval_field(const DiscretePressure &f, int t, const TriangleGeometry &, const Point &x) {
  return f.value(t, x);
}
template <class F>
  requires std::is_invocable_v<const F &, const Point &>
auto eval_field(const F &f, int, const TriangleGeometry &, const Point &x) {
  return f(x);
}

} // namespace detail

/// Per-triangle integrals of |a - b|^2; either argument may be a discrete
/// field or a function of the physical point.
template <class A, class B>
std::vector<double> squared_differences(const Mesh &mesh, const A &a, const B &b, const QuadRule &rule,
                                        const GradedQuadrature &graded = {}) {
  std::vector<double> out(mesh.num_triangles(), 0.0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriangleGeometry g = mesh.geometry(t);
    double s = 0.0;
    for (const QuadPoint &qp : element_quadrature(mesh, t, rule, graded))
      s += qp.w * squared_norm(detail::eval_field(a, t, g, qp.x) - detail::eval_field(b, t, g, qp.x));
    out[t] = s;
  }
  return out;
}

template <class A, class B>
double l2_error(const Mesh &mesh, const A &a, const B &b, const QuadRule &rule, const GradedQuadrature &graded = {}) {
  double s = 0.0;
  for (double v : squared_differences(mesh, a, b, rule, graded))
    s += v;
  return std::sqrt(s);
}

/// L2 norm of a single field.
template <class A>
double l2_norm(const Mesh &mesh, const A &a, const QuadRule &rule, const GradedQuadrature &graded = {}) {
  const auto zero = [&](const Point &x) { return decltype(detail::eval_field(a, 0, mesh.geometry(0), x)){}; };
  return l2_error(mesh, a, zero, rule, graded);
}

struct ErrorRow {
  int nt = 0;
  double err_u = 0.0;
  double err_eh = 0.0;
  double err_ustar = 0.0;
  double err_sigma = 0.0;
  double err_xih = 0.0;
  /// Only for RT0.
  std::optional<double> err_sigmastar;
  double err_div = 0.0;
  double err_rho = 0.0;
  double err_zeta = 0.0;
};

struct Supercloseness {
  double err_eh = 0.0;
  double err_xih = 0.0;
};

inline const ExactSolution &require_exact(const ProblemSpec &problem) {
  if (!problem.exact)
    throw std::invalid_argument("problem '" + problem.name + "' has no exact solution");
  return *problem.exact;
}

/// ||P_h u - u_h|| and ||Pi_h sigma - sigma_h||, both norms of discrete fields.
inline Supercloseness supercloseness(const VelocityField &u_h, const PseudostressField &sigma_h,
                                     const ProblemSpec &problem) {
  const ExactSolution &ex = require_exact(problem);
  const auto &mesh = sigma_h.space().mesh_ptr();
  const VelocityField pu = project_velocity(mesh, ex.u, triangle_rule(6), problem.graded);
  const PseudostressField pis = interpolate_pseudostress(sigma_h.space(), ex.sigma);
  const QuadRule &rule = triangle_rule(2);
  return {l2_error(*mesh, pu, u_h, rule), l2_error(*mesh, pis, sigma_h, rule)};
}

/// ||div(sigma - sigma_h)|| with div sigma = b.A(sigma) + c u - f.
inline double hdiv_error(const PseudostressField &sigma_h, const ProblemSpec &problem,
                         const QuadRule &rule = triangle_rule(6)) {
  const ExactSolution &ex = require_exact(problem);
  const Mesh &mesh = sigma_h.mesh();
  double s = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Vec2 dh = sigma_h.divergence(t);
    for (const QuadPoint &qp : element_quadrature(mesh, t, rule, problem.graded)) {
      const Vec2 div = apply_deviatoric(ex.sigma(qp.x)) * problem.b(qp.x) + problem.c(qp.x) * ex.u(qp.x) -
                       problem.f(qp.x);
      s += qp.w * squared_norm(div - dh);
    }
  }
  return std::sqrt(s);
}

/// All error columns for one discrete solution. The recovered pseudostress
/// column is filled for RT0 only.
inline ErrorRow compute_errors(const OseenSolution &sol, const ProblemSpec &problem,
                               const QuadRule &rule = triangle_rule(6)) {
  const ExactSolution &ex = require_exact(problem);
  const auto &mesh_ptr = sol.sigma.space().mesh_ptr();
  const Mesh &mesh = *mesh_ptr;
  const GradedQuadrature &gq = problem.graded;
  ErrorRow row;
  row.nt = mesh.num_triangles();
  row.err_u = l2_error(mesh, sol.u, ex.u, rule, gq);
  row.err_sigma = l2_error(mesh, sol.sigma, ex.sigma, rule, gq);
  const P1VelocityField ustar = postprocess_velocity(sol.sigma, sol.u);
  row.err_ustar = l2_error(mesh, ustar, ex.u, rule, gq);
  if (sol.sigma.space().kind() == ElementKind::RT0)
    row.err_sigmastar = l2_error(mesh, recover_pseudostress(sol.sigma), ex.sigma, rule, gq);
  const Supercloseness sc = supercloseness(sol.u, sol.sigma, problem);
  row.err_eh = sc.err_eh;
  row.err_xih = sc.err_xih;
  row.err_div = hdiv_error(sol.sigma, problem, rule);
  const VelocityField pu = project_velocity(mesh_ptr, ex.u, rule, gq);
  row.err_rho = l2_error(mesh, pu, ex.u, rule, gq);
  const PseudostressField pis = interpolate_pseudostress(sol.sigma.space(), ex.sigma);
  row.err_zeta = l2_error(mesh, pis, ex.sigma, rule, gq);
  return row;
}

/// Least-squares slope of log(err) against log(h), h = nt^{-1/2}, skipping
/// the first entry.
inline double fit_order(const std::vector<int> &nt, const std::vector<double> &err) {
  if (nt.size() != err.size())
    throw std::invalid_argument("fit_order: size mismatch");
  if (nt.size() < 3)
    throw std::invalid_argument("fit_order needs at least three levels");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double m = static_cast<double>(nt.size() - 1);
  for (std::size_t i = 1; i < nt.size(); ++i) {
    if (!(err[i] > 0.0) || nt[i] <= 0)
      throw std::invalid_argument("fit_order: errors and element counts must be positive");
    const double x = -0.5 * std::log(static_cast<double>(nt[i]));
    const double y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = m * sxx - sx * sx;
  if (den <= 0.0)
    throw std::invalid_argument("fit_order: element counts do not vary");
  return (m * sxy - sx * sy) / den;
}

struct OrderRow {
  double u = 0.0, eh = 0.0, ustar = 0.0, sigma = 0.0, xih = 0.0;
  std::optional<double> sigmastar;
  double div = 0.0, rho = 0.0, zeta = 0.0;
};

inline OrderRow fit_orders(const std::vector<ErrorRow> &rows) {
  std::vector<int> nt;
  for (const ErrorRow &r : rows)
    nt.push_back(r.nt);
  const auto col = [&](auto get) {
    std::vector<double> v;
    for (const ErrorRow &r : rows)
      v.push_back(get(r));
    return fit_order(nt, v);
  };
  OrderRow o;
  o.u = col([](const ErrorRow &r) { return r.err_u; });
  o.eh = col([](const ErrorRow &r) { return r.err_eh; });
  o.ustar = col([](const ErrorRow &r) { return r.err_ustar; });
  o.sigma = col([](const ErrorRow &r) { return r.err_sigma; });
  o.xih = col([](const ErrorRow &r) { return r.err_xih; });
  o.div = col([](const ErrorRow &r) { return r.err_div; });
  o.rho = col([](const ErrorRow &r) { return r.err_rho; });
  o.zeta = col([](const ErrorRow &r) { return r.err_zeta; });
  bool all = !rows.empty();
  for (const ErrorRow &r : rows)
    all = all && r.err_sigmastar.has_value();
  if (all)
    o.sigmastar = col([](const ErrorRow &r) { return *r.err_sigmastar; });
  return o;
}

} // namespace oseen
