#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include "quadrature.hpp"
#include "spaces.hpp"

namespace oseen {

struct ExactSolution {
  VectorFunction u;
  ScalarFunction p;
  /// Pseudostress grad(u) - p I.
  TensorFunction sigma;
};

/// Data of -div(sigma) + b.A(sigma) + c u = f, A(sigma) = grad u, u = g on the
/// boundary, int tr(sigma) = 0.
struct ProblemSpec {
  std::string name;
  VectorFunction b;
  ScalarFunction c;
  VectorFunction f;
  VectorFunction g;
  std::optional<ExactSolution> exact;
  /// Integration refinement for data or solutions singular at a point.
  GradedQuadrature graded;
};

/// Smooth benchmark on the unit square: u = (sin(pi(x+y)), -sin(pi(x+y))),
/// p = x + y - 1, b = (cos y, sin x), c = 0.
inline ProblemSpec problem1() {
  using std::numbers::pi;
  ProblemSpec p;
  p.name = "p1";
  p.b = [](const Point &x) { return Vec2{std::cos(x.y), std::sin(x.x)}; };
  p.c = [](const Point &) { return 0.0; };
  p.f = [](const Point &x) {
    const double s = std::sin(pi * (x.x + x.y));
    const double c = std::cos(pi * (x.x + x.y));
    const double conv = (std::cos(x.y) + std::sin(x.x)) * pi * c;
    return Vec2{2.0 * pi * pi * s + conv + 1.0, -2.0 * pi * pi * s - conv + 1.0};
  };
  ExactSolution ex;
  ex.u = [](const Point &x) {
    const double s = std::sin(pi * (x.x + x.y));
    return Vec2{s, -s};
  };
  // u does not vanish on x = 0 or y = 0, so g is the trace of u.
  p.g = ex.u;
  ex.p = [](const Point &x) { return x.x + x.y - 1.0; };
  ex.sigma = [](const Point &x) {
    const double d = pi * std::cos(pi * (x.x + x.y));
    const double pr = x.x + x.y - 1.0;
    return Matrix2{d - pr, d, -d, -d - pr};
  };
  p.exact = std::move(ex);
  return p;
}

namespace detail {

constexpr double kCornerExponent = 2.0 / 3.0;

inline double polar_angle(const Point &x) {
  double theta = std::atan2(x.y, x.x);
  if (theta < 0.0)
    theta += 2.0 * std::numbers::pi;
  return theta;
}

/// Jacobian of (r^a sin(a t), r^a cos(a t)), written through F'(z) of F = z^a.
inline Matrix2 corner_gradient(const Point &x) {
  const double r = std::hypot(x.x, x.y);
  if (r == 0.0)
    return {};
  const double a = kCornerExponent;
  const double theta = polar_angle(x);
  const double mag = a * std::pow(r, a - 1.0);
  const double re = mag * std::cos((a - 1.0) * theta);
  const double im = mag * std::sin((a - 1.0) * theta);
  return {im, re, re, -im};
}

} // namespace detail

/// Corner singularity on the L-shape: u = r^(2/3) (sin(2t/3), cos(2t/3)),
/// p = x + y, b = (1, 2), c = 0, g = u on the boundary.
inline ProblemSpec problem2() {
  ProblemSpec p;
  p.name = "p2";
  p.b = [](const Point &) { return Vec2{1.0, 2.0}; };
  p.c = [](const Point &) { return 0.0; };
  p.f = [](const Point &x) { return Vec2{1.0, 1.0} + detail::corner_gradient(x) * Vec2{1.0, 2.0}; };
  ExactSolution ex;
  ex.u = [](const Point &x) {
    const double a = detail::kCornerExponent;
    const double ra = std::pow(std::hypot(x.x, x.y), a);
    const double theta = detail::polar_angle(x);
    return Vec2{ra * std::sin(a * theta), ra * std::cos(a * theta)};
  };
  ex.p = [](const Point &x) { return x.x + x.y; };
  ex.sigma = [](const Point &x) {
    const double pr = x.x + x.y;
    return detail::corner_gradient(x) - pr * Matrix2::identity();
  };
  p.g = ex.u;
  p.exact = std::move(ex);
  p.graded.singular_point = Point{0.0, 0.0};
  return p;
}

/// Convection-dominated flow on the unit square: b = (500, 1), c = 0, g = 0,
/// f = 5000 (y, -x). No exact solution.
inline ProblemSpec problem3() {
  ProblemSpec p;
  p.name = "p3";
  p.b = [](const Point &) { return Vec2{500.0, 1.0}; };
  p.c = [](const Point &) { return 0.0; };
  p.f = [](const Point &x) { return Vec2{5000.0 * x.y, -5000.0 * x.x}; };
  p.g = [](const Point &) { return Vec2{}; };
  return p;
}

/// Homogeneous data with the given coefficients; the solution is zero.
inline ProblemSpec zero_problem(Vec2 b = {}, double c = 0.0) {
  ProblemSpec p;
  p.name = "zero";
  p.b = [b](const Point &) { return b; };
  p.c = [c](const Point &) { return c; };
  p.f = [](const Point &) { return Vec2{}; };
  p.g = [](const Point &) { return Vec2{}; };
  ExactSolution ex;
  ex.u = [](const Point &) { return Vec2{}; };
  ex.p = [](const Point &) { return 0.0; };
  ex.sigma = [](const Point &) { return Matrix2{}; };
  p.exact = std::move(ex);
  return p;
}

inline ProblemSpec problem_by_name(const std::string &name) {
  if (name == "p1")
    return problem1();
  if (name == "p2")
    return problem2();
  if (name == "p3")
    return problem3();
  if (name == "zero")
    return zero_problem();
  throw std::invalid_argument("unknown problem '" + name + "'");
}

/// Largest |g - u| over three Gauss points on each boundary edge.
inline double boundary_data_mismatch(const ProblemSpec &problem, const Mesh &mesh) {
  if (!problem.exact)
    return 0.0;
  double worst = 0.0;
  for (int e : mesh.boundary_edges()) {
    const Point a = mesh.vertices()[mesh.edges()[e][0]];
    const Point b = mesh.vertices()[mesh.edges()[e][1]];
    for (double s : edge_rule3().points) {
      const Point x = a + s * (b - a);
      worst = std::max(worst, norm(problem.g(x) - problem.exact->u(x)));
    }
  }
  return worst;
}

/// Throws when exact boundary values disagree with g beyond `tol`.
inline void check_problem(const ProblemSpec &problem, const Mesh &mesh, double tol = 1e-10) {
  if (!problem.b || !problem.c || !problem.f || !problem.g)
    throw std::invalid_argument("problem '" + problem.name + "' is missing coefficient data");
  if (const double m = boundary_data_mismatch(problem, mesh); m > tol)
    throw std::invalid_argument("problem '" + problem.name + "': g differs from the exact velocity on the boundary by " +
                                std::to_string(m));
}

/// Net boundary flux of g, zero for compatible data. Eight-point Gauss per
/// edge; `total` receives the integral of |g . n| when given.
inline double boundary_flux(const ProblemSpec &problem, const Mesh &mesh, double *total = nullptr) {
  static const LineRule rule = gauss_legendre(8);
  double s = 0.0, abs_sum = 0.0;
  for (int e : mesh.boundary_edges()) {
    const Point a = mesh.vertices()[mesh.edges()[e][0]];
    const Point b = mesh.vertices()[mesh.edges()[e][1]];
    const int t = mesh.edge_triangles(e)[0];
    int sign = 1;
    for (const EdgeRef &r : mesh.tri_edges()[t])
      if (r.edge == e)
        sign = r.sign;
    const Vec2 n = sign * mesh.scaled_edge_normal(e);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double gn = rule.weights[q] * dot(problem.g(a + rule.points[q] * (b - a)), n);
      s += gn;
      abs_sum += std::abs(gn);
    }
  }
  if (total)
    *total = abs_sum;
  return s;
}

} // namespace oseen
