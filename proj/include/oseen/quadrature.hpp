#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mesh.hpp"

namespace oseen {

/// Quadrature on the reference triangle. Weights are normalized to sum to 1,
/// so physical weights are weight * |K|.
struct QuadRule {
  std::vector<std::array<double, 3>> points; // barycentric
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return weights.size(); }
};

/// Gauss-Legendre rule on [0, 1] with weights summing to 1.
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
};

namespace detail {

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i)
    f *= i;
  return f;
}

/// Checks the rule against int_T x^a y^b = a! b! / (a+b+2)! on the reference triangle.
inline void validate_rule(const QuadRule &rule) {
  for (int a = 0; a <= rule.degree; ++a)
    for (int b = 0; a + b <= rule.degree; ++b) {
      double approx = 0.0;
      for (std::size_t q = 0; q < rule.size(); ++q)
        approx += 0.5 * rule.weights[q] * std::pow(rule.points[q][1], a) * std::pow(rule.points[q][2], b);
      const double exact = factorial(a) * factorial(b) / factorial(a + b + 2);
      if (std::abs(approx - exact) > 1e-14)
        throw std::logic_error("quadrature rule of degree " + std::to_string(rule.degree) + " fails monomial x^" +
                               std::to_string(a) + " y^" + std::to_string(b));
    }
}

inline void add_orbit3(QuadRule &r, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  r.points.push_back({b, a, a});
  r.points.push_back({a, b, a});
  r.points.push_back({a, a, b});
  r.weights.insert(r.weights.end(), 3, w);
}

inline void add_orbit6(QuadRule &r, double a, double b, double w) {
  const double c = 1.0 - a - b;
  r.points.push_back({a, b, c});
  r.points.push_back({a, c, b});
  r.points.push_back({b, a, c});
  r.points.push_back({b, c, a});
  r.points.push_back({c, a, b});
  r.points.push_back({c, b, a});
  r.weights.insert(r.weights.end(), 6, w);
}

inline QuadRule make_rule(int degree) {
  QuadRule r;
  r.degree = degree;
  switch (degree) {
  case 1:
    r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    r.weights.push_back(1.0);
    break;
  case 2:
    add_orbit3(r, 1.0 / 6.0, 1.0 / 3.0);
    break;
  case 4:
    add_orbit3(r, 0.445948490915965, 0.223381589678011);
    add_orbit3(r, 0.091576213509771, 0.109951743655322);
    break;
  case 6:
    add_orbit3(r, 0.249286745170910, 0.116786275726379);
    add_orbit3(r, 0.063089014491502, 0.050844906370207);
    add_orbit6(r, 0.053145049844817, 0.310352451033784, 0.082851075618374);
    break;
  default:
    throw std::invalid_argument("no triangle rule of degree " + std::to_string(degree));
  }
  validate_rule(r);
  return r;
}

} // namespace detail

/// Symmetric triangle rules of degree 1, 2 (three interior points), 4 (six
/// points) and 6 (twelve points). Built and validated once.
inline const QuadRule &triangle_rule(int degree) {
  static const std::array<QuadRule, 4> rules = {detail::make_rule(1), detail::make_rule(2), detail::make_rule(4),
                                                detail::make_rule(6)};
  switch (degree) {
  case 1:
    return rules[0];
  case 2:
    return rules[1];
  case 3:
  case 4:
    return rules[2];
  case 5:
  case 6:
    return rules[3];
  default:
    throw std::invalid_argument("no triangle rule of degree " + std::to_string(degree));
  }
}

/// n-point Gauss-Legendre rule mapped to [0, 1].
inline LineRule gauss_legendre(int n) {
  if (n < 1)
    throw std::invalid_argument("Gauss-Legendre rule needs at least one point");
  LineRule r;
  r.points.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
        break;
    }
    r.points[i] = 0.5 * (1.0 - x);
    r.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

/// Three-point Gauss rule used for edge moments and boundary data.
inline const LineRule &edge_rule3() {
  static const LineRule r = gauss_legendre(3);
  return r;
}

struct QuadPoint {
  Point x;
  double w; // physical weight
};

/// Options for element integration near a point singularity: triangles with
/// a vertex at `singular_point` are integrated on a geometrically graded
/// composite mesh, `depth` levels of quadrisection towards that vertex.
struct GradedQuadrature {
  std::optional<Point> singular_point;
  int depth = 8;
};

namespace detail {

inline void append_points(const std::array<Point, 3> &p, const QuadRule &rule, std::vector<QuadPoint> &out) {
  const TriangleGeometry g(p);
  for (std::size_t q = 0; q < rule.size(); ++q)
    out.push_back({g.map(rule.points[q]), rule.weights[q] * g.area});
}

inline void append_graded(std::array<Point, 3> p, int corner, int depth, const QuadRule &rule,
                          std::vector<QuadPoint> &out) {
  for (int level = 0; level < depth; ++level) {
    const Point c = p[corner];
    const Point a = p[(corner + 1) % 3];
    const Point b = p[(corner + 2) % 3];
    const Point mca = 0.5 * (c + a), mcb = 0.5 * (c + b), mab = 0.5 * (a + b);
    append_points({mca, a, mab}, rule, out);
    append_points({mcb, mab, b}, rule, out);
    append_points({mab, mcb, mca}, rule, out);
    p = {c, mca, mcb};
    corner = 0;
  }
  append_points(p, rule, out);
}

} // namespace detail

/// Physical quadrature points of triangle t.
inline std::vector<QuadPoint> element_quadrature(const Mesh &mesh, int t, const QuadRule &rule,
                                                 const GradedQuadrature &graded = {}) {
  std::vector<QuadPoint> out;
  const TriangleGeometry g = mesh.geometry(t);
  if (graded.singular_point) {
    for (int i = 0; i < 3; ++i)
      if (norm(g.p[i] - *graded.singular_point) < 1e-12) {
        out.reserve(rule.size() * (3 * graded.depth + 1));
        detail::append_graded(g.p, i, graded.depth, rule, out);
        return out;
      }
  }
  out.reserve(rule.size());
  detail::append_points(g.p, rule, out);
  return out;
}

} // namespace oseen
