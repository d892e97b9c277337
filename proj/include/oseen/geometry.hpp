#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace oseen {

/// A point or vector in the plane.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 &operator+=(const Vec2 &o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2 &operator-=(const Vec2 &o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Vec2 &operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
};

using Point = Vec2;

constexpr Vec2 operator+(Vec2 a, const Vec2 &b) { return a += b; }
constexpr Vec2 operator-(Vec2 a, const Vec2 &b) { return a -= b; }
constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
constexpr Vec2 operator-(const Vec2 &a) { return {-a.x, -a.y}; }
constexpr bool operator==(const Vec2 &a, const Vec2 &b) { return a.x == b.x && a.y == b.y; }

constexpr double dot(const Vec2 &a, const Vec2 &b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2 &a, const Vec2 &b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2 &a) { return std::hypot(a.x, a.y); }
constexpr double squared_norm(const Vec2 &a) { return dot(a, a); }

/// Rotates by 90 degrees clockwise.
constexpr Vec2 rotate_cw(const Vec2 &a) { return {a.y, -a.x}; }

/// 2x2 real matrix, row-major. Rows of a pseudostress are the H(div) fields.
struct Matrix2 {
  double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

  static constexpr Matrix2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Matrix2 from_rows(const Vec2 &r1, const Vec2 &r2) { return {r1.x, r1.y, r2.x, r2.y}; }

  constexpr Vec2 row(int i) const { return i == 0 ? Vec2{a11, a12} : Vec2{a21, a22}; }
  constexpr double trace() const { return a11 + a22; }
  constexpr Matrix2 transpose() const { return {a11, a21, a12, a22}; }

  constexpr Matrix2 &operator+=(const Matrix2 &o) {
    a11 += o.a11;
    a12 += o.a12;
    a21 += o.a21;
    a22 += o.a22;
    return *this;
  }
  constexpr Matrix2 &operator-=(const Matrix2 &o) {
    a11 -= o.a11;
    a12 -= o.a12;
    a21 -= o.a21;
    a22 -= o.a22;
    return *this;
  }
  constexpr Matrix2 &operator*=(double s) {
    a11 *= s;
    a12 *= s;
    a21 *= s;
    a22 *= s;
    return *this;
  }
};

constexpr Matrix2 operator+(Matrix2 a, const Matrix2 &b) { return a += b; }
constexpr Matrix2 operator-(Matrix2 a, const Matrix2 &b) { return a -= b; }
constexpr Matrix2 operator*(double s, Matrix2 a) { return a *= s; }
constexpr Vec2 operator*(const Matrix2 &m, const Vec2 &v) { return {m.a11 * v.x + m.a12 * v.y, m.a21 * v.x + m.a22 * v.y}; }

/// Frobenius inner product.
constexpr double frobenius(const Matrix2 &a, const Matrix2 &b) {
  return a.a11 * b.a11 + a.a12 * b.a12 + a.a21 * b.a21 + a.a22 * b.a22;
}
constexpr double squared_norm(const Matrix2 &a) { return frobenius(a, a); }
constexpr double squared_norm(double a) { return a * a; }

/// Deviatoric part in two dimensions: m - (tr m / 2) I.
constexpr Matrix2 apply_deviatoric(const Matrix2 &m) {
  const double half_trace = 0.5 * m.trace();
  return {m.a11 - half_trace, m.a12, m.a21, m.a22 - half_trace};
}

/// Symmetric part (m + m^T) / 2.
constexpr Matrix2 symmetric_part(const Matrix2 &m) {
  const double off = 0.5 * (m.a12 + m.a21);
  return {m.a11, off, off, m.a22};
}

/// Affine data of a triangle with counterclockwise vertices.
struct TriangleGeometry {
  std::array<Point, 3> p;
  double area = 0.0;
  /// Gradients of the barycentric coordinates.
  std::array<Vec2, 3> grad_lambda;

  explicit TriangleGeometry(const std::array<Point, 3> &vertices) : p(vertices) {
    const double twice = cross(p[1] - p[0], p[2] - p[0]);
    area = 0.5 * twice;
    for (int i = 0; i < 3; ++i) {
      const Point &a = p[(i + 1) % 3];
      const Point &b = p[(i + 2) % 3];
      // lambda_i vanishes on edge (a, b); gradient is the inward normal over the height.
      grad_lambda[i] = Vec2{a.y - b.y, b.x - a.x} * (1.0 / twice);
    }
  }

  Point centroid() const { return (1.0 / 3.0) * (p[0] + p[1] + p[2]); }

  Point map(const std::array<double, 3> &bary) const {
    return bary[0] * p[0] + bary[1] * p[1] + bary[2] * p[2];
  }

  /// Reference coordinates (xi, eta) with vertices (0,0), (1,0), (0,1).
  Point map_reference(const Point &ref) const { return p[0] + ref.x * (p[1] - p[0]) + ref.y * (p[2] - p[0]); }

  std::array<double, 3> barycentric(const Point &x) const {
    std::array<double, 3> l{};
    for (int i = 0; i < 3; ++i)
      l[i] = dot(grad_lambda[i], x - p[(i + 1) % 3]);
    return l;
  }

  double edge_length(int i) const { return norm(p[(i + 2) % 3] - p[(i + 1) % 3]); }

  double diameter() const { return std::max({edge_length(0), edge_length(1), edge_length(2)}); }

  double circumradius() const { return edge_length(0) * edge_length(1) * edge_length(2) / (4.0 * area); }

  double inradius() const { return area / (0.5 * (edge_length(0) + edge_length(1) + edge_length(2))); }
};

} // namespace oseen
