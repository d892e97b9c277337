#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mesh.hpp"
#include "quadrature.hpp"

namespace oseen {

enum class ElementKind { RT0, BDM1 };

inline std::string to_string(ElementKind k) { return k == ElementKind::RT0 ? "rt0" : "bdm1"; }

using VectorFunction = std::function<Vec2(const Point &)>;
using ScalarFunction = std::function<double(const Point &)>;
using TensorFunction = std::function<Matrix2(const Point &)>;

/// Value and divergence of one global basis function restricted to a triangle.
struct BasisValue {
  Vec2 value;
  double div = 0.0;
};

struct LocalBasis {
  std::array<BasisValue, 6> f{};
  int n = 0;
};

/// Lowest-order H(div) space on a triangle mesh, used for each row of the
/// pseudostress.
///
/// RT0 has one degree of freedom per edge, the flux int_E v.n ds. BDM1 has two,
/// int_E v.n ds and int_E v.n q ds with q = 2s - 1 the odd Legendre function in
/// the edge parameter s running from the lower to the higher vertex index.
/// Normals are the global edge normals, so orientation enters as a plain sign.
class HdivSpace {
public:
  HdivSpace(std::shared_ptr<const Mesh> mesh, ElementKind kind) : mesh_(std::move(mesh)), kind_(kind) {
    if (!mesh_)
      throw std::invalid_argument("HdivSpace needs a mesh");
  }

  ElementKind kind() const { return kind_; }
  const Mesh &mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh> &mesh_ptr() const { return mesh_; }
  int dofs_per_edge() const { return kind_ == ElementKind::RT0 ? 1 : 2; }
  int n_dofs_per_row() const { return dofs_per_edge() * mesh_->num_edges(); }
  int dofs_per_element() const { return 3 * dofs_per_edge(); }

  std::array<int, 6> local_dofs(int t) const {
    std::array<int, 6> d{};
    const auto &te = mesh_->tri_edges()[t];
    if (kind_ == ElementKind::RT0) {
      for (int i = 0; i < 3; ++i)
        d[i] = te[i].edge;
    } else {
      for (int i = 0; i < 3; ++i) {
        d[2 * i] = 2 * te[i].edge;
        d[2 * i + 1] = 2 * te[i].edge + 1;
      }
    }
    return d;
  }

  /// Global basis functions supported on t, evaluated at the physical point x.
  LocalBasis evaluate(int t, const TriangleGeometry &g, const Point &x) const {
    LocalBasis b;
    const auto &te = mesh_->tri_edges()[t];
    const Triangle &tri = mesh_->triangles()[t];
    if (kind_ == ElementKind::RT0) {
      b.n = 3;
      const double scale = 1.0 / (2.0 * g.area);
      for (int i = 0; i < 3; ++i) {
        const double s = te[i].sign;
        b.f[i] = {s * scale * (x - g.p[i]), s / g.area};
      }
      return b;
    }
    b.n = 6;
    const auto lambda = g.barycentric(x);
    for (int i = 0; i < 3; ++i) {
      int p = (i + 1) % 3, q = (i + 2) % 3;
      if (tri[p] > tri[q])
        std::swap(p, q);
      const double len = g.edge_length(i);
      const double inv_height = len / (2.0 * g.area);
      const Vec2 psi_p = lambda[p] * inv_height * (g.p[p] - g.p[i]);
      const Vec2 psi_q = lambda[q] * inv_height * (g.p[q] - g.p[i]);
      const double s = te[i].sign / len;
      b.f[2 * i] = {s * (psi_p + psi_q), s * 2.0 * inv_height};
      b.f[2 * i + 1] = {3.0 * s * (psi_q - psi_p), 0.0};
    }
    return b;
  }

private:
  std::shared_ptr<const Mesh> mesh_;
  ElementKind kind_;
};

/// Basis functions on triangle t at reference coordinates (xi, eta).
/// Points outside the reference triangle are extrapolated.
inline std::vector<BasisValue> eval_basis(const HdivSpace &space, int t, const Point &ref) {
  const TriangleGeometry g = space.mesh().geometry(t);
  const LocalBasis b = space.evaluate(t, g, g.map_reference(ref));
  return {b.f.begin(), b.f.begin() + b.n};
}

/// Tensor-valued finite element function whose rows lie in an H(div) space.
class PseudostressField {
public:
  explicit PseudostressField(HdivSpace space)
      : space_(std::move(space)), coeffs_{std::vector<double>(space_.n_dofs_per_row(), 0.0),
                                          std::vector<double>(space_.n_dofs_per_row(), 0.0)} {}

  PseudostressField(HdivSpace space, std::array<std::vector<double>, 2> coeffs, bool corrected)
      : space_(std::move(space)), coeffs_(std::move(coeffs)), corrected_(corrected) {
    for (const auto &c : coeffs_)
      if (static_cast<int>(c.size()) != space_.n_dofs_per_row())
        throw std::invalid_argument("pseudostress coefficient length does not match the space");
  }

  const HdivSpace &space() const { return space_; }
  const Mesh &mesh() const { return space_.mesh(); }
  const std::array<std::vector<double>, 2> &coeffs() const { return coeffs_; }
  bool trace_mean_corrected() const { return corrected_; }

  Matrix2 value(int t, const TriangleGeometry &g, const Point &x) const {
    const LocalBasis b = space_.evaluate(t, g, x);
    const auto dofs = space_.local_dofs(t);
    Vec2 r0, r1;
    for (int j = 0; j < b.n; ++j) {
      r0 += coeffs_[0][dofs[j]] * b.f[j].value;
      r1 += coeffs_[1][dofs[j]] * b.f[j].value;
    }
    return Matrix2::from_rows(r0, r1);
  }

  Matrix2 value(int t, const Point &x) const { return value(t, mesh().geometry(t), x); }

  /// Row-wise divergence, constant on each triangle for both element kinds.
  Vec2 divergence(int t) const {
    const TriangleGeometry g = mesh().geometry(t);
    const LocalBasis b = space_.evaluate(t, g, g.centroid());
    const auto dofs = space_.local_dofs(t);
    Vec2 d;
    for (int j = 0; j < b.n; ++j) {
      d.x += coeffs_[0][dofs[j]] * b.f[j].div;
      d.y += coeffs_[1][dofs[j]] * b.f[j].div;
    }
    return d;
  }

  PseudostressField &operator+=(const PseudostressField &o) { return axpy(1.0, o); }
  PseudostressField &operator-=(const PseudostressField &o) { return axpy(-1.0, o); }
  PseudostressField &operator*=(double s) {
    for (auto &c : coeffs_)
      for (double &v : c)
        v *= s;
    return *this;
  }

  PseudostressField &axpy(double a, const PseudostressField &o) {
    if (o.space_.mesh_ptr() != space_.mesh_ptr() || o.space_.kind() != space_.kind())
      throw std::invalid_argument("pseudostress fields live in different spaces");
    for (int r = 0; r < 2; ++r)
      for (std::size_t i = 0; i < coeffs_[r].size(); ++i)
        coeffs_[r][i] += a * o.coeffs_[r][i];
    corrected_ = corrected_ && o.corrected_;
    return *this;
  }

  /// Coefficient access for builders; clears the trace-mean flag.
  std::vector<double> &row(int r) {
    corrected_ = false;
    return coeffs_[r];
  }
  void set_trace_mean_corrected(bool v) { corrected_ = v; }

private:
  HdivSpace space_;
  std::array<std::vector<double>, 2> coeffs_;
  bool corrected_ = false;
};

inline PseudostressField operator-(PseudostressField a, const PseudostressField &b) { return a -= b; }
inline PseudostressField operator+(PseudostressField a, const PseudostressField &b) { return a += b; }
inline PseudostressField operator*(double s, PseudostressField a) { return a *= s; }

/// Piecewise constant vector field.
struct VelocityField {
  std::shared_ptr<const Mesh> mesh;
  std::array<std::vector<double>, 2> coeffs;

  explicit VelocityField(std::shared_ptr<const Mesh> m)
      : mesh(std::move(m)), coeffs{std::vector<double>(mesh->num_triangles(), 0.0),
                                   std::vector<double>(mesh->num_triangles(), 0.0)} {}

  Vec2 value(int t) const { return {coeffs[0][t], coeffs[1][t]}; }
};

/// Exact integral of tr(sigma_h) over the domain.
inline double trace_mean(const PseudostressField &field) {
  const Mesh &mesh = field.mesh();
  const QuadRule &rule = triangle_rule(2);
  double s = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriangleGeometry g = mesh.geometry(t);
    for (std::size_t q = 0; q < rule.size(); ++q)
      s += rule.weights[q] * g.area * field.value(t, g, g.map(rule.points[q])).trace();
  }
  return s;
}

/// |int tr sigma_h| / int |tr sigma_h|, or the plain value when the trace
/// vanishes identically.
inline double relative_trace_mean(const PseudostressField &field) {
  const Mesh &mesh = field.mesh();
  const QuadRule &rule = triangle_rule(2);
  double scale = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriangleGeometry g = mesh.geometry(t);
    for (std::size_t q = 0; q < rule.size(); ++q)
      scale += rule.weights[q] * g.area * std::abs(field.value(t, g, g.map(rule.points[q])).trace());
  }
  const double m = std::abs(trace_mean(field));
  return scale > 0.0 ? m / scale : m;
}

/// Subtracts (1 / (2|Omega|)) (int tr sigma_h) I. The identity lies in the
/// space with mean-flux degrees of freedom (e_i . n_E)|E| and zero moments.
inline PseudostressField correct_trace_mean(PseudostressField field) {
  const Mesh &mesh = field.mesh();
  const double kappa = trace_mean(field) / (2.0 * mesh.total_area());
  const int stride = field.space().dofs_per_edge();
  auto &r0 = field.row(0);
  auto &r1 = field.row(1);
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Vec2 n = mesh.scaled_edge_normal(e);
    r0[stride * e] -= kappa * n.x;
    r1[stride * e] -= kappa * n.y;
  }
  field.set_trace_mean_corrected(true);
  return field;
}

/// Row-wise canonical interpolation by edge moments, without the trace
/// correction.
inline PseudostressField canonical_interpolation(const HdivSpace &space, const TensorFunction &sigma,
                                                 const LineRule &edge_rule = edge_rule3()) {
  const Mesh &mesh = space.mesh();
  PseudostressField field(space);
  auto &r0 = field.row(0);
  auto &r1 = field.row(1);
  const int stride = space.dofs_per_edge();
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Point a = mesh.vertices()[mesh.edges()[e][0]];
    const Point b = mesh.vertices()[mesh.edges()[e][1]];
    const Vec2 n = mesh.scaled_edge_normal(e); // already carries |E|
    for (std::size_t q = 0; q < edge_rule.points.size(); ++q) {
      const double s = edge_rule.points[q];
      const Matrix2 m = sigma(a + s * (b - a));
      const double w = edge_rule.weights[q];
      const double f0 = dot(m.row(0), n) * w;
      const double f1 = dot(m.row(1), n) * w;
      r0[stride * e] += f0;
      r1[stride * e] += f1;
      if (stride == 2) {
        r0[2 * e + 1] += f0 * (2.0 * s - 1.0);
        r1[2 * e + 1] += f1 * (2.0 * s - 1.0);
      }
    }
  }
  return field;
}

/// Canonical interpolation followed by the trace-mean correction.
inline PseudostressField interpolate_pseudostress(const HdivSpace &space, const TensorFunction &sigma,
                                                  const LineRule &edge_rule = edge_rule3()) {
  return correct_trace_mean(canonical_interpolation(space, sigma, edge_rule));
}

/// Element averages (1/|K|) int_K u dx.
inline VelocityField project_velocity(const std::shared_ptr<const Mesh> &mesh, const VectorFunction &u,
                                      const QuadRule &rule = triangle_rule(6), const GradedQuadrature &graded = {}) {
  VelocityField v(mesh);
  for (int t = 0; t < mesh->num_triangles(); ++t) {
    Vec2 s;
    double area = 0.0;
    for (const QuadPoint &qp : element_quadrature(*mesh, t, rule, graded)) {
      s += qp.w * u(qp.x);
      area += qp.w;
    }
    v.coeffs[0][t] = s.x / area;
    v.coeffs[1][t] = s.y / area;
  }
  return v;
}

/// CSV dump "dof_index,row,value".
inline void write_csv(std::ostream &out, const PseudostressField &f) {
  out << "dof_index,row,value\n";
  out.precision(17);
  for (int r = 0; r < 2; ++r)
    for (std::size_t i = 0; i < f.coeffs()[r].size(); ++i)
      out << i << ',' << r << ',' << f.coeffs()[r][i] << '\n';
}

/// CSV dump "tri_index,comp,value".
inline void write_csv(std::ostream &out, const VelocityField &u) {
  out << "tri_index,comp,value\n";
  out.precision(17);
  for (int c = 0; c < 2; ++c)
    for (std::size_t t = 0; t < u.coeffs[c].size(); ++t)
      out << t << ',' << c << ',' << u.coeffs[c][t] << '\n';
}

} // namespace oseen
