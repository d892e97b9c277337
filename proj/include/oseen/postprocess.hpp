#pragma once

#include <limits>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "quadrature.hpp"
#include "spaces.hpp"

namespace oseen {

/// Discontinuous piecewise linear vector field; on triangle t the value is
/// mean[t] + grad[t] (x - centroid of t).
struct P1VelocityField {
  std::shared_ptr<const Mesh> mesh;
  std::vector<Vec2> mean;
  std::vector<Matrix2> grad;
  std::vector<Point> center;

  Vec2 value(int t, const Point &x) const { return mean[t] + grad[t] * (x - center[t]); }
};

/// Continuous piecewise linear tensor field given by its vertex values.
struct RecoveredTensorField {
  std::shared_ptr<const Mesh> mesh;
  std::vector<Matrix2> vertex_values;

  Matrix2 value(int t, const TriangleGeometry &g, const Point &x) const {
    const auto l = g.barycentric(x);
    const Triangle &tri = mesh->triangles()[t];
    Matrix2 m;
    for (int i = 0; i < 3; ++i)
      m += l[i] * vertex_values[tri[i]];
    return m;
  }
  Matrix2 value(int t, const Point &x) const { return value(t, mesh->geometry(t), x); }
};

/// Continuous piecewise linear scalar field given by its vertex values.
struct P1ScalarField {
  std::shared_ptr<const Mesh> mesh;
  std::vector<double> vertex_values;

  double value(int t, const TriangleGeometry &g, const Point &x) const {
    const auto l = g.barycentric(x);
    const Triangle &tri = mesh->triangles()[t];
    return l[0] * vertex_values[tri[0]] + l[1] * vertex_values[tri[1]] + l[2] * vertex_values[tri[2]];
  }
  double value(int t, const Point &x) const { return value(t, mesh->geometry(t), x); }
};

/// Elementwise lift of u_h to P1: keeps the element means and matches
/// (grad u*, grad v)_K = (sigma_h, grad v)_K + (p_h, div v)_K for all linear v
/// with zero mean on K, where p_h = -tr(sigma_h) / 2.
inline P1VelocityField postprocess_velocity(const PseudostressField &sigma_h, const VelocityField &u_h) {
  const std::shared_ptr<const Mesh> &mesh = sigma_h.space().mesh_ptr();
  if (u_h.mesh != mesh)
    throw std::invalid_argument("postprocess_velocity: fields live on different meshes");
  const int nt = mesh->num_triangles();
  P1VelocityField out{mesh, std::vector<Vec2>(nt), std::vector<Matrix2>(nt), std::vector<Point>(nt)};
  const QuadRule &rule = triangle_rule(2);

  // Unknowns per component i: (a_i, g_i1, g_i2) of a_i + g_i . (x - xc),
  // ordered i * 3 + l. Shape function l of component i is e_i psi_l with
  // psi = {1, x - xc, y - yc}.
  using Mat6 = Eigen::Matrix<double, 6, 6>;
  using Vec6 = Eigen::Matrix<double, 6, 1>;
  for (int t = 0; t < nt; ++t) {
    const TriangleGeometry g = mesh->geometry(t);
    const Point xc = g.centroid();
    Mat6 a = Mat6::Zero();
    Vec6 rhs = Vec6::Zero();
    const std::array<Vec2, 3> grad_psi = {Vec2{0.0, 0.0}, Vec2{1.0, 0.0}, Vec2{0.0, 1.0}};
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point x = g.map(rule.points[q]);
      const double w = rule.weights[q] * g.area;
      const std::array<double, 3> psi = {1.0, x.x - xc.x, x.y - xc.y};
      const Matrix2 s = sigma_h.value(t, g, x);
      const double p = -0.5 * s.trace();
      const Vec2 uh = u_h.value(t);
      for (int i = 0; i < 2; ++i) {
        // mean constraint against v = e_i
        for (int l = 0; l < 3; ++l)
          a(i * 3, i * 3 + l) += w * psi[l];
        rhs(i * 3) += w * (i == 0 ? uh.x : uh.y);
        // gradient equations against v = e_i psi_m, m = 1, 2
        for (int m = 1; m < 3; ++m) {
          for (int l = 1; l < 3; ++l)
            a(i * 3 + m, i * 3 + l) += w * dot(grad_psi[m], grad_psi[l]);
          // (sigma, grad v) = sigma_i . grad psi_m; div v = d psi_m / d x_i
          const Vec2 row = s.row(i);
          const double div_v = i == 0 ? grad_psi[m].x : grad_psi[m].y;
          rhs(i * 3 + m) += w * (dot(row, grad_psi[m]) + p * div_v);
        }
      }
    }
    const Eigen::FullPivLU<Mat6> lu(a);
    if (!lu.isInvertible())
      throw std::logic_error("singular local postprocessing system on a nondegenerate triangle");
    const Vec6 c = lu.solve(rhs);
    out.mean[t] = {c(0), c(3)};
    out.grad[t] = {c(1), c(2), c(4), c(5)};
    out.center[t] = xc;
  }
  return out;
}

namespace detail {

/// Least-squares linear vector polynomial a + B (x - origin) / scale per
/// tensor row, fitted to mean normal fluxes of the patch edges.
struct VertexFit {
  bool valid = false;
  Point origin;
  double scale = 1.0;
  std::array<Eigen::Matrix<double, 6, 1>, 2> coef;

  Matrix2 eval(const Point &x) const {
    const Vec2 d = (1.0 / scale) * (x - origin);
    Matrix2 m;
    for (int r = 0; r < 2; ++r) {
      const auto &c = coef[r];
      const Vec2 v{c(0) + c(2) * d.x + c(3) * d.y, c(1) + c(4) * d.x + c(5) * d.y};
      if (r == 0) {
        m.a11 = v.x;
        m.a12 = v.y;
      } else {
        m.a21 = v.x;
        m.a22 = v.y;
      }
    }
    return m;
  }
};

} // namespace detail

struct RecoveryOptions {
  /// Boundary vertices whose patch has fewer triangles than this borrow the
  /// fit of the nearest interior vertex.
  int min_boundary_patch = 3;
};

/// Patch recovery of an RT0 pseudostress followed by the trace-mean
/// correction.
///
/// For each vertex and each tensor row, a linear vector polynomial is fitted
/// by least squares to the mean normal fluxes on all edges of the vertex
/// patch and evaluated at the vertex. The fit reproduces constants and the
/// interpolants of linear fields exactly.
inline RecoveredTensorField recover_pseudostress(const PseudostressField &sigma_h, const RecoveryOptions &opt = {}) {
  if (sigma_h.space().kind() != ElementKind::RT0)
    throw std::invalid_argument("pseudostress recovery is implemented for RT0 fields only");
  const std::shared_ptr<const Mesh> &mesh_ptr = sigma_h.space().mesh_ptr();
  const Mesh &mesh = *mesh_ptr;
  const int nv = mesh.num_vertices();
  std::vector<detail::VertexFit> fits(nv);
  std::vector<int> patch_edges;

  for (int v = 0; v < nv; ++v) {
    const auto tris = mesh.vertex_triangles(v);
    patch_edges.clear();
    double h = 0.0;
    for (int t : tris) {
      for (const EdgeRef &r : mesh.tri_edges()[t])
        patch_edges.push_back(r.edge);
      h = std::max(h, mesh.geometry(t).diameter());
    }
    std::sort(patch_edges.begin(), patch_edges.end());
    patch_edges.erase(std::unique(patch_edges.begin(), patch_edges.end()), patch_edges.end());

    detail::VertexFit &fit = fits[v];
    fit.origin = mesh.vertices()[v];
    fit.scale = h;
    if (patch_edges.size() < 6 || (mesh.is_boundary_vertex(v) && static_cast<int>(tris.size()) < opt.min_boundary_patch))
      continue;
    Eigen::MatrixXd a(patch_edges.size(), 6);
    Eigen::MatrixXd b(patch_edges.size(), 2);
    for (std::size_t k = 0; k < patch_edges.size(); ++k) {
      const int e = patch_edges[k];
      const double len = mesh.edge_length(e);
      const Vec2 n = (1.0 / len) * mesh.scaled_edge_normal(e);
      const Vec2 d = (1.0 / h) * (mesh.edge_midpoint(e) - fit.origin);
      a.row(k) << n.x, n.y, n.x * d.x, n.x * d.y, n.y * d.x, n.y * d.y;
      b(k, 0) = sigma_h.coeffs()[0][e] / len;
      b(k, 1) = sigma_h.coeffs()[1][e] / len;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    if (qr.rank() < 6)
      continue;
    const Eigen::MatrixXd c = qr.solve(b);
    fit.coef[0] = c.col(0);
    fit.coef[1] = c.col(1);
    fit.valid = true;
  }

  RecoveredTensorField out{mesh_ptr, std::vector<Matrix2>(nv)};
  std::vector<int> valid_vertices;
  for (int v = 0; v < nv; ++v)
    if (fits[v].valid)
      valid_vertices.push_back(v);

  for (int v = 0; v < nv; ++v) {
    const Point x = mesh.vertices()[v];
    if (fits[v].valid) {
      out.vertex_values[v] = fits[v].eval(x);
      continue;
    }
    // Borrow from the nearest interior vertex sharing a triangle, else the
    // nearest valid vertex anywhere.
    int donor = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int t : mesh.vertex_triangles(v))
      for (int w : mesh.triangles()[t])
        if (w != v && fits[w].valid && !mesh.is_boundary_vertex(w) && norm(mesh.vertices()[w] - x) < best) {
          best = norm(mesh.vertices()[w] - x);
          donor = w;
        }
    if (donor < 0)
      for (int w : valid_vertices)
        if (!mesh.is_boundary_vertex(w) && norm(mesh.vertices()[w] - x) < best) {
          best = norm(mesh.vertices()[w] - x);
          donor = w;
        }
    if (donor >= 0) {
      out.vertex_values[v] = fits[donor].eval(x);
      continue;
    }
    // No usable linear fit anywhere: constant least-squares fit on the patch.
    std::vector<int> edges;
    for (int t : mesh.vertex_triangles(v))
      for (const EdgeRef &r : mesh.tri_edges()[t])
        edges.push_back(r.edge);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    Eigen::MatrixXd a(edges.size(), 2);
    Eigen::MatrixXd b(edges.size(), 2);
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const double len = mesh.edge_length(edges[k]);
      const Vec2 n = (1.0 / len) * mesh.scaled_edge_normal(edges[k]);
      a.row(k) << n.x, n.y;
      b(k, 0) = sigma_h.coeffs()[0][edges[k]] / len;
      b(k, 1) = sigma_h.coeffs()[1][edges[k]] / len;
    }
    const Eigen::MatrixXd c = a.colPivHouseholderQr().solve(b);
    out.vertex_values[v] = {c(0, 0), c(1, 0), c(0, 1), c(1, 1)};
  }

  // Trace-mean correction; the field is linear per triangle so vertex
  // averages integrate it exactly.
  double tr = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Triangle &tri = mesh.triangles()[t];
    tr += mesh.area(t) / 3.0 *
          (out.vertex_values[tri[0]].trace() + out.vertex_values[tri[1]].trace() + out.vertex_values[tri[2]].trace());
  }
  const double kappa = tr / (2.0 * mesh.total_area());
  for (Matrix2 &m : out.vertex_values)
    m -= kappa * Matrix2::identity();
  return out;
}

/// -(1/2) tr of a pseudostress, pointwise.
struct DiscretePressure {
  const PseudostressField *sigma;
  double value(int t, const Point &x) const { return -0.5 * sigma->value(t, x).trace(); }
};

inline DiscretePressure derived_pressure(const PseudostressField &sigma) { return {&sigma}; }

inline P1ScalarField derived_pressure(const RecoveredTensorField &sigma) {
  P1ScalarField p{sigma.mesh, std::vector<double>(sigma.vertex_values.size())};
  for (std::size_t v = 0; v < p.vertex_values.size(); ++v)
    p.vertex_values[v] = -0.5 * sigma.vertex_values[v].trace();
  return p;
}

inline RecoveredTensorField symmetric_stress(const RecoveredTensorField &sigma) {
  RecoveredTensorField s = sigma;
  for (Matrix2 &m : s.vertex_values)
    m = symmetric_part(m);
  return s;
}

/// CSV dump "vertex,x,y,s11,s12,s21,s22".
inline void write_csv(std::ostream &out, const RecoveredTensorField &f) {
  out << "vertex,x,y,s11,s12,s21,s22\n";
  out.precision(17);
  for (std::size_t v = 0; v < f.vertex_values.size(); ++v) {
    const Point p = f.mesh->vertices()[v];
    const Matrix2 &m = f.vertex_values[v];
    out << v << ',' << p.x << ',' << p.y << ',' << m.a11 << ',' << m.a12 << ',' << m.a21 << ',' << m.a22 << '\n';
  }
}

} // namespace oseen
