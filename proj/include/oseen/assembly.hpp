#pragma once

#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "problem.hpp"
#include "quadrature.hpp"
#include "sparse.hpp"
#include "spaces.hpp"

namespace oseen {

/// Unknown ordering: sigma row 1, sigma row 2, u_1 per triangle, u_2 per
/// triangle, then one multiplier for int tr(sigma) = 0.
struct BlockLayout {
  int n_sigma_row = 0;
  int nt = 0;

  int sigma(int row, int dof) const { return row * n_sigma_row + dof; }
  int velocity(int comp, int t) const { return 2 * n_sigma_row + comp * nt + t; }
  int multiplier() const { return 2 * n_sigma_row + 2 * nt; }
  int size() const { return 2 * n_sigma_row + 2 * nt + 1; }
};

struct LinearSystem {
  CsrMatrix matrix;
  std::vector<double> rhs;
  BlockLayout layout;
};

struct AssemblyOptions {
  /// Element rule; must be exact for degree 4 or higher.
  int quadrature_degree = 4;
};

/// <g, tau n> for every sigma test function, ordered as the first 2 n_sigma_row
/// unknowns of the layout. Three-point Gauss on boundary edges by default.
inline std::vector<double> assemble_dirichlet_rhs(const VectorFunction &g, const HdivSpace &space,
                                                  const LineRule &rule = edge_rule3()) {
  const Mesh &mesh = space.mesh();
  const int n = space.n_dofs_per_row();
  std::vector<double> out(2 * n, 0.0);
  for (int e : mesh.boundary_edges()) {
    const int t = mesh.edge_triangles(e)[0];
    const TriangleGeometry geo = mesh.geometry(t);
    int sign = 1;
    for (const EdgeRef &r : mesh.tri_edges()[t])
      if (r.edge == e)
        sign = r.sign;
    const Vec2 n_out = (sign / mesh.edge_length(e)) * mesh.scaled_edge_normal(e);
    const double len = mesh.edge_length(e);
    const Point a = mesh.vertices()[mesh.edges()[e][0]];
    const Point b = mesh.vertices()[mesh.edges()[e][1]];
    const auto dofs = space.local_dofs(t);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Point x = a + rule.points[q] * (b - a);
      const Vec2 gx = g(x);
      const LocalBasis basis = space.evaluate(t, geo, x);
      const double w = rule.weights[q] * len;
      for (int j = 0; j < basis.n; ++j) {
        const double flux = dot(basis.f[j].value, n_out);
        out[dofs[j]] += w * gx.x * flux;
        out[n + dofs[j]] += w * gx.y * flux;
      }
    }
  }
  return out;
}

/// Assembles the mixed system
///   (A sigma, tau) + (div tau, u) + lambda (tr tau, 1) = <g, tau n>
///   -(div sigma, v) + (b.A sigma, v) + (c u, v)       = (f, v)
///   (tr sigma, 1)                                      = 0
/// with b.A sigma := (A sigma) b.
inline LinearSystem assemble(const ProblemSpec &problem, const HdivSpace &space, const AssemblyOptions &opt = {}) {
  if (opt.quadrature_degree < 4)
    throw std::invalid_argument("assembly needs a quadrature rule exact for degree 4 or higher");
  const Mesh &mesh = space.mesh();
  const QuadRule &rule = triangle_rule(opt.quadrature_degree);
  const int n = space.n_dofs_per_row();
  BlockLayout layout{n, mesh.num_triangles()};
  LinearSystem sys;
  sys.layout = layout;
  sys.rhs.assign(layout.size(), 0.0);

  TripletBuffer buf(layout.size());
  const int nloc = space.dofs_per_element();
  buf.reserve(static_cast<std::size_t>(mesh.num_triangles()) * (4 * nloc * nloc + 8 * nloc + 2));

  const int lam = layout.multiplier();
  std::vector<double> mass(36), tr_coupling(4 * 36), conv(4 * 6);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriangleGeometry geo = mesh.geometry(t);
    const auto dofs = space.local_dofs(t);
    std::fill(mass.begin(), mass.end(), 0.0);
    std::fill(tr_coupling.begin(), tr_coupling.end(), 0.0);
    std::fill(conv.begin(), conv.end(), 0.0);
    std::array<double, 12> comp_integral{}; // int phi_k^(r), index r * 6 + k
    std::array<double, 6> divs{};
    double reaction = 0.0;

    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point x = geo.map(rule.points[q]);
      const double w = rule.weights[q] * geo.area;
      const LocalBasis basis = space.evaluate(t, geo, x);
      const Vec2 b = problem.b(x);
      reaction += w * problem.c(x);
      for (int j = 0; j < nloc; ++j) {
        const Vec2 pj = basis.f[j].value;
        comp_integral[j] += w * pj.x;
        comp_integral[6 + j] += w * pj.y;
        for (int k = 0; k < nloc; ++k) {
          const Vec2 pk = basis.f[k].value;
          mass[j * 6 + k] += w * dot(pj, pk);
          // (tr tau)(tr sigma) for tau in row i, sigma in row r: phi_j^(i) phi_k^(r)
          const double ji[2] = {pj.x, pj.y};
          const double kr[2] = {pk.x, pk.y};
          for (int i = 0; i < 2; ++i)
            for (int r = 0; r < 2; ++r)
              tr_coupling[(i * 2 + r) * 36 + j * 6 + k] += w * ji[i] * kr[r];
        }
        // velocity row i, sigma column (r, j): delta_ir (phi_j . b) - b_i phi_j^(r) / 2
        const double pr[2] = {pj.x, pj.y};
        const double bi[2] = {b.x, b.y};
        for (int i = 0; i < 2; ++i)
          for (int r = 0; r < 2; ++r)
            conv[(i * 2 + r) * 6 + j] += w * ((i == r ? dot(pj, b) : 0.0) - 0.5 * bi[i] * pr[r]);
      }
      if (q == 0)
        for (int j = 0; j < nloc; ++j)
          divs[j] = basis.f[j].div;
    }

    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < nloc; ++j) {
        const int row = layout.sigma(i, dofs[j]);
        for (int r = 0; r < 2; ++r)
          for (int k = 0; k < nloc; ++k) {
            const double v = (i == r ? mass[j * 6 + k] : 0.0) - 0.5 * tr_coupling[(i * 2 + r) * 36 + j * 6 + k];
            buf.add(row, layout.sigma(r, dofs[k]), v);
          }
        buf.add(row, layout.velocity(i, t), divs[j] * geo.area);
        buf.add(row, lam, comp_integral[i * 6 + j]);
        buf.add(lam, row, comp_integral[i * 6 + j]);
      }
      const int vrow = layout.velocity(i, t);
      for (int r = 0; r < 2; ++r)
        for (int k = 0; k < nloc; ++k) {
          double v = conv[(i * 2 + r) * 6 + k];
          if (i == r)
            v -= divs[k] * geo.area;
          buf.add(vrow, layout.sigma(r, dofs[k]), v);
        }
      if (reaction != 0.0)
        buf.add(vrow, vrow, reaction);
    }

    Vec2 load;
    for (const QuadPoint &qp : element_quadrature(mesh, t, rule, problem.graded))
      load += qp.w * problem.f(qp.x);
    sys.rhs[layout.velocity(0, t)] = load.x;
    sys.rhs[layout.velocity(1, t)] = load.y;
  }

  const std::vector<double> bc = assemble_dirichlet_rhs(problem.g, space);
  for (int k = 0; k < 2 * n; ++k)
    sys.rhs[k] = bc[k];
  sys.matrix = to_csr(buf);
  return sys;
}

struct OseenSolution {
  PseudostressField sigma;
  VelocityField u;
  double multiplier = 0.0;
  double relative_residual = 0.0;
  /// Net boundary flux of g; nonzero data violate div u = 0.
  double boundary_flux = 0.0;
  std::vector<std::string> warnings;
};

/// Assembles and solves the mixed method on `mesh`.
inline OseenSolution solve_oseen(const ProblemSpec &problem, const std::shared_ptr<const Mesh> &mesh, ElementKind kind,
                                 const AssemblyOptions &opt = {}) {
  const HdivSpace space(mesh, kind);
  const LinearSystem sys = assemble(problem, space, opt);
  LuResult lu;
  try {
    lu = lu_solve(sys.matrix, sys.rhs);
  } catch (const SolverError &err) {
    std::ostringstream msg;
    msg << err.what() << " (nt = " << mesh->num_triangles() << ", h = " << mesh_stats(*mesh).h_max
        << "; the mesh may be too coarse for this data)";
    throw SolverError(msg.str());
  }

  const BlockLayout &L = sys.layout;
  std::array<std::vector<double>, 2> coeffs;
  for (int r = 0; r < 2; ++r)
    coeffs[r].assign(lu.x.begin() + L.sigma(r, 0), lu.x.begin() + L.sigma(r, 0) + L.n_sigma_row);
  PseudostressField sigma(space, std::move(coeffs), false);

  OseenSolution sol{correct_trace_mean(std::move(sigma)), VelocityField(mesh), 0.0, 0.0, 0.0, {}};
  for (int c = 0; c < 2; ++c)
    for (int t = 0; t < L.nt; ++t)
      sol.u.coeffs[c][t] = lu.x[L.velocity(c, t)];
  sol.multiplier = lu.x[L.multiplier()];
  sol.relative_residual = lu.relative_residual;
  double flux_scale = 0.0;
  sol.boundary_flux = boundary_flux(problem, *mesh, &flux_scale);
  if (std::abs(sol.boundary_flux) > 1e-6 * flux_scale) {
    std::ostringstream msg;
    msg << "boundary data violate the compatibility condition: net flux " << sol.boundary_flux;
    sol.warnings.push_back(msg.str());
  }
  return sol;
}

} // namespace oseen
