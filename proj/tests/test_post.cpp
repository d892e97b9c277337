#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "oseen/oseen.hpp"

using namespace oseen;

namespace {

std::shared_ptr<const Mesh> skewed(int n = 4, unsigned seed = 11) {
  Mesh m = make_rectangle_grid(0.0, 1.0, 0.0, 1.0, n, n, true);
  std::vector<Point> v = m.vertices();
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-0.15 / n, 0.15 / n);
  for (int i = 0; i < m.num_vertices(); ++i)
    if (!m.is_boundary_vertex(i))
      v[i] += Vec2{d(rng), d(rng)};
  return share(build_mesh(v, m.triangles(), m.region()));
}

PseudostressField random_field(const HdivSpace &space, std::mt19937 &rng) {
  PseudostressField f(space);
  for (int r = 0; r < 2; ++r)
    f.row(r) = oracle::random_vector(rng, space.n_dofs_per_row());
  return f;
}

VelocityField random_velocity(const std::shared_ptr<const Mesh> &mesh, std::mt19937 &rng) {
  VelocityField u(mesh);
  for (int c = 0; c < 2; ++c)
    u.coeffs[c] = oracle::random_vector(rng, mesh->num_triangles());
  return u;
}

// RT0 field equal to the constant tensor m, without any trace correction.
PseudostressField constant_field(const HdivSpace &space, const Matrix2 &m) {
  PseudostressField f(space);
  for (int e = 0; e < space.mesh().num_edges(); ++e) {
    const Vec2 n = space.mesh().scaled_edge_normal(e);
    f.row(0)[e] = m.a11 * n.x + m.a12 * n.y;
    f.row(1)[e] = m.a21 * n.x + m.a22 * n.y;
  }
  return f;
}

double max_abs_diff(const Matrix2 &a, const Matrix2 &b) {
  return std::max({std::abs(a.a11 - b.a11), std::abs(a.a12 - b.a12), std::abs(a.a21 - b.a21),
                   std::abs(a.a22 - b.a22)});
}

std::vector<std::shared_ptr<const Mesh>> assorted_meshes() {
  return {share(make_square_piecewise_uniform()), share(make_lshape_mesh()), skewed(),
          share(uniform_quad_refine(make_square_piecewise_uniform())),
          share(build_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}}))};
}

long count_lines(const std::string &s) { return std::count(s.begin(), s.end(), '\n'); }

} // namespace

// ------------------------------------------------------------ velocity lift

TEST(Postprocess, KeepsElementMeans) {
  std::mt19937 rng(2);
  const auto mesh = skewed();
  for (ElementKind k : {ElementKind::RT0, ElementKind::BDM1}) {
    const HdivSpace space(mesh, k);
    const PseudostressField s = random_field(space, rng);
    const VelocityField u = random_velocity(mesh, rng);
    const P1VelocityField ustar = postprocess_velocity(s, u);
    for (int t = 0; t < mesh->num_triangles(); ++t) {
      const TriangleGeometry g = mesh->geometry(t);
      Vec2 mean{};
      for (std::size_t q = 0; q < triangle_rule(2).size(); ++q)
        mean += triangle_rule(2).weights[q] * ustar.value(t, g.map(triangle_rule(2).points[q]));
      EXPECT_NEAR(mean.x, u.coeffs[0][t], 1e-12);
      EXPECT_NEAR(mean.y, u.coeffs[1][t], 1e-12);
    }
  }
}

TEST(Postprocess, GradientIsElementMeanOfDeviatoricPart) {
  // For linear test functions with zero mean, (sigma + p I, grad v) picks the
  // element mean of sigma - (tr sigma / 2) I.
  std::mt19937 rng(3);
  const auto mesh = skewed();
  for (ElementKind k : {ElementKind::RT0, ElementKind::BDM1}) {
    const HdivSpace space(mesh, k);
    const PseudostressField s = random_field(space, rng);
    const P1VelocityField ustar = postprocess_velocity(s, random_velocity(mesh, rng));
    for (int t = 0; t < mesh->num_triangles(); ++t) {
      const TriangleGeometry g = mesh->geometry(t);
      // sigma_h is linear on t, so its mean is the average of vertex values
      Matrix2 mean;
      for (const Point &p : g.p)
        mean += (1.0 / 3.0) * s.value(t, g, p);
      EXPECT_LT(max_abs_diff(ustar.grad[t], apply_deviatoric(mean)), 1e-12) << "t " << t;
    }
  }
}

TEST(Postprocess, ExactForDivergenceFreeLinearVelocity) {
  // u = (x + 2y - 0.3, 3x - y), div u = 0, p = 0.
  const auto exact = [](const Point &x) { return Vec2{x.x + 2 * x.y - 0.3, 3 * x.x - x.y}; };
  const Matrix2 grad{1.0, 2.0, 3.0, -1.0};
  for (const auto &mesh : assorted_meshes()) {
    const HdivSpace space(mesh, ElementKind::RT0);
    const PseudostressField s = interpolate_pseudostress(space, [&](const Point &) { return grad; });
    const VelocityField u = project_velocity(mesh, exact);
    const P1VelocityField ustar = postprocess_velocity(s, u);
    for (int t = 0; t < mesh->num_triangles(); ++t)
      for (const Point &p : mesh->geometry(t).p) {
        EXPECT_NEAR(ustar.value(t, p).x, exact(p).x, 1e-12);
        EXPECT_NEAR(ustar.value(t, p).y, exact(p).y, 1e-12);
      }
  }
}

TEST(Postprocess, SolvedFieldsKeepMeans) {
  const auto mesh = share(make_square_piecewise_uniform());
  for (ElementKind k : {ElementKind::RT0, ElementKind::BDM1}) {
    const OseenSolution sol = solve_oseen(problem1(), mesh, k);
    const P1VelocityField ustar = postprocess_velocity(sol.sigma, sol.u);
    for (int t = 0; t < mesh->num_triangles(); ++t) {
      const Point c = mesh->geometry(t).centroid();
      EXPECT_NEAR(ustar.value(t, c).x, sol.u.coeffs[0][t], 1e-12);
      EXPECT_NEAR(ustar.value(t, c).y, sol.u.coeffs[1][t], 1e-12);
    }
  }
}

TEST(Postprocess, RejectsForeignVelocity) {
  const HdivSpace space(skewed(), ElementKind::RT0);
  EXPECT_THROW(postprocess_velocity(PseudostressField(space), VelocityField(skewed(3))), std::invalid_argument);
}

// ---------------------------------------------------------------- recovery

TEST(Recovery, ConstantsArePreserved) {
  std::mt19937 rng(7);
  for (const auto &mesh : assorted_meshes()) {
    const HdivSpace space(mesh, ElementKind::RT0);
    for (int trial = 0; trial < 5; ++trial) {
      const auto k = oracle::random_vector(rng, 4, -3.0, 3.0);
      const Matrix2 c{k[0], k[1], k[2], k[3]};
      const PseudostressField s = interpolate_pseudostress(space, [&](const Point &) { return c; });
      const RecoveredTensorField r = recover_pseudostress(s);
      for (int v = 0; v < mesh->num_vertices(); ++v)
        EXPECT_LT(max_abs_diff(r.vertex_values[v], apply_deviatoric(c)), 1e-12)
            << mesh->num_triangles() << " triangles, vertex " << v;
    }
  }
}

TEST(Recovery, IdentityIsAnnihilated) {
  for (const auto &mesh : assorted_meshes()) {
    const HdivSpace space(mesh, ElementKind::RT0);
    const PseudostressField s = constant_field(space, Matrix2::identity());
    const RecoveredTensorField r = recover_pseudostress(s);
    for (const Matrix2 &m : r.vertex_values)
      EXPECT_LT(max_abs_diff(m, Matrix2{}), 1e-12);
  }
}

TEST(Recovery, IsLinear) {
  std::mt19937 rng(8);
  const auto mesh = skewed(5);
  const HdivSpace space(mesh, ElementKind::RT0);
  const PseudostressField a = random_field(space, rng);
  const PseudostressField b = random_field(space, rng);
  const RecoveredTensorField ra = recover_pseudostress(a);
  const RecoveredTensorField rb = recover_pseudostress(b);
  const RecoveredTensorField rab = recover_pseudostress(2.5 * a - b);
  for (int v = 0; v < mesh->num_vertices(); ++v)
    EXPECT_LT(max_abs_diff(rab.vertex_values[v], 2.5 * ra.vertex_values[v] - rb.vertex_values[v]), 1e-11);
}

TEST(Recovery, LinearFieldsExactAtInteriorVertices) {
  std::mt19937 rng(9);
  for (const auto &mesh : {skewed(5), share(uniform_quad_refine(make_lshape_mesh()))}) {
    const HdivSpace space(mesh, ElementKind::RT0);
    for (int trial = 0; trial < 5; ++trial) {
      const auto k = oracle::random_vector(rng, 12, -2.0, 2.0);
      const auto lin = [&](const Point &x) {
        return Matrix2{k[0] + k[1] * x.x + k[2] * x.y, k[3] + k[4] * x.x + k[5] * x.y,
                       k[6] + k[7] * x.x + k[8] * x.y, k[9] + k[10] * x.x + k[11] * x.y};
      };
      const RecoveredTensorField r = recover_pseudostress(interpolate_pseudostress(space, lin));
      // the trace correction shifts by a multiple of I, so compare deviatoric parts
      for (int v = 0; v < mesh->num_vertices(); ++v) {
        if (mesh->is_boundary_vertex(v))
          continue;
        EXPECT_LT(max_abs_diff(apply_deviatoric(r.vertex_values[v]), apply_deviatoric(lin(mesh->vertices()[v]))),
                  1e-10);
      }
    }
  }
}

TEST(Recovery, BoundedInL2) {
  std::mt19937 rng(10);
  const QuadRule &rule = triangle_rule(2);
  for (const auto &mesh : assorted_meshes()) {
    const HdivSpace space(mesh, ElementKind::RT0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const PseudostressField s = random_field(space, rng);
      worst = std::max(worst, l2_norm(*mesh, recover_pseudostress(s), rule) / l2_norm(*mesh, s, rule));
    }
    EXPECT_LE(worst, 10.0) << mesh->num_triangles() << " triangles";
  }
}

TEST(Recovery, TraceMeanVanishes) {
  std::mt19937 rng(12);
  const auto mesh = share(make_lshape_mesh());
  const RecoveredTensorField r = recover_pseudostress(random_field(HdivSpace(mesh, ElementKind::RT0), rng));
  double tr = 0.0, scale = 0.0;
  for (int t = 0; t < mesh->num_triangles(); ++t)
    for (int v : mesh->triangles()[t]) {
      tr += mesh->area(t) / 3.0 * r.vertex_values[v].trace();
      scale += mesh->area(t) / 3.0 * std::abs(r.vertex_values[v].trace());
    }
  EXPECT_LE(std::abs(tr), 1e-12 * scale);
}

TEST(Recovery, PressureErrorBoundedByPseudostressError) {
  // |tr m| / 2 <= |m|_F / sqrt(2) pointwise
  const ProblemSpec p1 = problem1();
  auto mesh = share(make_square_piecewise_uniform());
  for (int level = 0; level < 3; ++level, mesh = share(uniform_quad_refine(*mesh))) {
    const OseenSolution sol = solve_oseen(p1, mesh, ElementKind::RT0);
    const RecoveredTensorField sstar = recover_pseudostress(sol.sigma);
    const QuadRule &rule = triangle_rule(6);
    const double ep = l2_error(*mesh, derived_pressure(sstar), p1.exact->p, rule);
    const double es = l2_error(*mesh, sstar, p1.exact->sigma, rule);
    EXPECT_LE(ep, es / std::sqrt(2.0) + 1e-14);
    EXPECT_LE(l2_error(*mesh, derived_pressure(sol.sigma), p1.exact->p, rule),
              l2_error(*mesh, sol.sigma, p1.exact->sigma, rule) / std::sqrt(2.0) + 1e-14);
  }
}

TEST(Recovery, RejectsBDM1) {
  const HdivSpace space(skewed(), ElementKind::BDM1);
  EXPECT_THROW(recover_pseudostress(PseudostressField(space)), std::invalid_argument);
}

TEST(Recovery, DerivedQuantities) {
  std::mt19937 rng(13);
  const auto mesh = skewed();
  const HdivSpace space(mesh, ElementKind::RT0);
  const PseudostressField s = random_field(space, rng);
  const RecoveredTensorField r = recover_pseudostress(s);
  const P1ScalarField p = derived_pressure(r);
  const RecoveredTensorField sym = symmetric_stress(r);
  for (int v = 0; v < mesh->num_vertices(); ++v) {
    EXPECT_DOUBLE_EQ(p.vertex_values[v], -0.5 * r.vertex_values[v].trace());
    EXPECT_DOUBLE_EQ(sym.vertex_values[v].a12, sym.vertex_values[v].a21);
    EXPECT_DOUBLE_EQ(sym.vertex_values[v].trace(), r.vertex_values[v].trace());
  }
  const DiscretePressure ph = derived_pressure(s);
  const Point x = mesh->geometry(3).centroid();
  EXPECT_DOUBLE_EQ(ph.value(3, x), -0.5 * s.value(3, x).trace());
  // the symmetric part is the Frobenius-nearest symmetric tensor
  const QuadRule &rule = triangle_rule(2);
  EXPECT_LE(l2_norm(*mesh, sym, rule), l2_norm(*mesh, r, rule) + 1e-14);

  std::ostringstream out;
  write_csv(out, r);
  EXPECT_EQ(count_lines(out.str()), mesh->num_vertices() + 1);
  EXPECT_EQ(out.str().rfind("vertex,x,y,s11,s12,s21,s22\n", 0), 0u);
}

// ------------------------------------------------------------ error metrics

TEST(ErrorMetrics, NormsOfSimpleFields) {
  const auto mesh = share(make_square_piecewise_uniform());
  const QuadRule &rule = triangle_rule(6);
  VelocityField one(mesh);
  std::fill(one.coeffs[0].begin(), one.coeffs[0].end(), 1.0);
  EXPECT_NEAR(l2_norm(*mesh, one, rule), 1.0, 1e-14);
  const auto id = [](const Point &) { return Matrix2::identity(); };
  EXPECT_NEAR(l2_norm(*mesh, id, rule), std::sqrt(2.0), 1e-14);
  // int_0^1 int_0^1 (x y)^2 = 1/9
  const auto xy = [](const Point &x) { return Vec2{x.x * x.y, 0.0}; };
  EXPECT_NEAR(l2_norm(*mesh, xy, rule), 1.0 / 3.0, 1e-14);
}

TEST(ErrorMetrics, HomogeneityAndTriangleInequality) {
  std::mt19937 rng(14);
  const auto mesh = skewed();
  const HdivSpace space(mesh, ElementKind::BDM1);
  const QuadRule &rule = triangle_rule(2);
  for (int trial = 0; trial < 20; ++trial) {
    const PseudostressField a = random_field(space, rng);
    const PseudostressField b = random_field(space, rng);
    const PseudostressField c = random_field(space, rng);
    EXPECT_NEAR(l2_norm(*mesh, -3.0 * a, rule), 3.0 * l2_norm(*mesh, a, rule), 1e-12);
    EXPECT_LE(l2_error(*mesh, a, c, rule), l2_error(*mesh, a, b, rule) + l2_error(*mesh, b, c, rule) + 1e-14);
    EXPECT_NEAR(l2_error(*mesh, a, b, rule), l2_norm(*mesh, a - b, rule), 1e-12);
  }
}

TEST(ErrorMetrics, FitOrderOnReferenceColumns) {
  const std::vector<int> nt{19, 76, 304, 1216, 4864, 19456};
  // velocity error of RT0, reference order 9.990e-1
  EXPECT_NEAR(fit_order(nt, {3.210e-1, 1.620e-1, 8.121e-2, 4.063e-2, 2.032e-2, 1.016e-2}), 0.999, 5e-4);
  // pseudostress error of BDM1, reference order 1.987
  EXPECT_NEAR(fit_order(nt, {4.480e-1, 1.249e-1, 3.216e-2, 8.104e-3, 2.031e-3, 5.081e-4}), 1.987, 5e-4);
  // the first row is ignored
  EXPECT_NEAR(fit_order(nt, {9.0, 1.620e-1, 8.121e-2, 4.063e-2, 2.032e-2, 1.016e-2}), 0.999, 5e-4);
}

TEST(ErrorMetrics, FitOrderOfExactPowerLaw) {
  const std::vector<int> nt{10, 40, 160, 640};
  std::vector<double> e;
  for (int n : nt)
    e.push_back(7.0 * std::pow(n, -1.5 / 2.0));
  EXPECT_NEAR(fit_order(nt, e), 1.5, 1e-12);
  EXPECT_THROW(fit_order({1, 2}, {1.0, 0.5}), std::invalid_argument);
  EXPECT_THROW(fit_order({1, 4, 16}, {1.0, 0.0, 0.25}), std::invalid_argument);
  EXPECT_THROW(fit_order({1, 4, 4}, {1.0, 0.5, 0.5}), std::invalid_argument);
  EXPECT_THROW(fit_order({1, 4, 16}, {1.0, 0.5}), std::invalid_argument);
}

TEST(ErrorMetrics, ZeroProblemGivesZeroErrors) {
  const auto mesh = share(make_square_piecewise_uniform());
  const ProblemSpec zero = zero_problem({1.0, -2.0}, 0.5);
  for (ElementKind k : {ElementKind::RT0, ElementKind::BDM1}) {
    const OseenSolution sol = solve_oseen(zero, mesh, k);
    const ErrorRow row = compute_errors(sol, zero);
    for (double v : {row.err_u, row.err_eh, row.err_ustar, row.err_sigma, row.err_xih, row.err_div, row.err_rho,
                     row.err_zeta})
      EXPECT_LT(v, 1e-10);
    EXPECT_EQ(row.err_sigmastar.has_value(), k == ElementKind::RT0);
  }
  EXPECT_THROW(require_exact(problem3()), std::invalid_argument);
}

TEST(ErrorMetrics, SuperclosenessBeatsPlainErrors) {
  const auto mesh = share(uniform_quad_refine(uniform_quad_refine(make_square_piecewise_uniform())));
  const OseenSolution sol = solve_oseen(problem1(), mesh, ElementKind::RT0);
  const ErrorRow row = compute_errors(sol, problem1());
  EXPECT_LT(row.err_eh, 0.1 * row.err_u);
  EXPECT_LT(row.err_xih, 0.1 * row.err_sigma);
  EXPECT_LT(row.err_ustar, 0.2 * row.err_u);
  // the H(div) part equals the error of the P0 projection of div sigma
  EXPECT_GT(row.err_div, 0.0);
}

TEST(ErrorMetrics, StokesConstantDivergenceIsCaptured) {
  // With b = 0, c = 0 and f constant the divergence equation is exact per
  // element, so the H(div) seminorm error of any solve vanishes.
  ProblemSpec p = zero_problem();
  p.name = "const";
  p.f = [](const Point &) { return Vec2{1.0, -2.0}; };
  ExactSolution ex;
  ex.u = [](const Point &) { return Vec2{}; };
  ex.p = [](const Point &x) { return x.x - 2.0 * x.y + 0.5; };
  ex.sigma = [ex](const Point &x) { return -ex.p(x) * Matrix2::identity(); };
  p.exact = ex;
  const auto mesh = share(build_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}}));
  for (ElementKind k : {ElementKind::RT0, ElementKind::BDM1}) {
    const OseenSolution sol = solve_oseen(p, mesh, k);
    EXPECT_LT(hdiv_error(sol.sigma, p), 1e-11);
  }
}

TEST(ErrorMetrics, ResidualsAndTraceMeanOfSolves) {
  for (const char *name : {"p1", "p2", "p3"}) {
    const ProblemSpec p = problem_by_name(name);
    const auto mesh = share(initial_mesh(name));
    for (ElementKind k : {ElementKind::RT0, ElementKind::BDM1}) {
      const OseenSolution sol = solve_oseen(p, mesh, k);
      EXPECT_LE(sol.relative_residual, 1e-9) << name;
      const double scale = l2_norm(*mesh, sol.sigma, triangle_rule(2));
      EXPECT_LE(std::abs(trace_mean(sol.sigma)), 1e-9 * std::max(scale, 1.0)) << name;
    }
  }
}

// -------------------------------------------------------------- adaptivity

TEST(Indicators, VanishForConstantVelocityAndZeroStress) {
  const auto mesh = skewed();
  const PseudostressField s(HdivSpace(mesh, ElementKind::RT0));
  VelocityField u(mesh);
  std::fill(u.coeffs[0].begin(), u.coeffs[0].end(), 2.0);
  const IndicatorSet ind = compute_indicators(s, u, recover_pseudostress(s), postprocess_velocity(s, u));
  for (double e : ind.local)
    EXPECT_LT(e, 1e-14);
  EXPECT_THROW(mark_max(ind, 0.5), std::runtime_error);
}

TEST(Indicators, GlobalIsRootSumOfSquares) {
  std::mt19937 rng(15);
  const auto mesh = skewed();
  const HdivSpace space(mesh, ElementKind::RT0);
  const PseudostressField s = random_field(space, rng);
  const VelocityField u = random_velocity(mesh, rng);
  const IndicatorSet ind = compute_indicators(s, u, recover_pseudostress(s), postprocess_velocity(s, u));
  double sum = 0.0;
  for (double e : ind.local) {
    EXPECT_GE(e, 0.0);
    sum += e * e;
  }
  EXPECT_NEAR(ind.global, std::sqrt(sum), 1e-12 * ind.global);
}

TEST(Indicators, VelocityPartIsLocal) {
  // Changing u_h on one element moves only the velocity term there; the
  // pseudostress terms do not see u_h at all.
  std::mt19937 rng(16);
  const auto mesh = skewed();
  const HdivSpace space(mesh, ElementKind::RT0);
  const PseudostressField s = random_field(space, rng);
  VelocityField u = random_velocity(mesh, rng);
  const RecoveredTensorField sstar = recover_pseudostress(s);
  const IndicatorSet before = compute_indicators(s, u, sstar, postprocess_velocity(s, u));
  u.coeffs[0][5] += 1.0;
  const IndicatorSet after = compute_indicators(s, u, sstar, postprocess_velocity(s, u));
  for (int t = 0; t < mesh->num_triangles(); ++t) {
    if (t == 5)
      continue;
    EXPECT_DOUBLE_EQ(after.local[t], before.local[t]);
  }
  EXPECT_NEAR(after.local[5], before.local[5], 1e-12);
}

TEST(Marking, MaximumStrategyExamples) {
  IndicatorSet ind;
  ind.local = {1.0, 2.0, 3.0, 4.0};
  EXPECT_EQ(mark_max(ind, 0.7), (std::vector<int>{2, 3}));
  EXPECT_EQ(mark_max(ind, 1.0), (std::vector<int>{3}));
  EXPECT_EQ(mark_max(ind, 0.25), (std::vector<int>{0, 1, 2, 3}));
  ind.local = {5.0, 1.0, 5.0};
  EXPECT_EQ(mark_max(ind, 1.0), (std::vector<int>{0, 2}));
  EXPECT_THROW(mark_max(ind, 0.0), std::invalid_argument);
  EXPECT_THROW(mark_max(ind, 1.5), std::invalid_argument);
  EXPECT_THROW(mark_max(IndicatorSet{}, 0.5), std::invalid_argument);
}

TEST(Marking, SmallerThetaMarksSuperset) {
  std::mt19937 rng(17);
  IndicatorSet ind;
  ind.local = oracle::random_vector(rng, 200, 0.0, 1.0);
  std::vector<int> prev;
  for (double theta : {0.9, 0.7, 0.5, 0.3, 0.1}) {
    const std::vector<int> m = mark_max(ind, theta);
    EXPECT_TRUE(std::includes(m.begin(), m.end(), prev.begin(), prev.end()));
    EXPECT_GE(m.size(), prev.size());
    prev = m;
  }
}

TEST(Adaptive, ZeroIterationsSolvesOnce) {
  AdaptiveOptions opt;
  opt.max_iters = 0;
  const auto mesh = share(make_lshape_mesh());
  const AdaptiveHistory h = adaptive_solve(problem2(), mesh, opt);
  ASSERT_EQ(h.records.size(), 1u);
  EXPECT_EQ(h.final_mesh, mesh);
  EXPECT_EQ(h.records[0].dofs, 2L * mesh->num_edges() + 2L * mesh->num_triangles());
  ASSERT_TRUE(h.records[0].effectivity);
  EXPECT_NEAR(*h.records[0].effectivity, h.records[0].estimator / *h.records[0].true_error, 1e-14);
}

TEST(Adaptive, MeshGrowsAndStopsAtDofBudget) {
  AdaptiveOptions opt;
  opt.theta = 0.5;
  opt.max_dofs = 5000;
  std::vector<int> seen;
  const AdaptiveHistory h =
      adaptive_solve(problem2(), share(make_lshape_mesh()), opt, [&](const AdaptiveRecord &r) { seen.push_back(r.nt); });
  ASSERT_GE(h.records.size(), 3u);
  EXPECT_EQ(seen.size(), h.records.size());
  for (std::size_t i = 1; i < h.records.size(); ++i)
    EXPECT_GT(h.records[i].nt, h.records[i - 1].nt);
  EXPECT_GE(h.records.back().dofs, 5000);
  EXPECT_LT(h.records[h.records.size() - 2].dofs, 5000);
  EXPECT_EQ(h.final_mesh->num_triangles(), h.records.back().nt);
  EXPECT_TRUE(is_conforming(*h.final_mesh));
}

TEST(Adaptive, FirstMarkHitsReentrantCorner) {
  const auto mesh = share(make_lshape_mesh());
  const OseenSolution sol = solve_oseen(problem2(), mesh, ElementKind::RT0);
  const IndicatorSet ind = compute_indicators(sol.sigma, sol.u, recover_pseudostress(sol.sigma),
                                              postprocess_velocity(sol.sigma, sol.u));
  const int top = static_cast<int>(std::max_element(ind.local.begin(), ind.local.end()) - ind.local.begin());
  bool touches = false;
  for (int v : mesh->triangles()[top])
    touches = touches || norm(mesh->vertices()[v]) < 1e-14;
  EXPECT_TRUE(touches);
}

// -------------------------------------------------------------- experiments

TEST(Format, ScientificFourDigits) {
  EXPECT_EQ(format_sci(2.032e-2), "2.032e-2");
  EXPECT_EQ(format_sci(1.372), "1.372");
  EXPECT_EQ(format_sci(3.659e-4), "3.659e-4");
  EXPECT_EQ(format_sci(0.0), "0.000");
  EXPECT_EQ(format_sci(9.99996e-3), "1.000e-2");
  EXPECT_EQ(format_sci(-4.5e3), "-4.500e3");
  EXPECT_EQ(format_sci(12.0), "1.200e1");
}

TEST(Experiments, ConvergenceTableShape) {
  RunConfig cfg;
  cfg.levels = 3;
  for (ElementKind k : {ElementKind::RT0, ElementKind::BDM1}) {
    cfg.element = k;
    int calls = 0;
    const ConvergenceResult res = run_convergence(cfg, [&](const ErrorRow &) { ++calls; });
    EXPECT_EQ(calls, 3);
    ASSERT_TRUE(res.orders);
    std::ostringstream csv;
    emit(csv, res, TableFormat::Csv);
    std::istringstream in(csv.str());
    const ParsedTable t = parse_csv_table(in);
    EXPECT_EQ(t.header.size(), error_columns(k).size() + 1);
    ASSERT_EQ(t.rows.size(), 4u);
    EXPECT_EQ(t.labels, (std::vector<std::string>{"19", "76", "304", "order"}));
    // four significant digits survive the round trip
    EXPECT_NEAR(t.rows[1][0], res.rows[1].err_u, 5e-4 * res.rows[1].err_u);
    EXPECT_NEAR(t.rows[3][3], res.orders->sigma, 5e-4 * res.orders->sigma);

    std::ostringstream aligned, diag;
    emit(aligned, res, TableFormat::Aligned);
    emit_diagnostics(diag, res);
    EXPECT_EQ(count_lines(aligned.str()), 5);
    EXPECT_EQ(count_lines(diag.str()), 4);
  }
}

TEST(Experiments, RunsAreDeterministic) {
  RunConfig cfg;
  cfg.levels = 2;
  std::ostringstream a, b;
  emit(a, run_convergence(cfg), TableFormat::Csv);
  emit(b, run_convergence(cfg), TableFormat::Csv);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Experiments, ProblemWithoutExactSolution) {
  RunConfig cfg;
  cfg.problem = "p3";
  cfg.levels = 2;
  const ConvergenceResult res = run_convergence(cfg);
  EXPECT_FALSE(res.has_errors);
  EXPECT_FALSE(res.orders);
  ASSERT_EQ(res.rows.size(), 2u);
  EXPECT_EQ(res.rows[1].nt, 4 * res.rows[0].nt);
  std::ostringstream out;
  emit(out, res, TableFormat::Csv);
  EXPECT_EQ(out.str(), "nt\n32\n128\n");
  EXPECT_THROW(emit_orders(out, res, TableFormat::Csv), std::invalid_argument);
}

TEST(Experiments, ConfigurationErrors) {
  RunConfig cfg;
  cfg.levels = 0;
  EXPECT_THROW(run_convergence(cfg), std::invalid_argument);
  cfg.levels = 1;
  cfg.problem = "p9";
  EXPECT_THROW(run_convergence(cfg), std::invalid_argument);
  EXPECT_DOUBLE_EQ(default_theta("p2"), 0.7);
  EXPECT_DOUBLE_EQ(default_theta("p3"), 0.3);
  EXPECT_EQ(initial_mesh("p1").num_triangles(), 19);
}

TEST(Experiments, AdaptiveHistoryTables) {
  RunConfig cfg;
  cfg.problem = "p3";
  cfg.mode = RunMode::Adaptive;
  cfg.max_iters = 1;
  const AdaptiveHistory h = run_adaptive(cfg);
  ASSERT_EQ(h.records.size(), 2u);
  EXPECT_FALSE(h.records[0].true_error);
  std::ostringstream csv, aligned;
  emit(csv, h, TableFormat::Csv);
  emit(aligned, h, TableFormat::Aligned);
  EXPECT_EQ(count_lines(csv.str()), 3);
  EXPECT_NE(csv.str().find(",,"), std::string::npos);
  EXPECT_NE(aligned.str().find('-'), std::string::npos);
}
