#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "assembly.hpp"
#include "error_metrics.hpp"
#include "postprocess.hpp"
#include "refine.hpp"

namespace oseen {

struct IndicatorSet {
  std::vector<double> local;
  double global = 0.0;
};

/// E(K)^2 = ||sigma* - sigma_h||_K^2 + ||u* - u_h||_K^2.
inline IndicatorSet compute_indicators(const PseudostressField &sigma_h, const VelocityField &u_h,
                                       const RecoveredTensorField &sigma_star, const P1VelocityField &u_star) {
  const auto &mesh = sigma_h.space().mesh_ptr();
  if (u_h.mesh != mesh || sigma_star.mesh != mesh || u_star.mesh != mesh)
    throw std::invalid_argument("compute_indicators: fields live on different meshes");
  const QuadRule &rule = triangle_rule(4);
  const std::vector<double> ds = squared_differences(*mesh, sigma_star, sigma_h, rule);
  const std::vector<double> du = squared_differences(*mesh, u_star, u_h, rule);
  IndicatorSet ind;
  ind.local.resize(ds.size());
  double s = 0.0;
  for (std::size_t t = 0; t < ds.size(); ++t) {
    ind.local[t] = std::sqrt(ds[t] + du[t]);
    s += ds[t] + du[t];
  }
  ind.global = std::sqrt(s);
  return ind;
}

/// {K : E(K) >= theta max E}, in increasing triangle order.
inline std::vector<int> mark_max(const IndicatorSet &ind, double theta) {
  if (!(theta > 0.0 && theta <= 1.0))
    throw std::invalid_argument("marking parameter must lie in (0, 1]");
  if (ind.local.empty())
    throw std::invalid_argument("no indicators to mark");
  const double top = *std::max_element(ind.local.begin(), ind.local.end());
  if (!(top > 0.0))
    throw std::runtime_error("all error indicators vanish; nothing to refine");
  std::vector<int> marked;
  for (std::size_t t = 0; t < ind.local.size(); ++t)
    if (ind.local[t] >= theta * top)
      marked.push_back(static_cast<int>(t));
  return marked;
}

struct AdaptiveOptions {
  double theta = 0.7;
  /// Number of refinements; the loop solves max_iters + 1 times at most.
  std::optional<int> max_iters;
  long max_dofs = 200000;
};

struct AdaptiveRecord {
  int iter = 0;
  int nt = 0;
  long dofs = 0;
  double estimator = 0.0;
  std::optional<double> true_error;
  std::optional<double> effectivity;
  int marked = 0;
  double residual = 0.0;
  double trace_mean = 0.0;
};

struct AdaptiveHistory {
  std::vector<AdaptiveRecord> records;
  std::shared_ptr<const Mesh> final_mesh;
  /// Indicators on the final mesh.
  IndicatorSet final_indicators;
};

/// Discrete unknowns excluding the trace multiplier.
inline long count_dofs(const HdivSpace &space) {
  return 2L * space.n_dofs_per_row() + 2L * space.mesh().num_triangles();
}

/// SOLVE, ESTIMATE, MARK, REFINE with RT0 until max_iters refinements are
/// done or the current space has at least max_dofs unknowns.
inline AdaptiveHistory adaptive_solve(const ProblemSpec &problem, std::shared_ptr<const Mesh> mesh,
                                      const AdaptiveOptions &opt,
                                      const std::function<void(const AdaptiveRecord &)> &progress = {}) {
  AdaptiveHistory h;
  for (int iter = 0;; ++iter) {
    const OseenSolution sol = solve_oseen(problem, mesh, ElementKind::RT0);
    const P1VelocityField ustar = postprocess_velocity(sol.sigma, sol.u);
    const RecoveredTensorField sstar = recover_pseudostress(sol.sigma);
    IndicatorSet ind = compute_indicators(sol.sigma, sol.u, sstar, ustar);
    const std::vector<int> marked = mark_max(ind, opt.theta);

    AdaptiveRecord rec;
    rec.iter = iter;
    rec.nt = mesh->num_triangles();
    rec.dofs = count_dofs(sol.sigma.space());
    rec.estimator = ind.global;
    rec.marked = static_cast<int>(marked.size());
    rec.residual = sol.relative_residual;
    rec.trace_mean = relative_trace_mean(sol.sigma);
    if (problem.exact) {
      const QuadRule &rule = triangle_rule(6);
      const double es = l2_error(*mesh, sol.sigma, problem.exact->sigma, rule, problem.graded);
      const double eu = l2_error(*mesh, sol.u, problem.exact->u, rule, problem.graded);
      rec.true_error = std::hypot(es, eu);
      rec.effectivity = ind.global / *rec.true_error;
    }
    h.records.push_back(rec);
    if (progress)
      progress(rec);

    const bool done = (opt.max_iters && iter >= *opt.max_iters) || rec.dofs >= opt.max_dofs;
    if (done) {
      h.final_mesh = mesh;
      h.final_indicators = std::move(ind);
      return h;
    }
    mesh = share(refine_marked(*mesh, marked));
  }
}

/// CSV "iter,nt,dofs,estimator,true_error,effectivity,marked"; unknown
/// values are left empty.
inline void write_history_csv(std::ostream &out, const AdaptiveHistory &h) {
  out << "iter,nt,dofs,estimator,true_error,effectivity,marked\n";
  out.precision(10);
  for (const AdaptiveRecord &r : h.records) {
    out << r.iter << ',' << r.nt << ',' << r.dofs << ',' << r.estimator << ',';
    if (r.true_error)
      out << *r.true_error;
    out << ',';
    if (r.effectivity)
      out << *r.effectivity;
    out << ',' << r.marked << '\n';
  }
}

} // namespace oseen
