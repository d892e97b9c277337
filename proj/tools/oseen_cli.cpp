#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "oseen/oseen.hpp"

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path &dir, const std::string &name) {
  std::ofstream out(dir / name);
  if (!out)
    throw std::runtime_error("cannot write " + (dir / name).string());
  return out;
}

int run_solve(const oseen::RunConfig &cfg, bool quiet) {
  using namespace oseen;
  if (cfg.out_dir)
    fs::create_directories(*cfg.out_dir);
  const auto start = std::chrono::steady_clock::now();

  if (cfg.mode == RunMode::Uniform) {
    ConvergenceResult res;
    try {
      res = run_convergence(cfg, [&](const ErrorRow &r) {
        if (!quiet)
          std::cerr << "level done: nt = " << r.nt << '\n';
      });
    } catch (const SolverError &e) {
      std::cerr << "solver failure: " << e.what() << '\n';
      return 2;
    }
    for (const std::string &w : res.warnings)
      std::cerr << "warning: " << w << '\n';
    emit(std::cout, res, TableFormat::Aligned);
    if (cfg.out_dir) {
      auto errors = open_output(*cfg.out_dir, "errors.csv");
      emit(errors, res, TableFormat::Csv);
      if (res.orders) {
        auto orders = open_output(*cfg.out_dir, "orders.csv");
        emit_orders(orders, res, TableFormat::Csv);
      }
      if (res.has_errors) {
        auto diag = open_output(*cfg.out_dir, "diagnostics.csv");
        emit_diagnostics(diag, res);
      }
      save_mesh((*cfg.out_dir / "mesh_final.txt").string(), *res.final_mesh);
    }
  } else {
    const AdaptiveHistory h = run_adaptive(cfg, [&](const AdaptiveRecord &r) {
      if (!quiet)
        std::cerr << "iteration " << r.iter << ": nt = " << r.nt << ", estimator = " << format_sci(r.estimator)
                  << '\n';
    });
    emit(std::cout, h, TableFormat::Aligned);
    if (cfg.out_dir) {
      auto hist = open_output(*cfg.out_dir, "history.csv");
      emit(hist, h, TableFormat::Csv);
      save_mesh((*cfg.out_dir / "mesh_final.txt").string(), *h.final_mesh);
    }
  }
  if (!quiet) {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    std::cerr << "elapsed " << dt.count() << " s\n";
  }
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Pseudostress-velocity mixed finite elements for the Oseen equation"};
  app.require_subcommand(1);

  oseen::RunConfig cfg;
  std::string problem = "p1", element = "rt0", mode = "uniform", mesh_file, out_dir;
  double theta = 0.0;
  int max_iters = -1;
  bool quiet = false;

  auto *solve = app.add_subcommand("solve", "Run a uniform convergence study or an adaptive loop");
  solve->add_option("--problem", problem, "Benchmark problem")->check(CLI::IsMember({"p1", "p2", "p3"}));
  solve->add_option("--element", element, "H(div) element")->check(CLI::IsMember({"rt0", "bdm1"}));
  solve->add_option("--mode", mode, "Refinement mode")->check(CLI::IsMember({"uniform", "adaptive"}));
  solve->add_option("--levels", cfg.levels, "Number of meshes in a uniform study")->check(CLI::Range(1, 12));
  solve->add_option("--theta", theta, "Maximum marking parameter (default 0.7 for p2, 0.3 otherwise)")
      ->check(CLI::Range(0.0, 1.0));
  solve->add_option("--max-iters", max_iters, "Refinement steps in adaptive mode")->check(CLI::NonNegativeNumber);
  solve->add_option("--max-dofs", cfg.max_dofs, "Stop the adaptive loop at this many unknowns");
  solve->add_option("--mesh", mesh_file, "Initial mesh file instead of the built-in one")->check(CLI::ExistingFile);
  solve->add_option("--out", out_dir, "Directory for CSV output and the final mesh");
  solve->add_flag("--quiet", quiet, "No progress output");

  int refinements = 0;
  std::string mesh_out;
  auto *mesh_cmd = app.add_subcommand("mesh", "Write a built-in initial mesh, optionally refined uniformly");
  mesh_cmd->add_option("--problem", problem, "Benchmark problem")->check(CLI::IsMember({"p1", "p2", "p3"}));
  mesh_cmd->add_option("--refine", refinements, "Uniform refinements")->check(CLI::Range(0, 10));
  mesh_cmd->add_option("--out", mesh_out, "Output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (mesh_cmd->parsed()) {
      oseen::Mesh m = oseen::initial_mesh(problem);
      for (int i = 0; i < refinements; ++i)
        m = oseen::uniform_quad_refine(m);
      oseen::save_mesh(mesh_out, m);
      return 0;
    }
    cfg.problem = problem;
    cfg.element = element == "bdm1" ? oseen::ElementKind::BDM1 : oseen::ElementKind::RT0;
    cfg.mode = mode == "adaptive" ? oseen::RunMode::Adaptive : oseen::RunMode::Uniform;
    if (cfg.mode == oseen::RunMode::Adaptive && cfg.element != oseen::ElementKind::RT0) {
      std::cerr << "note: adaptive mode uses rt0; --element ignored\n";
      cfg.element = oseen::ElementKind::RT0;
    }
    if (solve->count("--theta"))
      cfg.theta = theta;
    if (max_iters >= 0)
      cfg.max_iters = max_iters;
    if (!mesh_file.empty())
      cfg.mesh_file = mesh_file;
    if (!out_dir.empty())
      cfg.out_dir = fs::path(out_dir);
    return run_solve(cfg, quiet);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
