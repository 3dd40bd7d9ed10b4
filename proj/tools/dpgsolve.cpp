// Command line front end for the DPG solver studies.
//
// Exit codes: 0 when every solve row converged, 2 when any row failed to
// converge, 1 on configuration errors.

#include <exception>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "dpgamg/runner.hpp"

int main(int argc, char** argv) {
  dpgamg::RunConfig cfg;

  CLI::App app{"DPG Poisson solver with algebraic block preconditioning"};
  app.add_option("--mesh", cfg.mesh, "cartesian:NX,NY,tri|quad or file:PATH");
  app.add_option("--refine", cfg.refine, "number of uniform refinements");
  app.add_option("--order", cfg.p, "trial order p (1, 2, or 3)");
  app.add_option("--test-order", cfg.r, "test order r (default p+1)");
  double kappa0 = 0.0;
  auto* copt = app.add_option("--contrast", kappa0,
                              "random per-element coefficient: kappa0 with "
                              "probability 1/2, else 1");
  auto* sopt = app.add_option("--seed", cfg.seed, "RNG seed for coefficient draws");
  app.add_option("--rtol", cfg.rtol, "PCG relative tolerance");
  app.add_option("--maxit", cfg.maxit, "PCG iteration limit");
  app.add_option("--precond", cfg.precond, "ideal | practical | none");
  app.add_option("--study", cfg.study,
                 "solve | h_p_table | reduced_order | contrast | verify_suite");
  app.add_option("--out-json", cfg.out_json, "write the report as JSON to this path");
  app.add_option("--export-matrices", cfg.export_dir,
                 "write assembled operators as MatrixMarket files into this directory");
  app.add_flag("--zero-rhs", cfg.zero_rhs, "solve with f = 0 (smoke test)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (copt->count() > 0) {
    cfg.contrast = true;
    cfg.kappa0 = kappa0;
  }
  cfg.seed_set = sopt->count() > 0;

  try {
    dpgamg::RunReport report = dpgamg::run(cfg);
    std::cout << dpgamg::report_table(report);
    if (!cfg.out_json.empty()) {
      std::ofstream out(cfg.out_json);
      if (!out) throw std::runtime_error("cannot open " + cfg.out_json);
      out << dpgamg::report_json(report).dump(2) << "\n";
    }
    return report.all_converged() ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
