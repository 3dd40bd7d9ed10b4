// Includes every public header and exercises one tiny end-to-end solve.

#include <catch2/catch_amalgamated.hpp>

#include "dpgamg/amg.hpp"
#include "dpgamg/assemble.hpp"
#include "dpgamg/csr.hpp"
#include "dpgamg/dense_eig.hpp"
#include "dpgamg/fespace.hpp"
#include "dpgamg/io.hpp"
#include "dpgamg/mesh.hpp"
#include "dpgamg/precond.hpp"
#include "dpgamg/quadrature.hpp"
#include "dpgamg/rng.hpp"
#include "dpgamg/runner.hpp"
#include "dpgamg/schur.hpp"
#include "dpgamg/solver.hpp"
#include "dpgamg/verify.hpp"

using namespace dpgamg;

TEST_CASE("tiny end-to-end solve") {
  RunConfig cfg;
  cfg.mesh = "cartesian:2,2,quad";
  cfg.refine = 1;
  RunReport rep = run(cfg);
  REQUIRE(rep.rows.size() == 2);
  REQUIRE(rep.all_converged());
}
