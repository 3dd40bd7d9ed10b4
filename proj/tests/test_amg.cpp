#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dpgamg/amg.hpp"
#include "dpgamg/csr.hpp"
#include "dpgamg/rng.hpp"
#include "dpgamg/solver.hpp"

using namespace dpgamg;
using Catch::Matchers::WithinAbs;

namespace {

CsrMatrix laplacian_1d(int n) {
  CooBuilder b(n, n);
  for (int i = 0; i < n; ++i) {
    b.add(i, i, 2.0);
    if (i > 0) b.add(i, i - 1, -1.0);
    if (i + 1 < n) b.add(i, i + 1, -1.0);
  }
  return b.assemble();
}

CsrMatrix laplacian_2d(int n) {
  CooBuilder b(n * n, n * n);
  auto id = [n](int i, int j) { return j * n + i; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      b.add(id(i, j), id(i, j), 4.0);
      if (i > 0) b.add(id(i, j), id(i - 1, j), -1.0);
      if (i + 1 < n) b.add(id(i, j), id(i + 1, j), -1.0);
      if (j > 0) b.add(id(i, j), id(i, j - 1), -1.0);
      if (j + 1 < n) b.add(id(i, j), id(i, j + 1), -1.0);
    }
  return b.assemble();
}

// two interleaved copies of the 1D laplacian with different scales
CsrMatrix vector_laplacian_1d(int n) {
  CooBuilder b(2 * n, 2 * n);
  for (int c = 0; c < 2; ++c) {
    const double s = c == 0 ? 1.0 : 10.0;
    for (int i = 0; i < n; ++i) {
      b.add(2 * i + c, 2 * i + c, 2.0 * s);
      if (i > 0) b.add(2 * i + c, 2 * (i - 1) + c, -1.0 * s);
      if (i + 1 < n) b.add(2 * i + c, 2 * (i + 1) + c, -1.0 * s);
    }
  }
  return b.assemble();
}

int pcg_iters(const CsrMatrix& A, const AmgHierarchy& h, unsigned seed) {
  Rng rng(seed);
  std::vector<double> b(A.nrows);
  for (double& v : b) v = rng.sym();
  LinearOperator aop = make_operator(A);
  LinearOperator bop = make_amg_operator(h);
  PcgResult res = pcg(aop, &bop, b, 1e-8, 200);
  REQUIRE(res.report.converged);
  return res.report.iterations;
}

}  // namespace

TEST_CASE("single level hierarchy inverts the matrix exactly") {
  CsrMatrix A = laplacian_1d(10);
  AmgParams params;
  params.coarse_size = 16;
  AmgHierarchy h = amg_setup(A, params);
  REQUIRE(h.num_levels() == 1);

  Rng rng(5);
  std::vector<double> r(10);
  for (double& v : r) v = rng.sym();
  std::vector<double> x = amg_vcycle(h, r);
  std::vector<double> Ax = A.mult(x);
  for (int i = 0; i < 10; ++i) REQUIRE_THAT(Ax[i], WithinAbs(r[i], 1e-12));
}

TEST_CASE("singular coarse solve is a pseudo-inverse") {
  // pure Neumann path graph: nullspace is the constant vector
  const int n = 20;
  CooBuilder b(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    b.add(i, i, 1.0);
    b.add(i + 1, i + 1, 1.0);
    b.add(i, i + 1, -1.0);
    b.add(i + 1, i, -1.0);
  }
  CsrMatrix A = b.assemble();
  AmgParams params;
  params.coarse_size = 32;
  AmgHierarchy h = amg_setup(A, params);
  REQUIRE(h.num_levels() == 1);

  Rng rng(7);
  std::vector<double> r(n);
  double mean = 0.0;
  for (double& v : r) mean += (v = rng.sym());
  mean /= n;
  for (double& v : r) v -= mean;

  std::vector<double> x = amg_vcycle(h, r);
  std::vector<double> Ax = A.mult(x);
  double xsum = 0.0;
  for (int i = 0; i < n; ++i) {
    REQUIRE_THAT(Ax[i], WithinAbs(r[i], 1e-11));
    xsum += x[i];
  }
  REQUIRE_THAT(xsum, WithinAbs(0.0, 1e-11));
}

TEST_CASE("hierarchy coarsens the 1d laplacian") {
  CsrMatrix A = laplacian_1d(200);
  AmgParams params;
  params.coarse_size = 8;
  AmgHierarchy h = amg_setup(A, params);
  REQUIRE(h.num_levels() >= 3);
  REQUIRE(h.levels.back().A.nrows <= 8);
  REQUIRE(h.finest_size() == 200);
  REQUIRE(pcg_iters(A, h, 11) <= 15);
}

TEST_CASE("five point laplacian: complexity and h-independence") {
  CsrMatrix A32 = laplacian_2d(32);
  AmgParams params;
  params.coarse_size = 20;
  AmgHierarchy h32 = amg_setup(A32, params);
  REQUIRE(h32.num_levels() >= 3);
  REQUIRE(h32.operator_complexity() < 3.0);
  REQUIRE(h32.grid_complexity() < 2.2);

  int iters16 = 0, iters32 = 0, iters64 = 0;
  {
    CsrMatrix A = laplacian_2d(16);
    AmgHierarchy h = amg_setup(A, params);
    iters16 = pcg_iters(A, h, 21);
  }
  iters32 = pcg_iters(A32, h32, 22);
  {
    CsrMatrix A = laplacian_2d(64);
    AmgHierarchy h = amg_setup(A, params);
    iters64 = pcg_iters(A, h, 23);
  }
  REQUIRE(iters16 <= 25);
  REQUIRE(iters32 <= 25);
  REQUIRE(iters64 <= 25);
  REQUIRE(iters64 <= iters16 + 4);
}

TEST_CASE("v-cycle acts as a symmetric positive definite operator") {
  CsrMatrix A = laplacian_2d(12);
  AmgHierarchy h = amg_setup(A);
  Rng rng(13);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> u(A.nrows), v(A.nrows);
    for (double& x : u) x = rng.sym();
    for (double& x : v) x = rng.sym();
    std::vector<double> Bu = amg_vcycle(h, u);
    std::vector<double> Bv = amg_vcycle(h, v);
    const double uBv = vec_dot(u, Bv);
    const double vBu = vec_dot(v, Bu);
    const double scale = std::max(std::abs(uBv), std::abs(vBu));
    REQUIRE_THAT(uBv - vBu, WithinAbs(0.0, 1e-12 * std::max(1.0, scale)));
    REQUIRE(vec_dot(u, Bu) > 0.0);
  }
}

TEST_CASE("interleaved components coarsen independently") {
  const int n = 150;
  CsrMatrix A = vector_laplacian_1d(n);
  AmgParams params;
  params.coarse_size = 8;
  params.components = 2;
  AmgHierarchy h = amg_setup(A, params);
  REQUIRE(h.num_levels() >= 3);
  REQUIRE(pcg_iters(A, h, 31) <= 20);

  // the same labels given explicitly must behave identically
  AmgParams lparams;
  lparams.coarse_size = 8;
  std::vector<int> labels(2 * n);
  for (int i = 0; i < 2 * n; ++i) labels[i] = i % 2;
  lparams.components_of = labels;
  AmgHierarchy hl = amg_setup(A, lparams);
  REQUIRE(hl.num_levels() == h.num_levels());
  Rng rng(33);
  std::vector<double> r(2 * n);
  for (double& v : r) v = rng.sym();
  std::vector<double> x1 = amg_vcycle(h, r);
  std::vector<double> x2 = amg_vcycle(hl, r);
  for (int i = 0; i < 2 * n; ++i) REQUIRE_THAT(x1[i], WithinAbs(x2[i], 1e-14));
}

TEST_CASE("setup rejects malformed input") {
  CooBuilder rect(3, 4);
  rect.add(0, 0, 1.0);
  REQUIRE_THROWS_WITH(amg_setup(rect.assemble()), "amg_setup: matrix not square");

  CsrMatrix A = laplacian_1d(9);
  AmgParams params;
  params.components = 2;
  REQUIRE_THROWS_WITH(amg_setup(A, params), "amg_setup: row count not a multiple of components");

  AmgParams lparams;
  lparams.components_of = {0, 1};
  REQUIRE_THROWS_WITH(amg_setup(A, lparams),
                      "amg_setup: component label count does not match rows");

  CooBuilder pat(3, 3);
  pat.add(0, 0, 2.0);
  pat.add(1, 1, 2.0);
  pat.add(2, 2, 2.0);
  pat.add(0, 1, -1.0);
  REQUIRE_THROWS_WITH(amg_setup(pat.assemble()), "amg_setup: matrix pattern not symmetric");

  CooBuilder val(2, 2);
  val.add(0, 0, 2.0);
  val.add(1, 1, 2.0);
  val.add(0, 1, -1.0);
  val.add(1, 0, -0.5);
  REQUIRE_THROWS_WITH(amg_setup(val.assemble()), "amg_setup: matrix not symmetric");

  CooBuilder neg(2, 2);
  neg.add(0, 0, -2.0);
  neg.add(1, 1, 2.0);
  REQUIRE_THROWS_WITH(amg_setup(neg.assemble()), "amg_setup: nonpositive diagonal entry");

  AmgHierarchy h = amg_setup(laplacian_1d(10));
  std::vector<double> wrong(7, 1.0);
  REQUIRE_THROWS_WITH(amg_vcycle(h, wrong), "amg_vcycle: size mismatch");
}
