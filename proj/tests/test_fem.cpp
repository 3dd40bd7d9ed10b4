#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "dpgamg/assemble.hpp"
#include "dpgamg/fespace.hpp"
#include "dpgamg/mesh.hpp"
#include "dpgamg/precond.hpp"
#include "dpgamg/quadrature.hpp"
#include "dpgamg/rng.hpp"
#include "dpgamg/solver.hpp"

using namespace dpgamg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Mesh sample_tri_mesh() {
  const std::string root = DPGAMG_SOURCE_DIR;
  return load_mesh(root + "/data/unstructured_tri.mesh");
}

// Nodal interpolation coefficients of a continuous scalar field.
std::vector<double> interpolate(const FeSpace& sp, const ScalarField& f) {
  const Mesh& m = *sp.mesh;
  const auto& ref = NodalRefElement::get(m.kind, sp.degree);
  std::vector<double> c(sp.ndofs, 0.0);
  for (int e = 0; e < m.num_elements(); ++e) {
    ElemGeom geom(m, e);
    for (int l = 0; l < ref.nnodes(); ++l)
      c[sp.elem_dofs[e][l].index] = f(geom.map(ref.nodes()[l]));
  }
  return c;
}

}  // namespace

TEST_CASE("nodal reference elements") {
  Rng rng(31);
  for (ElemKind kind : {ElemKind::Triangle, ElemKind::Quad}) {
    for (int p = 1; p <= 6; ++p) {
      const auto& ref = NodalRefElement::get(kind, p);
      const int n = ref.nnodes();
      std::vector<double> vals(n);
      std::vector<Vec2> grads(n);
      // the monomial Vandermonde solve loses digits at the top degrees
      const double tol = p <= 4 ? 1e-9 : 1e-7;

      // shape i equals one at node i and zero at the others
      for (int q = 0; q < n; ++q) {
        ref.eval(ref.nodes()[q], vals.data());
        for (int i = 0; i < n; ++i) REQUIRE_THAT(vals[i], WithinAbs(i == q ? 1.0 : 0.0, tol));
      }

      // partition of unity, and gradients summing to zero
      for (int trial = 0; trial < 5; ++trial) {
        double rx = rng.uniform(), ry = rng.uniform();
        if (kind == ElemKind::Triangle && rx + ry > 1.0) {
          rx = 1.0 - rx;
          ry = 1.0 - ry;
        }
        ref.eval({rx, ry}, vals.data());
        ref.eval_grad({rx, ry}, grads.data());
        double s = 0.0;
        Vec2 g{0.0, 0.0};
        for (int i = 0; i < n; ++i) {
          s += vals[i];
          g = g + grads[i];
        }
        REQUIRE_THAT(s, WithinAbs(1.0, 10 * tol));
        REQUIRE_THAT(norm(g), WithinAbs(0.0, 10 * tol));
      }
    }
  }
  REQUIRE_THROWS_AS(NodalRefElement(ElemKind::Quad, 7), std::invalid_argument);
}

TEST_CASE("facet trace basis is orthonormal") {
  for (double len : {1.0, 0.37}) {
    auto rule = edge_rule(12);
    for (int i = 0; i <= 3; ++i)
      for (int j = 0; j <= 3; ++j) {
        double s = 0.0;
        for (const auto& qp : rule)
          s += qp.w * len * facet_basis(i, qp.s, len) * facet_basis(j, qp.s, len);
        REQUIRE_THAT(s, WithinAbs(i == j ? 1.0 : 0.0, 1e-13));
      }
  }
}

TEST_CASE("space sizes and dof classes") {
  Mesh m = build_cartesian_mesh(4, 3, ElemKind::Quad);
  const int V = m.num_vertices(), E = m.num_facets(), F = m.num_elements();

  FeSpace u2 = build_space(m, Family::Lagrange, 2);
  REQUIRE(u2.ndofs == V + E + F);
  REQUIRE(u2.count_of(DofClass::Interior) == F);

  FeSpace y3 = build_space(m, Family::BrokenLagrange, 3);
  REQUIRE(y3.ndofs == F * 16);

  FeSpace rt1 = build_space(m, Family::RaviartThomas, 1);
  REQUIRE(rt1.ndofs == E * 2 + F * 4);
  REQUIRE(rt1.count_of(DofClass::Interface) == E * 2);

  FeSpace q0 = build_space(m, Family::FacetTrace, 0);
  REQUIRE(q0.ndofs == E);
  REQUIRE(q0.count_of(DofClass::Interior) == 0);

  FeSpace u3 = build_space(m, Family::Lagrange, 3);
  REQUIRE((int)boundary_dofs(u3).size() == 2 * (4 + 3) + 2 * (4 + 3) * 2);

  REQUIRE_THROWS_AS(build_space(m, Family::Lagrange, 5), std::invalid_argument);
  REQUIRE_THROWS_AS(build_space(m, Family::RaviartThomas, 4), std::invalid_argument);
}

TEST_CASE("shared edge dofs resolve to one physical point") {
  for (ElemKind kind : {ElemKind::Triangle, ElemKind::Quad}) {
    Mesh m = build_cartesian_mesh(3, 2, kind);
    FeSpace sp = build_space(m, Family::Lagrange, 3);
    const auto& ref = NodalRefElement::get(kind, 3);
    std::map<int, Vec2> seen;
    for (int e = 0; e < m.num_elements(); ++e) {
      ElemGeom geom(m, e);
      for (int l = 0; l < ref.nnodes(); ++l) {
        const Vec2 x = geom.map(ref.nodes()[l]);
        const int g = sp.elem_dofs[e][l].index;
        auto [it, fresh] = seen.emplace(g, x);
        if (!fresh) {
          REQUIRE_THAT(x.x, WithinAbs(it->second.x, 1e-13));
          REQUIRE_THAT(x.y, WithinAbs(it->second.y, 1e-13));
        }
      }
    }
    REQUIRE((int)seen.size() == sp.ndofs);
  }
}

TEST_CASE("lowest order H(div) gram on the unit square") {
  Mesh m = build_cartesian_mesh(1, 1, ElemKind::Quad);
  FeSpace rt = build_space(m, Family::RaviartThomas, 0);
  CsrMatrix D = assemble_hdiv_gram(rt);
  REQUIRE(D.nrows == 4);

  auto share_vertex = [&](int f, int g) {
    for (int a : m.facets[f])
      for (int b : m.facets[g])
        if (a == b) return true;
    return false;
  };
  for (int f = 0; f < 4; ++f)
    for (int g = 0; g < 4; ++g) {
      const double want = f == g ? 4.0 / 3.0 : (share_vertex(f, g) ? 1.0 : 5.0 / 6.0);
      REQUIRE_THAT(D(f, g), WithinRel(want, 1e-12));
    }
}

TEST_CASE("raviart-thomas basis is dual to its dof functionals") {
  Mesh tri = sample_tri_mesh();
  Mesh quad = build_cartesian_mesh(3, 2, ElemKind::Quad);
  for (const Mesh* mp : {&tri, &quad}) {
    const Mesh& m = *mp;
    for (int k = 0; k <= 2; ++k) {
      const int e = m.num_elements() / 2;
      RtDofSet dofs(m, k, e, 2 * k + 4);
      RtElementBasis basis(m, k, e);
      const int n = basis.nloc();
      std::vector<Vec2> vals(n);
      std::vector<double> divs(n);
      for (int j = 0; j < n; ++j) {
        auto field = [&](Vec2 r, Vec2) {
          basis.eval(r, vals.data(), divs.data());
          return vals[j];
        };
        std::vector<double> out = dofs.apply(field);
        for (int i = 0; i < n; ++i)
          REQUIRE_THAT(out[i], WithinAbs(i == j ? 1.0 : 0.0, 1e-9));
      }
    }
  }
}

TEST_CASE("interpolation matrix reproduces polynomial vector fields") {
  Mesh tri = sample_tri_mesh();
  Mesh quad = build_cartesian_mesh(4, 3, ElemKind::Quad);
  Rng rng(8);
  for (const Mesh* mp : {&tri, &quad}) {
    const Mesh& m = *mp;
    for (int k = 0; k <= 1; ++k) {
      FeSpace rt = build_space(m, Family::RaviartThomas, k);
      FeSpace lag = build_space(m, Family::Lagrange, k + 1);
      CsrMatrix Pi = assemble_pi(lag, rt);
      REQUIRE(Pi.nrows == rt.ndofs);
      REQUIRE(Pi.ncols == 2 * lag.ndofs);

      // component fields of total degree <= k lie in RT_k, so nodal
      // interpolation followed by Pi and the RT basis must return them
      auto fx = [k](Vec2 x) { return k == 0 ? 0.75 : 0.3 + 1.2 * x.x - 0.7 * x.y; };
      auto fy = [k](Vec2 x) { return k == 0 ? -0.4 : -0.1 + 0.5 * x.x + 0.9 * x.y; };
      std::vector<double> cx = interpolate(lag, fx);
      std::vector<double> cy = interpolate(lag, fy);
      std::vector<double> w(2 * lag.ndofs);
      for (int s = 0; s < lag.ndofs; ++s) {
        w[2 * s] = cx[s];
        w[2 * s + 1] = cy[s];
      }
      std::vector<double> c = Pi.mult(w);

      for (int e = 0; e < m.num_elements(); e += 7) {
        RtElementBasis basis(m, k, e);
        ElemGeom geom(m, e);
        const int n = basis.nloc();
        std::vector<Vec2> vals(n);
        std::vector<double> divs(n);
        for (int t = 0; t < 3; ++t) {
          double rx = rng.uniform(), ry = rng.uniform();
          if (m.kind == ElemKind::Triangle && rx + ry > 1.0) {
            rx = 1.0 - rx;
            ry = 1.0 - ry;
          }
          basis.eval({rx, ry}, vals.data(), divs.data());
          Vec2 got{0.0, 0.0};
          for (int i = 0; i < n; ++i) got = got + c[rt.elem_dofs[e][i].index] * vals[i];
          const Vec2 x = geom.map({rx, ry});
          REQUIRE_THAT(got.x, WithinAbs(fx(x), 1e-10));
          REQUIRE_THAT(got.y, WithinAbs(fy(x), 1e-10));
        }
      }
    }
  }
}

TEST_CASE("discrete curl produces divergence-free fields") {
  Mesh tri = sample_tri_mesh();
  Mesh quad = build_cartesian_mesh(4, 3, ElemKind::Quad);
  Rng rng(17);
  for (const Mesh* mp : {&tri, &quad}) {
    const Mesh& m = *mp;
    for (int k = 0; k <= 2; ++k) {
      FeSpace rt = build_space(m, Family::RaviartThomas, k);
      FeSpace lag = build_space(m, Family::Lagrange, k + 1);
      CsrMatrix C = assemble_curl(lag, rt);
      std::vector<double> phi(lag.ndofs);
      for (double& v : phi) v = rng.sym();
      std::vector<double> c = C.mult(phi);
      double scale = 0.0;
      for (double v : c) scale = std::max(scale, std::abs(v));

      for (int e = 0; e < m.num_elements(); e += 11) {
        RtElementBasis basis(m, k, e);
        const int n = basis.nloc();
        std::vector<Vec2> vals(n);
        std::vector<double> divs(n);
        for (int t = 0; t < 3; ++t) {
          double rx = rng.uniform(), ry = rng.uniform();
          if (m.kind == ElemKind::Triangle && rx + ry > 1.0) {
            rx = 1.0 - rx;
            ry = 1.0 - ry;
          }
          basis.eval({rx, ry}, vals.data(), divs.data());
          double dv = 0.0;
          for (int i = 0; i < n; ++i) dv += c[rt.elem_dofs[e][i].index] * divs[i];
          REQUIRE_THAT(dv, WithinAbs(0.0, 1e-9 * scale));
        }
      }
    }
  }
  Mesh m = build_cartesian_mesh(2, 2, ElemKind::Quad);
  REQUIRE_THROWS_AS(assemble_curl(build_space(m, Family::Lagrange, 3),
                                  build_space(m, Family::RaviartThomas, 1)),
                    std::invalid_argument);
}

TEST_CASE("interpolation and curl have empty interface-to-interior blocks") {
  Mesh quad = build_cartesian_mesh(3, 3, ElemKind::Quad);
  Mesh tri = build_cartesian_mesh(3, 3, ElemKind::Triangle);
  const std::vector<std::pair<const Mesh*, int>> cases = {{&quad, 1}, {&tri, 2}};
  for (auto [mp, k] : cases) {
    FeSpace rt = build_space(*mp, Family::RaviartThomas, k);
    FeSpace lag = build_space(*mp, Family::Lagrange, k + 1);
    CsrMatrix Pi = assemble_pi(lag, rt);
    CsrMatrix C = assemble_curl(lag, rt);

    std::vector<int> rt_f = rt.dofs_of(DofClass::Interface);
    std::vector<int> lag_i = lag.dofs_of(DofClass::Interior);
    REQUIRE_FALSE(lag_i.empty());
    std::vector<int> lag_i_vec;
    for (int s : lag_i) {
      lag_i_vec.push_back(2 * s);
      lag_i_vec.push_back(2 * s + 1);
    }
    REQUIRE(csr_extract(Pi, rt_f, lag_i_vec).nnz() == 0);
    REQUIRE(csr_extract(C, rt_f, lag_i).nnz() == 0);
  }
}

TEST_CASE("dpg energy identity and explicit assembly") {
  Mesh m = build_cartesian_mesh(3, 3, ElemKind::Triangle);
  DpgSystem sys = assemble_dpg(m, 2, 3);
  Rng rng(64);

  CsrMatrix A = assemble_explicit(sys, DpgBlock::A);
  REQUIRE(csr_is_symmetric(A, 1e-14));
  CsrMatrix A0 = assemble_explicit(sys, DpgBlock::A0);
  CsrMatrix A1 = assemble_explicit(sys, DpgBlock::A1);
  REQUIRE(A0.nrows == sys.nu());
  REQUIRE(A1.nrows == sys.nq());

  for (int t = 0; t < 10; ++t) {
    std::vector<double> x(sys.ndofs());
    for (double& v : x) v = rng.sym();

    // energy identity: (A x, x) equals the M norm of M^{-1} B x
    std::vector<double> Ax = sys.apply_A(x);
    const double axx = vec_dot(x, Ax);
    const double mnorm = sys.m_norm2(sys.solve_M(sys.apply_B(x)));
    REQUIRE_THAT(axx, WithinRel(mnorm, 1e-12));

    // operator application matches the explicit matrix
    std::vector<double> Ax2 = A.mult(x);
    for (int i = 0; i < sys.ndofs(); ++i) REQUIRE_THAT(Ax[i], WithinAbs(Ax2[i], 1e-11));
  }

  // principal blocks agree with the block operators
  std::vector<double> xu(sys.nu()), xq(sys.nq());
  for (double& v : xu) v = rng.sym();
  for (double& v : xq) v = rng.sym();
  std::vector<double> a0x = sys.op_A0().apply(xu);
  std::vector<double> a0x2 = A0.mult(xu);
  for (int i = 0; i < sys.nu(); ++i) REQUIRE_THAT(a0x[i], WithinAbs(a0x2[i], 1e-11));
  std::vector<double> a1x = sys.op_A1().apply(xq);
  std::vector<double> a1x2 = A1.mult(xq);
  for (int i = 0; i < sys.nq(); ++i) REQUIRE_THAT(a1x[i], WithinAbs(a1x2[i], 1e-11));

  REQUIRE_THROWS_AS(assemble_dpg(m, 2, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(assemble_dpg(m, 1, 2, std::vector<double>(3, 1.0)), std::invalid_argument);
  REQUIRE_THROWS_AS(assemble_dpg(m, 1, 2, std::vector<double>(m.num_elements(), -1.0)),
                    std::invalid_argument);
}

TEST_CASE("manufactured solution converges at the expected rate") {
  auto exact = [](Vec2 x) { return std::sin(M_PI * x.x) * std::sin(M_PI * x.y); };
  auto exact_grad = [](Vec2 x) {
    return Vec2{M_PI * std::cos(M_PI * x.x) * std::sin(M_PI * x.y),
                M_PI * std::sin(M_PI * x.x) * std::cos(M_PI * x.y)};
  };
  ScalarField f = [](Vec2 x) {
    return 2.0 * M_PI * M_PI * std::sin(M_PI * x.x) * std::sin(M_PI * x.y);
  };

  auto solve_error = [&](const Mesh& m, int p) {
    DpgSystem sys = assemble_dpg(m, p, p + 1, {}, f);
    DpgPrecond prec = build_dpg_precond(sys, PrecondVariant::Practical);
    LinearOperator bop = prec.op();
    PcgResult res = pcg(sys.op_A(), &bop, sys.g, 1e-10, 400);
    REQUIRE(res.report.converged);
    return h1_error(sys.U, sys.expand_u(res.x), exact, exact_grad);
  };

  SECTION("p = 1 on quads") {
    Mesh m8 = build_cartesian_mesh(8, 8, ElemKind::Quad);
    Mesh m16 = build_cartesian_mesh(16, 16, ElemKind::Quad);
    const double rate = std::log2(solve_error(m8, 1) / solve_error(m16, 1));
    REQUIRE(rate > 0.85);
    REQUIRE(rate < 1.15);
  }
  SECTION("p = 2 on triangles") {
    Mesh m4 = build_cartesian_mesh(4, 4, ElemKind::Triangle);
    Mesh m8 = build_cartesian_mesh(8, 8, ElemKind::Triangle);
    const double rate = std::log2(solve_error(m4, 2) / solve_error(m8, 2));
    REQUIRE(rate > 1.8);
    REQUIRE(rate < 2.25);
  }
}
