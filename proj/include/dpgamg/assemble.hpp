#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dpgamg/csr.hpp"
#include "dpgamg/fespace.hpp"
#include "dpgamg/mesh.hpp"
#include "dpgamg/quadrature.hpp"
#include "dpgamg/solver.hpp"

namespace dpgamg {

using ScalarField = std::function<double(Vec2)>;

namespace detail {

inline std::vector<QuadPoint2d> volume_rule(ElemKind kind, int degree) {
  return kind == ElemKind::Triangle ? triangle_rule(degree) : quad_rule(degree);
}

}  // namespace detail

/// The assembled primal DPG system on one mesh:
///   B0 (test x trial), B1 (test x flux), block-diagonal test Gram M
///   (stored as per-element Cholesky factors), load F, and the reduced
///   right-hand side g = B^T M^{-1} F on free-trial + flux unknowns.
/// The solver-facing operator is A = B^T M^{-1} B with the Dirichlet
/// columns of B0 removed.
struct DpgSystem {
  const Mesh* mesh = nullptr;
  int p = 1, r = 2;
  FeSpace U;  // continuous trial space, degree p
  FeSpace Q;  // facet trace space, degree p-1
  FeSpace Y;  // broken test space, degree r
  std::vector<double> kappa;  // per element

  CsrMatrix B0;  // Y.ndofs x U.ndofs (all trial columns, bc handled via u_free)
  CsrMatrix B1;  // Y.ndofs x Q.ndofs (facet-trace signs folded in)
  std::vector<Eigen::LLT<Eigen::MatrixXd>> M_blocks;
  std::vector<double> F;  // load vector on Y

  std::vector<int> bc;  // eliminated Dirichlet DOFs of U
  DofSubset u_free;
  std::vector<double> g;  // reduced rhs, length ndofs()

  int nu() const { return u_free.size(); }
  int nq() const { return Q.ndofs; }
  int ndofs() const { return nu() + nq(); }
  int y_block_size() const { return Y.ndofs / mesh->num_elements(); }

  /// w = B [u; q] with u given on free DOFs.
  std::vector<double> apply_B(const std::vector<double>& x) const {
    std::vector<double> ufull(U.ndofs, 0.0);
    for (int i = 0; i < nu(); ++i) ufull[u_free.sub_to_full[i]] = x[i];
    std::vector<double> w(Y.ndofs, 0.0);
    B0.mult(ufull.data(), w.data());
    std::vector<double> w1(Y.ndofs);
    B1.mult(x.data() + nu(), w1.data());
    for (int i = 0; i < Y.ndofs; ++i) w[i] += w1[i];
    return w;
  }

  /// x = B^T w restricted to free-trial + flux rows.
  std::vector<double> apply_Bt(const std::vector<double>& w) const {
    std::vector<double> ufull(U.ndofs, 0.0);
    B0.mult_t_add(w.data(), ufull.data());
    std::vector<double> x(ndofs(), 0.0);
    for (int i = 0; i < nu(); ++i) x[i] = ufull[u_free.sub_to_full[i]];
    std::vector<double> xq = B1.mult_t(w);
    std::copy(xq.begin(), xq.end(), x.begin() + nu());
    return x;
  }

  /// Block solves v = M^{-1} w.
  std::vector<double> solve_M(const std::vector<double>& w) const {
    int nb = y_block_size();
    std::vector<double> v(w);
    for (size_t e = 0; e < M_blocks.size(); ++e) {
      Eigen::Map<Eigen::VectorXd> seg(v.data() + e * nb, nb);
      seg = M_blocks[e].solve(seg.eval());
    }
    return v;
  }

  /// (M v, v), evaluated through the stored factors.
  double m_norm2(const std::vector<double>& v) const {
    int nb = y_block_size();
    double s = 0.0;
    for (size_t e = 0; e < M_blocks.size(); ++e) {
      Eigen::Map<const Eigen::VectorXd> seg(v.data() + e * nb, nb);
      s += (M_blocks[e].matrixU() * seg).squaredNorm();
    }
    return s;
  }

  std::vector<double> apply_A(const std::vector<double>& x) const {
    return apply_Bt(solve_M(apply_B(x)));
  }

  LinearOperator op_A() const {
    return {ndofs(), true, [this](const double* x, double* y) {
              std::vector<double> xin(x, x + ndofs());
              auto out = apply_A(xin);
              std::copy(out.begin(), out.end(), y);
            }};
  }

  /// A0 = B0^T M^{-1} B0 on free trial DOFs.
  LinearOperator op_A0() const {
    return {nu(), true, [this](const double* x, double* y) {
              std::vector<double> xin(ndofs(), 0.0);
              std::copy(x, x + nu(), xin.begin());
              auto out = apply_A(xin);
              std::copy(out.begin(), out.begin() + nu(), y);
            }};
  }

  /// A1 = B1^T M^{-1} B1 on flux DOFs.
  LinearOperator op_A1() const {
    return {nq(), true, [this](const double* x, double* y) {
              std::vector<double> xin(ndofs(), 0.0);
              std::copy(x, x + nq(), xin.begin() + nu());
              auto out = apply_A(xin);
              std::copy(out.begin() + nu(), out.end(), y);
            }};
  }

  /// Expand a solution on free DOFs to all trial DOFs (zeros on the
  /// Dirichlet boundary).
  std::vector<double> expand_u(const std::vector<double>& x) const {
    std::vector<double> ufull(U.ndofs, 0.0);
    for (int i = 0; i < nu(); ++i) ufull[u_free.sub_to_full[i]] = x[i];
    return ufull;
  }
};

/// Assemble the DPG system: B0 from sum_K int_K kappa grad(w).grad(v),
/// B1 from the facet pairings <q, v>_dK with canonical-normal signs, M
/// from the H1(K) inner product on the broken test space, F from f.
inline DpgSystem assemble_dpg(const Mesh& mesh, int p, int r, std::vector<double> kappa = {},
                              ScalarField f = nullptr) {
  if (r < p) throw std::invalid_argument("assemble_dpg: test order r must be >= p");
  if (kappa.empty()) kappa.assign(mesh.num_elements(), 1.0);
  if ((int)kappa.size() != mesh.num_elements())
    throw std::invalid_argument("assemble_dpg: kappa must have one value per element");
  for (double k : kappa)
    if (!(k > 0.0)) throw std::invalid_argument("assemble_dpg: kappa must be positive");

  DpgSystem sys;
  sys.mesh = &mesh;
  sys.p = p;
  sys.r = r;
  sys.kappa = kappa;
  sys.U = build_space(mesh, Family::Lagrange, p);
  sys.Q = build_space(mesh, Family::FacetTrace, p - 1);
  sys.Y = build_space(mesh, Family::BrokenLagrange, r);
  sys.bc = boundary_dofs(sys.U);
  sys.u_free = complement_subset(sys.U.ndofs, sys.bc);

  const auto& refU = NodalRefElement::get(mesh.kind, p);
  const auto& refY = NodalRefElement::get(mesh.kind, r);
  int nU = refU.nnodes(), nY = refY.nnodes();
  int kq = p - 1;  // facet trace degree
  int nv = mesh.verts_per_elem();

  auto vrule = detail::volume_rule(mesh.kind, 2 * r + 2);
  auto erule = edge_rule(2 * r + 2);

  CooBuilder b0(sys.Y.ndofs, sys.U.ndofs);
  CooBuilder b1(sys.Y.ndofs, sys.Q.ndofs);
  sys.M_blocks.resize(mesh.num_elements());
  sys.F.assign(sys.Y.ndofs, 0.0);

  std::vector<double> valsU(nU), valsY(nY);
  std::vector<Vec2> gradU(nU), gradY(nY);

  for (int e = 0; e < mesh.num_elements(); ++e) {
    ElemGeom geom(mesh, e);
    Eigen::MatrixXd B0l = Eigen::MatrixXd::Zero(nY, nU);
    Eigen::MatrixXd B1l = Eigen::MatrixXd::Zero(nY, nv * (kq + 1));
    Eigen::MatrixXd Ml = Eigen::MatrixXd::Zero(nY, nY);
    Eigen::VectorXd Fl = Eigen::VectorXd::Zero(nY);

    for (const auto& qp : vrule) {
      Vec2 rpt = {qp.x, qp.y};
      Mat2 J = geom.jacobian(rpt);
      double jac = J.det();
      double w = qp.w * jac;
      refU.eval_grad(rpt, gradU.data());
      refY.eval(rpt, valsY.data());
      refY.eval_grad(rpt, gradY.data());
      // reference gradients -> physical
      for (int i = 0; i < nU; ++i) gradU[i] = J.solve_t(gradU[i]);
      for (int i = 0; i < nY; ++i) gradY[i] = J.solve_t(gradY[i]);

      for (int i = 0; i < nY; ++i) {
        for (int j = 0; j <= i; ++j) {
          double m = w * (dot(gradY[i], gradY[j]) + valsY[i] * valsY[j]);
          Ml(i, j) += m;
          if (j < i) Ml(j, i) += m;
        }
        for (int j = 0; j < nU; ++j) B0l(i, j) += w * kappa[e] * dot(gradY[i], gradU[j]);
        if (f) Fl(i) += w * f(geom.map(rpt)) * valsY[i];
      }
    }

    for (int le = 0; le < nv; ++le) {
      int fct = mesh.elem_facets[e][le];
      double len = mesh.facet_length[fct];
      for (const auto& qp : erule) {
        Vec2 rpt = facet_ref_point(mesh, e, fct, qp.s);
        refY.eval(rpt, valsY.data());
        double w = qp.w * len;
        for (int j = 0; j <= kq; ++j) {
          double lj = facet_basis(j, qp.s, len);
          for (int i = 0; i < nY; ++i) B1l(i, le * (kq + 1) + j) += w * lj * valsY[i];
        }
      }
    }

    sys.M_blocks[e].compute(Ml);
    if (sys.M_blocks[e].info() != Eigen::Success)
      throw std::runtime_error("assemble_dpg: test Gram block not positive definite");

    const auto& du = sys.U.elem_dofs[e];
    const auto& dq = sys.Q.elem_dofs[e];
    const auto& dy = sys.Y.elem_dofs[e];
    for (int i = 0; i < nY; ++i) {
      for (int j = 0; j < nU; ++j)
        if (B0l(i, j) != 0.0) b0.add(dy[i].index, du[j].index, B0l(i, j));
      for (int j = 0; j < nv * (kq + 1); ++j)
        if (B1l(i, j) != 0.0) b1.add(dy[i].index, dq[j].index, dq[j].sign * B1l(i, j));
      sys.F[dy[i].index] += Fl(i);
    }
  }

  sys.B0 = b0.assemble();
  sys.B1 = b1.assemble();
  sys.g = sys.apply_Bt(sys.solve_M(sys.F));
  return sys;
}

/// H1 Gram of a continuous Lagrange space on its free (non-Dirichlet)
/// DOFs.  Without kappa: full inner product, int grad.grad + u u'.  With
/// kappa: the coefficient-weighted stiffness int kappa grad.grad alone.
inline CsrMatrix assemble_h1_gram(const FeSpace& sp, const std::vector<double>* kappa = nullptr) {
  if (sp.family != Family::Lagrange)
    throw std::invalid_argument("assemble_h1_gram: requires a lagrange space");
  const Mesh& mesh = *sp.mesh;
  if (kappa && (int)kappa->size() != mesh.num_elements())
    throw std::invalid_argument("assemble_h1_gram: kappa must have one value per element");
  DofSubset free = complement_subset(sp.ndofs, boundary_dofs(sp));
  const auto& ref = NodalRefElement::get(mesh.kind, sp.degree);
  int n = ref.nnodes();
  auto vrule = detail::volume_rule(mesh.kind, 2 * sp.degree + 2);

  CooBuilder bld(free.size(), free.size());
  std::vector<double> vals(n);
  std::vector<Vec2> grads(n);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    ElemGeom geom(mesh, e);
    double kap = kappa ? (*kappa)[e] : 1.0;
    Eigen::MatrixXd Gl = Eigen::MatrixXd::Zero(n, n);
    for (const auto& qp : vrule) {
      Vec2 rpt = {qp.x, qp.y};
      Mat2 J = geom.jacobian(rpt);
      double w = qp.w * J.det();
      ref.eval_grad(rpt, grads.data());
      for (int i = 0; i < n; ++i) grads[i] = J.solve_t(grads[i]);
      if (!kappa) ref.eval(rpt, vals.data());
      for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
          double v = w * kap * dot(grads[i], grads[j]);
          if (!kappa) v += w * vals[i] * vals[j];
          Gl(i, j) += v;
          if (j < i) Gl(j, i) += v;
        }
    }
    const auto& dofs = sp.elem_dofs[e];
    for (int i = 0; i < n; ++i) {
      int gi = free.full_to_sub[dofs[i].index];
      if (gi < 0) continue;
      for (int j = 0; j < n; ++j) {
        int gj = free.full_to_sub[dofs[j].index];
        if (gj >= 0 && Gl(i, j) != 0.0) bld.add(gi, gj, Gl(i, j));
      }
    }
  }
  return bld.assemble();
}

/// H(div) Gram int sigma.tau + div(sigma) div(tau) of an RT space.
inline CsrMatrix assemble_hdiv_gram(const FeSpace& sp) {
  if (sp.family != Family::RaviartThomas)
    throw std::invalid_argument("assemble_hdiv_gram: requires a raviart_thomas space");
  const Mesh& mesh = *sp.mesh;
  int k = sp.degree;
  auto vrule = detail::volume_rule(mesh.kind, 2 * (k + 1) + 2);
  CooBuilder bld(sp.ndofs, sp.ndofs);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    RtElementBasis basis(mesh, k, e);
    int n = basis.nloc();
    ElemGeom geom(mesh, e);
    std::vector<Vec2> vals(n);
    std::vector<double> divs(n);
    Eigen::MatrixXd Dl = Eigen::MatrixXd::Zero(n, n);
    for (const auto& qp : vrule) {
      Vec2 rpt = {qp.x, qp.y};
      double w = qp.w * geom.jacobian(rpt).det();
      basis.eval(rpt, vals.data(), divs.data());
      for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
          double v = w * (dot(vals[i], vals[j]) + divs[i] * divs[j]);
          Dl(i, j) += v;
          if (j < i) Dl(j, i) += v;
        }
    }
    const auto& dofs = sp.elem_dofs[e];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (Dl(i, j) != 0.0) bld.add(dofs[i].index, dofs[j].index, Dl(i, j));
  }
  return bld.assemble();
}

namespace detail {

/// Shared scatter for the RT interpolation matrices Pi and C.  Edge-moment
/// rows receive contributions only from Lagrange nodes lying on that edge;
/// all other basis functions vanish on the edge, so their moments are
/// exact zeros and the blocks stay structurally empty.
inline bool node_on_edge(const NodeInfo& ni, int le, int nv) {
  if (ni.kind == NodeInfo::Kind::Edge) return ni.sub == le;
  if (ni.kind == NodeInfo::Kind::Vertex) return ni.sub == le || ni.sub == (le + 1) % nv;
  return false;
}

}  // namespace detail

/// RT interpolation matrix Pi of a vector Lagrange space (components
/// interleaved: vector DOF 2*s+c for scalar DOF s, component c).  Columns
/// are the RT DOF evaluations of the vector basis functions.
inline CsrMatrix assemble_pi(const FeSpace& lag, const FeSpace& rt) {
  if (lag.family != Family::Lagrange || rt.family != Family::RaviartThomas)
    throw std::invalid_argument("assemble_pi: expects (lagrange, raviart_thomas)");
  if (lag.mesh != rt.mesh) throw std::invalid_argument("assemble_pi: meshes differ");
  if (lag.degree < rt.degree + 1)
    throw std::invalid_argument("assemble_pi: lagrange degree must be >= RT index + 1");
  const Mesh& mesh = *lag.mesh;
  int k = rt.degree, nv = mesh.verts_per_elem();
  const auto& ref = NodalRefElement::get(mesh.kind, lag.degree);
  int nl = ref.nnodes();

  CooBuilder bld(rt.ndofs, 2 * lag.ndofs);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    RtDofSet dofs(mesh, k, e, lag.degree + k + 2);
    int nq = dofs.num_points();
    Eigen::MatrixXd phi(nq, nl), zero = Eigen::MatrixXd::Zero(nq, nl);
    std::vector<double> v(nl);
    for (int q = 0; q < nq; ++q) {
      ref.eval(dofs.points_ref()[q], v.data());
      for (int l = 0; l < nl; ++l) phi(q, l) = v[l];
    }
    // columns for component 0 fields (phi, 0) and component 1 fields (0, phi)
    Eigen::MatrixXd loc0 = dofs.apply_many(phi, zero);
    Eigen::MatrixXd loc1 = dofs.apply_many(zero, phi);

    const auto& drt = rt.elem_dofs[e];
    const auto& dlg = lag.elem_dofs[e];
    for (int i = 0; i < dofs.nloc(); ++i) {
      bool edge_row = i < nv * (k + 1);
      int le = edge_row ? i / (k + 1) : -1;
      // Facet moments are single valued, so only the first incident element
      // writes them; interior moments are element local.
      if (edge_row && mesh.facet_elems[mesh.elem_facets[e][le]][0].elem != e) continue;
      for (int l = 0; l < nl; ++l) {
        if (edge_row && !detail::node_on_edge(ref.node_info()[l], le, nv)) continue;
        if (loc0(i, l) != 0.0) bld.add(drt[i].index, 2 * dlg[l].index + 0, loc0(i, l));
        if (loc1(i, l) != 0.0) bld.add(drt[i].index, 2 * dlg[l].index + 1, loc1(i, l));
      }
    }
  }
  return bld.assemble();
}

/// Discrete curl C: scalar Lagrange -> RT coefficients of the rotated
/// gradient (d/dy phi, -d/dx phi).
inline CsrMatrix assemble_curl(const FeSpace& lag, const FeSpace& rt) {
  if (lag.family != Family::Lagrange || rt.family != Family::RaviartThomas)
    throw std::invalid_argument("assemble_curl: expects (lagrange, raviart_thomas)");
  if (lag.mesh != rt.mesh) throw std::invalid_argument("assemble_curl: meshes differ");
  if (lag.degree != rt.degree + 1)
    throw std::invalid_argument("assemble_curl: lagrange degree must equal RT index + 1");
  const Mesh& mesh = *lag.mesh;
  int k = rt.degree, nv = mesh.verts_per_elem();
  const auto& ref = NodalRefElement::get(mesh.kind, lag.degree);
  int nl = ref.nnodes();

  CooBuilder bld(rt.ndofs, lag.ndofs);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    ElemGeom geom(mesh, e);
    RtDofSet dofs(mesh, k, e, lag.degree + k + 2);
    int nq = dofs.num_points();
    Eigen::MatrixXd cx(nq, nl), cy(nq, nl);
    std::vector<Vec2> g(nl);
    for (int q = 0; q < nq; ++q) {
      Vec2 rpt = dofs.points_ref()[q];
      Mat2 J = geom.jacobian(rpt);
      ref.eval_grad(rpt, g.data());
      for (int l = 0; l < nl; ++l) {
        Vec2 grad = J.solve_t(g[l]);  // physical gradient
        cx(q, l) = grad.y;            // curl phi = (d_y phi, -d_x phi)
        cy(q, l) = -grad.x;
      }
    }
    Eigen::MatrixXd loc = dofs.apply_many(cx, cy);

    const auto& drt = rt.elem_dofs[e];
    const auto& dlg = lag.elem_dofs[e];
    for (int i = 0; i < dofs.nloc(); ++i) {
      bool edge_row = i < nv * (k + 1);
      int le = edge_row ? i / (k + 1) : -1;
      if (edge_row && mesh.facet_elems[mesh.elem_facets[e][le]][0].elem != e) continue;
      for (int l = 0; l < nl; ++l) {
        if (edge_row && !detail::node_on_edge(ref.node_info()[l], le, nv)) continue;
        if (loc(i, l) != 0.0) bld.add(drt[i].index, dlg[l].index, loc(i, l));
      }
    }
  }
  return bld.assemble();
}

enum class DpgBlock { A, A0, A1 };

/// Explicit CSR assembly of A, A0, or A1 via per-element dense products
/// B^T M^{-1} B (mirrored locally so the result is exactly symmetric).
inline CsrMatrix assemble_explicit(const DpgSystem& sys, DpgBlock which) {
  const Mesh& mesh = *sys.mesh;
  int nb = sys.y_block_size();
  int nv = mesh.verts_per_elem();
  int kq = sys.p - 1;
  int nU = (int)sys.U.elem_dofs[0].size();
  int nQ = nv * (kq + 1);

  int dim = which == DpgBlock::A ? sys.ndofs() : (which == DpgBlock::A0 ? sys.nu() : sys.nq());
  CooBuilder bld(dim, dim);

  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& du = sys.U.elem_dofs[e];
    const auto& dq = sys.Q.elem_dofs[e];
    int y0 = e * nb;

    // local column layout: free trial DOFs first (when wanted), then flux
    std::vector<int> cols;          // reduced-numbering targets
    std::vector<int> ucol(nU, -1);  // local trial DOF -> dense column
    std::vector<int> qcol(nQ, -1);
    if (which != DpgBlock::A1)
      for (int j = 0; j < nU; ++j) {
        int sub = sys.u_free.full_to_sub[du[j].index];
        if (sub < 0) continue;
        ucol[j] = (int)cols.size();
        cols.push_back(sub);
      }
    if (which != DpgBlock::A0) {
      int off = which == DpgBlock::A ? sys.nu() : 0;
      for (int j = 0; j < nQ; ++j) {
        qcol[j] = (int)cols.size();
        cols.push_back(off + dq[j].index);
      }
    }

    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nb, (int)cols.size());
    auto local_of = [](const std::vector<ElemDof>& dofs, int g) {
      for (int j = 0; j < (int)dofs.size(); ++j)
        if (dofs[j].index == g) return j;
      return -1;
    };
    for (int i = 0; i < nb; ++i) {
      if (which != DpgBlock::A1)
        for (int k = sys.B0.row_ptr[y0 + i]; k < sys.B0.row_ptr[y0 + i + 1]; ++k) {
          int j = local_of(du, sys.B0.col_idx[k]);
          if (j >= 0 && ucol[j] >= 0) B(i, ucol[j]) = sys.B0.vals[k];
        }
      if (which != DpgBlock::A0)
        for (int k = sys.B1.row_ptr[y0 + i]; k < sys.B1.row_ptr[y0 + i + 1]; ++k) {
          int j = local_of(dq, sys.B1.col_idx[k]);
          if (j >= 0 && qcol[j] >= 0) B(i, qcol[j]) = sys.B1.vals[k];
        }
    }

    Eigen::MatrixXd X = sys.M_blocks[e].solve(B);
    Eigen::MatrixXd Al = B.transpose() * X;
    Al = 0.5 * (Al + Al.transpose()).eval();
    for (int i = 0; i < (int)cols.size(); ++i)
      for (int j = 0; j < (int)cols.size(); ++j)
        if (Al(i, j) != 0.0) bld.add(cols[i], cols[j], Al(i, j));
  }
  return bld.assemble();
}

/// H1 error (full norm) of a trial-space coefficient vector against an
/// analytic solution.
inline double h1_error(const FeSpace& sp, const std::vector<double>& coeffs, ScalarField exact,
                       std::function<Vec2(Vec2)> exact_grad) {
  const Mesh& mesh = *sp.mesh;
  const auto& ref = NodalRefElement::get(mesh.kind, sp.degree);
  int n = ref.nnodes();
  auto vrule = detail::volume_rule(mesh.kind, 2 * sp.degree + 4);
  std::vector<double> vals(n);
  std::vector<Vec2> grads(n);
  double err2 = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    ElemGeom geom(mesh, e);
    for (const auto& qp : vrule) {
      Vec2 rpt = {qp.x, qp.y};
      Mat2 J = geom.jacobian(rpt);
      double w = qp.w * J.det();
      ref.eval(rpt, vals.data());
      ref.eval_grad(rpt, grads.data());
      double uh = 0.0;
      Vec2 gh = {0, 0};
      for (int i = 0; i < n; ++i) {
        double c = coeffs[sp.elem_dofs[e][i].index];
        uh += c * vals[i];
        gh = gh + c * J.solve_t(grads[i]);
      }
      Vec2 x = geom.map(rpt);
      double du = uh - exact(x);
      Vec2 dg = gh - exact_grad(x);
      err2 += w * (du * du + dot(dg, dg));
    }
  }
  return std::sqrt(err2);
}

}  // namespace dpgamg
