#pragma once

// Block preconditioners for the DPG normal equations.  The primal block is
// handled by an AMG V-cycle on the H^1 Gram matrix.  The flux block is
// handled by an additive auxiliary-space preconditioner
//
//   B^f = R^f + Pi_ff V_Pi Pi_ff^T + C_ff V_C C_ff^T
//
// where R^f is one symmetrized Gauss-Seidel sweep on the target matrix,
// Pi_ff and C_ff are the interface rows/columns of the Raviart-Thomas
// interpolation and discrete curl, and V_Pi, V_C are AMG V-cycles on the
// projected matrices Pi_ff^T T Pi_ff and C_ff^T T C_ff.  The target T is
// either the exact Schur complement S (ideal variant) or the assembled
// flux normal matrix A1 (practical variant).

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpgamg/amg.hpp"
#include "dpgamg/assemble.hpp"
#include "dpgamg/csr.hpp"
#include "dpgamg/schur.hpp"
#include "dpgamg/solver.hpp"

namespace dpgamg {

// One symmetrized Gauss-Seidel iteration from a zero initial guess:
// a forward sweep followed by a backward sweep.  This is a symmetric and
// positive definite operator whenever the matrix diagonal is positive.
struct SgsSmoother {
  CsrMatrix A;
  std::vector<double> diag;

  std::vector<double> apply(const std::vector<double>& r) const {
    std::vector<double> x(r.size(), 0.0);
    detail::gauss_seidel(A, diag, r, x, true);
    detail::gauss_seidel(A, diag, r, x, false);
    return x;
  }
};

inline SgsSmoother make_sgs(const CsrMatrix& A) {
  if (A.nrows != A.ncols) throw std::invalid_argument("make_sgs: matrix not square");
  SgsSmoother s{A, csr_diagonal(A)};
  for (int i = 0; i < A.nrows; ++i)
    if (s.diag[i] <= 0.0)
      throw std::invalid_argument("make_sgs: nonpositive diagonal entry");
  return s;
}

struct InterfacePrecond {
  SgsSmoother smoother;
  CsrMatrix pi_ff;    // n x n_aux_vec
  CsrMatrix curl_ff;  // n x n_aux_scalar
  AmgHierarchy amg_pi;
  AmgHierarchy amg_curl;
  int n = 0;

  std::vector<double> apply(const std::vector<double>& r) const {
    std::vector<double> x = smoother.apply(r);
    {
      std::vector<double> rp = pi_ff.mult_t(r);
      std::vector<double> zp = amg_vcycle(amg_pi, rp);
      std::vector<double> xp(n, 0.0);
      pi_ff.mult(zp.data(), xp.data());
      for (int i = 0; i < n; ++i) x[i] += xp[i];
    }
    {
      std::vector<double> rc = curl_ff.mult_t(r);
      std::vector<double> zc = amg_vcycle(amg_curl, rc);
      std::vector<double> xc(n, 0.0);
      curl_ff.mult(zc.data(), xc.data());
      for (int i = 0; i < n; ++i) x[i] += xc[i];
    }
    return x;
  }
};

namespace detail {

// Drops auxiliary columns whose projected diagonal is (numerically) zero.
// Such columns are structurally dead: for degree two and up the tangential
// edge bubbles have no normal moment on their own facet and vanish on all
// others.  Keeping them would put zeros on the projected diagonal.
// Component labels ride along so the filtered matrix can still be
// coarsened per component.
inline CsrMatrix filter_dead_columns(const CsrMatrix& target, CsrMatrix& hmat,
                                     std::vector<int>* labels) {
  CsrMatrix proj = csr_rap(target, hmat);
  std::vector<double> d = csr_diagonal(proj);
  double dmax = 0.0;
  for (double v : d) dmax = std::max(dmax, v);
  std::vector<int> keep;
  for (int i = 0; i < (int)d.size(); ++i)
    if (d[i] > 1e-12 * dmax) keep.push_back(i);
  if ((int)keep.size() == proj.nrows) return proj;
  if (keep.empty())
    throw std::runtime_error(
        "build_interface_precond: auxiliary map has no live columns");

  std::vector<int> rows(hmat.nrows);
  for (int i = 0; i < hmat.nrows; ++i) rows[i] = i;
  hmat = csr_extract(hmat, rows, keep);
  if (labels) {
    std::vector<int> kept_labels(keep.size());
    for (size_t i = 0; i < keep.size(); ++i) kept_labels[i] = (*labels)[keep[i]];
    *labels = std::move(kept_labels);
  }
  return csr_rap(target, hmat);
}

}  // namespace detail

// Builds the additive interface preconditioner for a symmetric positive
// definite target matrix.  Structurally dead auxiliary columns are dropped;
// any remaining nonpositive projected diagonal means the target itself is
// defective and the setup refuses to continue rather than produce a
// silently broken solver.
inline InterfacePrecond build_interface_precond(const CsrMatrix& target,
                                                const CsrMatrix& pi_ff,
                                                const CsrMatrix& curl_ff,
                                                AmgParams params = {}) {
  if (target.nrows != target.ncols)
    throw std::invalid_argument("build_interface_precond: target not square");
  if (pi_ff.nrows != target.nrows || curl_ff.nrows != target.nrows)
    throw std::invalid_argument("build_interface_precond: auxiliary map row mismatch");

  InterfacePrecond out;
  out.n = target.nrows;
  out.smoother = make_sgs(target);
  out.pi_ff = pi_ff;
  out.curl_ff = curl_ff;

  // The nodal auxiliary space is vector valued with x/y dofs interleaved;
  // coarsen it per component or the hierarchy degrades badly.
  std::vector<int> pi_labels(pi_ff.ncols);
  for (int i = 0; i < pi_ff.ncols; ++i) pi_labels[i] = i % 2;
  CsrMatrix proj_pi = detail::filter_dead_columns(target, out.pi_ff, &pi_labels);
  CsrMatrix proj_curl = detail::filter_dead_columns(target, out.curl_ff, nullptr);
  for (const auto* m : {&proj_pi, &proj_curl}) {
    std::vector<double> d = csr_diagonal(*m);
    for (double v : d)
      if (v <= 0.0)
        throw std::runtime_error(
            "build_interface_precond: projected auxiliary matrix has a "
            "nonpositive diagonal entry");
  }
  AmgParams pi_params = params;
  pi_params.components_of = std::move(pi_labels);
  out.amg_pi = amg_setup(proj_pi, pi_params);
  out.amg_curl = amg_setup(proj_curl, params);
  return out;
}

enum class PrecondVariant { Ideal, Practical };

// Owns every matrix and hierarchy needed to apply the block preconditioner
//   diag(B^o, B^f)
// to vectors ordered primal-then-flux, matching DpgSystem::op_A().
struct DpgPrecond {
  PrecondVariant variant = PrecondVariant::Practical;
  int nu = 0;
  int nq = 0;

  CsrMatrix G;  // H^1 Gram matrix on the free primal dofs
  AmgHierarchy amg_g;

  CsrMatrix target;      // S (ideal) or A1 (practical)
  SchurSystem schur;     // populated for the ideal variant
  CsrMatrix hdiv_gram;   // D, populated for the ideal variant
  InterfacePrecond iface;

  std::vector<double> apply(const std::vector<double>& r) const {
    std::vector<double> ru(r.begin(), r.begin() + nu);
    std::vector<double> rq(r.begin() + nu, r.end());
    std::vector<double> xu = amg_vcycle(amg_g, ru);
    std::vector<double> xq = iface.apply(rq);
    std::vector<double> x(nu + nq);
    std::copy(xu.begin(), xu.end(), x.begin());
    std::copy(xq.begin(), xq.end(), x.begin() + nu);
    return x;
  }

  LinearOperator op() const {
    return {nu + nq, true, [this](const double* x, double* y) {
              std::vector<double> z = apply(std::vector<double>(x, x + nu + nq));
              std::copy(z.begin(), z.end(), y);
            }};
  }

  LinearOperator primal_op() const {
    return {nu, true, [this](const double* x, double* y) {
              std::vector<double> z = amg_vcycle(amg_g, std::vector<double>(x, x + nu));
              std::copy(z.begin(), z.end(), y);
            }};
  }

  LinearOperator flux_op() const {
    return {nq, true, [this](const double* x, double* y) {
              std::vector<double> z = iface.apply(std::vector<double>(x, x + nq));
              std::copy(z.begin(), z.end(), y);
            }};
  }
};

namespace detail {

inline bool kappa_is_constant_one(const std::vector<double>& kappa) {
  for (double k : kappa)
    if (k != 1.0) return false;
  return true;
}

} // namespace detail

// Assembles the block preconditioner for an assembled DPG system.  The
// primal block always uses AMG on an H^1 Gram matrix: the plain mass plus
// stiffness form for unit coefficients, or the kappa-weighted stiffness
// form when the coefficient varies.  The flux block target is the exact
// Schur complement of the H(div) Gram matrix (ideal) or the assembled A1
// block of the normal equations (practical); both are preconditioned by
// the same auxiliary-space construction.
inline DpgPrecond build_dpg_precond(const DpgSystem& sys, PrecondVariant variant,
                                    AmgParams params = {}) {
  auto out = DpgPrecond{};
  out.variant = variant;
  out.nu = sys.nu();
  out.nq = sys.nq();

  if (detail::kappa_is_constant_one(sys.kappa))
    out.G = assemble_h1_gram(sys.U);
  else
    out.G = assemble_h1_gram(sys.U, &sys.kappa);
  out.amg_g = amg_setup(out.G, params);

  const int k = sys.p - 1;  // flux polynomial degree
  FeSpace rt = build_space(*sys.mesh, Family::RaviartThomas, k);
  FeSpace aux = build_space(*sys.mesh, Family::Lagrange, k + 1);
  CsrMatrix pi = assemble_pi(aux, rt);
  CsrMatrix curl = assemble_curl(aux, rt);

  // Interface rows of the Raviart-Thomas space come first by construction.
  std::vector<int> rt_f;
  for (int i = 0; i < rt.ndofs; ++i)
    if (rt.dof_class[i] == DofClass::Interface) rt_f.push_back(i);

  std::vector<int> aux_f_scalar, aux_f_vec;
  for (int s = 0; s < aux.ndofs; ++s) {
    if (aux.dof_class[s] != DofClass::Interface) continue;
    aux_f_scalar.push_back(s);
    aux_f_vec.push_back(2 * s);
    aux_f_vec.push_back(2 * s + 1);
  }

  CsrMatrix pi_ff = csr_extract(pi, rt_f, aux_f_vec);
  CsrMatrix curl_ff = csr_extract(curl, rt_f, aux_f_scalar);

  if (variant == PrecondVariant::Ideal) {
    out.hdiv_gram = assemble_hdiv_gram(rt);
    out.schur = schur_complement(out.hdiv_gram, rt.dof_class);
    out.target = out.schur.S;
  } else {
    out.target = assemble_explicit(sys, DpgBlock::A1);
  }
  if (out.target.nrows != out.nq)
    throw std::runtime_error("build_dpg_precond: flux block size mismatch");

  out.iface = build_interface_precond(out.target, pi_ff, curl_ff, params);
  return out;
}

} // namespace dpgamg
