#pragma once

// Numerical checks for the analysis behind the preconditioner: the
// reference-element extension of constant normal traces, enriched
// minimal-extension surrogates for the non-computable interface norm,
// the volumetric-to-interface transfer of stable decompositions, and
// generalized eigenvalue estimates for the norm equivalence constants.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "dpgamg/assemble.hpp"
#include "dpgamg/csr.hpp"
#include "dpgamg/dense_eig.hpp"
#include "dpgamg/mesh.hpp"
#include "dpgamg/quadrature.hpp"
#include "dpgamg/schur.hpp"

namespace dpgamg {

enum class RefShape { Triangle, Square };

// Extension of a constant normal trace sigma_bar into the reference
// element: the radial field (sigma_bar / d) (x - x_I) about the incenter,
// whose normal component equals sigma_bar on every edge because the
// incenter is at distance d from each of them.
struct RefExtension {
  Vec2 x_I;
  double factor = 0.0;  // sigma_bar / d

  Vec2 eval(Vec2 x) const { return factor * (x - x_I); }
  double divergence() const { return 2.0 * factor; }
};

inline double ref_inradius(RefShape shape) {
  // Unit right triangle: legs 1, 1, hypotenuse sqrt(2); d = 2|K| / |dK|.
  if (shape == RefShape::Triangle) return 1.0 / (2.0 + std::sqrt(2.0));
  return 0.5;
}

inline Vec2 ref_incenter(RefShape shape) {
  const double d = ref_inradius(shape);
  if (shape == RefShape::Triangle) return {d, d};
  return {0.5, 0.5};
}

inline double ref_area(RefShape shape) {
  return shape == RefShape::Triangle ? 0.5 : 1.0;
}

inline double ref_perimeter(RefShape shape) {
  return shape == RefShape::Triangle ? 2.0 + std::sqrt(2.0) : 4.0;
}

inline RefExtension reference_extension_G(double sigma_bar, RefShape shape) {
  return {ref_incenter(shape), sigma_bar / ref_inradius(shape)};
}

// ||G sigma_bar||^2 in L2 and the squared H(div) norm, in closed form up to
// the moment integral of |x - x_I|^2 which is evaluated by quadrature once.
inline double ref_extension_hdiv_norm2(const RefExtension& ext, RefShape shape) {
  double second_moment = 0.0;
  if (shape == RefShape::Triangle) {
    for (const QuadPoint2d& qp : triangle_rule(4)) {
      const Vec2 d{qp.x - ext.x_I.x, qp.y - ext.x_I.y};
      second_moment += qp.w * (d.x * d.x + d.y * d.y);
    }
  } else {
    for (const QuadPoint2d& qp : quad_rule(4)) {
      const Vec2 d{qp.x - ext.x_I.x, qp.y - ext.x_I.y};
      second_moment += qp.w * (d.x * d.x + d.y * d.y);
    }
  }
  const double div = ext.divergence();
  return ext.factor * ext.factor * second_moment + div * div * ref_area(shape);
}

// --------------------------------------------------------------------------
// Enriched minimal-extension norm.

namespace detail {

// Facet ancestry across a chain of uniform refinements: fine facet id to
// base facet id, or -1 for facets interior to a base element.
inline std::vector<int> compose_facet_parents(const std::vector<RefineTrace>& traces,
                                              int base_nfacets) {
  std::vector<int> parent(base_nfacets);
  for (int f = 0; f < base_nfacets; ++f) parent[f] = f;
  for (const RefineTrace& t : traces) {
    std::vector<int> next(t.facet_parent.size(), -1);
    for (std::size_t f = 0; f < t.facet_parent.size(); ++f) {
      const int p = t.facet_parent[f];
      if (p >= 0) next[f] = parent[p];
    }
    parent = std::move(next);
  }
  return parent;
}

} // namespace detail

// Reduced Gram matrix of the enriched constrained minimization: the value
// (gram q, q) is the minimum of the squared H(div) norm over fields in the
// enriched Raviart-Thomas space whose normal trace on the base skeleton is
// the trace represented by q.  Built once per (mesh, k, dk, drefine) and
// reused for many q.
class EnrichedQnorm {
 public:
  EnrichedQnorm(const Mesh& base, int k, int dk, int drefine) {
    if (k < 0) throw std::invalid_argument("EnrichedQnorm: negative base index");
    if (dk < 0 || drefine < 0)
      throw std::invalid_argument(
          "EnrichedQnorm: enrichment must not shrink the extension space");
    const int ke = k + dk;

    Mesh fine = base;
    std::vector<RefineTrace> traces;
    for (int s = 0; s < drefine; ++s) {
      RefineTrace t;
      fine = refine_uniform(fine, &t);
      traces.push_back(std::move(t));
    }
    const std::vector<int> parent =
        detail::compose_facet_parents(traces, static_cast<int>(base.facets.size()));

    FeSpace rt = build_space(fine, Family::RaviartThomas, ke);
    CsrMatrix D = assemble_hdiv_gram(rt);

    const int nq = static_cast<int>(base.facets.size()) * (k + 1);
    nq_ = nq;

    // Constrained dofs: facet dofs of fine facets that lie on the base
    // skeleton.  Everything else, including fine facet dofs interior to a
    // base element, participates in the minimization.
    std::vector<int> c_dofs;
    std::vector<int> c_parent;  // base facet of each constrained dof's facet
    std::vector<int> c_fine;    // fine facet id
    for (std::size_t f = 0; f < fine.facets.size(); ++f) {
      if (parent[f] < 0) continue;
      for (int j = 0; j <= ke; ++j) {
        c_dofs.push_back(static_cast<int>(f) * (ke + 1) + j);
        c_parent.push_back(parent[f]);
        c_fine.push_back(static_cast<int>(f));
      }
    }
    const int nc = static_cast<int>(c_dofs.size());

    std::vector<int> where(rt.ndofs, -1);  // >=0: constrained slot; -1: free
    for (int a = 0; a < nc; ++a) where[c_dofs[a]] = a;
    std::vector<int> free_dofs;
    std::vector<int> free_pos(rt.ndofs, -1);
    for (int i = 0; i < rt.ndofs; ++i) {
      if (where[i] < 0) {
        free_pos[i] = static_cast<int>(free_dofs.size());
        free_dofs.push_back(i);
      }
    }
    const int nfree = static_cast<int>(free_dofs.size());

    // Constraint matrix: constrained dof values as moments of the base
    // trace re-expanded on the child facet.
    Eigen::MatrixXd Gmap = Eigen::MatrixXd::Zero(nc, nq);
    const std::vector<QuadPoint1d> line = edge_rule(2 * (ke + 1) + 2);
    for (int a = 0; a < nc; ++a) {
      const int fc = c_fine[a];
      const int fp = c_parent[a];
      const int j = c_dofs[a] % (ke + 1);

      const Vec2 ca = fine.vertices[fine.facets[fc][0]];
      const Vec2 cb = fine.vertices[fine.facets[fc][1]];
      const Vec2 pa = base.vertices[base.facets[fp][0]];
      const Vec2 pb = base.vertices[base.facets[fp][1]];
      const double lc = fine.facet_length[fc];
      const double lp = base.facet_length[fp];
      const Vec2 tp = (1.0 / lp) * (pb - pa);

      const double ndot = dot(fine.facet_normal[fc], base.facet_normal[fp]);
      if (std::abs(std::abs(ndot) - 1.0) > 1e-9)
        throw std::runtime_error("EnrichedQnorm: child facet not collinear with parent");
      const double sign = ndot > 0.0 ? 1.0 : -1.0;

      for (const QuadPoint1d& qp : line) {
        const Vec2 x = ca + qp.s * (cb - ca);
        const double sp = dot(x - pa, tp) / lp;
        const double wj = qp.w * lc * facet_basis(j, qp.s, lc);
        for (int m = 0; m <= k; ++m)
          Gmap(a, fp * (k + 1) + m) += sign * wj * facet_basis(m, sp, lp);
      }
    }

    // Eliminate the free dofs: gram = Gmap^T (D_cc - D_cf D_ff^{-1} D_fc) Gmap.
    Eigen::MatrixXd Dcc = Eigen::MatrixXd::Zero(nc, nc);
    Eigen::MatrixXd Dfc = Eigen::MatrixXd::Zero(nfree, nc);
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < D.nrows; ++i) {
      for (int p = D.row_ptr[i]; p < D.row_ptr[i + 1]; ++p) {
        const int jcol = D.col_idx[p];
        const double v = D.vals[p];
        if (where[i] >= 0 && where[jcol] >= 0)
          Dcc(where[i], where[jcol]) = v;
        else if (where[i] < 0 && where[jcol] >= 0)
          Dfc(free_pos[i], where[jcol]) = v;
        else if (where[i] < 0 && where[jcol] < 0)
          trips.emplace_back(free_pos[i], free_pos[jcol], v);
      }
    }

    Eigen::MatrixXd reduced = Dcc;
    if (nfree > 0) {
      Eigen::SparseMatrix<double> Dff(nfree, nfree);
      Dff.setFromTriplets(trips.begin(), trips.end());
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Dff);
      if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("EnrichedQnorm: interior block factorization failed");
      reduced -= Dfc.transpose() * ldlt.solve(Dfc);
    }
    gram_ = Gmap.transpose() * reduced * Gmap;
    gram_ = 0.5 * (gram_ + gram_.transpose()).eval();
  }

  int nq() const { return nq_; }
  const Eigen::MatrixXd& gram() const { return gram_; }

  double value(const std::vector<double>& q) const {
    if (static_cast<int>(q.size()) != nq_)
      throw std::invalid_argument("EnrichedQnorm: interface vector has wrong size");
    Eigen::Map<const Eigen::VectorXd> qv(q.data(), nq_);
    return qv.dot(gram_ * qv);
  }

 private:
  int nq_ = 0;
  Eigen::MatrixXd gram_;
};

inline double enriched_qnorm(const std::vector<double>& q, const Mesh& mesh, int k,
                             int dk, int drefine) {
  return EnrichedQnorm(mesh, k, dk, drefine).value(q);
}

// Surrogate for the norm equivalence constant c3: the square root of the
// largest generalized eigenvalue of (S_h, S_enriched).  S_enriched is a
// better approximation of the non-computable interface norm from below, so
// the ratio bounds qh_norm / enriched_qnorm over all q.
inline double c3_surrogate(const Mesh& mesh, int k, int dk, int drefine) {
  FeSpace rt = build_space(mesh, Family::RaviartThomas, k);
  CsrMatrix D = assemble_hdiv_gram(rt);
  SchurSystem sch = schur_complement(D, rt.dof_class);
  Eigen::MatrixXd S_base = to_dense(sch.S);

  EnrichedQnorm enr(mesh, k, dk, drefine);
  GenEigResult eig = dense_generalized_eig(S_base, enr.gram());
  return std::sqrt(eig.values.maxCoeff());
}

// --------------------------------------------------------------------------
// Volumetric-to-interface transfer of stable decompositions.

struct DecompositionWitness {
  std::vector<double> v;                 // remainder
  std::vector<std::vector<double>> r;    // auxiliary coefficients, one per map
  double lhs = 0.0;                      // achieved decomposition energy
  double rhs = 0.0;                      // reference energy

  double constant() const { return lhs / rhs; }
};

using VolumetricDecomposer =
    std::function<DecompositionWitness(const std::vector<double>&)>;

// Exact minimizer of the decomposition energy
//   sum_m D_mm v_m^2 + sum_k (D H_k r_k, H_k r_k),  v = u - sum_k H_k r_k,
// by solving the normal equations of the quadratic program in r.
inline VolumetricDecomposer exact_volumetric_decomposer(
    const Eigen::MatrixXd& D, const std::vector<Eigen::MatrixXd>& H) {
  const int n = static_cast<int>(D.rows());
  std::vector<int> offs;
  int ntot = 0;
  for (const Eigen::MatrixXd& Hk : H) {
    if (Hk.rows() != n)
      throw std::invalid_argument("exact_volumetric_decomposer: map row mismatch");
    offs.push_back(ntot);
    ntot += static_cast<int>(Hk.cols());
  }
  const Eigen::VectorXd dd = D.diagonal();

  // Stack the maps: v = u - Hs r with Hs = [H_1 ... H_K]; the energy is
  // (Dd (u - Hs r), u - Hs r) + r^T blockdiag(H_k^T D H_k) r, minimized at
  //   (Hs^T Dd Hs + blockdiag(H_k^T D H_k)) r = Hs^T Dd u.
  Eigen::MatrixXd Hs(n, ntot);
  for (std::size_t kk = 0; kk < H.size(); ++kk)
    Hs.middleCols(offs[kk], H[kk].cols()) = H[kk];
  Eigen::MatrixXd N = Hs.transpose() * dd.asDiagonal() * Hs;
  for (std::size_t kk = 0; kk < H.size(); ++kk) {
    const int o = offs[kk];
    const int w = static_cast<int>(H[kk].cols());
    N.block(o, o, w, w) += H[kk].transpose() * D * H[kk];
  }

  return [D, H, Hs, N, dd, offs](const std::vector<double>& u) {
    const int n = static_cast<int>(D.rows());
    if (static_cast<int>(u.size()) != n)
      throw std::invalid_argument("volumetric decomposer: vector size mismatch");
    Eigen::Map<const Eigen::VectorXd> uv(u.data(), n);

    Eigen::VectorXd r;
    if (Hs.cols() > 0) {
      Eigen::VectorXd rhs = Hs.transpose() * dd.asDiagonal() * uv;
      r = N.completeOrthogonalDecomposition().solve(rhs);
    } else {
      r = Eigen::VectorXd::Zero(0);
    }
    Eigen::VectorXd v = uv - Hs * r;

    DecompositionWitness wit;
    wit.v.assign(v.data(), v.data() + n);
    double lhs = v.dot(dd.asDiagonal() * v);
    for (std::size_t kk = 0; kk < H.size(); ++kk) {
      Eigen::VectorXd rk = r.segment(offs[kk], H[kk].cols());
      wit.r.emplace_back(rk.data(), rk.data() + rk.size());
      Eigen::VectorXd hk = H[kk] * rk;
      lhs += hk.dot(D * hk);
    }
    wit.lhs = lhs;
    wit.rhs = uv.dot(D * uv);
    return wit;
  };
}

// Dense minimal extension of interface data and the corresponding Schur
// complement, for the small instances used in the transfer checks.
struct DenseExtension {
  std::vector<double> w;   // full vector, w_f = u_f, w_i minimal
  Eigen::MatrixXd S;       // Schur complement on the f sublist
  std::vector<int> f_dofs;
};

inline DenseExtension dense_minimal_extension(const Eigen::MatrixXd& D,
                                              const std::vector<DofClass>& partition,
                                              const std::vector<double>& u_f) {
  const int n = static_cast<int>(D.rows());
  if (static_cast<int>(partition.size()) != n)
    throw std::invalid_argument("dense_minimal_extension: partition size mismatch");
  std::vector<int> fl, il;
  for (int i = 0; i < n; ++i)
    (partition[i] == DofClass::Interface ? fl : il).push_back(i);
  if (u_f.size() != fl.size())
    throw std::invalid_argument("dense_minimal_extension: interface vector size mismatch");

  const int nf = static_cast<int>(fl.size());
  const int ni = static_cast<int>(il.size());
  Eigen::MatrixXd Dii(ni, ni), Dif(ni, nf), Dff(nf, nf);
  for (int a = 0; a < ni; ++a)
    for (int b = 0; b < ni; ++b) Dii(a, b) = D(il[a], il[b]);
  for (int a = 0; a < ni; ++a)
    for (int b = 0; b < nf; ++b) Dif(a, b) = D(il[a], fl[b]);
  for (int a = 0; a < nf; ++a)
    for (int b = 0; b < nf; ++b) Dff(a, b) = D(fl[a], fl[b]);

  Eigen::Map<const Eigen::VectorXd> qf(u_f.data(), nf);
  DenseExtension out;
  out.f_dofs = fl;
  out.w.assign(n, 0.0);
  for (int b = 0; b < nf; ++b) out.w[fl[b]] = u_f[b];
  if (ni > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(Dii);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("dense_minimal_extension: D_ii not positive definite");
    Eigen::MatrixXd K = llt.solve(Dif);
    Eigen::VectorXd wi = -K * qf;
    for (int a = 0; a < ni; ++a) out.w[il[a]] = wi[a];
    out.S = Dff - Dif.transpose() * K;
    out.S = 0.5 * (out.S + out.S.transpose()).eval();
  } else {
    out.S = Dff;
  }
  return out;
}

// Applies a volumetric decomposer to the minimal extension of u_f and
// restricts the witness to the interface.  The returned witness achieves
//   sum_m S_mm v_m^2 + sum_k (S [H_k r_k]_f, [H_k r_k]_f) = lhs
// against rhs = (S u_f, u_f); the transfer argument guarantees its constant
// never exceeds the volumetric one.
inline DecompositionWitness interface_decomposition(
    const CsrMatrix& D, const std::vector<Eigen::MatrixXd>& H,
    const std::vector<DofClass>& partition, const std::vector<double>& u_f,
    const VolumetricDecomposer& decomposer) {
  const Eigen::MatrixXd Dd = to_dense(D);
  DenseExtension ext = dense_minimal_extension(Dd, partition, u_f);
  const int n = static_cast<int>(Dd.rows());
  const int nf = static_cast<int>(ext.f_dofs.size());

  DecompositionWitness vol = decomposer(ext.w);
  if (static_cast<int>(vol.v.size()) != n || vol.r.size() != H.size())
    throw std::runtime_error("interface_decomposition: malformed volumetric witness");

  // The witness must reconstruct the input before it can be trusted.
  Eigen::VectorXd recon = Eigen::Map<const Eigen::VectorXd>(vol.v.data(), n);
  for (std::size_t kk = 0; kk < H.size(); ++kk)
    recon += H[kk] * Eigen::Map<const Eigen::VectorXd>(vol.r[kk].data(), vol.r[kk].size());
  double wnorm = 0.0, rerr = 0.0;
  for (int i = 0; i < n; ++i) {
    wnorm += ext.w[i] * ext.w[i];
    rerr += (recon[i] - ext.w[i]) * (recon[i] - ext.w[i]);
  }
  if (std::sqrt(rerr) > 1e-10 * std::max(1.0, std::sqrt(wnorm)))
    throw std::runtime_error(
        "interface_decomposition: volumetric witness fails reconstruction");

  DecompositionWitness out;
  out.r = vol.r;
  out.v.resize(nf);
  for (int a = 0; a < nf; ++a) out.v[a] = vol.v[ext.f_dofs[a]];

  double lhs = 0.0;
  for (int a = 0; a < nf; ++a) lhs += ext.S(a, a) * out.v[a] * out.v[a];
  for (std::size_t kk = 0; kk < H.size(); ++kk) {
    Eigen::VectorXd hk =
        H[kk] * Eigen::Map<const Eigen::VectorXd>(vol.r[kk].data(), vol.r[kk].size());
    Eigen::VectorXd hf(nf);
    for (int a = 0; a < nf; ++a) hf[a] = hk[ext.f_dofs[a]];
    lhs += hf.dot(ext.S * hf);
  }
  out.lhs = lhs;
  Eigen::Map<const Eigen::VectorXd> qf(u_f.data(), nf);
  out.rhs = qf.dot(ext.S * qf);
  return out;
}

// --------------------------------------------------------------------------
// Norm equivalence and preconditioned spectra.

// Square roots of the extreme generalized eigenvalues of (A, diag(G, S)):
// numerical estimates of the constants bracketing the DPG energy norm by
// the H^1 x Qh product norm.
inline std::pair<double, double> estimate_infsup(const DpgSystem& sys,
                                                 const CsrMatrix& G,
                                                 const SchurSystem& schur) {
  const int n = sys.ndofs();
  if (n > 4000) throw std::invalid_argument("estimate_infsup: dense budget exceeded");
  if (G.nrows != sys.nu() || schur.S.nrows != sys.nq())
    throw std::invalid_argument("estimate_infsup: block size mismatch");

  Eigen::MatrixXd A = to_dense(assemble_explicit(sys, DpgBlock::A));
  Eigen::MatrixXd Gram = Eigen::MatrixXd::Zero(n, n);
  Gram.topLeftCorner(sys.nu(), sys.nu()) = to_dense(G);
  Gram.bottomRightCorner(sys.nq(), sys.nq()) = to_dense(schur.S);

  GenEigResult eig = dense_generalized_eig(A, Gram);
  const double lo = std::max(eig.values.minCoeff(), 0.0);
  return {std::sqrt(lo), std::sqrt(eig.values.maxCoeff())};
}

// Extreme eigenvalues of the preconditioned operator B A for symmetric
// positive definite B and A, computed by probing both operators densely and
// solving the symmetric problem L^T A L with B = L L^T.
inline std::pair<double, double> preconditioned_spectrum(const LinearOperator& A,
                                                         const LinearOperator& B) {
  const int n = A.n;
  if (B.n != n) throw std::invalid_argument("preconditioned_spectrum: size mismatch");
  if (n > 4000) throw std::invalid_argument("preconditioned_spectrum: dense budget exceeded");

  Eigen::MatrixXd Ad(n, n), Bd(n, n);
  std::vector<double> e(n, 0.0);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    std::vector<double> col = A.apply(e);
    for (int i = 0; i < n; ++i) Ad(i, j) = col[i];
    col = B.apply(e);
    for (int i = 0; i < n; ++i) Bd(i, j) = col[i];
    e[j] = 0.0;
  }
  Ad = 0.5 * (Ad + Ad.transpose()).eval();
  Bd = 0.5 * (Bd + Bd.transpose()).eval();

  Eigen::LLT<Eigen::MatrixXd> llt(Bd);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("preconditioned_spectrum: preconditioner not positive definite");
  Eigen::MatrixXd L = llt.matrixL();
  Eigen::MatrixXd C = L.transpose() * Ad * L;
  C = 0.5 * (C + C.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("preconditioned_spectrum: eigensolver failed");
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

} // namespace dpgamg
