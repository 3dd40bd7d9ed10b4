#pragma once

// Elimination of interior H(div) degrees of freedom.  The Gram matrix D of
// the Raviart-Thomas space couples interior dofs only within their own
// element, so the interior block D_ii is block diagonal and the Schur
// complement S = D_ff - D_fi D_ii^{-1} D_if can be formed one element at a
// time.  S represents the discrete minimal-extension norm on the interface:
// (S q, q) = min { (D w, w) : w_f = q }.

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dpgamg/csr.hpp"
#include "dpgamg/fespace.hpp"

namespace dpgamg {

struct SchurSystem {
  CsrMatrix S;               // interface-by-interface, in f sublist order
  std::vector<int> f_dofs;   // ascending original indices of interface dofs
  std::vector<int> full_to_f; // -1 for interior dofs

  // One independent interior block: the dofs it eliminates, the interface
  // dofs it couples to, and K = D_ii^{-1} D_if restricted to the block.
  struct Block {
    std::vector<int> i_dofs;   // original indices
    std::vector<int> f_cols;   // positions into f_dofs
    Eigen::MatrixXd K;
  };
  std::vector<Block> blocks;

  int nf() const { return static_cast<int>(f_dofs.size()); }

  // Minimal-energy extension E_h q expressed in the original numbering:
  // interface entries are copied, interior entries take -K q.
  std::vector<double> extend(const std::vector<double>& q) const {
    if (static_cast<int>(q.size()) != nf())
      throw std::invalid_argument("extend: interface vector has wrong size");
    std::vector<double> w(f_dofs.size() + count_interior(), 0.0);
    for (std::size_t k = 0; k < f_dofs.size(); ++k) w[f_dofs[k]] = q[k];
    for (const Block& b : blocks) {
      Eigen::VectorXd qb(b.f_cols.size());
      for (std::size_t j = 0; j < b.f_cols.size(); ++j) qb[j] = q[b.f_cols[j]];
      Eigen::VectorXd wi = -b.K * qb;
      for (std::size_t i = 0; i < b.i_dofs.size(); ++i) w[b.i_dofs[i]] = wi[i];
    }
    return w;
  }

  std::size_t count_interior() const {
    std::size_t n = 0;
    for (const Block& b : blocks) n += b.i_dofs.size();
    return n;
  }
};

namespace detail {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace detail

// Eliminates the dofs labelled Interior from the symmetric matrix D.  The
// interior coupling graph is decomposed into connected components, each of
// which is factored densely; components correspond to single elements for
// the spaces assembled here, but the algorithm only relies on D itself.
inline SchurSystem schur_complement(const CsrMatrix& D,
                                    const std::vector<DofClass>& partition) {
  const int n = D.nrows;
  if (D.ncols != n) throw std::invalid_argument("schur_complement: matrix not square");
  if (static_cast<int>(partition.size()) != n)
    throw std::invalid_argument("schur_complement: partition size mismatch");

  SchurSystem out;
  out.full_to_f.assign(n, -1);
  std::vector<int> i_pos(n, -1);
  std::vector<int> i_list;
  for (int i = 0; i < n; ++i) {
    if (partition[i] == DofClass::Interface) {
      out.full_to_f[i] = static_cast<int>(out.f_dofs.size());
      out.f_dofs.push_back(i);
    } else {
      i_pos[i] = static_cast<int>(i_list.size());
      i_list.push_back(i);
    }
  }
  const int nf = out.nf();

  // Group interior dofs by their mutual coupling in D.
  detail::UnionFind uf(static_cast<int>(i_list.size()));
  for (int li = 0; li < static_cast<int>(i_list.size()); ++li) {
    const int row = i_list[li];
    for (int p = D.row_ptr[row]; p < D.row_ptr[row + 1]; ++p) {
      const int col = D.col_idx[p];
      if (i_pos[col] >= 0) uf.unite(li, i_pos[col]);
    }
  }
  std::vector<std::vector<int>> comps;
  {
    std::vector<int> comp_of(i_list.size(), -1);
    for (int li = 0; li < static_cast<int>(i_list.size()); ++li) {
      const int root = uf.find(li);
      if (comp_of[root] < 0) {
        comp_of[root] = static_cast<int>(comps.size());
        comps.emplace_back();
      }
      comps[comp_of[root]].push_back(i_list[li]);
    }
  }

  CooBuilder s_build(nf, nf);
  for (int k = 0; k < nf; ++k) {
    const int row = out.f_dofs[k];
    for (int p = D.row_ptr[row]; p < D.row_ptr[row + 1]; ++p) {
      const int cf = out.full_to_f[D.col_idx[p]];
      if (cf >= 0) s_build.add(k, cf, D.vals[p]);
    }
  }

  std::vector<int> local_i(n, -1);
  std::vector<int> local_f(nf, -1);
  for (const std::vector<int>& comp : comps) {
    const int ni = static_cast<int>(comp.size());
    for (int a = 0; a < ni; ++a) local_i[comp[a]] = a;

    // Interface columns touched by this component.
    std::vector<int> f_cols;
    for (int a = 0; a < ni; ++a) {
      const int row = comp[a];
      for (int p = D.row_ptr[row]; p < D.row_ptr[row + 1]; ++p) {
        const int cf = out.full_to_f[D.col_idx[p]];
        if (cf >= 0 && local_f[cf] < 0) {
          local_f[cf] = static_cast<int>(f_cols.size());
          f_cols.push_back(cf);
        }
      }
    }
    const int nfb = static_cast<int>(f_cols.size());

    Eigen::MatrixXd Dii = Eigen::MatrixXd::Zero(ni, ni);
    Eigen::MatrixXd Dif = Eigen::MatrixXd::Zero(ni, nfb);
    for (int a = 0; a < ni; ++a) {
      const int row = comp[a];
      for (int p = D.row_ptr[row]; p < D.row_ptr[row + 1]; ++p) {
        const int col = D.col_idx[p];
        if (local_i[col] >= 0)
          Dii(a, local_i[col]) = D.vals[p];
        else if (out.full_to_f[col] >= 0)
          Dif(a, local_f[out.full_to_f[col]]) = D.vals[p];
      }
    }

    Eigen::LLT<Eigen::MatrixXd> llt(Dii);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("schur_complement: interior block not positive definite");
    Eigen::MatrixXd K = llt.solve(Dif);

    if (nfb > 0) {
      Eigen::MatrixXd corr = Dif.transpose() * K;
      corr = 0.5 * (corr + corr.transpose()).eval();
      for (int a = 0; a < nfb; ++a)
        for (int b = 0; b < nfb; ++b)
          if (corr(a, b) != 0.0) s_build.add(f_cols[a], f_cols[b], -corr(a, b));
    }

    out.blocks.push_back({comp, f_cols, std::move(K)});
    for (int a = 0; a < ni; ++a) local_i[comp[a]] = -1;
    for (int cf : f_cols) local_f[cf] = -1;
  }

  out.S = s_build.assemble();
  return out;
}

// (S q, q), the squared discrete H(div) minimal-extension norm of q.
inline double qh_norm2(const SchurSystem& sys, const std::vector<double>& q) {
  return quadratic_form(sys.S, q);
}

} // namespace dpgamg
