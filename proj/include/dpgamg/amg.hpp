#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dpgamg/csr.hpp"
#include "dpgamg/dense_eig.hpp"
#include "dpgamg/solver.hpp"

namespace dpgamg {

struct AmgParams {
  double theta = 0.25;  // strength-of-connection threshold
  int max_levels = 25;
  int coarse_size = 64;  // stop coarsening at or below this many rows
  int sweeps = 1;        // Gauss-Seidel sweeps, each side of the cycle
  int components = 1;    // interleaved vector problems: dof i belongs to component i % components
  std::vector<int> components_of;  // explicit per-dof labels, overrides components when set
};

struct AmgLevel {
  CsrMatrix A;
  CsrMatrix P;  // prolongation from the next coarser level (absent on the coarsest)
  std::vector<double> diag;
};

/// Classical (Ruge-Stuben) AMG hierarchy.  The coarsest level is solved
/// by a dense spectral pseudo-inverse, which keeps the cycle well defined
/// for semidefinite inputs such as curl-projected interface matrices
/// (positive diagonal, possibly a small kernel).
struct AmgHierarchy {
  AmgParams params;
  std::vector<AmgLevel> levels;
  Eigen::MatrixXd coarse_vec;
  Eigen::VectorXd coarse_inv;  // pseudo-inverted eigenvalues

  int num_levels() const { return (int)levels.size(); }
  int finest_size() const { return levels.front().A.nrows; }

  double operator_complexity() const {
    double s = 0.0;
    for (const auto& l : levels) s += l.A.nnz();
    return s / levels.front().A.nnz();
  }
  double grid_complexity() const {
    double s = 0.0;
    for (const auto& l : levels) s += l.A.nrows;
    return s / levels.front().A.nrows;
  }
};

namespace detail {

/// Strong connections of each row: -a_ij >= theta * max_{l != i} (-a_il).
/// Only negative couplings count; positive mass is smoother territory and
/// gets lumped into the diagonal during interpolation.  For vector
/// problems the max and the candidates both range over same-component
/// couplings (unknown-based coarsening); cross couplings still enter the
/// coarse operator through the Galerkin product.
inline std::vector<std::vector<int>> strength_graph(const CsrMatrix& A, double theta,
                                                    const std::vector<int>& comp) {
  std::vector<std::vector<int>> S(A.nrows);
  for (int i = 0; i < A.nrows; ++i) {
    double m = 0.0;
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
      int j = A.col_idx[k];
      if (j != i && comp[j] == comp[i]) m = std::max(m, -A.vals[k]);
    }
    if (m <= 0.0) continue;
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
      int j = A.col_idx[k];
      if (j != i && comp[j] == comp[i] && -A.vals[k] >= theta * m) S[i].push_back(j);
    }
  }
  return S;
}

/// Ruge-Stuben C/F splitting.  First pass: bucket priority queue on the
/// count of (unassigned) points strongly depending on each candidate.
/// Second pass: every strongly connected F-F pair must share a strong C
/// point; violations promote one of the pair.  Without the second pass
/// interpolation quality collapses on meshes whose dof ordering scrambles
/// locality (uniformly refined triangulations, for example).
inline std::vector<char> cf_split(const std::vector<std::vector<int>>& S, int n) {
  std::vector<std::vector<int>> ST(n);
  for (int i = 0; i < n; ++i)
    for (int j : S[i]) ST[j].push_back(i);

  const char UNASSIGNED = 0, C = 1, F = 2;
  std::vector<char> state(n, UNASSIGNED);
  std::vector<int> lambda(n);
  int maxl = 0;
  for (int i = 0; i < n; ++i) {
    lambda[i] = (int)ST[i].size();
    maxl = std::max(maxl, lambda[i]);
  }
  // bucket queue with lazy deletion
  std::vector<std::vector<int>> bucket(std::max(maxl + 1, 1));
  for (int i = 0; i < n; ++i) bucket[lambda[i]].push_back(i);

  auto bump = [&](int i) {
    ++lambda[i];
    if ((int)bucket.size() <= lambda[i]) bucket.resize(lambda[i] + 1);
    bucket[lambda[i]].push_back(i);
  };

  for (int cur = (int)bucket.size() - 1; cur >= 0;) {
    if (bucket[cur].empty()) {
      --cur;
      continue;
    }
    int i = bucket[cur].back();
    bucket[cur].pop_back();
    if (state[i] != UNASSIGNED || lambda[i] != cur) continue;  // stale entry
    state[i] = C;
    for (int j : ST[i]) {
      if (state[j] != UNASSIGNED) continue;
      state[j] = F;
      for (int l : S[j])
        if (state[l] == UNASSIGNED) bump(l);
    }
    cur = (int)bucket.size() - 1;
  }
  for (int i = 0; i < n; ++i)
    if (state[i] == UNASSIGNED) state[i] = F;  // isolated points, smoother-only

  // second pass
  std::vector<char> mark(n, 0);  // scratch: strong C neighbours of the current i
  for (int i = 0; i < n; ++i) {
    if (state[i] != F) continue;
    for (int j : S[i])
      if (state[j] == C) mark[j] = 1;
    int tentative = -1;
    for (int j : S[i]) {
      if (state[j] != F) continue;
      bool common = false;
      for (int k : S[j])
        if (state[k] == C && mark[k]) {
          common = true;
          break;
        }
      if (common) continue;
      if (tentative < 0) {
        tentative = j;  // promote the neighbour, provisionally
        state[j] = C;
        mark[j] = 1;
      } else {
        state[i] = C;  // two violations: promote i itself instead
        state[tentative] = F;
        mark[tentative] = 0;
        break;
      }
    }
    for (int j : S[i])
      if (mark[j]) mark[j] = 0;
  }
  return state;
}

/// Direct interpolation: F rows distribute their negative mass over the
/// strong C neighbours while positive couplings are lumped into the
/// diagonal, so per-component constants are reproduced up to the row
/// defect.  Cross-component couplings stay out of the sums, matching
/// the per-component coarsening.
inline CsrMatrix direct_interpolation(const CsrMatrix& A, const std::vector<std::vector<int>>& S,
                                      const std::vector<char>& state, const std::vector<int>& comp) {
  int n = A.nrows;
  std::vector<int> cmap(n, -1);
  int nc = 0;
  for (int i = 0; i < n; ++i)
    if (state[i] == 1) cmap[i] = nc++;

  CooBuilder bld(n, nc);
  std::vector<char> isC(n);
  for (int i = 0; i < n; ++i) isC[i] = state[i] == 1;

  for (int i = 0; i < n; ++i) {
    if (isC[i]) {
      bld.add(i, cmap[i], 1.0);
      continue;
    }
    std::vector<int> Ci;
    for (int j : S[i])
      if (isC[j]) Ci.push_back(j);
    if (Ci.empty()) continue;  // isolated F point: empty row, smoother only
    auto inCi = [&](int j) {
      for (int c : Ci)
        if (c == j) return true;
      return false;
    };
    double sumN_neg = 0, sumC_neg = 0, aii = 0;
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
      int j = A.col_idx[k];
      double v = A.vals[k];
      if (j == i) {
        aii += v;
        continue;
      }
      if (comp[j] != comp[i]) continue;
      if (v < 0) {
        sumN_neg += v;
        if (inCi(j)) sumC_neg += v;
      } else {
        aii += v;  // lump positive couplings
      }
    }
    if (sumC_neg == 0.0 || aii <= 0.0) continue;
    double alpha = sumN_neg / sumC_neg;
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
      int j = A.col_idx[k];
      double v = A.vals[k];
      if (j == i || v >= 0 || !inCi(j)) continue;
      bld.add(i, cmap[j], -alpha * v / aii);
    }
  }
  return bld.assemble();
}

}  // namespace detail

inline AmgHierarchy amg_setup(const CsrMatrix& A0, AmgParams params = {}) {
  if (A0.nrows != A0.ncols) throw std::invalid_argument("amg_setup: matrix not square");
  if (params.components_of.empty()) {
    if (params.components < 1 || A0.nrows % params.components != 0)
      throw std::invalid_argument("amg_setup: row count not a multiple of components");
  } else if ((int)params.components_of.size() != A0.nrows) {
    throw std::invalid_argument("amg_setup: component label count does not match rows");
  }
  {
    double scale = 0.0;
    for (double v : A0.vals) scale = std::max(scale, std::abs(v));
    CsrMatrix T = csr_transpose(A0);
    if (T.row_ptr != A0.row_ptr || T.col_idx != A0.col_idx)
      throw std::invalid_argument("amg_setup: matrix pattern not symmetric");
    for (int k = 0; k < A0.nnz(); ++k)
      if (std::abs(T.vals[k] - A0.vals[k]) > 1e-12 * scale)
        throw std::invalid_argument("amg_setup: matrix not symmetric");
  }

  AmgHierarchy H;
  H.params = params;
  H.levels.push_back({A0, {}, csr_diagonal(A0)});
  for (double d : H.levels[0].diag)
    if (d <= 0.0) throw std::invalid_argument("amg_setup: nonpositive diagonal entry");

  std::vector<int> comp = params.components_of;
  if (comp.empty()) {
    comp.resize(A0.nrows);
    for (int i = 0; i < A0.nrows; ++i) comp[i] = i % params.components;
  }

  while ((int)H.levels.size() < params.max_levels) {
    const CsrMatrix& A = H.levels.back().A;
    if (A.nrows <= params.coarse_size) break;
    auto S = detail::strength_graph(A, params.theta, comp);
    auto state = detail::cf_split(S, A.nrows);
    CsrMatrix P = detail::direct_interpolation(A, S, state, comp);
    if (P.ncols == 0 || P.ncols >= A.nrows) break;  // no useful coarsening left
    CsrMatrix Ac = csr_rap(A, P);
    std::vector<int> comp_c(P.ncols);
    for (int i = 0, nc = 0; i < A.nrows; ++i)
      if (state[i] == 1) comp_c[nc++] = comp[i];
    comp = std::move(comp_c);
    H.levels.back().P = P;
    H.levels.push_back({std::move(Ac), {}, {}});
    H.levels.back().diag = csr_diagonal(H.levels.back().A);
    for (double& d : H.levels.back().diag)
      if (d == 0.0) d = 1.0;  // dropped row after coarsening; keep GS defined
  }

  // dense spectral pseudo-inverse at the coarsest level
  const CsrMatrix& Ac = H.levels.back().A;
  if (Ac.nrows > 4000)
    throw std::runtime_error("amg_setup: coarsening stalled with a large coarsest level");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_dense(Ac));
  if (es.info() != Eigen::Success) throw std::runtime_error("amg_setup: coarse eigensolver failed");
  double lmax = es.eigenvalues().size() ? es.eigenvalues().cwiseAbs().maxCoeff() : 0.0;
  H.coarse_vec = es.eigenvectors();
  H.coarse_inv = es.eigenvalues();
  for (int i = 0; i < H.coarse_inv.size(); ++i)
    H.coarse_inv(i) = H.coarse_inv(i) > 1e-12 * lmax ? 1.0 / H.coarse_inv(i) : 0.0;
  return H;
}

namespace detail {

inline void gauss_seidel(const CsrMatrix& A, const std::vector<double>& d,
                         const std::vector<double>& r, std::vector<double>& x, bool forward) {
  int n = A.nrows;
  for (int ii = 0; ii < n; ++ii) {
    int i = forward ? ii : n - 1 - ii;
    double s = r[i];
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
      int j = A.col_idx[k];
      if (j != i) s -= A.vals[k] * x[j];
    }
    x[i] = s / d[i];
  }
}

inline void vcycle_level(const AmgHierarchy& H, int l, const std::vector<double>& r,
                         std::vector<double>& x) {
  const AmgLevel& lev = H.levels[l];
  if (l == H.num_levels() - 1) {
    Eigen::Map<const Eigen::VectorXd> rv(r.data(), r.size());
    Eigen::VectorXd xc = H.coarse_vec * (H.coarse_inv.asDiagonal() * (H.coarse_vec.transpose() * rv));
    x.assign(xc.data(), xc.data() + xc.size());
    return;
  }
  x.assign(r.size(), 0.0);
  for (int s = 0; s < H.params.sweeps; ++s) detail::gauss_seidel(lev.A, lev.diag, r, x, true);

  std::vector<double> res(r.size());
  lev.A.mult(x.data(), res.data());
  for (size_t i = 0; i < r.size(); ++i) res[i] = r[i] - res[i];
  std::vector<double> rc = lev.P.mult_t(res);
  std::vector<double> xc;
  vcycle_level(H, l + 1, rc, xc);
  std::vector<double> px = lev.P.mult(xc);
  for (size_t i = 0; i < x.size(); ++i) x[i] += px[i];

  for (int s = 0; s < H.params.sweeps; ++s) detail::gauss_seidel(lev.A, lev.diag, r, x, false);
}

}  // namespace detail

/// One V(1,1) cycle applied to a residual; symmetric as an operator
/// (forward Gauss-Seidel down, backward up).
inline std::vector<double> amg_vcycle(const AmgHierarchy& H, const std::vector<double>& r) {
  if ((int)r.size() != H.finest_size()) throw std::invalid_argument("amg_vcycle: size mismatch");
  std::vector<double> x;
  detail::vcycle_level(H, 0, r, x);
  return x;
}

/// The V-cycle as a LinearOperator (hierarchy held by reference).
inline LinearOperator make_amg_operator(const AmgHierarchy& H) {
  return {H.finest_size(), true, [&H](const double* r, double* y) {
            std::vector<double> rv(r, r + H.finest_size());
            auto x = amg_vcycle(H, rv);
            std::copy(x.begin(), x.end(), y);
          }};
}

}  // namespace dpgamg
