#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "dpgamg/csr.hpp"

namespace dpgamg {

inline Eigen::MatrixXd to_dense(const CsrMatrix& A) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(A.nrows, A.ncols);
  for (int i = 0; i < A.nrows; ++i)
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) M(i, A.col_idx[k]) = A.vals[k];
  return M;
}

inline CsrMatrix from_dense(const Eigen::MatrixXd& M, double drop_tol = 0.0) {
  CooBuilder b((int)M.rows(), (int)M.cols());
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j)
      if (std::abs(M(i, j)) > drop_tol) b.add(i, j, M(i, j));
  return b.assemble();
}

struct GenEigResult {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // G-orthonormal columns
};

/// Full spectrum of A x = lambda G x for symmetric A and SPD G, by
/// Cholesky reduction to a standard symmetric problem.  Deliberately
/// capped: this is an oracle for small systems, not a production path.
inline GenEigResult dense_generalized_eig(const Eigen::MatrixXd& A, const Eigen::MatrixXd& G) {
  if (A.rows() != A.cols() || G.rows() != G.cols() || A.rows() != G.rows())
    throw std::invalid_argument("dense_generalized_eig: dimension mismatch");
  if (A.rows() > 4000)
    throw std::invalid_argument("dense_generalized_eig: dimension exceeds the 4000 budget");

  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("dense_generalized_eig: G is not positive definite");
  Eigen::MatrixXd L = llt.matrixL();
  // C = L^{-1} A L^{-T}, symmetrized against roundoff.
  Eigen::MatrixXd C = L.triangularView<Eigen::Lower>().solve(A);
  C = L.triangularView<Eigen::Lower>().solve(C.transpose()).eval();
  C = 0.5 * (C + C.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("dense_generalized_eig: eigensolver failed to converge");

  GenEigResult out;
  out.values = es.eigenvalues();
  out.vectors = L.transpose().triangularView<Eigen::Upper>().solve(es.eigenvectors());
  return out;
}

inline GenEigResult dense_generalized_eig(const CsrMatrix& A, const CsrMatrix& G) {
  return dense_generalized_eig(to_dense(A), to_dense(G));
}

}  // namespace dpgamg
