#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace dpgamg {

/// Compressed-row sparse matrix.  Column indices are sorted within each
/// row and duplicates are merged at construction time.
struct CsrMatrix {
  int nrows = 0;
  int ncols = 0;
  std::vector<int> row_ptr{0};
  std::vector<int> col_idx;
  std::vector<double> vals;

  int nnz() const { return (int)col_idx.size(); }

  void mult(const double* x, double* y) const {
    for (int i = 0; i < nrows; ++i) {
      double s = 0.0;
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += vals[k] * x[col_idx[k]];
      y[i] = s;
    }
  }

  std::vector<double> mult(const std::vector<double>& x) const {
    if ((int)x.size() != ncols) throw std::invalid_argument("CsrMatrix::mult: size mismatch");
    std::vector<double> y(nrows);
    mult(x.data(), y.data());
    return y;
  }

  /// y += A^T x (y must be zero-initialized by the caller if = is wanted).
  void mult_t_add(const double* x, double* y) const {
    for (int i = 0; i < nrows; ++i)
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) y[col_idx[k]] += vals[k] * x[i];
  }

  std::vector<double> mult_t(const std::vector<double>& x) const {
    if ((int)x.size() != nrows) throw std::invalid_argument("CsrMatrix::mult_t: size mismatch");
    std::vector<double> y(ncols, 0.0);
    mult_t_add(x.data(), y.data());
    return y;
  }

  double operator()(int i, int j) const {
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
      if (col_idx[k] == j) return vals[k];
    return 0.0;
  }
};

/// Triplet accumulator; assemble() sorts, merges duplicates, and drops
/// entries that sum to exactly zero (so never-touched blocks stay
/// structurally empty).
class CooBuilder {
 public:
  CooBuilder(int nrows, int ncols) : nrows_(nrows), ncols_(ncols) {}

  void add(int i, int j, double v) {
    if (i < 0 || i >= nrows_ || j < 0 || j >= ncols_)
      throw std::out_of_range("CooBuilder::add: index out of range");
    trip_.emplace_back(i, j, v);
  }

  CsrMatrix assemble() {
    std::sort(trip_.begin(), trip_.end(), [](const auto& a, const auto& b) {
      return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    CsrMatrix A;
    A.nrows = nrows_;
    A.ncols = ncols_;
    A.row_ptr.assign(nrows_ + 1, 0);
    size_t k = 0;
    for (int i = 0; i < nrows_; ++i) {
      while (k < trip_.size() && std::get<0>(trip_[k]) == i) {
        int j = std::get<1>(trip_[k]);
        double v = 0.0;
        while (k < trip_.size() && std::get<0>(trip_[k]) == i && std::get<1>(trip_[k]) == j)
          v += std::get<2>(trip_[k++]);
        if (v != 0.0) {
          A.col_idx.push_back(j);
          A.vals.push_back(v);
        }
      }
      A.row_ptr[i + 1] = (int)A.col_idx.size();
    }
    return A;
  }

 private:
  int nrows_, ncols_;
  std::vector<std::tuple<int, int, double>> trip_;
};

inline CsrMatrix csr_identity(int n) {
  CsrMatrix I;
  I.nrows = I.ncols = n;
  I.row_ptr.resize(n + 1);
  I.col_idx.resize(n);
  I.vals.assign(n, 1.0);
  for (int i = 0; i <= n; ++i) I.row_ptr[i] = i;
  for (int i = 0; i < n; ++i) I.col_idx[i] = i;
  return I;
}

inline CsrMatrix csr_transpose(const CsrMatrix& A) {
  CsrMatrix T;
  T.nrows = A.ncols;
  T.ncols = A.nrows;
  T.row_ptr.assign(A.ncols + 1, 0);
  for (int c : A.col_idx) ++T.row_ptr[c + 1];
  for (int i = 0; i < A.ncols; ++i) T.row_ptr[i + 1] += T.row_ptr[i];
  T.col_idx.resize(A.nnz());
  T.vals.resize(A.nnz());
  std::vector<int> fill(T.row_ptr.begin(), T.row_ptr.end() - 1);
  for (int i = 0; i < A.nrows; ++i)
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
      int pos = fill[A.col_idx[k]]++;
      T.col_idx[pos] = i;
      T.vals[pos] = A.vals[k];
    }
  return T;  // rows come out sorted because we sweep A's rows in order
}

/// C = A * B with a dense scratch accumulator per row.
inline CsrMatrix csr_matmul(const CsrMatrix& A, const CsrMatrix& B) {
  if (A.ncols != B.nrows) throw std::invalid_argument("csr_matmul: dimension mismatch");
  CsrMatrix C;
  C.nrows = A.nrows;
  C.ncols = B.ncols;
  C.row_ptr.assign(A.nrows + 1, 0);
  std::vector<double> acc(B.ncols, 0.0);
  std::vector<int> marker(B.ncols, -1);
  std::vector<int> cols;
  for (int i = 0; i < A.nrows; ++i) {
    cols.clear();
    for (int ka = A.row_ptr[i]; ka < A.row_ptr[i + 1]; ++ka) {
      int j = A.col_idx[ka];
      double va = A.vals[ka];
      for (int kb = B.row_ptr[j]; kb < B.row_ptr[j + 1]; ++kb) {
        int c = B.col_idx[kb];
        if (marker[c] != i) {
          marker[c] = i;
          acc[c] = 0.0;
          cols.push_back(c);
        }
        acc[c] += va * B.vals[kb];
      }
    }
    std::sort(cols.begin(), cols.end());
    for (int c : cols)
      if (acc[c] != 0.0) {
        C.col_idx.push_back(c);
        C.vals.push_back(acc[c]);
      }
    C.row_ptr[i + 1] = (int)C.col_idx.size();
  }
  return C;
}

/// (A + A^T)/2, used to keep Galerkin products exactly symmetric.
inline CsrMatrix csr_symmetrize(const CsrMatrix& A) {
  if (A.nrows != A.ncols) throw std::invalid_argument("csr_symmetrize: matrix not square");
  CsrMatrix T = csr_transpose(A);
  CooBuilder b(A.nrows, A.ncols);
  for (int i = 0; i < A.nrows; ++i) {
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      b.add(i, A.col_idx[k], 0.5 * A.vals[k]);
    for (int k = T.row_ptr[i]; k < T.row_ptr[i + 1]; ++k)
      b.add(i, T.col_idx[k], 0.5 * T.vals[k]);
  }
  return b.assemble();
}

/// P^T A P, symmetrized.
inline CsrMatrix csr_rap(const CsrMatrix& A, const CsrMatrix& P) {
  return csr_symmetrize(csr_matmul(csr_transpose(P), csr_matmul(A, P)));
}

inline bool csr_is_symmetric(const CsrMatrix& A, double tol = 0.0) {
  if (A.nrows != A.ncols) return false;
  CsrMatrix T = csr_transpose(A);
  if (T.row_ptr != A.row_ptr || T.col_idx != A.col_idx) return false;
  for (int k = 0; k < A.nnz(); ++k)
    if (std::abs(A.vals[k] - T.vals[k]) > tol) return false;
  return true;
}

inline std::vector<double> csr_diagonal(const CsrMatrix& A) {
  std::vector<double> d(A.nrows, 0.0);
  for (int i = 0; i < A.nrows; ++i)
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      if (A.col_idx[k] == i) d[i] = A.vals[k];
  return d;
}

/// Extract the submatrix A(rows, cols); the index lists define the new
/// (sub-)numbering in order.
inline CsrMatrix csr_extract(const CsrMatrix& A, const std::vector<int>& rows,
                             const std::vector<int>& cols) {
  std::vector<int> colmap(A.ncols, -1);
  for (int j = 0; j < (int)cols.size(); ++j) colmap[cols[j]] = j;
  CsrMatrix S;
  S.nrows = (int)rows.size();
  S.ncols = (int)cols.size();
  S.row_ptr.assign(S.nrows + 1, 0);
  for (int i = 0; i < S.nrows; ++i) {
    int r = rows[i];
    std::vector<std::pair<int, double>> row;
    for (int k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k) {
      int j = colmap[A.col_idx[k]];
      if (j >= 0) row.emplace_back(j, A.vals[k]);
    }
    std::sort(row.begin(), row.end());
    for (auto& [j, v] : row) {
      S.col_idx.push_back(j);
      S.vals.push_back(v);
    }
    S.row_ptr[i + 1] = (int)S.col_idx.size();
  }
  return S;
}

inline double quadratic_form(const CsrMatrix& A, const std::vector<double>& x) {
  std::vector<double> y = A.mult(x);
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

}  // namespace dpgamg
