#pragma once

// Self-contained dense routines used as independent oracles: cyclic Jacobi
// eigenvalue iteration, an unblocked Cholesky factorization, and the
// generalized eigenvalue reduction built from the two.  No Eigen and no
// library headers on purpose, so the production paths are checked against
// a second implementation rather than against themselves.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat mat_zero(int n) { return Mat(n, std::vector<double>(n, 0.0)); }

// Eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
inline std::vector<double> jacobi_eigenvalues(Mat a) {
  const int n = static_cast<int>(a.size());
  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(a[i][j]));
  if (scale == 0.0) return std::vector<double>(n, 0.0);

  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(a[p][q]));
    if (off <= 1e-15 * scale) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) <= 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t =
            (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

// Lower Cholesky factor of a symmetric positive definite matrix.
inline Mat cholesky(const Mat& a) {
  const int n = static_cast<int>(a.size());
  Mat l = mat_zero(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[i][j];
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      if (i == j) {
        if (s <= 0.0) throw std::runtime_error("oracle cholesky: not positive definite");
        l[i][i] = std::sqrt(s);
      } else {
        l[i][j] = s / l[j][j];
      }
    }
  }
  return l;
}

// Solves A x = b through the Cholesky factor L of A.
inline std::vector<double> cholesky_solve(const Mat& l, std::vector<double> b) {
  const int n = static_cast<int>(l.size());
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < i; ++k) b[i] -= l[i][k] * b[k];
    b[i] /= l[i][i];
  }
  for (int i = n - 1; i >= 0; --i) {
    for (int k = i + 1; k < n; ++k) b[i] -= l[k][i] * b[k];
    b[i] /= l[i][i];
  }
  return b;
}

// Generalized eigenvalues of A x = lambda G x for symmetric A and SPD G:
// Cholesky-reduce to L^{-1} A L^{-T} and hand the result to Jacobi.
inline std::vector<double> generalized_eigenvalues(const Mat& a, const Mat& g) {
  const int n = static_cast<int>(a.size());
  const Mat l = cholesky(g);

  // y = L^{-1} a, column by column.
  Mat y = mat_zero(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      double s = a[i][j];
      for (int k = 0; k < i; ++k) s -= l[i][k] * y[k][j];
      y[i][j] = s / l[i][i];
    }
  }
  // c = y L^{-T}, row by row: c[i][j] solves sum_k c[i][k] l[j][k] = y[i][j].
  Mat c = mat_zero(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = y[i][j];
      for (int k = 0; k < j; ++k) s -= l[j][k] * c[i][k];
      c[i][j] = s / l[j][j];
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (c[i][j] + c[j][i]);
      c[i][j] = c[j][i] = v;
    }
  return jacobi_eigenvalues(c);
}

}  // namespace oracle
