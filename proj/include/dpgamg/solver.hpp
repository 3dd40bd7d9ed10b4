#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpgamg/csr.hpp"

namespace dpgamg {

inline double vec_dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double vec_norm(const std::vector<double>& a) { return std::sqrt(vec_dot(a, a)); }

/// Square operator y = Op x given by a callback; `symmetric` is a promise
/// used by probe tests, not enforced here.
struct LinearOperator {
  int n = 0;
  bool symmetric = false;
  std::function<void(const double* x, double* y)> apply_fn;

  void apply(const double* x, double* y) const { apply_fn(x, y); }
  std::vector<double> apply(const std::vector<double>& x) const {
    if ((int)x.size() != n) throw std::invalid_argument("LinearOperator: size mismatch");
    std::vector<double> y(n);
    apply_fn(x.data(), y.data());
    return y;
  }
};

/// Wraps a CSR matrix (held by reference; keep it alive).
inline LinearOperator make_operator(const CsrMatrix& A) {
  if (A.nrows != A.ncols) throw std::invalid_argument("make_operator: matrix not square");
  return {A.nrows, true, [&A](const double* x, double* y) { A.mult(x, y); }};
}

inline LinearOperator identity_operator(int n) {
  return {n, true, [n](const double* x, double* y) { std::copy(x, x + n, y); }};
}

struct PcgReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;  // ||r_k|| / ||r_0||, k = 0..iterations
  double avg_reduction = 1.0;            // (r_final/r_0)^(1/iterations)
  double resid_initial = 0.0;
  double resid_final = 0.0;     // recurrence residual norm
  double resid_explicit = 0.0;  // ||b - A x|| recomputed at the end
  bool explicit_mismatch = false;
  double wall_time = 0.0;
};

struct PcgResult {
  std::vector<double> x;
  PcgReport report;
};

/// Preconditioned conjugate gradients with zero initial guess.
/// Convergence: recurrence residual below rtol * ||b||, with an explicit
/// final residual recomputed as a drift guard (mismatch beyond 10x is
/// flagged in the report, not failed).  A nonpositive pAp or rz signals an
/// indefinite operator or preconditioner and raises an error.
inline PcgResult pcg(const LinearOperator& A, const LinearOperator* B,
                     const std::vector<double>& b, double rtol, int maxit) {
  if ((int)b.size() != A.n) throw std::invalid_argument("pcg: rhs size mismatch");
  if (B && B->n != A.n) throw std::invalid_argument("pcg: preconditioner size mismatch");
  auto t0 = std::chrono::steady_clock::now();

  PcgResult out;
  out.x.assign(A.n, 0.0);
  PcgReport& rep = out.report;

  std::vector<double> r = b;
  double r0 = vec_norm(r);
  rep.resid_initial = r0;
  rep.residual_history.push_back(1.0);
  if (r0 == 0.0) {
    rep.converged = true;
    rep.resid_final = rep.resid_explicit = 0.0;
    return out;
  }

  std::vector<double> z = B ? B->apply(r) : r;
  std::vector<double> p = z;
  std::vector<double> Ap(A.n);
  double rz = vec_dot(r, z);
  if (rz <= 0.0) throw std::runtime_error("pcg: preconditioner not positive definite");

  double rnorm = r0;
  int it = 0;
  while (it < maxit && rnorm > rtol * r0) {
    A.apply(p.data(), Ap.data());
    double pAp = vec_dot(p, Ap);
    if (pAp <= 0.0) throw std::runtime_error("pcg: operator not positive definite (p^T A p <= 0)");
    double alpha = rz / pAp;
    for (int i = 0; i < A.n; ++i) {
      out.x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    ++it;
    rnorm = vec_norm(r);
    rep.residual_history.push_back(rnorm / r0);
    if (rnorm <= rtol * r0) break;
    z = B ? B->apply(r) : r;
    double rz_new = vec_dot(r, z);
    if (rz_new <= 0.0)
      throw std::runtime_error("pcg: preconditioner not positive definite (z^T r <= 0)");
    double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < A.n; ++i) p[i] = z[i] + beta * p[i];
  }

  rep.iterations = it;
  rep.converged = rnorm <= rtol * r0;
  rep.resid_final = rnorm;
  rep.avg_reduction = it > 0 ? std::pow(rnorm / r0, 1.0 / it) : 1.0;

  std::vector<double> Ax(A.n);
  A.apply(out.x.data(), Ax.data());
  for (int i = 0; i < A.n; ++i) Ax[i] = b[i] - Ax[i];
  rep.resid_explicit = vec_norm(Ax);
  rep.explicit_mismatch = rep.resid_explicit > 10.0 * rep.resid_final + 1e-14 * r0;

  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace dpgamg
