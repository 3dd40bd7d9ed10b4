#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace dpgamg {

/// One-dimensional quadrature point on the reference interval [0,1].
struct QuadPoint1d {
  double s;
  double w;
};

/// Two-dimensional quadrature point on a reference element.
struct QuadPoint2d {
  double x;
  double y;
  double w;
};

/// Gauss-Legendre rule with `npts` points, mapped to [0,1].
/// Nodes are Newton-refined roots of the Legendre polynomial, so no
/// tabulated coefficients limit the available orders.
inline std::vector<QuadPoint1d> gauss_rule_1d(int npts) {
  if (npts < 1) throw std::invalid_argument("gauss_rule_1d: npts must be >= 1");
  std::vector<QuadPoint1d> rule(npts);
  const int n = npts;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Chebyshev-like initial guess for the i-th root of P_n on [-1,1].
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      // Evaluate P_n and P_n' by the three-term recurrence.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Map [-1,1] -> [0,1]; exploit the symmetry of the roots.
    rule[i] = {0.5 * (1.0 - x), 0.5 * w};
    rule[n - 1 - i] = {0.5 * (1.0 + x), 0.5 * w};
  }
  return rule;
}

/// Rule on [0,1] exact for polynomials up to `degree`.
inline std::vector<QuadPoint1d> edge_rule(int degree) {
  if (degree < 0) throw std::invalid_argument("edge_rule: degree must be >= 0");
  return gauss_rule_1d(degree / 2 + 1);
}

/// Tensor Gauss rule on the unit square [0,1]^2, exact for Q_{degree,degree}.
inline std::vector<QuadPoint2d> quad_rule(int degree) {
  auto line = edge_rule(degree);
  std::vector<QuadPoint2d> rule;
  rule.reserve(line.size() * line.size());
  for (const auto& a : line)
    for (const auto& b : line) rule.push_back({a.s, b.s, a.w * b.w});
  return rule;
}

/// Rule on the reference triangle (0,0),(1,0),(0,1), exact for total
/// degree `degree`.  Built by collapsing a tensor Gauss rule through the
/// Duffy map (u,v) -> (u(1-v), v) with Jacobian (1-v); the extra factor
/// raises the v-degree by one, hence the ceil((degree+2)/2) point count.
inline std::vector<QuadPoint2d> triangle_rule(int degree) {
  if (degree < 0) throw std::invalid_argument("triangle_rule: degree must be >= 0");
  auto line = gauss_rule_1d((degree + 3) / 2);
  std::vector<QuadPoint2d> rule;
  rule.reserve(line.size() * line.size());
  for (const auto& u : line)
    for (const auto& v : line)
      rule.push_back({u.s * (1.0 - v.s), v.s, u.w * v.w * (1.0 - v.s)});
  return rule;
}

}  // namespace dpgamg
