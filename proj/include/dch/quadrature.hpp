// Gauss quadrature on the reference triangle.
//
// Points are stored in barycentric coordinates with weights relative to the
// element area, so for a triangle K the rule integrates as
//   integral_K f = |K| * sum_q w_q f(x(l0,l1,l2)).
#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace dch {

struct QuadPoint {
  double l0, l1, l2;  // barycentric coordinates
  double w;           // weight, relative to element area (weights sum to 1)
};

struct QuadratureRule {
  std::vector<QuadPoint> points;
  int degree = 0;  // exact for polynomials of total degree <= degree
};

namespace detail {

// Appends the 3 (a,b,b) permutations of a two-parameter symmetric orbit.
inline void push_orbit3(std::vector<QuadPoint>& pts, double a, double b, double w) {
  pts.push_back({a, b, b, w});
  pts.push_back({b, a, b, w});
  pts.push_back({b, b, a, w});
}

// Appends all 6 permutations of (a,b,c).
inline void push_orbit6(std::vector<QuadPoint>& pts, double a, double b, double c, double w) {
  pts.push_back({a, b, c, w});
  pts.push_back({a, c, b, w});
  pts.push_back({b, a, c, w});
  pts.push_back({b, c, a, w});
  pts.push_back({c, a, b, w});
  pts.push_back({c, b, a, w});
}

}  // namespace detail

// 6-point rule, exact through degree 4. Sufficient for every system matrix:
// the highest-degree integrand is phi^2 u_j u_i (degree 4).
inline const QuadratureRule& triangle_rule_degree4() {
  static const QuadratureRule rule = [] {
    QuadratureRule r;
    r.degree = 4;
    detail::push_orbit3(r.points, 0.108103018168070, 0.445948490915965,
                        0.223381589678011);
    detail::push_orbit3(r.points, 0.816847572980459, 0.091576213509771,
                        0.109951743655322);
    return r;
  }();
  return rule;
}

// 12-point rule, exact through degree 6. Used for load vectors and error
// norms against non-polynomial exact solutions.
inline const QuadratureRule& triangle_rule_degree6() {
  static const QuadratureRule rule = [] {
    QuadratureRule r;
    r.degree = 6;
    detail::push_orbit3(r.points, 0.501426509658179, 0.249286745170910,
                        0.116786275726379);
    detail::push_orbit3(r.points, 0.873821971016996, 0.063089014491502,
                        0.050844906370207);
    detail::push_orbit6(r.points, 0.053145049844816, 0.310352451033785,
                        0.636502499121399, 0.082851075618374);
    return r;
  }();
  return rule;
}

// Gauss-Legendre nodes and weights on [0,1], by Newton iteration on the
// Legendre recurrence. Weights sum to 1.
inline std::vector<std::pair<double, double>> gauss_legendre_01(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre_01: n must be >= 1");
  std::vector<std::pair<double, double>> out(static_cast<std::size_t>(n));
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < n; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));  // root guess on [-1,1]
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    out[static_cast<std::size_t>(n - 1 - i)] = {0.5 * (x + 1.0), 0.5 * w};
  }
  return out;
}

// Tensor Gauss-Legendre rule collapsed onto the triangle through the Duffy
// map x = u, y = v(1-u). Exact through total degree 2n-2; n*n points. Meant
// for refinement checks where a fixed tabulated rule is not enough.
inline QuadratureRule collapsed_triangle_rule(int n) {
  const auto gl = gauss_legendre_01(n);
  QuadratureRule r;
  r.degree = 2 * n - 2;
  r.points.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (const auto& [u, wu] : gl) {
    for (const auto& [v, wv] : gl) {
      const double x = u;
      const double y = v * (1.0 - u);
      // relative weight: the Duffy Jacobian (1-u) over the triangle area 1/2
      r.points.push_back({1.0 - x - y, x, y, 2.0 * wu * wv * (1.0 - u)});
    }
  }
  return r;
}

}  // namespace dch
