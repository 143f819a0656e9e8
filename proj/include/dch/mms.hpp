// Manufactured solution and its source terms for the sourced scheme.
//
// The exact fields are p = mu = phi = cos(pi t) g(x) g(y) with
// g(s) = 16 s^2 (s-1)^2, so all three satisfy homogeneous Neumann data
// (g'(0) = g'(1) = 0). Plugging them into the strong system with
// f(phi) = phi^3 - phi gives
//   s1 = -lap p - gamma div(phi grad mu)
//   s2 = phi_t - eps lap mu - div(phi [grad p + gamma phi grad mu])
//   s3 = mu + eps lap phi - (1/eps)(phi^3 - phi)
// The closed forms below are hand-derived and are checked against a
// centered-difference oracle in the test suite.
#pragma once

#include <cmath>

#ifndef M_PI
#define M_PI 3.14159265358979323846
#endif

#include "dch/assembly.hpp"
#include "dch/field.hpp"
#include "dch/mesh.hpp"
#include "dch/quadrature.hpp"
#include "dch/system.hpp"

namespace dch {

struct ManufacturedSolution {
  double epsilon = 1.0;
  double gamma = 1.0;

  static double g(double s) {
    const double t = s * (s - 1.0);
    return 16.0 * t * t;
  }
  static double dg(double s) { return 32.0 * s * (s - 1.0) * (2.0 * s - 1.0); }
  static double d2g(double s) { return 32.0 * (6.0 * s * s - 6.0 * s + 1.0); }

  static double time_factor(double t) { return std::cos(M_PI * t); }
  static double time_factor_dt(double t) { return -M_PI * std::sin(M_PI * t); }

  // all three fields coincide
  static double value(double x, double y, double t) {
    return time_factor(t) * g(x) * g(y);
  }
  static double value_dx(double x, double y, double t) {
    return time_factor(t) * dg(x) * g(y);
  }
  static double value_dy(double x, double y, double t) {
    return time_factor(t) * g(x) * dg(y);
  }
  static double value_dt(double x, double y, double t) {
    return time_factor_dt(t) * g(x) * g(y);
  }
  static double laplacian(double x, double y, double t) {
    return time_factor(t) * (d2g(x) * g(y) + g(x) * d2g(y));
  }

  // space-only factor G = g(x) g(y) and its derived quantities
  static double spatial(double x, double y) { return g(x) * g(y); }
  static double spatial_lap(double x, double y) { return d2g(x) * g(y) + g(x) * d2g(y); }
  static double spatial_grad_sq(double x, double y) {
    const double gx = dg(x) * g(y);
    const double gy = g(x) * dg(y);
    return gx * gx + gy * gy;
  }

  double s1(double x, double y, double t) const {
    const double c = time_factor(t);
    const double lap = spatial_lap(x, y);
    const double grad2 = spatial_grad_sq(x, y);
    const double gv = spatial(x, y);
    return -c * lap - gamma * c * c * (grad2 + gv * lap);
  }

  double s2(double x, double y, double t) const {
    const double c = time_factor(t);
    const double ct = time_factor_dt(t);
    const double lap = spatial_lap(x, y);
    const double grad2 = spatial_grad_sq(x, y);
    const double gv = spatial(x, y);
    return ct * gv - epsilon * c * lap - c * c * (grad2 + gv * lap) -
           gamma * c * c * c * (2.0 * gv * grad2 + gv * gv * lap);
  }

  double s3(double x, double y, double t) const {
    const double c = time_factor(t);
    const double gv = spatial(x, y);
    const double v = c * gv;
    return v + epsilon * c * spatial_lap(x, y) - (v * v * v - v) / epsilon;
  }
};

// Rule that integrates s1 * u_i exactly: s1 is a polynomial of total degree
// 14 (the capillary flux divergence), so the product with a P1 basis
// function has degree 15; the collapsed 9x9 rule is exact through 16.
inline const QuadratureRule& pressure_load_rule() {
  static const QuadratureRule rule = collapsed_triangle_rule(9);
  return rule;
}

// Adds the manufactured loads to the scheme sources at time t_m. The weak
// sourced system maps onto the N(xi) = s form as
//   s1 += (s1, u_i),  s2 += tau (s2, u_i),  s3 -= (s3, u_i);
// the third block picks up a minus sign because the chemical-potential
// equation is negated when rearranged into operator form.
//
// b1 is integrated exactly: the pressure block is singular with constants in
// its left kernel, so its right-hand side must sum to zero to machine
// precision or the solve acquires an inconsistency floor. b2 and b3 use the
// degree-6 rule (their quadrature error is far below the discretization
// error and does not touch a kernel).
inline void apply_mms_loads(SourceTriple& s, const MeshLevel& m, const ManufacturedSolution& ms,
                            double t, double tau,
                            const QuadratureRule& rule = triangle_rule_degree6()) {
  const NodalField b1 =
      assemble_load(m, [&](double x, double y) { return ms.s1(x, y, t); }, pressure_load_rule());
  const NodalField b2 = assemble_load(m, [&](double x, double y) { return ms.s2(x, y, t); }, rule);
  const NodalField b3 = assemble_load(m, [&](double x, double y) { return ms.s3(x, y, t); }, rule);
  axpy(s.s1, 1.0, b1);
  axpy(s.s2, tau, b2);
  axpy(s.s3, -1.0, b3);
}

}  // namespace dch
