// P1 finite element assembly on a MeshLevel: stiffness, mass, field-weighted
// variants, load vectors, nodal interpolation, discrete norms and means.
//
// Matrix entries, with u_i the nodal basis and w_h, psi_h P1 fields:
//   A_ij = (grad u_j, grad u_i)
//   M_ij = (u_j, u_i)
//   C_ij = (w_h grad u_j, grad u_i)          [weighted stiffness, power 1]
//   B_ij = (w_h^2 grad u_j, grad u_i)        [weighted stiffness, power 2]
//   Q_ij = (psi_h^2 u_j, u_i)
// All integrands are polynomials of degree <= 4, so the degree-4 rule
// integrates them exactly.
#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dch/field.hpp"
#include "dch/mesh.hpp"
#include "dch/quadrature.hpp"
#include "dch/sparse.hpp"

namespace dch {

namespace detail {

struct ElementGeometry {
  std::array<int, 3> v;                  // vertex ids
  std::array<std::array<double, 2>, 3> grad;  // P1 basis gradients (constant)
  double area;
};

inline ElementGeometry element_geometry(const MeshLevel& m, std::size_t e) {
  const auto& t = m.tris[e];
  const auto& p0 = m.nodes[static_cast<std::size_t>(t[0])];
  const auto& p1 = m.nodes[static_cast<std::size_t>(t[1])];
  const auto& p2 = m.nodes[static_cast<std::size_t>(t[2])];
  const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
  ElementGeometry g;
  g.v = t;
  g.area = 0.5 * det;
  g.grad[0] = {(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det};
  g.grad[1] = {(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det};
  g.grad[2] = {(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det};
  return g;
}

inline std::array<double, 2> quad_xy(const MeshLevel& m, const std::array<int, 3>& t,
                                     const QuadPoint& q) {
  const auto& p0 = m.nodes[static_cast<std::size_t>(t[0])];
  const auto& p1 = m.nodes[static_cast<std::size_t>(t[1])];
  const auto& p2 = m.nodes[static_cast<std::size_t>(t[2])];
  return {q.l0 * p0[0] + q.l1 * p1[0] + q.l2 * p2[0],
          q.l0 * p0[1] + q.l1 * p1[1] + q.l2 * p2[1]};
}

inline double bary(const QuadPoint& q, int local) {
  return local == 0 ? q.l0 : (local == 1 ? q.l1 : q.l2);
}

}  // namespace detail

// Node-adjacency sparsity (the common pattern of A, M, B, C, Q) together with
// per-element CSR slot indices so weighted matrices can be reassembled into a
// fixed pattern without re-sorting triplets.
struct ElementSlots {
  SparseMatrix skeleton;                     // pattern with zero values
  std::vector<std::array<int, 9>> slots;     // per element, row-major 3x3
};

inline ElementSlots build_element_slots(const MeshLevel& m) {
  std::vector<Triplet> t;
  t.reserve(m.tris.size() * 9);
  for (const auto& tri : m.tris)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) t.push_back({tri[a], tri[b], 0.0});
  ElementSlots es;
  es.skeleton = SparseMatrix::from_triplets(m.node_count(), m.node_count(), std::move(t));
  es.slots.resize(m.tris.size());
  for (std::size_t e = 0; e < m.tris.size(); ++e) {
    const auto& tri = m.tris[e];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        es.slots[e][static_cast<std::size_t>(3 * a + b)] = es.skeleton.slot(tri[a], tri[b]);
  }
  return es;
}

namespace detail {

// Accumulates kernel(e, local 3x3) over all elements into a fresh matrix.
template <typename Kernel>
SparseMatrix assemble_matrix(const MeshLevel& m, Kernel&& kernel) {
  std::vector<Triplet> t;
  t.reserve(m.tris.size() * 9);
  std::array<double, 9> local{};
  for (std::size_t e = 0; e < m.tris.size(); ++e) {
    kernel(e, local);
    const auto& tri = m.tris[e];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        t.push_back({tri[a], tri[b], local[static_cast<std::size_t>(3 * a + b)]});
  }
  return SparseMatrix::from_triplets(m.node_count(), m.node_count(), std::move(t));
}

// Same accumulation order into a preallocated pattern (bit-identical values).
template <typename Kernel>
void assemble_matrix_into(const MeshLevel& m, const ElementSlots& es, Kernel&& kernel,
                          SparseMatrix& out) {
  std::fill(out.values().begin(), out.values().end(), 0.0);
  std::array<double, 9> local{};
  for (std::size_t e = 0; e < m.tris.size(); ++e) {
    kernel(e, local);
    for (int k = 0; k < 9; ++k)
      out.values()[static_cast<std::size_t>(es.slots[e][static_cast<std::size_t>(k)])] +=
          local[static_cast<std::size_t>(k)];
  }
}

template <int Power>
struct WeightedStiffnessKernel {
  const MeshLevel& m;
  const NodalField& w;
  const QuadratureRule& rule;
  void operator()(std::size_t e, std::array<double, 9>& local) const {
    const auto g = element_geometry(m, e);
    double factor = 0.0;
    for (const auto& q : rule.points) {
      const double wq = q.l0 * w.v[static_cast<std::size_t>(g.v[0])] +
                        q.l1 * w.v[static_cast<std::size_t>(g.v[1])] +
                        q.l2 * w.v[static_cast<std::size_t>(g.v[2])];
      factor += q.w * (Power == 1 ? wq : wq * wq);
    }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double gg = g.grad[a][0] * g.grad[b][0] + g.grad[a][1] * g.grad[b][1];
        local[static_cast<std::size_t>(3 * a + b)] = g.area * factor * gg;
      }
  }
};

struct StiffnessKernel {
  const MeshLevel& m;
  void operator()(std::size_t e, std::array<double, 9>& local) const {
    const auto g = element_geometry(m, e);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        local[static_cast<std::size_t>(3 * a + b)] =
            g.area * (g.grad[a][0] * g.grad[b][0] + g.grad[a][1] * g.grad[b][1]);
  }
};

struct MassKernel {
  const MeshLevel& m;
  const QuadratureRule& rule;
  void operator()(std::size_t e, std::array<double, 9>& local) const {
    const auto g = element_geometry(m, e);
    local.fill(0.0);
    for (const auto& q : rule.points) {
      const std::array<double, 3> l = {q.l0, q.l1, q.l2};
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          local[static_cast<std::size_t>(3 * a + b)] +=
              g.area * q.w * l[static_cast<std::size_t>(a)] * l[static_cast<std::size_t>(b)];
    }
  }
};

}  // namespace detail

// A: symmetric positive semidefinite, kernel = constants.
inline SparseMatrix assemble_stiffness(const MeshLevel& m) {
  return detail::assemble_matrix(m, detail::StiffnessKernel{m});
}

// M: symmetric positive definite, 1^T M 1 = |Omega| = 1.
inline SparseMatrix assemble_mass(const MeshLevel& m,
                                  const QuadratureRule& rule = triangle_rule_degree4()) {
  return detail::assemble_matrix(m, detail::MassKernel{m, rule});
}

// C (power 1) and B (power 2): w-weighted stiffness; zero row sums.
inline SparseMatrix assemble_weighted_stiffness(const MeshLevel& m, const NodalField& w,
                                                int power,
                                                const QuadratureRule& rule = triangle_rule_degree4()) {
  if (w.level != m.level || static_cast<int>(w.size()) != m.node_count())
    throw std::invalid_argument("assemble_weighted_stiffness: field/level mismatch");
  if (power == 1)
    return detail::assemble_matrix(m, detail::WeightedStiffnessKernel<1>{m, w, rule});
  if (power == 2)
    return detail::assemble_matrix(m, detail::WeightedStiffnessKernel<2>{m, w, rule});
  throw std::invalid_argument("assemble_weighted_stiffness: power must be 1 or 2");
}

inline void reassemble_weighted_stiffness(const MeshLevel& m, const ElementSlots& es,
                                          const NodalField& w, int power, SparseMatrix& out,
                                          const QuadratureRule& rule = triangle_rule_degree4()) {
  if (w.level != m.level || static_cast<int>(w.size()) != m.node_count())
    throw std::invalid_argument("reassemble_weighted_stiffness: field/level mismatch");
  if (power == 1)
    detail::assemble_matrix_into(m, es, detail::WeightedStiffnessKernel<1>{m, w, rule}, out);
  else if (power == 2)
    detail::assemble_matrix_into(m, es, detail::WeightedStiffnessKernel<2>{m, w, rule}, out);
  else
    throw std::invalid_argument("reassemble_weighted_stiffness: power must be 1 or 2");
}

// Q(psi): psi^2-weighted mass matrix (degree-4 integrand).
inline SparseMatrix assemble_phi_mass(const MeshLevel& m, const NodalField& psi,
                                      const QuadratureRule& rule = triangle_rule_degree4()) {
  if (psi.level != m.level || static_cast<int>(psi.size()) != m.node_count())
    throw std::invalid_argument("assemble_phi_mass: field/level mismatch");
  return detail::assemble_matrix(m, [&](std::size_t e, std::array<double, 9>& local) {
    const auto g = detail::element_geometry(m, e);
    local.fill(0.0);
    for (const auto& q : rule.points) {
      const std::array<double, 3> l = {q.l0, q.l1, q.l2};
      const double psiq = l[0] * psi.v[static_cast<std::size_t>(g.v[0])] +
                          l[1] * psi.v[static_cast<std::size_t>(g.v[1])] +
                          l[2] * psi.v[static_cast<std::size_t>(g.v[2])];
      const double f = g.area * q.w * psiq * psiq;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          local[static_cast<std::size_t>(3 * a + b)] += f * l[static_cast<std::size_t>(a)] * l[static_cast<std::size_t>(b)];
    }
  });
}

// Load vector b_i = (f, u_i) by quadrature of the given degree.
template <typename F>
NodalField assemble_load(const MeshLevel& m, F&& f,
                         const QuadratureRule& rule = triangle_rule_degree6()) {
  NodalField b = NodalField::zeros(m.level, static_cast<std::size_t>(m.node_count()));
  for (std::size_t e = 0; e < m.tris.size(); ++e) {
    const auto& tri = m.tris[e];
    const double area = detail::element_geometry(m, e).area;
    for (const auto& q : rule.points) {
      const auto xy = detail::quad_xy(m, tri, q);
      const double fv = f(xy[0], xy[1]);
      const double c = area * q.w * fv;
      b.v[static_cast<std::size_t>(tri[0])] += c * q.l0;
      b.v[static_cast<std::size_t>(tri[1])] += c * q.l1;
      b.v[static_cast<std::size_t>(tri[2])] += c * q.l2;
    }
  }
  return b;
}

// (phi_h^3, u_i), evaluated elementwise; equals Q(phi)*phi without
// materializing Q (same quadrature, same values).
inline NodalField cubic_load(const MeshLevel& m, const NodalField& phi,
                             const QuadratureRule& rule = triangle_rule_degree4()) {
  if (phi.level != m.level || static_cast<int>(phi.size()) != m.node_count())
    throw std::invalid_argument("cubic_load: field/level mismatch");
  NodalField b = NodalField::zeros(m.level, static_cast<std::size_t>(m.node_count()));
  const double area = m.cell_area();  // uniform mesh: all elements congruent
  for (const auto& tri : m.tris) {
    const double p0 = phi.v[static_cast<std::size_t>(tri[0])];
    const double p1 = phi.v[static_cast<std::size_t>(tri[1])];
    const double p2 = phi.v[static_cast<std::size_t>(tri[2])];
    for (const auto& q : rule.points) {
      const double ph = q.l0 * p0 + q.l1 * p1 + q.l2 * p2;
      const double c = area * q.w * ph * ph * ph;
      b.v[static_cast<std::size_t>(tri[0])] += c * q.l0;
      b.v[static_cast<std::size_t>(tri[1])] += c * q.l1;
      b.v[static_cast<std::size_t>(tri[2])] += c * q.l2;
    }
  }
  return b;
}

// Nodal interpolant I_h f.
template <typename F>
NodalField interpolate(const MeshLevel& m, F&& f) {
  NodalField out = NodalField::zeros(m.level, static_cast<std::size_t>(m.node_count()));
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = f(m.nodes[i][0], m.nodes[i][1]);
  return out;
}

// || u_h - exact ||_{L^2} by elementwise quadrature.
template <typename F>
double l2_error(const MeshLevel& m, const NodalField& field, F&& exact,
                const QuadratureRule& rule = triangle_rule_degree6()) {
  if (static_cast<int>(field.size()) != m.node_count())
    throw std::invalid_argument("l2_error: field length mismatch");
  double acc = 0.0;
  for (std::size_t e = 0; e < m.tris.size(); ++e) {
    const auto& tri = m.tris[e];
    const double area = detail::element_geometry(m, e).area;
    const double f0 = field.v[static_cast<std::size_t>(tri[0])];
    const double f1 = field.v[static_cast<std::size_t>(tri[1])];
    const double f2 = field.v[static_cast<std::size_t>(tri[2])];
    for (const auto& q : rule.points) {
      const auto xy = detail::quad_xy(m, tri, q);
      const double d = q.l0 * f0 + q.l1 * f1 + q.l2 * f2 - exact(xy[0], xy[1]);
      acc += area * q.w * d * d;
    }
  }
  return std::sqrt(acc);
}

// Full H^1 norm of the error: seminorm plus L^2 part. Needs the exact
// gradient components.
template <typename F, typename Fx, typename Fy>
double h1_error(const MeshLevel& m, const NodalField& field, F&& exact, Fx&& exact_dx,
                Fy&& exact_dy, const QuadratureRule& rule = triangle_rule_degree6()) {
  if (static_cast<int>(field.size()) != m.node_count())
    throw std::invalid_argument("h1_error: field length mismatch");
  double acc = 0.0;
  for (std::size_t e = 0; e < m.tris.size(); ++e) {
    const auto g = detail::element_geometry(m, e);
    const double f0 = field.v[static_cast<std::size_t>(g.v[0])];
    const double f1 = field.v[static_cast<std::size_t>(g.v[1])];
    const double f2 = field.v[static_cast<std::size_t>(g.v[2])];
    const double gx = f0 * g.grad[0][0] + f1 * g.grad[1][0] + f2 * g.grad[2][0];
    const double gy = f0 * g.grad[0][1] + f1 * g.grad[1][1] + f2 * g.grad[2][1];
    for (const auto& q : rule.points) {
      const auto xy = detail::quad_xy(m, g.v, q);
      const double d = q.l0 * f0 + q.l1 * f1 + q.l2 * f2 - exact(xy[0], xy[1]);
      const double dx = gx - exact_dx(xy[0], xy[1]);
      const double dy = gy - exact_dy(xy[0], xy[1]);
      acc += g.area * q.w * (dx * dx + dy * dy + d * d);
    }
  }
  return std::sqrt(acc);
}

inline double zero_fn(double, double) { return 0.0; }

// L^2 / H^1 norms of a P1 function (exact: integrands are quadratic).
inline double l2_norm(const MeshLevel& m, const NodalField& f,
                      const QuadratureRule& rule = triangle_rule_degree4()) {
  return l2_error(m, f, zero_fn, rule);
}
inline double h1_norm(const MeshLevel& m, const NodalField& f,
                      const QuadratureRule& rule = triangle_rule_degree4()) {
  return h1_error(m, f, zero_fn, zero_fn, zero_fn, rule);
}

// Mean over Omega (|Omega| = 1): (M f, 1).
inline double mean_value(const SparseMatrix& mass, const NodalField& f) {
  const auto mf = mass.mul(f.v);
  double s = 0.0;
  for (double x : mf) s += x;
  return s;
}

inline NodalField project_zero_mean(const SparseMatrix& mass, const NodalField& f) {
  const double mean = mean_value(mass, f);
  NodalField out = f;
  for (double& x : out.v) x -= mean;
  return out;
}

}  // namespace dch
