// The level-wise nonlinear system of the convex-splitting scheme, its source
// terms, residuals, and the physical diagnostics (energy, mass, one-step
// energy-law ledger).
//
// One implicit step from phi_prev, written per level as N(xi) = s with
// xi = [q, nu, psi] (pressure, chemical potential, phase field):
//   N1 = A q + gamma C nu                                  s1 = 0
//   N2 = M psi + tau (eps A + gamma B) nu + tau C q        s2 = M phi_prev
//   N3 = eps A psi + (1/eps)(psi_h^3, u_i) - M nu          s3 = (1/eps) M phi_prev
// B and C carry the lagged field phi_prev; the cubic term is evaluated
// elementwise (equal to Q(psi) psi with the same quadrature).
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dch/assembly.hpp"
#include "dch/field.hpp"
#include "dch/mesh.hpp"
#include "dch/quadrature.hpp"
#include "dch/sparse.hpp"

namespace dch {

struct DchParams {
  double epsilon = 1.0;   // interface width
  double gamma = 0.0;     // excess surface tension
  double tau = 1e-3;      // time step
  double t_final = 0.1;
  int sweeps = 2;         // smoothing sweeps per pre/post stage
  double tol = 1e-12;     // residual RMS stopping tolerance
  int levels = 3;         // finest level L
  int n0 = 1;             // coarsest cells per side
  std::uint64_t seed = 42;
  int max_cycles = 200;
  // Gauss-Seidel sweeps on the coarsest level before its Newton polish.
  int coarse_sweeps = 2;

  void validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("DchParams: epsilon must be > 0");
    if (!(tau > 0.0)) throw std::invalid_argument("DchParams: tau must be > 0");
    if (!(gamma >= 0.0)) throw std::invalid_argument("DchParams: gamma must be >= 0");
    if (sweeps < 1) throw std::invalid_argument("DchParams: sweeps must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("DchParams: tol must be > 0");
    if (levels < 1) throw std::invalid_argument("DchParams: levels must be >= 1");
    if (n0 < 1) throw std::invalid_argument("DchParams: n0 must be >= 1");
    if (max_cycles < 1) throw std::invalid_argument("DchParams: max_cycles must be >= 1");
    if (coarse_sweeps < 0) throw std::invalid_argument("DchParams: coarse_sweeps must be >= 0");
  }
};

// The N x 3 unknown array [p, mu, phi] at one level.
struct DchState {
  NodalField p, mu, phi;

  int level() const { return phi.level; }

  static DchState zeros(int level, std::size_t n) {
    return {NodalField::zeros(level, n), NodalField::zeros(level, n),
            NodalField::zeros(level, n)};
  }
};

// Right-hand sides (or any 3-block vector) of the scheme at one level.
struct SourceTriple {
  NodalField s1, s2, s3;

  static SourceTriple zeros(int level, std::size_t n) {
    return {NodalField::zeros(level, n), NodalField::zeros(level, n),
            NodalField::zeros(level, n)};
  }
};

// Per-level operator data: the geometric matrices A, M plus B, C rebuilt from
// the restricted previous-step field.
struct LevelContext {
  const MeshLevel* mesh = nullptr;
  SparseMatrix A, M;
  SparseMatrix B, C;
  NodalField phi_prev;
  ElementSlots slots;

  void set_phi_prev(NodalField f) {
    if (f.level != mesh->level || static_cast<int>(f.size()) != mesh->node_count())
      throw std::invalid_argument("LevelContext::set_phi_prev: field/level mismatch");
    phi_prev = std::move(f);
    reassemble_weighted_stiffness(*mesh, slots, phi_prev, 2, B);
    reassemble_weighted_stiffness(*mesh, slots, phi_prev, 1, C);
  }
};

// All four matrices are assembled on the shared node-adjacency skeleton, so
// they have identical index structure (the smoother exploits this to read
// all value arrays in one row traversal). Values agree bit-for-bit with the
// standalone assemble_* routines.
inline LevelContext make_level_context(const MeshLevel& mesh) {
  LevelContext ctx;
  ctx.mesh = &mesh;
  ctx.slots = build_element_slots(mesh);
  ctx.A = ctx.slots.skeleton;
  detail::assemble_matrix_into(mesh, ctx.slots, detail::StiffnessKernel{mesh}, ctx.A);
  ctx.M = ctx.slots.skeleton;
  detail::assemble_matrix_into(mesh, ctx.slots, detail::MassKernel{mesh, triangle_rule_degree4()},
                               ctx.M);
  ctx.B = ctx.slots.skeleton;
  ctx.C = ctx.slots.skeleton;
  return ctx;
}

// Context for level l with phi_prev obtained by composing nodal restrictions
// from the finest level down.
inline LevelContext build_level_context(const MeshHierarchy& h, int level,
                                        const NodalField& phi_prev_finest) {
  if (level > h.finest() || level < 0)
    throw std::invalid_argument("build_level_context: level out of range");
  if (phi_prev_finest.level != h.finest())
    throw std::invalid_argument("build_level_context: phi_prev must live on the finest level");
  LevelContext ctx = make_level_context(h.level(level));
  NodalField f = phi_prev_finest;
  for (int l = h.finest(); l > level; --l) f = restrict_nodal(h, f);
  ctx.set_phi_prev(std::move(f));
  return ctx;
}

// N(xi): the three block rows, evaluated exactly. A, M, B, C share the
// skeleton pattern, so one row traversal feeds all blocks; the cubic term is
// evaluated elementwise (equal to Q(psi) psi under the same quadrature).
inline SourceTriple apply_operator(const LevelContext& ctx, const DchParams& prm,
                                   const DchState& xi) {
  if (xi.level() != ctx.mesh->level)
    throw std::invalid_argument("apply_operator: state/context level mismatch");
  const std::size_t n = xi.phi.size();
  SourceTriple out = SourceTriple::zeros(xi.level(), n);
  const NodalField cub = cubic_load(*ctx.mesh, xi.phi);

  const double eps = prm.epsilon;
  const double tau = prm.tau;
  const double gamma = prm.gamma;
  const bool has_gamma = gamma != 0.0;
  const std::vector<double>& p = xi.p.v;
  const std::vector<double>& mu = xi.mu.v;
  const std::vector<double>& phi = xi.phi.v;

  for (int i = 0; i < static_cast<int>(n); ++i) {
    const auto cols = ctx.A.row_cols(i);
    const auto avals = ctx.A.row_vals(i);
    const auto mvals = ctx.M.row_vals(i);
    double a_p = 0.0, a_mu = 0.0, a_phi = 0.0, m_phi = 0.0, m_mu = 0.0;
    double c_p = 0.0, c_mu = 0.0, b_mu = 0.0;
    if (has_gamma) {
      const auto bvals = ctx.B.row_vals(i);
      const auto cvals = ctx.C.row_vals(i);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        const std::size_t j = static_cast<std::size_t>(cols[k]);
        const double pj = p[j], mj = mu[j], fj = phi[j];
        a_p += avals[k] * pj;
        a_mu += avals[k] * mj;
        a_phi += avals[k] * fj;
        m_phi += mvals[k] * fj;
        m_mu += mvals[k] * mj;
        c_p += cvals[k] * pj;
        c_mu += cvals[k] * mj;
        b_mu += bvals[k] * mj;
      }
    } else {
      const auto cvals = ctx.C.row_vals(i);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        const std::size_t j = static_cast<std::size_t>(cols[k]);
        const double pj = p[j], mj = mu[j], fj = phi[j];
        a_p += avals[k] * pj;
        a_mu += avals[k] * mj;
        a_phi += avals[k] * fj;
        m_phi += mvals[k] * fj;
        m_mu += mvals[k] * mj;
        c_p += cvals[k] * pj;
      }
    }
    const std::size_t ui = static_cast<std::size_t>(i);
    out.s1.v[ui] = a_p + gamma * c_mu;
    out.s2.v[ui] = m_phi + tau * (eps * a_mu + gamma * b_mu + c_p);
    out.s3.v[ui] = eps * a_phi + cub.v[ui] / eps - m_mu;
  }
  return out;
}

// Plain-scheme sources: s1 = 0, s2 = M phi_prev, s3 = (1/eps) M phi_prev.
inline SourceTriple compute_sources(const LevelContext& ctx, const DchParams& prm) {
  const std::size_t n = ctx.phi_prev.size();
  SourceTriple s = SourceTriple::zeros(ctx.mesh->level, n);
  ctx.M.mul(ctx.phi_prev.v, s.s2.v);
  for (std::size_t i = 0; i < n; ++i) s.s3.v[i] = s.s2.v[i] / prm.epsilon;
  return s;
}

inline SourceTriple residual(const LevelContext& ctx, const DchParams& prm,
                             const SourceTriple& s, const DchState& xi) {
  SourceTriple r = apply_operator(ctx, prm, xi);
  for (std::size_t i = 0; i < r.s1.size(); ++i) {
    r.s1.v[i] = s.s1.v[i] - r.s1.v[i];
    r.s2.v[i] = s.s2.v[i] - r.s2.v[i];
    r.s3.v[i] = s.s3.v[i] - r.s3.v[i];
  }
  return r;
}

// RMS over all 3N entries of s - N(xi).
inline double residual_rms(const LevelContext& ctx, const DchParams& prm,
                           const SourceTriple& s, const DchState& xi) {
  const SourceTriple r = residual(ctx, prm, s, xi);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.s1.size(); ++i)
    acc += r.s1.v[i] * r.s1.v[i] + r.s2.v[i] * r.s2.v[i] + r.s3.v[i] * r.s3.v[i];
  return std::sqrt(acc / (3.0 * static_cast<double>(r.s1.size())));
}

// J_eps(phi_h) = (eps/2) ||grad phi_h||^2 + (1/eps) int F(phi_h),
// F(x) = (x^2-1)^2 / 4. The quartic integral is exact under the degree-4 rule.
inline double energy(const MeshLevel& m, const SparseMatrix& A, const NodalField& phi,
                     double epsilon, const QuadratureRule& rule = triangle_rule_degree4()) {
  const double grad_part = 0.5 * epsilon * quad_form(A, phi.v, phi.v);
  double well = 0.0;
  const double area = m.cell_area();
  for (const auto& tri : m.tris) {
    const double p0 = phi.v[static_cast<std::size_t>(tri[0])];
    const double p1 = phi.v[static_cast<std::size_t>(tri[1])];
    const double p2 = phi.v[static_cast<std::size_t>(tri[2])];
    for (const auto& q : rule.points) {
      const double ph = q.l0 * p0 + q.l1 * p1 + q.l2 * p2;
      const double d = ph * ph - 1.0;
      well += area * q.w * 0.25 * d * d;
    }
  }
  return grad_part + well / epsilon;
}

// (M phi, 1): conserved by the scheme at every converged step.
inline double total_mass(const SparseMatrix& mass, const NodalField& phi) {
  return mean_value(mass, phi);
}

// One-step ledger of the discrete energy law. For a converged unsourced step
//   E_new - E_prev + tau * [ eps ||grad mu||^2 + (1/gamma) ||u_h||^2
//     + tau/(4 eps) * (2 eps^2 ||d_t grad phi||^2 + ||d_t phi^2||^2
//                      + 2 ||phi d_t phi||^2 + 2 ||d_t phi||^2) ] = 0
// up to solver-residual scale, with u_h = -grad p - gamma phi_prev grad mu
// and d_t v = (v_new - v_prev)/tau.
struct EnergyLawAudit {
  double energy_new = 0.0;
  double energy_prev = 0.0;
  double grad_mu = 0.0;         // eps ||grad mu||^2
  double velocity = 0.0;        // (1/gamma) ||u_h||^2, 0 when gamma = 0
  double dt_grad_phi = 0.0;     // 2 eps^2 ||d_t grad phi||^2
  double dt_phi_sq = 0.0;       // ||d_t (phi^2)||^2
  double phi_dt_phi = 0.0;      // 2 ||phi d_t phi||^2
  double dt_phi = 0.0;          // 2 ||d_t phi||^2
  double dissipation = 0.0;     // bracketed sum above
  double defect = 0.0;          // energy_new - energy_prev + tau * dissipation
};

inline EnergyLawAudit energy_law_audit(const LevelContext& ctx, const DchParams& prm,
                                       const DchState& state_new,
                                       const QuadratureRule& rule = triangle_rule_degree4()) {
  const MeshLevel& m = *ctx.mesh;
  const std::size_t n = state_new.phi.size();
  const double eps = prm.epsilon;
  const double tau = prm.tau;

  EnergyLawAudit a;
  a.energy_new = energy(m, ctx.A, state_new.phi, eps, rule);
  a.energy_prev = energy(m, ctx.A, ctx.phi_prev, eps, rule);
  a.grad_mu = eps * quad_form(ctx.A, state_new.mu.v, state_new.mu.v);

  if (prm.gamma > 0.0) {
    // ||grad p + gamma phi_prev grad mu||^2 = p'Ap + 2 gamma p'C mu + gamma^2 mu'B mu
    const double papp = quad_form(ctx.A, state_new.p.v, state_new.p.v);
    const double pcm = quad_form(ctx.C, state_new.p.v, state_new.mu.v);
    const double mbm = quad_form(ctx.B, state_new.mu.v, state_new.mu.v);
    a.velocity = (papp + 2.0 * prm.gamma * pcm + prm.gamma * prm.gamma * mbm) / prm.gamma;
  }

  NodalField dt = state_new.phi;
  for (std::size_t i = 0; i < n; ++i) dt.v[i] = (dt.v[i] - ctx.phi_prev.v[i]) / tau;
  a.dt_grad_phi = 2.0 * eps * eps * quad_form(ctx.A, dt.v, dt.v);
  a.dt_phi = 2.0 * quad_form(ctx.M, dt.v, dt.v);

  // the two quartic terms need elementwise quadrature
  double dps = 0.0, pdp = 0.0;
  const double area = m.cell_area();
  for (const auto& tri : m.tris) {
    const double f0 = state_new.phi.v[static_cast<std::size_t>(tri[0])];
    const double f1 = state_new.phi.v[static_cast<std::size_t>(tri[1])];
    const double f2 = state_new.phi.v[static_cast<std::size_t>(tri[2])];
    const double g0 = ctx.phi_prev.v[static_cast<std::size_t>(tri[0])];
    const double g1 = ctx.phi_prev.v[static_cast<std::size_t>(tri[1])];
    const double g2 = ctx.phi_prev.v[static_cast<std::size_t>(tri[2])];
    for (const auto& q : rule.points) {
      const double pn = q.l0 * f0 + q.l1 * f1 + q.l2 * f2;
      const double pp = q.l0 * g0 + q.l1 * g1 + q.l2 * g2;
      const double d1 = (pn * pn - pp * pp) / tau;
      const double d2 = pn * (pn - pp) / tau;
      dps += area * q.w * d1 * d1;
      pdp += area * q.w * d2 * d2;
    }
  }
  a.dt_phi_sq = dps;
  a.phi_dt_phi = 2.0 * pdp;

  a.dissipation = a.grad_mu + a.velocity +
                  tau / (4.0 * eps) * (a.dt_grad_phi + a.dt_phi_sq + a.phi_dt_phi + a.dt_phi);
  a.defect = a.energy_new - a.energy_prev + tau * a.dissipation;
  return a;
}

}  // namespace dch
