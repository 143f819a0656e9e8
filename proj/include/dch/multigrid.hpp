// Full-approximation-scheme (FAS) nonlinear multigrid for the one-step
// system N(xi) = s, with nonlinear block Gauss-Seidel smoothing.
//
// One V-cycle at level l:
//   1. pre-smooth `sweeps` times;
//   2. restrict the iterate nodally, form the coarse right-hand side
//        s_{l-1} = R (s_l - N_l(state)) + N_{l-1}(restricted state),
//      solve the coarse equation (recursively; level 0 runs `coarse_sweeps`
//      smoothing steps plus a dense Newton polish of its tiny system),
//      prolong the coarse increment and add it;
//   3. post-smooth `sweeps` times.
//
// The smoother visits nodes in lexicographic order and updates the triple
// (p_i, mu_i, phi_i) simultaneously: the first two block rows are linear in
// the local unknowns, so p_i and mu_i are eliminated and the remaining
// scalar equation in phi_i (cubic through the (phi^3, u_i) term) is solved
// by safeguarded Newton.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dch/mesh.hpp"
#include "dch/system.hpp"

namespace dch {

struct SolveReport {
  int cycles = 0;
  double final_rms = 0.0;
  std::vector<double> history;  // RMS before iterating, then after each cycle
  bool converged = false;
  long newton_fallbacks = 0;  // local solves that hit the bisection fallback
};

struct SolveResult {
  DchState state;
  SolveReport report;
};

namespace detail {

struct PatchEntry {
  int elem;
  int loc;  // local vertex index of the node within elem
};

// Node -> incident (element, local index) adjacency, flattened.
struct LevelPatch {
  std::vector<int> offset;
  std::vector<PatchEntry> entries;
};

inline LevelPatch build_level_patch(const MeshLevel& m) {
  LevelPatch p;
  const std::size_t n = static_cast<std::size_t>(m.node_count());
  std::vector<int> count(n, 0);
  for (const auto& tri : m.tris)
    for (int a = 0; a < 3; ++a) ++count[static_cast<std::size_t>(tri[a])];
  p.offset.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) p.offset[i + 1] = p.offset[i] + count[i];
  p.entries.resize(static_cast<std::size_t>(p.offset[n]));
  std::vector<int> cursor(p.offset.begin(), p.offset.end() - 1);
  for (std::size_t e = 0; e < m.tris.size(); ++e)
    for (int a = 0; a < 3; ++a) {
      const int i = m.tris[e][a];
      p.entries[static_cast<std::size_t>(cursor[static_cast<std::size_t>(i)]++)] = {
          static_cast<int>(e), a};
    }
  return p;
}

}  // namespace detail

class MgWorkspace {
 public:
  explicit MgWorkspace(const MeshHierarchy& hierarchy) : hier_(&hierarchy) {
    const int top = hierarchy.finest();
    ctx_.reserve(static_cast<std::size_t>(top) + 1);
    patch_.reserve(static_cast<std::size_t>(top) + 1);
    for (int l = 0; l <= top; ++l) {
      ctx_.push_back(make_level_context(hierarchy.level(l)));
      patch_.push_back(detail::build_level_patch(hierarchy.level(l)));
    }
  }

  // Restricts phi^{m-1} down the hierarchy and rebuilds B, C on every level.
  void prepare_step(const NodalField& phi_prev_finest) {
    const int top = finest();
    ctx_[static_cast<std::size_t>(top)].set_phi_prev(phi_prev_finest);
    for (int l = top - 1; l >= 0; --l)
      ctx_[static_cast<std::size_t>(l)].set_phi_prev(
          restrict_nodal(*hier_, ctx_[static_cast<std::size_t>(l + 1)].phi_prev));
  }

  int finest() const { return static_cast<int>(ctx_.size()) - 1; }
  const MeshHierarchy& hierarchy() const { return *hier_; }
  LevelContext& context(int l) { return ctx_[static_cast<std::size_t>(l)]; }
  const LevelContext& context(int l) const { return ctx_[static_cast<std::size_t>(l)]; }
  const detail::LevelPatch& patch(int l) const { return patch_[static_cast<std::size_t>(l)]; }

  long newton_fallbacks = 0;

 private:
  const MeshHierarchy* hier_;
  std::vector<LevelContext> ctx_;
  std::vector<detail::LevelPatch> patch_;
};

namespace detail {

// Coefficients of F -> (phi_h^3, u_i) as a cubic in the nodal value F at
// node i, all other nodal values frozen. Same quadrature as cubic_load.
struct LocalCubic {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0;

  double value(double f) const { return ((c3 * f + c2) * f + c1) * f + c0; }
  double derivative(double f) const { return (3.0 * c3 * f + 2.0 * c2) * f + c1; }
};

// Per-(local index, quadrature point) barycentric factors of the degree-4
// rule, tabulated once.
struct CubicTables {
  struct Entry {
    double c3w;   // w li^4
    double c2w;   // 3 w li^3
    double c1w;   // 3 w li^2
    double c0w;   // w li
    double lo1, lo2;  // barycentrics of the other two vertices
  };
  std::array<std::array<Entry, 16>, 3> at{};
  std::size_t count = 0;

  explicit CubicTables(const QuadratureRule& rule) {
    count = rule.points.size();
    for (int loc = 0; loc < 3; ++loc) {
      for (std::size_t q = 0; q < count; ++q) {
        const auto& p = rule.points[q];
        const double l[3] = {p.l0, p.l1, p.l2};
        Entry& e = at[static_cast<std::size_t>(loc)][q];
        const double li = l[loc];
        e.c3w = p.w * li * li * li * li;
        e.c2w = 3.0 * p.w * li * li * li;
        e.c1w = 3.0 * p.w * li * li;
        e.c0w = p.w * li;
        e.lo1 = l[(loc + 1) % 3];
        e.lo2 = l[(loc + 2) % 3];
      }
    }
  }
};

inline const CubicTables& cubic_tables() {
  static const CubicTables t(triangle_rule_degree4());
  return t;
}

inline LocalCubic local_cubic(const MeshLevel& m, const LevelPatch& patch, int node,
                              const std::vector<double>& phi) {
  LocalCubic c;
  const CubicTables& tab = cubic_tables();
  for (int k = patch.offset[static_cast<std::size_t>(node)];
       k < patch.offset[static_cast<std::size_t>(node) + 1]; ++k) {
    const auto [e, loc] = patch.entries[static_cast<std::size_t>(k)];
    const auto& tri = m.tris[static_cast<std::size_t>(e)];
    const double po1 = phi[static_cast<std::size_t>(tri[(loc + 1) % 3])];
    const double po2 = phi[static_cast<std::size_t>(tri[(loc + 2) % 3])];
    const auto& row = tab.at[static_cast<std::size_t>(loc)];
    for (std::size_t q = 0; q < tab.count; ++q) {
      const auto& t = row[q];
      const double wf = t.lo1 * po1 + t.lo2 * po2;
      const double wf2 = wf * wf;
      c.c3 += t.c3w;
      c.c2 += t.c2w * wf;
      c.c1 += t.c1w * wf2;
      c.c0 += t.c0w * wf2 * wf;
    }
  }
  const double area = m.cell_area();
  c.c0 *= area;
  c.c1 *= area;
  c.c2 *= area;
  c.c3 *= area;
  return c;
}

// Root of the strictly increasing scalar function
//   H(F) = lin * F + cubic(F)/eps + cst
// by Newton from f0 with a bisection safeguard; the bracket starts at
// [-10, 10] and widens on demand. Returns false if the iteration cap was
// hit; the best bracketed iterate is still returned.
inline bool solve_local_scalar(const LocalCubic& cubic, double lin, double cst, double eps,
                               double f0, double& root) {
  const auto h = [&](double f) { return lin * f + cubic.value(f) / eps + cst; };
  double lo = std::min(f0 - 1.0, -10.0);
  double hi = std::max(f0 + 1.0, 10.0);
  for (int k = 0; k < 200 && h(lo) > 0.0; ++k) lo = 2.0 * lo - 1.0;
  for (int k = 0; k < 200 && h(hi) < 0.0; ++k) hi = 2.0 * hi + 1.0;

  double f = std::clamp(f0, lo, hi);
  for (int it = 0; it < 20; ++it) {
    const double hv = h(f);
    if (hv == 0.0) {
      root = f;
      return true;
    }
    if (hv > 0.0)
      hi = f;
    else
      lo = f;
    const double hd = lin + cubic.derivative(f) / eps;
    double fn = f - hv / hd;
    if (fn < lo || fn > hi) fn = 0.5 * (lo + hi);  // Newton left the bracket
    if (std::abs(fn - f) <= 1e-14 * std::max(1.0, std::abs(fn))) {
      root = fn;
      return true;
    }
    f = fn;
  }
  root = f;  // damped fallback; flagged by the caller
  return false;
}

// Gaussian elimination with partial pivoting; solves the tiny coarsest-level
// Newton systems in place.
inline std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, int n) {
  const auto at = [&](int i, int j) -> double& {
    return a[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
  };
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(at(i, k)) > std::abs(at(piv, k))) piv = i;
    if (std::abs(at(piv, k)) < 1e-300) throw std::runtime_error("solve_dense: singular matrix");
    if (piv != k) {
      for (int j = k; j < n; ++j) std::swap(at(k, j), at(piv, j));
      std::swap(b[static_cast<std::size_t>(k)], b[static_cast<std::size_t>(piv)]);
    }
    for (int i = k + 1; i < n; ++i) {
      const double f = at(i, k) / at(k, k);
      if (f == 0.0) continue;
      for (int j = k; j < n; ++j) at(i, j) -= f * at(k, j);
      b[static_cast<std::size_t>(i)] -= f * b[static_cast<std::size_t>(k)];
    }
  }
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = n - 1; i >= 0; --i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) s -= at(i, j) * x[static_cast<std::size_t>(j)];
    x[static_cast<std::size_t>(i)] = s / at(i, i);
  }
  return x;
}

// Damped Newton on the coarsest-level system. Gauss-Seidel alone is only a
// smoother and can cycle on the saddle coupling, so the (tiny) coarsest
// problem is solved properly: the singular pressure block is pinned by
// replacing its first row with the mass-weighted mean of p, held at its
// incoming value so the correction carries no artificial constant.
inline void coarse_newton(const LevelContext& ctx, const DchParams& prm, const SourceTriple& s,
                          DchState& state, double target_rms, int max_iter) {
  const int n = ctx.mesh->node_count();
  const std::size_t un = static_cast<std::size_t>(n);
  const int dim = 3 * n;

  std::vector<double> colsum_m(un, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto cols = ctx.M.row_cols(i);
    const auto vals = ctx.M.row_vals(i);
    for (std::size_t k = 0; k < cols.size(); ++k)
      colsum_m[static_cast<std::size_t>(cols[k])] += vals[k];
  }
  const double pinned_mean = dot(colsum_m, state.p.v);

  double rms = residual_rms(ctx, prm, s, state);
  for (int it = 0; it < max_iter && rms > target_rms; ++it) {
    const SourceTriple r = residual(ctx, prm, s, state);  // s - N(state)

    std::vector<double> g(static_cast<std::size_t>(dim));
    for (int i = 0; i < n; ++i) {
      g[static_cast<std::size_t>(i)] = -r.s1.v[static_cast<std::size_t>(i)];
      g[static_cast<std::size_t>(n + i)] = -r.s2.v[static_cast<std::size_t>(i)];
      g[static_cast<std::size_t>(2 * n + i)] = -r.s3.v[static_cast<std::size_t>(i)];
    }
    g[0] = dot(colsum_m, state.p.v) - pinned_mean;

    const SparseMatrix q = assemble_phi_mass(*ctx.mesh, state.phi);
    std::vector<double> jac(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim), 0.0);
    const auto set = [&](int i, int j, double v) {
      jac[static_cast<std::size_t>(i) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(j)] = v;
    };
    for (int i = 0; i < n; ++i) {
      const auto cols = ctx.A.row_cols(i);
      const auto avals = ctx.A.row_vals(i);
      const auto mvals = ctx.M.row_vals(i);
      const auto bvals = ctx.B.row_vals(i);
      const auto cvals = ctx.C.row_vals(i);
      const auto qvals = q.row_vals(i);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        const int j = cols[k];
        if (i != 0) {
          set(i, j, avals[k]);
          set(i, n + j, prm.gamma * cvals[k]);
        }
        set(n + i, j, prm.tau * cvals[k]);
        set(n + i, n + j, prm.tau * (prm.epsilon * avals[k] + prm.gamma * bvals[k]));
        set(n + i, 2 * n + j, mvals[k]);
        set(2 * n + i, n + j, -mvals[k]);
        set(2 * n + i, 2 * n + j, prm.epsilon * avals[k] + 3.0 * qvals[k] / prm.epsilon);
      }
    }
    for (int j = 0; j < n; ++j) set(0, j, colsum_m[static_cast<std::size_t>(j)]);

    std::vector<double> delta;
    try {
      delta = solve_dense(std::move(jac), std::move(g), dim);
    } catch (const std::runtime_error&) {
      return;  // leave the smoothed state; the outer cycle continues
    }

    // step with halving safeguard
    double scale = 1.0;
    const DchState saved = state;
    for (int halving = 0; halving < 10; ++halving) {
      for (int i = 0; i < n; ++i) {
        state.p.v[static_cast<std::size_t>(i)] = saved.p.v[static_cast<std::size_t>(i)] - scale * delta[static_cast<std::size_t>(i)];
        state.mu.v[static_cast<std::size_t>(i)] = saved.mu.v[static_cast<std::size_t>(i)] - scale * delta[static_cast<std::size_t>(n + i)];
        state.phi.v[static_cast<std::size_t>(i)] = saved.phi.v[static_cast<std::size_t>(i)] - scale * delta[static_cast<std::size_t>(2 * n + i)];
      }
      const double rms_new = residual_rms(ctx, prm, s, state);
      if (rms_new < rms || rms_new <= target_rms) {
        rms = rms_new;
        break;
      }
      scale *= 0.5;
      if (halving == 9) {
        state = saved;  // no useful step; stop polishing
        return;
      }
    }
  }
}

}  // namespace detail

// `sweep_count` lexicographic nonlinear block Gauss-Seidel sweeps on level l.
inline void smooth(MgWorkspace& ws, int level, const DchParams& prm, const SourceTriple& s,
                   DchState& state, int sweep_count) {
  const LevelContext& ctx = ws.context(level);
  const MeshLevel& m = *ctx.mesh;
  const detail::LevelPatch& patch = ws.patch(level);
  const int n = m.node_count();
  const double eps = prm.epsilon;
  const double gamma = prm.gamma;
  const double tau = prm.tau;
  const bool has_gamma = gamma > 0.0;

  std::vector<double>& p = state.p.v;
  std::vector<double>& mu = state.mu.v;
  std::vector<double>& phi = state.phi.v;

  for (int sweep = 0; sweep < sweep_count; ++sweep) {
    for (int i = 0; i < n; ++i) {
      const std::size_t ui = static_cast<std::size_t>(i);

      // A, M, B, C share the skeleton pattern: one traversal reads all four.
      double a_p = 0.0, a_mu = 0.0, a_phi = 0.0, a_ii = 0.0;
      double m_phi = 0.0, m_mu = 0.0, m_ii = 0.0;
      double c_p = 0.0, c_mu = 0.0, c_ii = 0.0, b_mu = 0.0, b_ii = 0.0;
      {
        const auto cols = ctx.A.row_cols(i);
        const auto avals = ctx.A.row_vals(i);
        const auto mvals = ctx.M.row_vals(i);
        if (has_gamma) {
          const auto bvals = ctx.B.row_vals(i);
          const auto cvals = ctx.C.row_vals(i);
          for (std::size_t k = 0; k < cols.size(); ++k) {
            const std::size_t j = static_cast<std::size_t>(cols[k]);
            const double pj = p[j], mj = mu[j], fj = phi[j];
            const double va = avals[k], vm = mvals[k], vb = bvals[k], vc = cvals[k];
            a_p += va * pj;
            a_mu += va * mj;
            a_phi += va * fj;
            m_phi += vm * fj;
            m_mu += vm * mj;
            c_p += vc * pj;
            c_mu += vc * mj;
            b_mu += vb * mj;
            if (cols[k] == i) {
              a_ii = va;
              m_ii = vm;
              b_ii = vb;
              c_ii = vc;
            }
          }
        } else {
          for (std::size_t k = 0; k < cols.size(); ++k) {
            const std::size_t j = static_cast<std::size_t>(cols[k]);
            const double mj = mu[j], fj = phi[j];
            const double va = avals[k], vm = mvals[k];
            a_mu += va * mj;
            a_phi += va * fj;
            m_phi += vm * fj;
            m_mu += vm * mj;
            if (cols[k] == i) {
              a_ii = va;
              m_ii = vm;
            }
          }
        }
      }

      // Row-i right-hand sides with the i-th column removed.
      const double r2_base = s.s2.v[ui] - (m_phi - m_ii * phi[ui]) -
                             tau * eps * (a_mu - a_ii * mu[ui]);
      const double r3 = s.s3.v[ui] - eps * (a_phi - a_ii * phi[ui]) + (m_mu - m_ii * mu[ui]);

      double dcoef, beta, r1 = 0.0;
      if (has_gamma) {
        r1 = s.s1.v[ui] - (a_p - a_ii * p[ui]) - gamma * (c_mu - c_ii * mu[ui]);
        const double r2 = r2_base - tau * gamma * (b_mu - b_ii * mu[ui]) -
                          tau * (c_p - c_ii * p[ui]);
        dcoef = tau * (eps * a_ii + gamma * (b_ii - c_ii * c_ii / a_ii));
        beta = r2 - tau * c_ii * r1 / a_ii;
      } else {
        dcoef = tau * eps * a_ii;
        beta = r2_base;  // p == 0: the tau C p column vanishes
      }

      const auto cubic = detail::local_cubic(m, patch, i, phi);
      const double lin = eps * a_ii + m_ii * m_ii / dcoef;
      const double cst = -m_ii * beta / dcoef - r3;
      double f = phi[ui];
      if (!detail::solve_local_scalar(cubic, lin, cst, eps, phi[ui], f)) ++ws.newton_fallbacks;

      const double u = (beta - m_ii * f) / dcoef;
      phi[ui] = f;
      mu[ui] = u;
      if (has_gamma) p[ui] = (r1 - gamma * c_ii * u) / a_ii;
    }
  }
}

// One recursive FAS V-cycle from level l down.
inline DchState v_cycle(MgWorkspace& ws, int level, DchState state, const SourceTriple& s,
                        const DchParams& prm) {
  smooth(ws, level, prm, s, state, prm.sweeps);
  if (level >= 1) {
    const MeshHierarchy& h = ws.hierarchy();
    DchState coarse{restrict_nodal(h, state.p), restrict_nodal(h, state.mu),
                    restrict_nodal(h, state.phi)};

    SourceTriple coarse_rhs = apply_operator(ws.context(level - 1), prm, coarse);
    {
      const SourceTriple fine_resid = residual(ws.context(level), prm, s, state);
      axpy(coarse_rhs.s1, 1.0, restrict_canonical(h, fine_resid.s1));
      axpy(coarse_rhs.s2, 1.0, restrict_canonical(h, fine_resid.s2));
      axpy(coarse_rhs.s3, 1.0, restrict_canonical(h, fine_resid.s3));
    }

    DchState coarse_solution = coarse;
    if (level == 1) {
      smooth(ws, 0, prm, coarse_rhs, coarse_solution, prm.coarse_sweeps);
      detail::coarse_newton(ws.context(0), prm, coarse_rhs, coarse_solution, 0.01 * prm.tol, 12);
    } else {
      coarse_solution = v_cycle(ws, level - 1, std::move(coarse_solution), coarse_rhs, prm);
    }

    axpy(coarse_solution.p, -1.0, coarse.p);
    axpy(coarse_solution.mu, -1.0, coarse.mu);
    axpy(coarse_solution.phi, -1.0, coarse.phi);
    axpy(state.p, 1.0, prolong(h, coarse_solution.p));
    axpy(state.mu, 1.0, prolong(h, coarse_solution.mu));
    axpy(state.phi, 1.0, prolong(h, coarse_solution.phi));

    smooth(ws, level, prm, s, state, prm.sweeps);
  }
  return state;
}

// Repeats V-cycles until the residual RMS drops below prm.tol, subtracting
// the pressure mean after each cycle. A non-converged result is returned
// with report.converged = false so the caller can decide.
inline SolveResult solve(MgWorkspace& ws, const DchParams& prm, const SourceTriple& s,
                         DchState initial) {
  prm.validate();
  const int top = ws.finest();
  const LevelContext& fine = ws.context(top);
  DchState state = std::move(initial);
  if (state.level() != top)
    throw std::invalid_argument("solve: initial state must live on the finest level");
  if (prm.gamma == 0.0)
    std::fill(state.p.v.begin(), state.p.v.end(), 0.0);  // pressure block degenerates

  ws.newton_fallbacks = 0;
  SolveReport report;
  double rms = residual_rms(fine, prm, s, state);
  report.history.push_back(rms);
  report.final_rms = rms;

  while (rms >= prm.tol && report.cycles < prm.max_cycles) {
    state = v_cycle(ws, top, std::move(state), s, prm);
    if (prm.gamma > 0.0) state.p = project_zero_mean(fine.M, state.p);
    ++report.cycles;
    rms = residual_rms(fine, prm, s, state);
    report.history.push_back(rms);
    report.final_rms = rms;
  }
  report.converged = rms < prm.tol;
  report.newton_fallbacks = ws.newton_fallbacks;
  return {std::move(state), std::move(report)};
}

}  // namespace dch
