// Refinement studies: manufactured-solution error tables and Cauchy
// difference tables at successive resolutions.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dch/integrate.hpp"
#include "dch/mms.hpp"

namespace dch {

enum class ErrorNorm { l2, h1 };

struct StudyRow {
  double h = 0.0;        // mesh size (coarse member of the pair for Cauchy rows)
  double h_fine = 0.0;   // fine member (Cauchy rows only)
  double tau = 0.0;
  double e_phi = 0.0, e_mu = 0.0, e_p = 0.0;
  double rate_phi = 0.0, rate_mu = 0.0, rate_p = 0.0;
  bool has_rate = false;
};

namespace detail {

// Steps for the coarsest requested level: nearest integer to T / tau_target
// (the default paths divide T exactly). Finer levels double it path-order
// times per level so that tau halves (or quarters) exactly along the path.
inline int base_step_count(double t_final, double tau_target) {
  const int m = static_cast<int>(std::llround(t_final / tau_target));
  if (m < 1) throw std::invalid_argument("study: refinement path gives no time steps");
  return m;
}

inline void attach_rates(std::vector<StudyRow>& rows) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double span = std::log(rows[i - 1].h / rows[i].h);
    rows[i].rate_phi = std::log(rows[i - 1].e_phi / rows[i].e_phi) / span;
    rows[i].rate_mu = std::log(rows[i - 1].e_mu / rows[i].e_mu) / span;
    rows[i].rate_p = std::log(rows[i - 1].e_p / rows[i].e_p) / span;
    rows[i].has_rate = true;
  }
}

}  // namespace detail

// Default path coefficients: tau = 25.6 h^2 (L2) and tau = 1.6 h (H1) for the
// manufactured runs; tau = 1.024 h^2 and tau = 2.0e-3 h for the Cauchy runs.
// The coefficient multiplies the grid spacing h = 1/n, which makes every
// default path divide T into an integer number of steps.
inline double default_tau_coeff(ErrorNorm norm, bool cauchy) {
  if (cauchy) return norm == ErrorNorm::l2 ? 1.024 : 2.0e-3;
  return norm == ErrorNorm::l2 ? 25.6 : 1.6;
}

// Runs the manufactured-solution simulation to T on each requested level and
// measures errors against the exact solution at T. The discrete pressure is
// shifted to the exact pressure's mean before comparison.
inline std::vector<StudyRow> convergence_study(ErrorNorm norm, const std::vector<int>& levels,
                                               const DchParams& base, double tau_coeff = 0.0,
                                               int n0 = 1) {
  if (levels.empty()) return {};
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] != levels[i - 1] + 1)
      throw std::invalid_argument("convergence_study: levels must be consecutive");
  if (tau_coeff <= 0.0) tau_coeff = default_tau_coeff(norm, false);
  const int path_order = norm == ErrorNorm::l2 ? 2 : 1;

  const double spacing0 = 1.0 / (n0 * (1 << levels.front()));
  const double tau_target =
      path_order == 2 ? tau_coeff * spacing0 * spacing0 : tau_coeff * spacing0;
  int steps = detail::base_step_count(base.t_final, tau_target);

  std::vector<StudyRow> rows;
  for (std::size_t k = 0; k < levels.size(); ++k, steps *= (1 << path_order)) {
    RunConfig cfg;
    cfg.params = base;
    cfg.params.levels = levels[k];
    cfg.params.n0 = n0;
    cfg.params.tau = base.t_final / steps;
    cfg.initial = InitialKind::manufactured;
    cfg.mms = true;
    cfg.snapshot_every = 0;

    TimeIntegrator sim(cfg);
    sim.run();

    const MeshLevel& mesh = sim.mesh();
    const double t_end = base.t_final;
    const auto exact = [t_end](double x, double y) {
      return ManufacturedSolution::value(x, y, t_end);
    };
    const auto exact_dx = [t_end](double x, double y) {
      return ManufacturedSolution::value_dx(x, y, t_end);
    };
    const auto exact_dy = [t_end](double x, double y) {
      return ManufacturedSolution::value_dy(x, y, t_end);
    };

    // shift p to the exact mean (the discrete p is defined up to a constant)
    const SparseMatrix mass = assemble_mass(mesh);
    const double exact_mean = ManufacturedSolution::time_factor(t_end) * (8.0 / 15.0) * (8.0 / 15.0);
    NodalField p = sim.state().p;
    const double shift = exact_mean - mean_value(mass, p);
    for (double& x : p.v) x += shift;

    StudyRow row;
    row.h = mesh.h;
    row.tau = cfg.params.tau;
    if (norm == ErrorNorm::l2) {
      row.e_phi = l2_error(mesh, sim.state().phi, exact);
      row.e_mu = l2_error(mesh, sim.state().mu, exact);
      row.e_p = l2_error(mesh, p, exact);
    } else {
      row.e_phi = h1_error(mesh, sim.state().phi, exact, exact_dx, exact_dy);
      row.e_mu = h1_error(mesh, sim.state().mu, exact, exact_dx, exact_dy);
      row.e_p = h1_error(mesh, p, exact, exact_dx, exact_dy);
    }
    rows.push_back(row);
  }
  detail::attach_rates(rows);
  return rows;
}

// Cauchy test: no sources, cosine-product initial data; the difference of
// solutions at successive resolutions is measured on the finer mesh (the
// coarse solution prolongs exactly into the fine P1 space). Pressures are
// compared after both are shifted to zero mean.
inline std::vector<StudyRow> cauchy_study(ErrorNorm norm, const std::vector<int>& levels,
                                          const DchParams& base, double tau_coeff = 0.0,
                                          int n0 = 1) {
  if (levels.size() < 2) return {};
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] != levels[i - 1] + 1)
      throw std::invalid_argument("cauchy_study: levels must be consecutive");
  if (tau_coeff <= 0.0) tau_coeff = default_tau_coeff(norm, true);
  const int path_order = norm == ErrorNorm::l2 ? 2 : 1;

  const double spacing0 = 1.0 / (n0 * (1 << levels.front()));
  const double tau_target = path_order == 2 ? tau_coeff * spacing0 * spacing0 : tau_coeff * spacing0;
  int steps = detail::base_step_count(base.t_final, tau_target);

  // one transfer hierarchy covering all requested levels
  const MeshHierarchy transfer = build_hierarchy(n0, levels.back());

  struct LevelRun {
    int level;
    double tau;
    DchState state;
  };
  std::vector<LevelRun> runs;
  for (std::size_t k = 0; k < levels.size(); ++k, steps *= (1 << path_order)) {
    RunConfig cfg;
    cfg.params = base;
    cfg.params.levels = levels[k];
    cfg.params.n0 = n0;
    cfg.params.tau = base.t_final / steps;
    cfg.initial = InitialKind::cosine;
    cfg.mms = false;
    cfg.snapshot_every = 0;

    TimeIntegrator sim(cfg);
    sim.run();

    DchState st = sim.state();
    const SparseMatrix mass = assemble_mass(sim.mesh());
    st.p = project_zero_mean(mass, st.p);
    runs.push_back({levels[k], cfg.params.tau, std::move(st)});
  }

  std::vector<StudyRow> rows;
  for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
    const LevelRun& coarse = runs[k];
    const LevelRun& fine = runs[k + 1];
    const MeshLevel& fine_mesh = transfer.level(fine.level);

    // coarse states live in their own hierarchy; re-tag to the transfer one
    const auto lift = [&](NodalField f) {
      f.level = coarse.level;
      return prolong(transfer, f);
    };
    NodalField dp = fine.state.p;
    NodalField dmu = fine.state.mu;
    NodalField dphi = fine.state.phi;
    axpy(dp, -1.0, lift(coarse.state.p));
    axpy(dmu, -1.0, lift(coarse.state.mu));
    axpy(dphi, -1.0, lift(coarse.state.phi));

    StudyRow row;
    row.h = transfer.level(coarse.level).h;
    row.h_fine = fine_mesh.h;
    row.tau = coarse.tau;
    if (norm == ErrorNorm::l2) {
      row.e_phi = l2_norm(fine_mesh, dphi);
      row.e_mu = l2_norm(fine_mesh, dmu);
      row.e_p = l2_norm(fine_mesh, dp);
    } else {
      row.e_phi = h1_norm(fine_mesh, dphi);
      row.e_mu = h1_norm(fine_mesh, dmu);
      row.e_p = h1_norm(fine_mesh, dp);
    }
    rows.push_back(row);
  }
  detail::attach_rates(rows);
  return rows;
}

}  // namespace dch
