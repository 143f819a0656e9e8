// Time marching of the convex-splitting scheme: per step the lagged-field
// matrices are rebuilt on every level, sources assembled (plus manufactured
// loads when enabled), and the multigrid solver run from a warm start.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dch/mms.hpp"
#include "dch/multigrid.hpp"
#include "dch/snapshot.hpp"
#include "dch/system.hpp"

namespace dch {

enum class InitialKind { manufactured, spinodal_random, cosine, file };

struct RunConfig {
  DchParams params;
  InitialKind initial = InitialKind::spinodal_random;
  std::string initial_file;
  int snapshot_every = 10;
  bool mms = false;
  std::string out_dir = ".";
  std::string format = "grid-csv";

  // study settings (used by the convergence subcommands)
  std::string study_norm = "l2";
  std::vector<int> study_levels = {4, 5, 6, 7};
  double study_tau_coeff = 0.0;  // 0 = per-norm default path constant

  // Number of uniform steps; T/tau must be integral.
  int step_count() const {
    const double ratio = params.t_final / params.tau;
    const double rounded = std::round(ratio);
    if (rounded < 0.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, rounded))
      throw std::invalid_argument("RunConfig: T/tau must be a nonnegative integer");
    return static_cast<int>(rounded);
  }
};

struct StepRecord {
  int m = 0;
  double t = 0.0;
  double energy = 0.0;
  double mass = 0.0;
  double phi_min = 0.0;
  double phi_max = 0.0;
  int cycles = 0;
  double residual = 0.0;
  double energy_defect = 0.0;
};

// Mersenne-twister bits mapped to uniform(-1,1) directly, so the stream does
// not depend on the standard library's distribution implementation.
inline double uniform_pm1(std::mt19937_64& rng) {
  const double u01 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return 2.0 * u01 - 1.0;
}

inline NodalField spinodal_initial(const MeshLevel& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  NodalField f = NodalField::zeros(m.level, static_cast<std::size_t>(m.node_count()));
  for (double& x : f.v) x = -0.1 + 0.05 * uniform_pm1(rng);
  return f;
}

inline NodalField initial_condition(const RunConfig& cfg, const MeshLevel& mesh) {
  switch (cfg.initial) {
    case InitialKind::manufactured:
      return interpolate(mesh, [](double x, double y) {
        return ManufacturedSolution::value(x, y, 0.0);
      });
    case InitialKind::cosine:
      return interpolate(mesh, [](double x, double y) {
        return 0.5 * (1.0 - std::cos(4.0 * M_PI * x)) * (1.0 - std::cos(2.0 * M_PI * y)) - 1.0;
      });
    case InitialKind::spinodal_random:
      return spinodal_initial(mesh, cfg.params.seed);
    case InitialKind::file: {
      NodalField f = read_grid_csv_field(cfg.initial_file, mesh.n);
      f.level = mesh.level;
      return f;
    }
  }
  throw std::invalid_argument("initial_condition: unknown selector");
}

class TimeIntegrator {
 public:
  explicit TimeIntegrator(const RunConfig& cfg)
      : cfg_(cfg),
        hier_(build_hierarchy(cfg.params.n0, cfg.params.levels)),
        ws_(hier_) {
    cfg_.params.validate();
    total_steps_ = cfg_.step_count();
    const MeshLevel& mesh = hier_.level(hier_.finest());
    state_ = DchState::zeros(mesh.level, static_cast<std::size_t>(mesh.node_count()));
    state_.phi = initial_condition(cfg_, mesh);
    init_mu();
    records_.push_back(make_record(0, 0, 0.0, 0.0));
  }

  const MeshHierarchy& hierarchy() const { return hier_; }
  const MeshLevel& mesh() const { return hier_.level(hier_.finest()); }
  const DchState& state() const { return state_; }
  const std::vector<StepRecord>& records() const { return records_; }
  int total_steps() const { return total_steps_; }
  int current_step() const { return m_; }

  // Advances one step; throws (with cycle/residual context) if the solver
  // hits max_cycles without reaching tol.
  StepRecord step() {
    const double t_m = (m_ + 1) * cfg_.params.tau;
    ws_.prepare_step(state_.phi);
    const LevelContext& fine = ws_.context(ws_.finest());

    SourceTriple s = compute_sources(fine, cfg_.params);
    if (cfg_.mms) {
      const ManufacturedSolution ms{cfg_.params.epsilon, cfg_.params.gamma};
      apply_mms_loads(s, *fine.mesh, ms, t_m, cfg_.params.tau);
    }

    SolveResult result = solve(ws_, cfg_.params, s, std::move(state_));
    state_ = std::move(result.state);
    if (!result.report.converged)
      throw std::runtime_error("TimeIntegrator::step: solver did not reach tol after " +
                               std::to_string(result.report.cycles) +
                               " cycles (rms = " + std::to_string(result.report.final_rms) + ")");
    if (!all_finite(state_.phi) || !all_finite(state_.mu) || !all_finite(state_.p))
      throw std::runtime_error("TimeIntegrator::step: non-finite state");

    ++m_;
    const double defect = energy_law_audit(fine, cfg_.params, state_).defect;
    StepRecord rec = make_record(m_, result.report.cycles, result.report.final_rms, defect);
    records_.push_back(rec);
    return rec;
  }

  // Runs all steps, invoking the sink on the snapshot cadence (first and
  // last steps included).
  const std::vector<StepRecord>& run(
      const std::function<void(int, const DchState&)>& snapshot_sink = {}) {
    if (snapshot_sink) snapshot_sink(0, state_);
    while (m_ < total_steps_) {
      step();
      const bool due = cfg_.snapshot_every > 0 && m_ % cfg_.snapshot_every == 0;
      if (snapshot_sink && (due || m_ == total_steps_)) snapshot_sink(m_, state_);
    }
    return records_;
  }

 private:
  // mu^0 from the chemical-potential relation at t=0 (mass-matrix solve);
  // p^0 = 0. Only used to warm-start the first solve.
  void init_mu() {
    const LevelContext& ctx = ws_.context(ws_.finest());
    const std::size_t n = state_.phi.size();
    const auto aphi = ctx.A.mul(state_.phi.v);
    const auto mphi = ctx.M.mul(state_.phi.v);
    const NodalField cub = cubic_load(*ctx.mesh, state_.phi);
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i)
      rhs[i] = cfg_.params.epsilon * aphi[i] + (cub.v[i] - mphi[i]) / cfg_.params.epsilon;
    cg_solve(ctx.M, rhs, state_.mu.v, 1e-13, 2000);
  }

  StepRecord make_record(int m, int cycles, double rms, double defect) const {
    const LevelContext& fine = ws_.context(ws_.finest());
    StepRecord r;
    r.m = m;
    r.t = m * cfg_.params.tau;
    r.energy = energy(*fine.mesh, fine.A, state_.phi, cfg_.params.epsilon);
    r.mass = total_mass(fine.M, state_.phi);
    r.phi_min = min_value(state_.phi);
    r.phi_max = max_value(state_.phi);
    r.cycles = cycles;
    r.residual = rms;
    r.energy_defect = defect;
    return r;
  }

  RunConfig cfg_;
  MeshHierarchy hier_;
  MgWorkspace ws_;
  DchState state_;
  std::vector<StepRecord> records_;
  int m_ = 0;
  int total_steps_ = 0;
};

}  // namespace dch
