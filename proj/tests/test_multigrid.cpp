#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dch/integrate.hpp"
#include "dch/multigrid.hpp"
#include "support/oracles.hpp"

using namespace dch;

namespace {

DchParams sample_params(int levels) {
  DchParams p;
  p.epsilon = 0.6;
  p.gamma = 0.4;
  p.tau = 0.05;
  p.tol = 1e-12;
  p.levels = levels;
  return p;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// mean-adjusted comparison for the pressure
double pressure_diff(const SparseMatrix& mass, const NodalField& a, const NodalField& b) {
  const NodalField za = project_zero_mean(mass, a);
  const NodalField zb = project_zero_mean(mass, b);
  return max_abs_diff(za.v, zb.v);
}

}  // namespace

TEST_CASE("local scalar solve matches a bisection oracle") {
  // model equation eps*a*f + (1/eps) q f^3 = s
  auto rng = oracle::test_rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const double eps = oracle::uniform(rng, 0.05, 1.0);
    const double a = oracle::uniform(rng, 0.1, 5.0);
    const double q = oracle::uniform(rng, 1e-3, 2.0);
    const double s = oracle::uniform(rng, -10.0, 10.0);
    detail::LocalCubic cubic;
    cubic.c3 = q;
    double root = 0.0;
    const bool ok = detail::solve_local_scalar(cubic, eps * a, -s, eps, oracle::uniform(rng, -3.0, 3.0), root);
    CHECK(ok);

    // bisection oracle
    const auto f = [&](double x) { return eps * a * x + q * x * x * x / eps - s; };
    double lo = -1e3, hi = 1e3;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) > 0.0 ? hi : lo) = mid;
    }
    CHECK(root == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-12));
    CHECK(std::abs(f(root)) <= 1e-12 * std::max(1.0, std::abs(s)));
  }
}

TEST_CASE("an exact state is a smoother fixed point") {
  const auto h = build_hierarchy(1, 2);
  const std::size_t n = static_cast<std::size_t>(h.level(2).node_count());
  const auto prm = sample_params(2);
  auto rng = oracle::test_rng(42);
  const auto prev = oracle::random_field(rng, 2, n, -1.0, 1.0);

  MgWorkspace ws(h);
  ws.prepare_step(prev);
  const auto s = compute_sources(ws.context(2), prm);
  DchState init = DchState::zeros(2, n);
  init.phi = prev;
  auto result = solve(ws, prm, s, std::move(init));
  REQUIRE(result.report.converged);

  DchState before = result.state;
  smooth(ws, 2, prm, s, result.state, 3);
  CHECK(max_abs_diff(before.p.v, result.state.p.v) <= 1e-10);
  CHECK(max_abs_diff(before.mu.v, result.state.mu.v) <= 1e-10);
  CHECK(max_abs_diff(before.phi.v, result.state.phi.v) <= 1e-10);
}

TEST_CASE("residual decreases under smoothing from a random start (16x16)") {
  const auto h = build_hierarchy(1, 4);
  const std::size_t n = static_cast<std::size_t>(h.level(4).node_count());
  const auto prm = sample_params(4);
  auto rng = oracle::test_rng(43);
  const auto prev = oracle::random_field(rng, 4, n, -1.0, 1.0);

  MgWorkspace ws(h);
  ws.prepare_step(prev);
  const auto s = compute_sources(ws.context(4), prm);
  DchState state{oracle::random_field(rng, 4, n, -0.5, 0.5),
                 oracle::random_field(rng, 4, n, -0.5, 0.5),
                 oracle::random_field(rng, 4, n, -0.5, 0.5)};
  double rms = residual_rms(ws.context(4), prm, s, state);
  for (int sweep = 0; sweep < 10; ++sweep) {
    smooth(ws, 4, prm, s, state, 1);
    const double next = residual_rms(ws.context(4), prm, s, state);
    CHECK(next <= rms * (1.0 + 1e-9));
    rms = next;
  }
}

TEST_CASE("two-level V-cycle equals the hand-scripted sequence") {
  const auto h = build_hierarchy(1, 1);
  const std::size_t nf = static_cast<std::size_t>(h.level(1).node_count());
  const auto prm = sample_params(1);
  auto rng = oracle::test_rng(44);
  const auto prev = oracle::random_field(rng, 1, nf, -1.0, 1.0);

  MgWorkspace ws(h);
  ws.prepare_step(prev);
  const auto s = compute_sources(ws.context(1), prm);
  DchState start{oracle::random_field(rng, 1, nf, -1.0, 1.0),
                 oracle::random_field(rng, 1, nf, -1.0, 1.0),
                 oracle::random_field(rng, 1, nf, -1.0, 1.0)};

  const DchState via_cycle = v_cycle(ws, 1, start, s, prm);

  // scripted: pre-smooth, restrict, coarse rhs, coarse sweeps, correct, post-smooth
  DchState state = start;
  smooth(ws, 1, prm, s, state, prm.sweeps);
  DchState coarse{restrict_nodal(h, state.p), restrict_nodal(h, state.mu),
                  restrict_nodal(h, state.phi)};
  SourceTriple rhs = apply_operator(ws.context(0), prm, coarse);
  const SourceTriple fine_resid = residual(ws.context(1), prm, s, state);
  axpy(rhs.s1, 1.0, restrict_canonical(h, fine_resid.s1));
  axpy(rhs.s2, 1.0, restrict_canonical(h, fine_resid.s2));
  axpy(rhs.s3, 1.0, restrict_canonical(h, fine_resid.s3));
  DchState coarse_solution = coarse;
  smooth(ws, 0, prm, rhs, coarse_solution, prm.coarse_sweeps);
  detail::coarse_newton(ws.context(0), prm, rhs, coarse_solution, 0.01 * prm.tol, 12);
  axpy(coarse_solution.p, -1.0, coarse.p);
  axpy(coarse_solution.mu, -1.0, coarse.mu);
  axpy(coarse_solution.phi, -1.0, coarse.phi);
  axpy(state.p, 1.0, prolong(h, coarse_solution.p));
  axpy(state.mu, 1.0, prolong(h, coarse_solution.mu));
  axpy(state.phi, 1.0, prolong(h, coarse_solution.phi));
  smooth(ws, 1, prm, s, state, prm.sweeps);

  CHECK(via_cycle.p.v == state.p.v);
  CHECK(via_cycle.mu.v == state.mu.v);
  CHECK(via_cycle.phi.v == state.phi.v);
}

TEST_CASE("a converged state passes through the V-cycle unchanged at tolerance") {
  const auto h = build_hierarchy(1, 2);
  const std::size_t n = static_cast<std::size_t>(h.level(2).node_count());
  const auto prm = sample_params(2);
  auto rng = oracle::test_rng(45);
  const auto prev = oracle::random_field(rng, 2, n, -1.0, 1.0);

  MgWorkspace ws(h);
  ws.prepare_step(prev);
  const auto s = compute_sources(ws.context(2), prm);
  DchState init = DchState::zeros(2, n);
  init.phi = prev;
  auto result = solve(ws, prm, s, std::move(init));
  REQUIRE(result.report.converged);

  const DchState cycled = v_cycle(ws, 2, result.state, s, prm);
  CHECK(residual_rms(ws.context(2), prm, s, cycled) < prm.tol);
}

TEST_CASE("solve returns immediately on an exact initial state") {
  const auto h = build_hierarchy(1, 2);
  const std::size_t n = static_cast<std::size_t>(h.level(2).node_count());
  const auto prm = sample_params(2);
  const double c = 0.45;
  MgWorkspace ws(h);
  ws.prepare_step(NodalField(2, std::vector<double>(n, c)));
  const auto s = compute_sources(ws.context(2), prm);
  DchState exact = DchState::zeros(2, n);
  exact.phi = NodalField(2, std::vector<double>(n, c));
  exact.mu = NodalField(2, std::vector<double>(n, (c * c * c - c) / prm.epsilon));
  const auto result = solve(ws, prm, s, std::move(exact));
  CHECK(result.report.converged);
  CHECK(result.report.cycles == 0);
  CHECK(result.report.history.size() == 1);
}

TEST_CASE("multigrid agrees with dense Newton on an 8x8 mesh") {
  const auto h = build_hierarchy(1, 3);
  const auto& m = h.level(3);
  const std::size_t n = static_cast<std::size_t>(m.node_count());
  auto rng = oracle::test_rng(46);

  DchParams prm = sample_params(3);
  prm.epsilon = 1.0;
  prm.gamma = 1.0;
  prm.tau = 1.0;
  prm.tol = 1e-13;  // leave headroom below the 1e-10 comparison
  const auto prev = oracle::random_field(rng, 3, n, -1.0, 1.0);

  MgWorkspace ws(h);
  ws.prepare_step(prev);
  const auto s = compute_sources(ws.context(3), prm);
  DchState init = DchState::zeros(3, n);
  init.phi = prev;
  const auto result = solve(ws, prm, s, std::move(init));
  REQUIRE(result.report.converged);

  const auto newton = oracle::dense_newton(m, prm, prev, s);
  CHECK(pressure_diff(ws.context(3).M, result.state.p, newton.p) <= 1e-10);
  CHECK(max_abs_diff(result.state.mu.v, newton.mu.v) <= 1e-10);
  CHECK(max_abs_diff(result.state.phi.v, newton.phi.v) <= 1e-10);
}

TEST_CASE("different initial guesses converge to the same state") {
  const auto h = build_hierarchy(1, 3);
  const std::size_t n = static_cast<std::size_t>(h.level(3).node_count());
  auto rng = oracle::test_rng(47);
  const auto prm = sample_params(3);
  const auto prev = oracle::random_field(rng, 3, n, -1.0, 1.0);

  MgWorkspace ws(h);
  ws.prepare_step(prev);
  const auto s = compute_sources(ws.context(3), prm);

  DchState a = DchState::zeros(3, n);
  a.phi = prev;
  DchState b{oracle::random_field(rng, 3, n, -2.0, 2.0), oracle::random_field(rng, 3, n, -2.0, 2.0),
             oracle::random_field(rng, 3, n, -2.0, 2.0)};
  const auto ra = solve(ws, prm, s, std::move(a));
  const auto rb = solve(ws, prm, s, std::move(b));
  REQUIRE(ra.report.converged);
  REQUIRE(rb.report.converged);
  CHECK(pressure_diff(ws.context(3).M, ra.state.p, rb.state.p) <= 10.0 * prm.tol * 1e3);
  CHECK(max_abs_diff(ra.state.mu.v, rb.state.mu.v) <= 10.0 * prm.tol * 1e3);
  CHECK(max_abs_diff(ra.state.phi.v, rb.state.phi.v) <= 10.0 * prm.tol * 1e3);
}

TEST_CASE("exhausting max_cycles reports failure instead of throwing") {
  const auto h = build_hierarchy(1, 3);
  const std::size_t n = static_cast<std::size_t>(h.level(3).node_count());
  auto rng = oracle::test_rng(48);
  DchParams prm = sample_params(3);
  prm.max_cycles = 1;
  const auto prev = oracle::random_field(rng, 3, n, -1.0, 1.0);

  MgWorkspace ws(h);
  ws.prepare_step(prev);
  const auto s = compute_sources(ws.context(3), prm);
  DchState init = DchState::zeros(3, n);
  const auto result = solve(ws, prm, s, std::move(init));
  CHECK_FALSE(result.report.converged);
  CHECK(result.report.cycles == 1);
  CHECK(result.report.history.size() == 2);
  CHECK(result.report.final_rms >= prm.tol);
}

TEST_CASE("MMS step at 32x32: V-cycle residuals fall monotonically below tol") {
  RunConfig cfg;
  cfg.params.epsilon = 1.0;
  cfg.params.gamma = 1.0;
  cfg.params.tau = 0.025;
  cfg.params.t_final = 0.025;
  cfg.params.levels = 5;
  cfg.initial = InitialKind::manufactured;
  cfg.mms = true;

  const MeshHierarchy h = build_hierarchy(1, 5);
  MgWorkspace ws(h);
  const NodalField phi0 = initial_condition(cfg, h.level(5));
  ws.prepare_step(phi0);
  SourceTriple s = compute_sources(ws.context(5), cfg.params);
  const ManufacturedSolution ms{1.0, 1.0};
  apply_mms_loads(s, h.level(5), ms, cfg.params.tau, cfg.params.tau);
  DchState init = DchState::zeros(5, phi0.size());
  init.phi = phi0;
  const auto result = solve(ws, cfg.params, s, std::move(init));

  REQUIRE(result.report.converged);
  CHECK(result.report.final_rms < 1e-12);
  CHECK(result.report.cycles <= 30);
  for (std::size_t k = 1; k < result.report.history.size(); ++k)
    CHECK(result.report.history[k] < result.report.history[k - 1]);
}
