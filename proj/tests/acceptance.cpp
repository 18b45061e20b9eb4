// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Tolerances are fixed here, not tuned at run time.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <thread>
#include <vector>

#include "spf/io.hpp"
#include "spf/recovery.hpp"
#include "spf/solver.hpp"
#include "spf/steiner.hpp"

using namespace spf;

namespace {

int g_failures = 0;

void report(int number, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] C%d %s: %s\n", pass ? "PASS" : "FAIL", number, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), pattern, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

constexpr double kSqrt3 = 1.7320508075688772;

}  // namespace

// --- C1/C5/C9 share the reference two-terminal run -------------------------

void criteria_1_5_9() {
  SolverConfig cfg;
  cfg.terminals.source = {-0.5, 0.0};
  cfg.terminals.sinks = {{0.5, 0.0}};
  cfg.mesh_h = 0.02;  // defaults elsewhere: alpha 0.05, eps 0.5->0.05, 500 its, index 300

  const auto t0 = std::chrono::steady_clock::now();
  RunResult rr = run(cfg);
  const double elapsed = seconds_since(t0);

  if (!rr.completed) {
    report(1, "two-terminal convergence", false, "run failed: " + rr.failure);
    report(5, "duality gap", false, "run failed");
    report(9, "bound preservation and determinism", false, "run failed");
    return;
  }

  const double oracle = 1.05;  // (1 + alpha theta) d with d = 1, theta = 1
  const double total = rr.state.energy.total;
  const double mass = transport_mass(rr.state.sigma);
  const bool c1 = std::abs(total - oracle) <= 0.15 * oracle &&
                  std::abs(mass - 1.0) <= 0.15 && elapsed <= 300.0;
  report(1, "two-terminal convergence", c1,
         fmt("total=%.4f (target 1.05 +-15%%), mass=%.4f (target 1 +-15%%), time=%.0fs (cap 300)",
             total, mass, elapsed));
  if (!c1) {
    // Breakdown for the record: at h = 0.02, eps_end = 0.05 the discrete well
    // term necessarily pays ~2 node rows at eta along the tube
    // (~1.6 h/(2 eps) ~ 0.33 on top of the transition cost ~1), so the stated
    // band is out of reach at this pinned resolution; mass and runtime are the
    // meaningful clauses here. See the finer-resolution criteria 2 and 3.
    std::printf("       C1 breakdown: constraint=%.4f dirichlet=%.4f well=%.4f\n",
                rr.state.energy.constraint_term, rr.state.energy.dirichlet_term,
                rr.state.energy.well_term);
  }

  double max_gap = 0.0, scale = 0.0;
  for (const TraceEntry& e : rr.trace) {
    max_gap = std::max(max_gap, e.duality_gap);
    scale = std::max(scale, std::abs(e.g_value));
  }
  const bool c5 = max_gap <= 1e-5 * (1.0 + scale);
  report(5, "duality gap", c5,
         fmt("max |G + G'| = %.3e, bound %.3e", max_gap, 1e-5 * (1.0 + scale)));

  bool bounds_ok = true;
  for (const TraceEntry& e : rr.trace) {
    if (e.phi_min < e.eta - 1e-15 || e.phi_max > 1.0 + 1e-15 || !e.boundary_ok) bounds_ok = false;
  }
  RunResult rr2 = run(cfg);
  const bool identical = rr2.completed && trace_to_csv(rr.trace) == trace_to_csv(rr2.trace);
  report(9, "bound preservation and determinism", bounds_ok && identical,
         fmt("eta<=phi<=1 and phi|boundary=1 at every iterate: %s; bitwise-identical traces: %s",
             bounds_ok ? "yes" : "no", identical ? "yes" : "no"));
}

// --- C2: Steiner triangle ---------------------------------------------------

void criterion_2() {
  SolverConfig cfg;
  cfg.terminals.source = {0.0, 0.0};
  cfg.terminals.sinks = {{1.0, 0.0}, {0.5, 0.5 * kSqrt3}};
  cfg.alpha = 0.05;
  cfg.eps_end = 0.12;        // resolved phase-field width at this h
  cfg.mollifier_width = 0.05;
  cfg.mesh_h = 0.008;

  RunResult rr = run(cfg);
  if (!rr.completed) {
    report(2, "steiner triangle", false, "run failed: " + rr.failure);
    return;
  }
  std::vector<Vec2> pts = {cfg.terminals.source};
  for (const Vec2& p : cfg.terminals.sinks) pts.push_back(p);
  FluxTreeSolution oracle = limit_energy_min_tree(pts, cfg.alpha);

  const LengthEstimates est = network_length_estimates(rr.state);
  const double len_err = std::abs(est.mm_length - oracle.tree.length) / oracle.tree.length;
  const double gap = (rr.state.energy.total - oracle.value) / oracle.value;
  const bool pass = len_err <= 0.10 && std::abs(gap) <= 0.15;
  report(2, "steiner triangle", pass,
         fmt("mm_length=%.4f vs oracle tree %.4f (err %.1f%%, cap 10%%); energy gap %.1f%% "
             "(cap 15%%)",
             est.mm_length, oracle.tree.length, 100.0 * len_err, 100.0 * gap));
}

// --- C3: Steiner square and the role of the deformation step ----------------

void criterion_3() {
  SolverConfig cfg;
  cfg.terminals.source = {0.0, 0.0};
  cfg.terminals.sinks = {{1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
  cfg.alpha = 0.01;
  cfg.eps_end = 0.12;
  cfg.mollifier_width = 0.05;
  cfg.mesh_h = 0.009;

  SolverConfig no_shape_cfg = cfg;
  no_shape_cfg.index = cfg.n_iter + 1;  // deformation never triggers

  // The two runs are independent processes over distinct configs; run them
  // concurrently (each run itself stays single-threaded and deterministic).
  RunResult with_shape, no_shape;
  std::thread worker([&] { with_shape = run(cfg); });
  no_shape = run(no_shape_cfg);
  worker.join();

  if (!with_shape.completed || !no_shape.completed) {
    report(3, "steiner square", false, "run failed");
    return;
  }
  const double target = 1.0 + kSqrt3;
  const LengthEstimates est = network_length_estimates(with_shape.state);
  const double len_err = std::abs(est.mm_length - target) / target;
  const bool ordered =
      no_shape.state.energy.total >= with_shape.state.energy.total - 1e-12;
  const bool pass = len_err <= 0.10 && ordered;
  report(3, "steiner square", pass,
         fmt("mm_length=%.4f vs 1+sqrt3=%.4f (err %.1f%%, cap 10%%); final energy without "
             "deformation %.4f >= with %.4f: %s",
             est.mm_length, target, 100.0 * len_err, no_shape.state.energy.total,
             with_shape.state.energy.total, ordered ? "yes" : "no"));
}

// --- C4: upper-bound certificates -------------------------------------------

void criterion_4() {
  const auto t0 = std::chrono::steady_clock::now();
  SegmentNetwork net;
  net.segments = {make_segment({0.0, 0.0}, {1.0, 0.0}, 1.0)};
  const double alpha = 0.05;

  std::vector<double> totals;
  bool feasible = true;
  for (double eps : {0.08, 0.04, 0.02}) {
    const double margin = 3.5 * eps + 0.1;
    Mesh mesh = build_disc_mesh({0.5, 0.0}, 0.5 + margin, eps / 40.0);
    RecoveryPair pair = build_recovery(net, alpha, eps, mesh);
    totals.push_back(total_energy(pair.sigma, pair.phi, eps).total);
    if (eps == 0.02 && std::abs(transport_mass(pair.sigma) - 1.0) > 0.1) feasible = false;
  }
  const double elapsed = seconds_since(t0);
  const bool decreasing = totals[0] > totals[1] && totals[1] > totals[2];
  const bool final_ok = totals[2] <= 1.05 + 0.15;
  const bool pass = decreasing && final_ok && feasible && elapsed <= 120.0;
  report(4, "recovery certificates", pass,
         fmt("totals {%.3f, %.3f, %.3f} decreasing: %s; final <= 1.20: %s; mass ok: %s; "
             "time=%.0fs (cap 120)",
             totals[0], totals[1], totals[2], decreasing ? "yes" : "no",
             final_ok ? "yes" : "no", feasible ? "yes" : "no", elapsed));
}

// --- C6: frozen-eps monotone descent -----------------------------------------

void criterion_6() {
  SolverConfig cfg;
  cfg.terminals.source = {-0.5, 0.0};
  cfg.terminals.sinks = {{0.5, 0.0}};
  cfg.eps_in = 0.1;
  cfg.eps_end = 0.1;
  cfg.n_iter = 100;
  cfg.index = cfg.n_iter + 1;
  cfg.mesh_h = 0.025;
  cfg.mollifier_width = 0.07;  // the frozen eps would not clear the boundary margin

  RunResult rr = run(cfg);
  if (!rr.completed) {
    report(6, "fixed-eps monotone descent", false, "run failed: " + rr.failure);
    return;
  }
  bool monotone = true;
  double worst_violation = 0.0;
  for (std::size_t i = 1; i < rr.trace.size(); ++i) {
    const double pre_clamp = rr.trace[i].energy.total - rr.trace[i].clamp_energy_delta;
    const double prev = rr.trace[i - 1].energy.total;
    const double slack = 10.0 * cfg.cg_tol * (1.0 + std::abs(prev));
    worst_violation = std::max(worst_violation, pre_clamp - prev);
    if (pre_clamp > prev + slack) monotone = false;
  }
  double clamp_sum = 0.0;
  for (const TraceEntry& e : rr.trace) clamp_sum += std::abs(e.clamp_energy_delta);
  const double initial = rr.trace.front().energy.total;
  const bool clamp_ok = clamp_sum < 0.01 * initial;
  report(6, "fixed-eps monotone descent", monotone && clamp_ok,
         fmt("max per-alternation increase %.2e (slack 10*cg_tol); sum |clamp delta| = %.2e "
             "(< 1%% of initial %.3f): %s",
             worst_violation, clamp_sum, initial, clamp_ok ? "yes" : "no"));
}

// --- C7: 1D transition cost ---------------------------------------------------

void criterion_7() {
  bool closed_ok = true;
  double worst = 0.0;
  for (auto [eps, eta] : {std::pair{0.05, 0.0025}, {0.1, 0.005}, {0.02, 0.001}, {0.25, 0.1}}) {
    const double numeric = transition_cost_check(eps, eta);
    const double closed = 0.5 * ((1.0 - eta) * (1.0 - eta) - eps * eps);
    worst = std::max(worst, std::abs(numeric - closed));
    if (std::abs(numeric - closed) > 1e-10) closed_ok = false;
  }

  // 100 randomized admissible profiles crossing 1/2 -> 3/4 pay at least 3/2^5.
  const double bound = 3.0 / 32.0;
  std::mt19937 rng(424242);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  bool bound_ok = true;
  double min_energy = 1e300;
  for (int rep = 0; rep < 100; ++rep) {
    const double eps = 0.01 + 0.49 * ud(rng);
    const double eta = 0.001 + 0.4 * ud(rng);
    const int pieces = 3 + static_cast<int>(ud(rng) * 17);
    const double horizon = 0.5 + 2.5 * ud(rng);
    std::vector<double> ts{0.0}, zs;
    for (int k = 1; k <= pieces; ++k) ts.push_back(horizon * k / pieces);
    zs.push_back(eta + (0.5 - eta) * ud(rng));
    for (int k = 1; k < pieces; ++k) zs.push_back(eta + (1.0 - eta) * ud(rng));
    zs.push_back(0.75 + 0.25 * ud(rng));
    double acc = 0.0;
    for (int k = 0; k + 1 <= pieces; ++k) {
      const double dt = ts[k + 1] - ts[k];
      const double slope = (zs[k + 1] - zs[k]) / dt;
      const double w0 = 1.0 - zs[k], w1 = 1.0 - zs[k + 1];
      acc += 0.5 * eps * slope * slope * dt + dt * (w0 * w0 + w0 * w1 + w1 * w1) / (6.0 * eps);
    }
    min_energy = std::min(min_energy, acc);
    if (acc < bound * (1.0 - 1e-12)) bound_ok = false;
  }
  report(7, "1d transition cost", closed_ok && bound_ok,
         fmt("closed form matched to %.1e (cap 1e-10); min profile energy %.4f >= 3/32 = %.4f",
             worst, min_energy, bound));
}

// --- C8: shape-derivative correctness -----------------------------------------

void criterion_8() {
  Mesh mesh = build_disc_mesh({0, 0}, 1.0, 0.05);
  const double eps = 0.08;
  ScalarField phi(mesh);
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const Vec2& p = mesh.vertices[i];
    phi.values[i] = 1.0 - 0.7 * std::exp(-(p.x * p.x + 2.0 * p.y * p.y) / 0.1) +
                    0.05 * std::sin(3.0 * p.x) * std::cos(2.0 * p.y);
  }
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    if (mesh.boundary_vertex[i]) phi.values[i] = 1.0;
  }

  std::mt19937 rng(777);
  std::uniform_real_distribution<double> cd(-1.0, 1.0);
  const double t = 1e-4;
  double worst_rel = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    NodalVectorField w(mesh);
    const double a1 = cd(rng), a2 = cd(rng), b1 = cd(rng), b2 = cd(rng);
    const double c1 = cd(rng), c2 = cd(rng);
    for (int i = 0; i < mesh.vertex_count(); ++i) {
      const Vec2& p = mesh.vertices[i];
      w.values[i] = {a1 + b1 * p.y + c1 * std::sin(2.0 * p.x + 1.0),
                     a2 + b2 * p.x + c2 * std::cos(2.0 * p.y - 0.5)};
    }
    const double assembled = shape_derivative_along(phi, eps, w);
    const double fd =
        (lambda_pullback(phi, eps, w, t) - lambda_pullback(phi, eps, w, -t)) / (2.0 * t);
    worst_rel = std::max(worst_rel, std::abs(fd - assembled) / (std::abs(assembled) + 1e-12));
  }
  report(8, "shape-derivative correctness", worst_rel <= 0.01,
         fmt("max relative error over 20 directions: %.2e (cap 1e-2)", worst_rel));
}

int main() {
  std::printf("acceptance suite\n");
  criteria_1_5_9();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_6();
  criterion_7();
  criterion_8();
  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures;
}
