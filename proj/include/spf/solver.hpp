#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spf/energy.hpp"
#include "spf/fem.hpp"
#include "spf/problem.hpp"

namespace spf {

/// Alternating-minimization driver configuration. Numerical defaults follow
/// the reference experiment set: alpha 0.05, eps ramp 0.5 -> 0.05 over 500
/// iterations, deformation steps every 10 iterations from iteration 300 on.
struct SolverConfig {
  TerminalConfig terminals;
  double alpha = 0.05;
  double eps_in = 0.5;
  double eps_end = 0.05;
  int n_iter = 500;
  int index = 300;       // first iteration eligible for a deformation step
  int shape_period = 10;
  double cg_tol = 1e-8;
  double shape_step_max = 1.0;
  bool paper_faithful_shape_step = false;  // single full step, accepted unconditionally

  double mesh_h = 0.02;
  // Domain disc; radius <= 0 selects the default (centroid, 1.6 x spread).
  Vec2 domain_center;
  double domain_radius = 0.0;
  double mollifier_width = 0.0;  // <= 0 selects eps_end

  void validate() const;
  double resolved_width() const { return mollifier_width > 0.0 ? mollifier_width : eps_end; }
};

struct SolverState {
  int iteration = 0;
  double epsilon = 0.0;
  double eta = 0.0;
  ScalarField u;
  ScalarField phi;
  VectorField sigma;
  EnergyBreakdown energy;
};

struct TraceEntry {
  int j = 0;
  double epsilon = 0.0;
  EnergyBreakdown energy;             // after the full iteration (post-clamp)
  double transport_mass = 0.0;
  bool shape_step_accepted = false;
  double clamp_energy_delta = 0.0;    // energy(post-clamp) - energy(pre-clamp), all clamps of the iteration
  // Diagnostics kept out of the CSV schema.
  double duality_gap = 0.0;           // |G(sigma_j, phi~) + G'(u_j, phi~)|
  double g_value = 0.0;               // G(sigma_j, phi~)
  double eta = 0.0;
  double phi_min = 0.0;
  double phi_max = 0.0;
  bool boundary_ok = true;            // phi == 1 at every boundary vertex
};

using EnergyTrace = std::vector<TraceEntry>;

struct RunResult {
  std::unique_ptr<Mesh> mesh;
  SourceLoad load;
  SolverState state;  // fields reference *mesh
  EnergyTrace trace;
  bool completed = false;
  std::string failure;  // set when a sub-step failed; state is the last good one
};

struct LengthEstimates {
  double mm_length = 0.0;  // dirichlet + well parts of the final breakdown
  double mass = 0.0;       // int |sigma|
};

/// Reusable assembly plan: CSR pattern plus per-element slot table, so the
/// per-iteration systems refill values without re-sorting triplets.
class P1System {
 public:
  explicit P1System(const Mesh& mesh);
  const Mesh& mesh() const { return *mesh_; }
  /// Stiffness with per-element weights into the fixed pattern.
  SparseMatrix weighted_stiffness(std::span<const double> weights) const;
  /// Weighted stiffness plus a lumped diagonal term.
  SparseMatrix weighted_stiffness_plus_diag(std::span<const double> weights,
                                            std::span<const double> diag) const;

 private:
  const Mesh* mesh_;
  SparseMatrix pattern_;
  std::vector<std::array<int, 9>> slots_;
};

/// eps_j = ((N-j)/N) eps_in + (j/N) eps_end for 1 <= j <= n_iter: the
/// decreasing ramp from eps_in to eps_end (the only reading that keeps eps
/// positive and lands on eps_end). Throws ErrorCode::config out of range.
double epsilon_schedule(const SolverConfig& cfg, int j);

/// Dual potential step: minimizes int eps |grad u|^2 / (2 phi~^2) + u f over
/// mean-zero u, with phi~^2 the element reduction of phi^2.
std::pair<ScalarField, SolveReport> u_step(const ScalarField& phi, const SourceLoad& load,
                                           double eps, const SolverConfig& cfg,
                                           std::span<const double> x0 = {},
                                           const P1System* plan = nullptr);

/// Flux reconstruction sigma = eps grad u / phi~^2 (same reduction as u_step).
VectorField sigma_from_u(const ScalarField& u, const ScalarField& phi, double eps);

/// Phase-field step: solves the linear optimality system of
/// G_eps(sigma, .) + Lambda_eps(.) with phi = 1 on the boundary, then clamps
/// nodewise to [eta, 1].
ScalarField phi_step(const VectorField& sigma, double eps, double eta, double cg_tol = 1e-8,
                     std::span<const double> hint = {}, const P1System* plan = nullptr);

/// Unclamped variant; used to account for the clamp's energy perturbation.
ScalarField phi_step_unclamped(const VectorField& sigma, double eps, double cg_tol = 1e-8,
                               std::span<const double> hint = {},
                               const P1System* plan = nullptr);

/// P1 displacement field (nodal vectors).
struct NodalVectorField {
  const Mesh* mesh = nullptr;
  std::vector<Vec2> values;

  NodalVectorField() = default;
  explicit NodalVectorField(const Mesh& m) : mesh(&m), values(m.vertex_count()) {}
};

/// Assembled gradient of Lambda_eps with respect to domain deformations,
/// i.e. the linear form W -> int [ eps (grad phi, grad W grad phi)
/// - (eps/2)|grad phi|^2 div W - (1-phi)^2/(2 eps) div W ].
void assemble_shape_gradient(const ScalarField& phi, double eps, std::vector<double>& gx,
                             std::vector<double>& gy);

/// The same linear form evaluated directly along a nodal direction field.
double shape_derivative_along(const ScalarField& phi, double eps, const NodalVectorField& w);

/// Lambda_eps(phi o (id + tW)) computed by change of variables on the fixed
/// mesh; finite differences of this functional are the independent check of
/// the assembled gradient.
double lambda_pullback(const ScalarField& phi, double eps, const NodalVectorField& w, double t);

/// phi(x + tau W(x)) sampled at the nodes; points that leave the mesh take the
/// boundary value 1.
ScalarField compose_with_displacement(const ScalarField& phi, const NodalVectorField& w,
                                      double tau);

struct ShapeStepResult {
  ScalarField phi;
  bool accepted = false;
  double step = 0.0;
};

/// One H1-gradient deformation step with backtracking: solves the vector
/// Laplacian representation of the shape gradient, then tries steps
/// shape_step_max * 2^-k (k = 0..8) and keeps the first that lowers
/// Lambda_eps. Rejection returns the input unchanged. In paper-faithful mode
/// the full step is taken unconditionally.
ShapeStepResult shape_step(const ScalarField& phi, double eps, double shape_step_max = 1.0,
                           bool paper_faithful = false, double cg_tol = 1e-8,
                           const P1System* plan = nullptr);

using RunCallback = std::function<void(const SolverState&)>;

/// Full alternating run: eps continuation, dual step, flux reconstruction,
/// phase-field step, periodic deformation steps, final clamp each iteration.
/// Deterministic given the config. Numerical failures are reported in the
/// result together with the last good state.
RunResult run(const SolverConfig& cfg, const RunCallback& callback = {});

LengthEstimates network_length_estimates(const SolverState& state);

}  // namespace spf
