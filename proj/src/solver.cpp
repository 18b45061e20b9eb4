#include "spf/solver.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace spf {

void SolverConfig::validate() const {
  terminals.validate();
  if (!(eps_end > 0.0) || !(eps_in >= eps_end)) {
    throw Error(ErrorCode::config, "solver config: requires 0 < eps_end <= eps_in");
  }
  if (n_iter < 0) throw Error(ErrorCode::config, "solver config: n_iter must be >= 0");
  if (index < 0) throw Error(ErrorCode::config, "solver config: index must be >= 0");
  if (shape_period < 1) throw Error(ErrorCode::config, "solver config: shape_period must be >= 1");
  if (!(cg_tol > 0.0)) throw Error(ErrorCode::config, "solver config: cg_tol must be positive");
  if (!(mesh_h > 0.0)) throw Error(ErrorCode::config, "solver config: mesh_h must be positive");
  if (!(alpha >= 0.0)) throw Error(ErrorCode::config, "solver config: alpha must be >= 0");
}

double epsilon_schedule(const SolverConfig& cfg, int j) {
  if (cfg.n_iter < 1 || j < 1 || j > cfg.n_iter) {
    throw Error(ErrorCode::config, "epsilon_schedule: iteration out of range");
  }
  const double n = static_cast<double>(cfg.n_iter);
  return ((n - j) / n) * cfg.eps_in + (static_cast<double>(j) / n) * cfg.eps_end;
}

P1System::P1System(const Mesh& mesh) : mesh_(&mesh) {
  const int nt = mesh.triangle_count();
  std::vector<int> rows, cols;
  std::vector<double> vals;
  rows.reserve(9 * nt);
  cols.reserve(9 * nt);
  vals.assign(9 * static_cast<std::size_t>(nt), 0.0);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        rows.push_back(tri[i]);
        cols.push_back(tri[j]);
      }
    }
  }
  pattern_ = SparseMatrix::from_triplets(mesh.vertex_count(), rows, cols, vals);

  slots_.resize(nt);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    int s = 0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j, ++s) {
        const int r = tri[i];
        int pos = -1;
        for (int k = pattern_.row_ptr[r]; k < pattern_.row_ptr[r + 1]; ++k) {
          if (pattern_.col[k] == tri[j]) {
            pos = k;
            break;
          }
        }
        slots_[t][s] = pos;
      }
    }
  }
}

SparseMatrix P1System::weighted_stiffness(std::span<const double> weights) const {
  SparseMatrix A = pattern_;
  std::fill(A.val.begin(), A.val.end(), 0.0);
  const Mesh& mesh = *mesh_;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double w = weights[t];
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::invalid_weight, "weighted_stiffness: nonpositive weight");
    }
    const ElementGeometry g = element_geometry(mesh, t);
    const double wA = w * g.area;
    int s = 0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j, ++s) {
        A.val[slots_[t][s]] += wA * dot(g.grad[i], g.grad[j]);
      }
    }
  }
  return A;
}

SparseMatrix P1System::weighted_stiffness_plus_diag(std::span<const double> weights,
                                                    std::span<const double> diag) const {
  SparseMatrix A = weighted_stiffness(weights);
  for (int i = 0; i < A.n; ++i) {
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
      if (A.col[k] == i) {
        A.val[k] += diag[i];
        break;
      }
    }
  }
  return A;
}

std::pair<ScalarField, SolveReport> u_step(const ScalarField& phi, const SourceLoad& load,
                                           double eps, const SolverConfig& cfg,
                                           std::span<const double> x0, const P1System* plan) {
  const Mesh& mesh = *phi.mesh;
  const std::vector<double> phi_tilde_sq = element_mean_sq(phi);
  std::vector<double> w(mesh.triangle_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) w[t] = eps / phi_tilde_sq[t];

  SparseMatrix A = plan ? plan->weighted_stiffness(w) : assemble_weighted_stiffness(mesh, w);

  // Optimality of int eps|grad u|^2/(2 phi~^2) + u f is A u = -f.
  std::vector<double> rhs(load.nodal_load.size());
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = -load.nodal_load[i];

  const std::vector<double> mass = lumped_mass_vector(mesh);
  auto [x, report] = solve_spd(A, rhs, cfg.cg_tol, /*pin_mean=*/true, mass, x0,
                               /*max_iter=*/std::max(2000, 8 * mesh.vertex_count()));
  ScalarField u(mesh);
  u.values = std::move(x);
  return {std::move(u), report};
}

VectorField sigma_from_u(const ScalarField& u, const ScalarField& phi, double eps) {
  const Mesh& mesh = *u.mesh;
  if (phi.mesh != u.mesh) throw Error(ErrorCode::mesh_mismatch, "sigma_from_u: mesh mismatch");
  const std::vector<double> phi_tilde_sq = element_mean_sq(phi);
  VectorField sigma = p1_gradient(u);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    sigma.values[t] = sigma.values[t] * (eps / phi_tilde_sq[t]);
  }
  return sigma;
}

ScalarField phi_step_unclamped(const VectorField& sigma, double eps, double cg_tol,
                               std::span<const double> hint, const P1System* plan) {
  const Mesh& mesh = *sigma.mesh;
  const int nv = mesh.vertex_count();

  // (|sigma|^2/eps + 1/eps) phi - eps lap phi = 1/eps, lumped zero-order terms.
  std::vector<double> lap_w(mesh.triangle_count(), eps);
  std::vector<double> diag(nv, 0.0);
  std::vector<double> rhs(nv, 0.0);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double third = mesh.triangle_area(t) / 3.0;
    const double s2 = norm_sq(sigma.values[t]);
    for (int k = 0; k < 3; ++k) {
      const int v = mesh.triangles[t][k];
      diag[v] += third * (s2 + 1.0) / eps;
      rhs[v] += third / eps;
    }
  }

  SparseMatrix A = plan ? plan->weighted_stiffness_plus_diag(lap_w, diag)
                        : [&] {
                            SparseMatrix K = assemble_weighted_stiffness(mesh, lap_w);
                            for (int i = 0; i < nv; ++i) {
                              for (int k = K.row_ptr[i]; k < K.row_ptr[i + 1]; ++k) {
                                if (K.col[k] == i) K.val[k] += diag[i];
                              }
                            }
                            return K;
                          }();

  std::vector<double> bc(nv, 1.0);
  A.eliminate_dirichlet(mesh.boundary_vertex, bc, rhs);

  auto [x, report] = solve_spd(A, rhs, cg_tol, /*pin_mean=*/false, {}, hint,
                               std::max(2000, 8 * nv));
  if (!report.converged) {
    throw Error(ErrorCode::solver_failure, "phi_step: conjugate gradients did not converge");
  }
  ScalarField phi(mesh);
  phi.values = std::move(x);
  return phi;
}

ScalarField phi_step(const VectorField& sigma, double eps, double eta, double cg_tol,
                     std::span<const double> hint, const P1System* plan) {
  ScalarField phi = phi_step_unclamped(sigma, eps, cg_tol, hint, plan);
  for (double& v : phi.values) v = std::clamp(v, eta, 1.0);
  return phi;
}

namespace {

struct ElementState {
  double area;
  Vec2 grad_phi;
  double grad_sq;
  double wsq;  // vertex mean of (1-phi)^2
};

ElementState element_state(const Mesh& mesh, const ScalarField& phi, int t) {
  const ElementGeometry g = element_geometry(mesh, t);
  const auto& tri = mesh.triangles[t];
  ElementState s{};
  s.area = g.area;
  Vec2 grad{0.0, 0.0};
  double wsq = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double v = phi.values[tri[k]];
    grad += v * g.grad[k];
    wsq += (1.0 - v) * (1.0 - v);
  }
  s.grad_phi = grad;
  s.grad_sq = norm_sq(grad);
  s.wsq = wsq / 3.0;
  return s;
}

std::vector<int> vertex_to_triangle(const Mesh& mesh) {
  std::vector<int> map(mesh.vertex_count(), -1);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    for (int k = 0; k < 3; ++k) {
      if (map[mesh.triangles[t][k]] < 0) map[mesh.triangles[t][k]] = t;
    }
  }
  return map;
}

}  // namespace

void assemble_shape_gradient(const ScalarField& phi, double eps, std::vector<double>& gx,
                             std::vector<double>& gy) {
  const Mesh& mesh = *phi.mesh;
  gx.assign(mesh.vertex_count(), 0.0);
  gy.assign(mesh.vertex_count(), 0.0);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ElementGeometry g = element_geometry(mesh, t);
    const ElementState s = element_state(mesh, phi, t);
    const double bulk = 0.5 * eps * s.grad_sq + s.wsq / (2.0 * eps);
    for (int k = 0; k < 3; ++k) {
      const int v = mesh.triangles[t][k];
      const double dphi_dir = dot(g.grad[k], s.grad_phi);
      // W = basis_k e_x: (grad W grad phi, grad phi) = dphi_dir * d_x phi,
      // div W = d_x basis_k; same with y.
      gx[v] += s.area * (eps * dphi_dir * s.grad_phi.x - bulk * g.grad[k].x);
      gy[v] += s.area * (eps * dphi_dir * s.grad_phi.y - bulk * g.grad[k].y);
    }
  }
}

double shape_derivative_along(const ScalarField& phi, double eps, const NodalVectorField& w) {
  const Mesh& mesh = *phi.mesh;
  if (w.mesh != phi.mesh) throw Error(ErrorCode::mesh_mismatch, "shape_derivative_along");
  double acc = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ElementGeometry g = element_geometry(mesh, t);
    const ElementState s = element_state(mesh, phi, t);
    // Jacobian of the P1 displacement: J_mn = d W_m / d x_n.
    double j11 = 0.0, j12 = 0.0, j21 = 0.0, j22 = 0.0;
    for (int k = 0; k < 3; ++k) {
      const Vec2 wk = w.values[mesh.triangles[t][k]];
      j11 += wk.x * g.grad[k].x;
      j12 += wk.x * g.grad[k].y;
      j21 += wk.y * g.grad[k].x;
      j22 += wk.y * g.grad[k].y;
    }
    const Vec2 gp = s.grad_phi;
    const double jgg = (j11 * gp.x + j12 * gp.y) * gp.x + (j21 * gp.x + j22 * gp.y) * gp.y;
    const double div_w = j11 + j22;
    acc += s.area * (eps * jgg - (0.5 * eps * s.grad_sq + s.wsq / (2.0 * eps)) * div_w);
  }
  return acc;
}

double lambda_pullback(const ScalarField& phi, double eps, const NodalVectorField& w, double t) {
  const Mesh& mesh = *phi.mesh;
  if (w.mesh != phi.mesh) throw Error(ErrorCode::mesh_mismatch, "lambda_pullback");
  double acc = 0.0;
  for (int e = 0; e < mesh.triangle_count(); ++e) {
    const ElementGeometry g = element_geometry(mesh, e);
    const ElementState s = element_state(mesh, phi, e);
    double j11 = 0.0, j12 = 0.0, j21 = 0.0, j22 = 0.0;
    for (int k = 0; k < 3; ++k) {
      const Vec2 wk = w.values[mesh.triangles[e][k]];
      j11 += wk.x * g.grad[k].x;
      j12 += wk.x * g.grad[k].y;
      j21 += wk.y * g.grad[k].x;
      j22 += wk.y * g.grad[k].y;
    }
    // (I + tJ)^T grad phi and det(I + tJ), element by element.
    const double a11 = 1.0 + t * j11, a12 = t * j12, a21 = t * j21, a22 = 1.0 + t * j22;
    const Vec2 gp = s.grad_phi;
    const Vec2 tg{a11 * gp.x + a21 * gp.y, a12 * gp.x + a22 * gp.y};
    const double det = a11 * a22 - a12 * a21;
    acc += s.area * (0.5 * eps * norm_sq(tg) + s.wsq / (2.0 * eps)) / det;
  }
  return acc;
}

ScalarField compose_with_displacement(const ScalarField& phi, const NodalVectorField& w,
                                      double tau) {
  const Mesh& mesh = *phi.mesh;
  ScalarField out(mesh);
  const std::vector<int> seed = vertex_to_triangle(mesh);
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const Vec2 q = mesh.vertices[i] + tau * w.values[i];
    if (auto loc = locate(mesh, q, seed[i])) {
      const auto& tri = mesh.triangles[loc->triangle_index];
      double v = 0.0;
      for (int k = 0; k < 3; ++k) v += loc->barycentric_coords[k] * phi.values[tri[k]];
      out.values[i] = v;
    } else {
      out.values[i] = 1.0;  // left the domain: boundary value
    }
  }
  return out;
}

ShapeStepResult shape_step(const ScalarField& phi, double eps, double shape_step_max,
                           bool paper_faithful, double cg_tol, const P1System* plan) {
  const Mesh& mesh = *phi.mesh;
  std::vector<double> gx, gy;
  assemble_shape_gradient(phi, eps, gx, gy);

  double gnorm = 0.0;
  for (std::size_t i = 0; i < gx.size(); ++i) gnorm += gx[i] * gx[i] + gy[i] * gy[i];
  if (gnorm == 0.0) {
    return {phi, false, 0.0};  // stationary (e.g. phi == 1)
  }

  // H1 representation: (grad V, grad W) = -<dLambda, W>, V = 0 on the boundary.
  std::vector<double> ones(mesh.triangle_count(), 1.0);
  SparseMatrix K = plan ? plan->weighted_stiffness(ones) : assemble_weighted_stiffness(mesh, ones);
  std::vector<double> zero_bc(mesh.vertex_count(), 0.0);
  std::vector<double> bx(gx), by(gy);
  for (double& v : bx) v = -v;
  for (double& v : by) v = -v;
  SparseMatrix Ky = K;  // eliminate mutates values and rhs
  K.eliminate_dirichlet(mesh.boundary_vertex, zero_bc, bx);
  Ky.eliminate_dirichlet(mesh.boundary_vertex, zero_bc, by);

  auto [vx, rx] = solve_spd(K, bx, cg_tol, false, {}, {}, std::max(2000, 8 * mesh.vertex_count()));
  auto [vy, ry] = solve_spd(Ky, by, cg_tol, false, {}, {}, std::max(2000, 8 * mesh.vertex_count()));
  if (!rx.converged || !ry.converged) {
    throw Error(ErrorCode::solver_failure, "shape_step: vector Laplacian solve failed");
  }

  NodalVectorField V(mesh);
  for (int i = 0; i < mesh.vertex_count(); ++i) V.values[i] = {vx[i], vy[i]};

  if (paper_faithful) {
    ScalarField moved = compose_with_displacement(phi, V, shape_step_max);
    return {std::move(moved), true, shape_step_max};
  }

  const double lambda_now = lambda_energy(phi, eps);
  double tau = shape_step_max;
  for (int k = 0; k <= 8; ++k, tau *= 0.5) {
    ScalarField moved = compose_with_displacement(phi, V, tau);
    if (lambda_energy(moved, eps) < lambda_now) {
      return {std::move(moved), true, tau};
    }
  }
  return {phi, false, 0.0};
}

RunResult run(const SolverConfig& cfg, const RunCallback& callback) {
  cfg.validate();

  Vec2 center = cfg.domain_center;
  double radius = cfg.domain_radius;
  if (!(radius > 0.0)) default_disc(cfg.terminals, center, radius);

  RunResult result;
  result.mesh = std::make_unique<Mesh>(build_disc_mesh(center, radius, cfg.mesh_h));
  const Mesh& mesh = *result.mesh;

  Mollifier moll{cfg.resolved_width()};
  result.load = build_source_load(mesh, cfg.terminals, moll);

  SolverState st;
  st.iteration = 0;
  st.epsilon = cfg.n_iter >= 1 ? cfg.eps_in : cfg.eps_in;
  st.eta = eta_default(cfg.alpha, st.epsilon);
  st.u = ScalarField(mesh, 0.0);
  st.phi = ScalarField(mesh, 1.0);
  st.sigma = VectorField(mesh);
  st.energy = total_energy(st.sigma, st.phi, st.epsilon);

  if (cfg.n_iter == 0) {
    result.state = std::move(st);
    result.completed = true;
    return result;
  }

  P1System plan(mesh);

  for (int j = 1; j <= cfg.n_iter; ++j) {
    const double eps = epsilon_schedule(cfg, j);
    const double eta = eta_default(cfg.alpha, eps);
    TraceEntry entry;
    entry.j = j;
    entry.epsilon = eps;
    entry.eta = eta;

    try {
      const std::vector<double> phi_tilde_sq = element_mean_sq(st.phi);

      auto [u, urep] = u_step(st.phi, result.load, eps, cfg, st.u.values, &plan);
      if (!urep.converged) {
        throw Error(ErrorCode::solver_failure, "u_step: conjugate gradients did not converge");
      }
      VectorField sigma = sigma_from_u(u, st.phi, eps);

      entry.g_value = constraint_energy(sigma, phi_tilde_sq, eps);
      entry.duality_gap =
          std::abs(entry.g_value + dual_energy(u, phi_tilde_sq, result.load, eps));

      ScalarField phi_raw = phi_step_unclamped(sigma, eps, cfg.cg_tol, st.phi.values, &plan);
      ScalarField phi_cl = phi_raw;
      for (double& v : phi_cl.values) v = std::clamp(v, eta, 1.0);
      entry.clamp_energy_delta =
          total_energy(sigma, phi_cl, eps).total - total_energy(sigma, phi_raw, eps).total;

      bool accepted = false;
      // The deformation is skipped on the final iteration: the returned pair
      // is then a mutual optimum of the two linear steps instead of a freshly
      // perturbed transient.
      if (j % cfg.shape_period == 0 && j >= cfg.index && j < cfg.n_iter) {
        ShapeStepResult sres = shape_step(phi_cl, eps, cfg.shape_step_max,
                                          cfg.paper_faithful_shape_step, cfg.cg_tol, &plan);
        accepted = sres.accepted;
        if (sres.accepted) {
          ScalarField phi_re = sres.phi;
          for (double& v : phi_re.values) v = std::clamp(v, eta, 1.0);
          entry.clamp_energy_delta +=
              total_energy(sigma, phi_re, eps).total - total_energy(sigma, sres.phi, eps).total;
          phi_cl = std::move(phi_re);
        }
      }
      entry.shape_step_accepted = accepted;

      st.iteration = j;
      st.epsilon = eps;
      st.eta = eta;
      st.u = std::move(u);
      st.sigma = std::move(sigma);
      st.phi = std::move(phi_cl);
      st.energy = total_energy(st.sigma, st.phi, eps);

      entry.energy = st.energy;
      entry.transport_mass = transport_mass(st.sigma);
      entry.phi_min = *std::min_element(st.phi.values.begin(), st.phi.values.end());
      entry.phi_max = *std::max_element(st.phi.values.begin(), st.phi.values.end());
      entry.boundary_ok = true;
      for (int i = 0; i < mesh.vertex_count(); ++i) {
        if (mesh.boundary_vertex[i] && st.phi.values[i] != 1.0) entry.boundary_ok = false;
      }
      result.trace.push_back(entry);
      if (callback) callback(st);
    } catch (const Error& err) {
      result.state = std::move(st);
      result.completed = false;
      result.failure = "iteration " + std::to_string(j) + ": " + err.what();
      return result;
    }
  }

  result.state = std::move(st);
  result.completed = true;
  return result;
}

LengthEstimates network_length_estimates(const SolverState& state) {
  LengthEstimates est;
  est.mm_length = state.energy.dirichlet_term + state.energy.well_term;
  est.mass = transport_mass(state.sigma);
  return est;
}

}  // namespace spf
