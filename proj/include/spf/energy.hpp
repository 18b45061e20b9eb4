#pragma once

#include <vector>

#include "spf/fem.hpp"
#include "spf/problem.hpp"

namespace spf {

/// The three parts of the phase-field energy at a given epsilon:
///   constraint = int phi^2 |sigma|^2 / (2 eps)
///   dirichlet  = int (eps/2) |grad phi|^2
///   well       = int (1 - phi)^2 / (2 eps)
struct EnergyBreakdown {
  double constraint_term = 0.0;
  double dirichlet_term = 0.0;
  double well_term = 0.0;
  double total = 0.0;
  double epsilon = 0.0;
};

/// Oriented weighted segment: xi is the unit vector from a to b.
struct Segment {
  Vec2 a;
  Vec2 b;
  double theta = 1.0;
  Vec2 xi;
};

Segment make_segment(const Vec2& a, const Vec2& b, double theta);

/// Finite union of weighted segments, pairwise intersecting in at most
/// endpoints.
struct SegmentNetwork {
  std::vector<Segment> segments;

  void validate() const;  // positive lengths, theta > 0, unit xi, endpoint-only crossings
  double total_length() const;
};

/// The eta(eps) rule paired with its limit ratio alpha: eta = min(0.9,
/// alpha*eps) for alpha > 0 and eta = eps^2 for alpha = 0, so eta/eps -> alpha.
struct AlphaRegime {
  double alpha = 0.0;
  double eta(double eps) const;
};

double eta_default(double alpha, double eps);

/// Discrete energy with all coefficient fields reduced element-wise (vertex
/// mean of phi^2 and (1-phi)^2); sigma is per-element already. Throws
/// ErrorCode::mesh_mismatch when the fields live on different meshes.
EnergyBreakdown total_energy(const VectorField& sigma, const ScalarField& phi, double eps);

/// Constraint part against an explicit element-wise phi^2 reduction; the
/// quantity the dual step optimizes.
double constraint_energy(const VectorField& sigma, std::span<const double> phi_tilde_sq,
                         double eps);

/// Dual potential energy int eps |grad u|^2 / (2 phi~^2) + load . u.
double dual_energy(const ScalarField& u, std::span<const double> phi_tilde_sq,
                   const SourceLoad& load, double eps);

/// Modica-Mortola part alone (dirichlet + well).
double lambda_energy(const ScalarField& phi, double eps);

/// Exact limit cost sum_i (1 + alpha theta_i) length_i.
double limit_energy(const SegmentNetwork& net, double alpha);

/// Discrete total variation sum_T |sigma_T| area_T, the mass estimator.
double transport_mass(const VectorField& sigma);

}  // namespace spf
