#pragma once

#include <vector>

#include "spf/energy.hpp"
#include "spf/fem.hpp"

namespace spf {

/// Explicit low-energy pair concentrated on a segment network: the upper-bound
/// certificate evaluated by the same discrete energy as solver output.
/// Reported tube parameters are the effective ones of the first segment (they
/// coincide with theta*alpha*eps/2, eps*ln((1-eta)/eps), max-rule once the
/// mesh resolves the inner tube).
struct RecoveryPair {
  VectorField sigma;
  ScalarField phi;
  double epsilon = 0.0;
  double a_eps = 0.0;
  double b_eps = 0.0;
  double r_eps = 0.0;
};

/// Radial polynomial bump of unit mass supported in the ball of radius 1/4;
/// the compactly supported mollifier of the feasibility constraint.
double bump_rho(double r);
double bump_support_radius();

/// Builds the tube construction: phi equal to eta on a core around each
/// segment, the exponential optimal transition of width eps*ln((1-eta)/eps),
/// a linear finish of width eps; sigma constant theta/(2a) along each tube and
/// a local Neumann corner solve around each endpoint. Per-element values are
/// exact clip averages (tube) and subdivided quadrature (corners).
///
/// Requires alpha > 0 (ErrorCode::unsupported otherwise), a mesh resolving the
/// scale eps (max edge <= eps/2, ErrorCode::invalid_resolution), and tubes
/// that fit inside the meshed domain (ErrorCode::geometry).
RecoveryPair build_recovery(const SegmentNetwork& net, double alpha, double eps,
                            const Mesh& mesh);

/// Nodal pairing of the weak divergence: -sum_T area_T sigma_T . grad psi_i.
std::vector<double> weak_divergence_pairing(const VectorField& sigma);

/// Nodal pairing of the mollified endpoint data sum_P w_P int rho_eps(x-P)
/// psi_i dx by subdivided quadrature; the feasibility target.
std::vector<double> mollified_source_pairing(const SegmentNetwork& net, double eps,
                                             const Mesh& mesh);

/// Energy constant of the corner problem, int_Q |grad u|^2 over the rescaled
/// square with strip half-height s and half-size r.
double corner_energy_constant(double theta, double s, double r);

/// 1D profile energy int_0^{b} (eps/2)|w'|^2 + (1-w)^2/(2 eps) dt of the
/// optimal transition w = 1 - (1-eta) exp(-t/eps), integrated numerically.
/// Requires 0 < eta < 1/2 and eps < 1 - eta.
double transition_cost_check(double eps, double eta);

}  // namespace spf
