#pragma once

#include <array>
#include <vector>

#include "spf/common.hpp"

namespace spf {

/// Shortest-network solution over a terminal set. Edge endpoints index the
/// terminals first, then the reported branching points.
struct SteinerSolution {
  std::vector<Vec2> terminals;
  std::vector<Vec2> steiner_points;
  std::vector<std::array<int, 2>> edges;
  double length = 0.0;
};

/// Tree of integer fluxes routed from the source (terminal 0, weight N) to the
/// unit sinks, with the affine per-length cost 1 + alpha * flux.
struct FluxTreeSolution {
  SteinerSolution tree;           // geometry and plain length
  std::vector<double> edge_flux;  // per reported edge
  double value = 0.0;             // sum (1 + alpha flux_e) length_e
};

/// Exact planar Steiner minimal tree for 2..6 points: enumerates every full
/// branching topology (degenerations included via collapse), optimizes the
/// branch points by a fixed-point sweep (200-sweep cap, 1e-10 displacement
/// tolerance), and returns the shortest. Ties break on the lexicographic
/// topology encoding. Throws ErrorCode::size beyond 6 points.
SteinerSolution steiner_exact(const std::vector<Vec2>& terminals);

/// Minimal affine-cost tree estimate for source terminals[0] and unit sinks:
/// same topology enumeration with edge weights 1 + alpha * (forced integer
/// flux), branch points optimized as weighted geometric medians.
FluxTreeSolution limit_energy_min_tree(const std::vector<Vec2>& terminals, double alpha);

double limit_energy_min_estimate(const std::vector<Vec2>& terminals, double alpha);

/// Enumerates the full-topology edge lists for n terminals (used by the
/// optimality property tests).
std::vector<std::vector<std::array<int, 2>>> enumerate_full_topologies(int n_terminals);

/// Optimized cost of one topology: plain length with unit weights when
/// alpha == 0 is not assumed -- weights are supplied per edge.
double optimize_topology(const std::vector<Vec2>& terminals,
                         const std::vector<std::array<int, 2>>& edges,
                         const std::vector<double>& edge_weights,
                         std::vector<Vec2>& steiner_out);

}  // namespace spf
