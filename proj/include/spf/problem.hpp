#pragma once

#include <vector>

#include "spf/fem.hpp"
#include "spf/geometry.hpp"

namespace spf {

/// One source of weight N and N unit sinks; the divergence data that every
/// admissible flux must carry.
struct TerminalConfig {
  Vec2 source;
  std::vector<Vec2> sinks;

  int sink_count() const { return static_cast<int>(sinks.size()); }
  double source_weight() const { return static_cast<double>(sinks.size()); }

  /// Throws ErrorCode::config when points coincide or sinks is empty.
  void validate() const;
};

/// Gaussian smoothing kernel of nominal width `width`: standard deviation
/// width/2, truncated at four standard deviations and renormalized to unit
/// mass.
struct Mollifier {
  double width = 0.0;

  double stddev() const { return 0.5 * width; }
  double cutoff() const { return 4.0 * stddev(); }
  /// Kernel value at radius r (zero beyond the cutoff).
  double operator()(double r) const;
};

/// Nodal dual vector of the mollified terminal data, already integrated
/// against the P1 basis and de-meaned to exact zero sum.
struct SourceLoad {
  std::vector<double> nodal_load;
};

struct CompatibilityReport {
  bool zero_sum = false;
  double positive_mass = 0.0;
  double negative_mass = 0.0;
};

/// Default computational domain: disc centred at the terminal centroid with
/// radius 1.6 times the terminal spread.
void default_disc(const TerminalConfig& t, Vec2& center, double& radius);

/// Quadrature of sum_k w_k rho(x - x_k) against every basis function, by the
/// three-point edge-midpoint rule per element, then exact de-meaning.
/// Errors: mesh h above the kernel width (invalid_resolution); terminal closer
/// than 4 widths to the boundary or outside the disc (placement).
SourceLoad build_source_load(const Mesh& mesh, const TerminalConfig& t, const Mollifier& m);

CompatibilityReport check_compatibility(const SourceLoad& load);

}  // namespace spf
