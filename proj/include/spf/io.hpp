#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spf/solver.hpp"

namespace spf {

/// Full run description as read from a JSON config file. Unknown keys are
/// rejected; missing keys take the reference defaults.
struct RunConfig {
  SolverConfig solver;
  std::string output_dir = "out";
  int snapshot_every = 0;  // 0 disables field snapshots
  std::vector<std::string> formats = {"csv", "json", "vtk", "pgm"};
  unsigned jitter_seed = 0;  // accepted for config stability; the ring generator ignores it

  void validate() const;
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<memory>");
std::string serialize_config(const RunConfig& cfg);

struct RunSummary {
  EnergyBreakdown final_energy;
  double mm_length = 0.0;
  double transport_mass = 0.0;
  std::optional<double> oracle;        // limit-cost estimate when <= 6 terminals
  std::optional<double> relative_gap;  // (final total - oracle) / oracle
  double wall_time_seconds = 0.0;
};

std::string serialize_summary(const RunSummary& s);

// Legacy ASCII VTK unstructured-grid export (triangle cell type 5).
void write_vtk_mesh(const std::string& path, const Mesh& mesh);
void write_vtk_scalar(const std::string& path, const ScalarField& field,
                      const std::string& name);
void write_vtk_vector(const std::string& path, const VectorField& field,
                      const std::string& name);

/// Re-reads files written by the functions above: the mesh plus at most one
/// nodal scalar and one per-cell vector array.
struct VtkData {
  Mesh mesh;
  std::optional<std::vector<double>> point_scalars;
  std::optional<std::vector<Vec2>> cell_vectors;
  std::string scalar_name;
  std::string vector_name;
};
VtkData read_vtk(const std::string& path);

/// Trace CSV with the fixed column set
/// j,epsilon,constraint,dirichlet,well,total,transport_mass,shape_step_accepted,clamp_energy_delta
std::string trace_to_csv(const EnergyTrace& trace);
void write_trace_csv(const std::string& path, const EnergyTrace& trace);

/// 8-bit grayscale raster of a nodal field on an n-by-n grid over the mesh
/// bounding box (plain PGM). Low value maps to black, high to white; pixels
/// outside the mesh take white, matching the boundary value of the phase
/// field. A constant field renders white.
void write_pgm_render(const std::string& path, const ScalarField& field, int grid);

// CLI entry points; return process exit codes (0 ok, 2 config, 3 numerical).
int cmd_solve(const std::string& config_path);
int cmd_oracle(const std::string& terminals_path, double alpha,
               const std::string& out_path = "");
int cmd_validate_recovery(const std::string& net_path, double alpha,
                          const std::vector<double>& eps_list, double h_over_eps = 40.0,
                          const std::string& out_path = "",
                          const std::string& vtk_prefix = "");
int cmd_render(const std::string& field_path, const std::string& out_path, int grid);

}  // namespace spf
