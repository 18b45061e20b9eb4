// Command-line front end: batch solves, oracle queries, recovery sweeps and
// quick-look rasters. Non-interactive by design; exit codes are 0 (success),
// 2 (configuration error), 3 (numerical failure).

#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spf/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"steinerpf: phase-field approximation of Steiner trees and branched transport"};
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* solve = app.add_subcommand("solve", "run the alternating minimization");
  solve->add_option("--config", config_path, "JSON run configuration")->required();

  std::string terminals_path, oracle_out;
  double alpha = 0.0;
  CLI::App* oracle = app.add_subcommand("oracle", "exact tree oracle for up to 6 terminals");
  oracle->add_option("--terminals", terminals_path, "JSON terminal list")->required();
  oracle->add_option("--alpha", alpha, "mass cost coefficient (0: plain shortest tree)");
  oracle->add_option("--out", oracle_out, "also write the JSON result here");

  std::string net_path, recovery_out;
  double rec_alpha = 0.05;
  double h_over_eps = 40.0;
  std::vector<double> eps_list;
  CLI::App* rec = app.add_subcommand("validate-recovery", "upper-bound certificate sweep");
  rec->add_option("--net", net_path, "JSON segment network [{a,b,theta},...]")->required();
  rec->add_option("--alpha", rec_alpha, "mass cost coefficient (> 0)");
  rec->add_option("--eps", eps_list, "epsilon values to sweep")->required()->expected(-1);
  rec->add_option("--h-over-eps", h_over_eps, "mesh resolution ratio eps/h");
  rec->add_option("--out", recovery_out, "also write the JSON report here");
  std::string recovery_vtk;
  rec->add_option("--out-vtk", recovery_vtk, "prefix for per-epsilon phi/sigma VTK dumps");

  std::string field_path, pgm_path;
  int grid = 512;
  CLI::App* render = app.add_subcommand("render", "rasterize a nodal field to PGM");
  render->add_option("--field", field_path, "VTK field file")->required();
  render->add_option("--out", pgm_path, "output PGM path")->required();
  render->add_option("--grid", grid, "raster resolution");

  CLI11_PARSE(app, argc, argv);

  if (solve->parsed()) return spf::cmd_solve(config_path);
  if (oracle->parsed()) return spf::cmd_oracle(terminals_path, alpha, oracle_out);
  if (rec->parsed()) {
    return spf::cmd_validate_recovery(net_path, rec_alpha, eps_list, h_over_eps, recovery_out,
                                      recovery_vtk);
  }
  if (render->parsed()) return spf::cmd_render(field_path, pgm_path, grid);
  return 2;
}
