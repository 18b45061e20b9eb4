#include "spf/io.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "spf/recovery.hpp"
#include "spf/steiner.hpp"

namespace spf {

using nlohmann::json;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorCode::config, msg);
}

void line_col(const std::string& text, std::size_t byte, int& line, int& col) {
  line = 1;
  col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
}

Vec2 parse_point(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    config_error("config field '" + field + "' must be a [x, y] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

void reject_unknown(const json& obj, const std::vector<std::string>& known,
                    const std::string& scope) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      config_error("unknown config key '" + scope + it.key() + "'");
    }
  }
}

}  // namespace

void RunConfig::validate() const {
  solver.validate();
  if (snapshot_every < 0) config_error("config field 'snapshot_every' must be >= 0");
  if (formats.empty()) config_error("config field 'formats' must be nonempty");
  for (const std::string& f : formats) {
    if (f != "csv" && f != "json" && f != "vtk" && f != "pgm") {
      config_error("config field 'formats' allows only csv/json/vtk/pgm, got '" + f + "'");
    }
  }
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 0, col = 0;
    line_col(text, e.byte > 0 ? e.byte - 1 : 0, line, col);
    config_error(origin + ": JSON parse error at line " + std::to_string(line) + ", column " +
                 std::to_string(col));
  }
  if (!root.is_object()) config_error(origin + ": config root must be a JSON object");

  reject_unknown(root,
                 {"terminals", "alpha", "eps_in", "eps_end", "n_iter", "index", "shape_period",
                  "cg_tol", "shape_step_max", "paper_faithful_shape_step", "mesh",
                  "mollifier_width", "output_dir", "snapshot_every", "formats", "jitter_seed"},
                 "");

  RunConfig cfg;
  if (!root.contains("terminals")) config_error("config field 'terminals' is required");
  const json& term = root["terminals"];
  if (!term.is_object()) config_error("config field 'terminals' must be an object");
  reject_unknown(term, {"source", "sinks"}, "terminals.");
  if (!term.contains("source") || !term.contains("sinks")) {
    config_error("config field 'terminals' needs 'source' and 'sinks'");
  }
  cfg.solver.terminals.source = parse_point(term["source"], "terminals.source");
  if (!term["sinks"].is_array() || term["sinks"].empty()) {
    config_error("config field 'terminals.sinks' must be a nonempty array");
  }
  for (const json& p : term["sinks"]) {
    cfg.solver.terminals.sinks.push_back(parse_point(p, "terminals.sinks[]"));
  }

  auto number = [&](const char* key, double& dst) {
    if (root.contains(key)) {
      if (!root[key].is_number()) config_error(std::string("config field '") + key + "' must be a number");
      dst = root[key].get<double>();
    }
  };
  auto integer = [&](const json& obj, const char* key, int& dst) {
    if (obj.contains(key)) {
      if (!obj[key].is_number_integer()) {
        config_error(std::string("config field '") + key + "' must be an integer");
      }
      dst = obj[key].get<int>();
    }
  };

  number("alpha", cfg.solver.alpha);
  number("eps_in", cfg.solver.eps_in);
  number("eps_end", cfg.solver.eps_end);
  integer(root, "n_iter", cfg.solver.n_iter);
  integer(root, "index", cfg.solver.index);
  integer(root, "shape_period", cfg.solver.shape_period);
  number("cg_tol", cfg.solver.cg_tol);
  number("shape_step_max", cfg.solver.shape_step_max);
  if (root.contains("paper_faithful_shape_step")) {
    if (!root["paper_faithful_shape_step"].is_boolean()) {
      config_error("config field 'paper_faithful_shape_step' must be a boolean");
    }
    cfg.solver.paper_faithful_shape_step = root["paper_faithful_shape_step"].get<bool>();
  }
  number("mollifier_width", cfg.solver.mollifier_width);

  if (root.contains("mesh")) {
    const json& mesh = root["mesh"];
    if (!mesh.is_object()) config_error("config field 'mesh' must be an object");
    reject_unknown(mesh, {"h", "radius", "center"}, "mesh.");
    if (mesh.contains("h")) {
      if (!mesh["h"].is_number()) config_error("config field 'mesh.h' must be a number");
      cfg.solver.mesh_h = mesh["h"].get<double>();
    }
    if (mesh.contains("radius")) {
      if (!mesh["radius"].is_number()) config_error("config field 'mesh.radius' must be a number");
      cfg.solver.domain_radius = mesh["radius"].get<double>();
    }
    if (mesh.contains("center")) {
      cfg.solver.domain_center = parse_point(mesh["center"], "mesh.center");
    }
  }
  if (root.contains("output_dir")) {
    if (!root["output_dir"].is_string()) config_error("config field 'output_dir' must be a string");
    cfg.output_dir = root["output_dir"].get<std::string>();
  }
  integer(root, "snapshot_every", cfg.snapshot_every);
  if (root.contains("formats")) {
    if (!root["formats"].is_array()) config_error("config field 'formats' must be an array");
    cfg.formats.clear();
    for (const json& f : root["formats"]) {
      if (!f.is_string()) config_error("config field 'formats' must hold strings");
      cfg.formats.push_back(f.get<std::string>());
    }
  }
  if (root.contains("jitter_seed")) {
    if (!root["jitter_seed"].is_number_integer()) {
      config_error("config field 'jitter_seed' must be an integer");
    }
    cfg.jitter_seed = root["jitter_seed"].get<unsigned>();
  }

  try {
    cfg.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("config file not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::string serialize_config(const RunConfig& cfg) {
  json j;
  j["terminals"]["source"] = {cfg.solver.terminals.source.x, cfg.solver.terminals.source.y};
  j["terminals"]["sinks"] = json::array();
  for (const Vec2& p : cfg.solver.terminals.sinks) {
    j["terminals"]["sinks"].push_back({p.x, p.y});
  }
  j["alpha"] = cfg.solver.alpha;
  j["eps_in"] = cfg.solver.eps_in;
  j["eps_end"] = cfg.solver.eps_end;
  j["n_iter"] = cfg.solver.n_iter;
  j["index"] = cfg.solver.index;
  j["shape_period"] = cfg.solver.shape_period;
  j["cg_tol"] = cfg.solver.cg_tol;
  j["shape_step_max"] = cfg.solver.shape_step_max;
  j["paper_faithful_shape_step"] = cfg.solver.paper_faithful_shape_step;
  j["mesh"]["h"] = cfg.solver.mesh_h;
  j["mesh"]["radius"] = cfg.solver.domain_radius;
  j["mesh"]["center"] = {cfg.solver.domain_center.x, cfg.solver.domain_center.y};
  j["mollifier_width"] = cfg.solver.mollifier_width;
  j["output_dir"] = cfg.output_dir;
  j["snapshot_every"] = cfg.snapshot_every;
  j["formats"] = cfg.formats;
  j["jitter_seed"] = cfg.jitter_seed;
  return j.dump(2);
}

std::string serialize_summary(const RunSummary& s) {
  json j;
  j["final"]["constraint"] = s.final_energy.constraint_term;
  j["final"]["dirichlet"] = s.final_energy.dirichlet_term;
  j["final"]["well"] = s.final_energy.well_term;
  j["final"]["total"] = s.final_energy.total;
  j["final"]["epsilon"] = s.final_energy.epsilon;
  j["mm_length"] = s.mm_length;
  j["transport_mass"] = s.transport_mass;
  if (s.oracle) j["oracle"] = *s.oracle; else j["oracle"] = nullptr;
  if (s.relative_gap) j["relative_gap"] = *s.relative_gap; else j["relative_gap"] = nullptr;
  j["wall_time_seconds"] = s.wall_time_seconds;
  return j.dump(2);
}

namespace {

void write_vtk_header(std::ofstream& out, const Mesh& mesh, const std::string& title) {
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.vertex_count() << " double\n";
  for (const Vec2& v : mesh.vertices) {
    out << fmt_double(v.x) << " " << fmt_double(v.y) << " 0\n";
  }
  out << "CELLS " << mesh.triangle_count() << " " << 4 * mesh.triangle_count() << "\n";
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "CELL_TYPES " << mesh.triangle_count() << "\n";
  for (int t = 0; t < mesh.triangle_count(); ++t) out << "5\n";
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::config, "cannot open output file: " + path);
  return out;
}

}  // namespace

void write_vtk_mesh(const std::string& path, const Mesh& mesh) {
  auto out = open_out(path);
  write_vtk_header(out, mesh, "mesh");
}

void write_vtk_scalar(const std::string& path, const ScalarField& field,
                      const std::string& name) {
  auto out = open_out(path);
  write_vtk_header(out, *field.mesh, name);
  out << "POINT_DATA " << field.mesh->vertex_count() << "\n";
  out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (double v : field.values) out << fmt_double(v) << "\n";
}

void write_vtk_vector(const std::string& path, const VectorField& field,
                      const std::string& name) {
  auto out = open_out(path);
  write_vtk_header(out, *field.mesh, name);
  out << "CELL_DATA " << field.mesh->triangle_count() << "\n";
  out << "VECTORS " << name << " double\n";
  for (const Vec2& v : field.values) {
    out << fmt_double(v.x) << " " << fmt_double(v.y) << " 0\n";
  }
}

VtkData read_vtk(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config, "cannot open VTK file: " + path);
  VtkData data;
  std::string tok;
  while (in >> tok) {
    if (tok == "POINTS") {
      int n;
      std::string type;
      in >> n >> type;
      data.mesh.vertices.resize(n);
      for (int i = 0; i < n; ++i) {
        double x, y, z;
        in >> x >> y >> z;
        data.mesh.vertices[i] = {x, y};
      }
      data.mesh.boundary_vertex.assign(n, 0);
    } else if (tok == "CELLS") {
      int n, total;
      in >> n >> total;
      data.mesh.triangles.resize(n);
      for (int i = 0; i < n; ++i) {
        int k, a, b, c;
        in >> k >> a >> b >> c;
        if (k != 3) throw Error(ErrorCode::config, "read_vtk: only triangle cells supported");
        data.mesh.triangles[i] = {a, b, c};
      }
    } else if (tok == "SCALARS") {
      std::string name, type;
      int comps;
      in >> name >> type >> comps;
      in >> tok >> tok;  // LOOKUP_TABLE default
      data.scalar_name = name;
      std::vector<double> vals(data.mesh.vertex_count());
      for (double& v : vals) in >> v;
      data.point_scalars = std::move(vals);
    } else if (tok == "VECTORS") {
      std::string name, type;
      in >> name >> type;
      data.vector_name = name;
      std::vector<Vec2> vals(data.mesh.triangle_count());
      for (Vec2& v : vals) {
        double z;
        in >> v.x >> v.y >> z;
      }
      data.cell_vectors = std::move(vals);
    }
  }
  if (data.mesh.vertices.empty() || data.mesh.triangles.empty()) {
    throw Error(ErrorCode::config, "read_vtk: no unstructured grid found in " + path);
  }
  return data;
}

std::string trace_to_csv(const EnergyTrace& trace) {
  std::string out =
      "j,epsilon,constraint,dirichlet,well,total,transport_mass,shape_step_accepted,"
      "clamp_energy_delta\n";
  for (const TraceEntry& e : trace) {
    out += std::to_string(e.j);
    out += ',';
    out += fmt_double(e.epsilon);
    out += ',';
    out += fmt_double(e.energy.constraint_term);
    out += ',';
    out += fmt_double(e.energy.dirichlet_term);
    out += ',';
    out += fmt_double(e.energy.well_term);
    out += ',';
    out += fmt_double(e.energy.total);
    out += ',';
    out += fmt_double(e.transport_mass);
    out += ',';
    out += e.shape_step_accepted ? '1' : '0';
    out += ',';
    out += fmt_double(e.clamp_energy_delta);
    out += '\n';
  }
  return out;
}

void write_trace_csv(const std::string& path, const EnergyTrace& trace) {
  auto out = open_out(path);
  out << trace_to_csv(trace);
}

void write_pgm_render(const std::string& path, const ScalarField& field, int grid) {
  if (grid < 2) throw Error(ErrorCode::config, "render: grid must be at least 2");
  const Mesh& mesh = *field.mesh;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Vec2& v : mesh.vertices) {
    xmin = std::min(xmin, v.x);
    xmax = std::max(xmax, v.x);
    ymin = std::min(ymin, v.y);
    ymax = std::max(ymax, v.y);
  }
  double lo = 1e300, hi = -1e300;
  for (double v : field.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const bool flat = !(hi - lo > 1e-15);

  auto out = open_out(path);
  out << "P2\n" << grid << " " << grid << "\n255\n";
  int hint = 0;
  for (int row = 0; row < grid; ++row) {
    // Raster rows run top to bottom.
    const double y = ymax - (ymax - ymin) * (row + 0.5) / grid;
    for (int cx = 0; cx < grid; ++cx) {
      const double x = xmin + (xmax - xmin) * (cx + 0.5) / grid;
      int gray = 255;
      if (!flat) {
        if (auto loc = locate(mesh, {x, y}, hint)) {
          hint = loc->triangle_index;
          const auto& tri = mesh.triangles[loc->triangle_index];
          double v = 0.0;
          for (int k = 0; k < 3; ++k) v += loc->barycentric_coords[k] * field.values[tri[k]];
          gray = static_cast<int>(std::lround(255.0 * (v - lo) / (hi - lo)));
          gray = std::clamp(gray, 0, 255);
        }
      }
      out << gray << (cx + 1 == grid ? "\n" : " ");
    }
  }
}

namespace {

bool has_format(const RunConfig& cfg, const std::string& f) {
  return std::find(cfg.formats.begin(), cfg.formats.end(), f) != cfg.formats.end();
}

}  // namespace

int cmd_solve(const std::string& config_path) {
  RunConfig cfg;
  try {
    cfg = parse_config(config_path);
    std::filesystem::create_directories(cfg.output_dir);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    const auto t0 = std::chrono::steady_clock::now();
    RunCallback cb;
    std::filesystem::path dir(cfg.output_dir);
    if (cfg.snapshot_every > 0 && has_format(cfg, "vtk")) {
      cb = [&](const SolverState& st) {
        if (st.iteration % cfg.snapshot_every == 0) {
          write_vtk_scalar((dir / ("phi_" + std::to_string(st.iteration) + ".vtk")).string(),
                           st.phi, "phi");
          write_vtk_vector((dir / ("sigma_" + std::to_string(st.iteration) + ".vtk")).string(),
                           st.sigma, "sigma");
        }
      };
    }
    RunResult result = run(cfg.solver, cb);
    if (!result.completed) {
      std::cerr << "numerical failure: " << result.failure << "\n";
      return 3;
    }
    const auto t1 = std::chrono::steady_clock::now();

    RunSummary summary;
    summary.final_energy = result.state.energy;
    const LengthEstimates est = network_length_estimates(result.state);
    summary.mm_length = est.mm_length;
    summary.transport_mass = est.mass;
    if (1 + cfg.solver.terminals.sink_count() <= 6) {
      std::vector<Vec2> pts = {cfg.solver.terminals.source};
      for (const Vec2& p : cfg.solver.terminals.sinks) pts.push_back(p);
      summary.oracle = limit_energy_min_estimate(pts, cfg.solver.alpha);
      summary.relative_gap = (summary.final_energy.total - *summary.oracle) / *summary.oracle;
    }
    summary.wall_time_seconds = std::chrono::duration<double>(t1 - t0).count();

    if (has_format(cfg, "csv")) write_trace_csv((dir / "trace.csv").string(), result.trace);
    if (has_format(cfg, "json")) {
      auto out = open_out((dir / "summary.json").string());
      out << serialize_summary(summary) << "\n";
    }
    if (has_format(cfg, "vtk")) {
      write_vtk_scalar((dir / "phi.vtk").string(), result.state.phi, "phi");
      write_vtk_vector((dir / "sigma.vtk").string(), result.state.sigma, "sigma");
    }
    if (has_format(cfg, "pgm")) {
      write_pgm_render((dir / "phi.pgm").string(), result.state.phi, 512);
    }
    std::cout << serialize_summary(summary) << "\n";
    return 0;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::config || e.code() == ErrorCode::placement ||
        e.code() == ErrorCode::invalid_resolution) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}

int cmd_oracle(const std::string& terminals_path, double alpha, const std::string& out_path) {
  std::vector<Vec2> pts;
  try {
    std::ifstream in(terminals_path);
    if (!in) config_error("terminals file not found: " + terminals_path);
    json j = json::parse(in, nullptr, true, true);
    if (j.is_object() && j.contains("source")) {
      pts.push_back(parse_point(j["source"], "source"));
      for (const json& p : j["sinks"]) pts.push_back(parse_point(p, "sinks[]"));
    } else if (j.is_array()) {
      for (const json& p : j) pts.push_back(parse_point(p, "terminals[]"));
    } else {
      config_error("terminals file must be an array of points or {source, sinks}");
    }
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    json out;
    out["alpha"] = alpha;
    out["terminals"] = json::array();
    for (const Vec2& p : pts) out["terminals"].push_back({p.x, p.y});
    SteinerSolution sol;
    if (alpha > 0.0) {
      FluxTreeSolution flux = limit_energy_min_tree(pts, alpha);
      sol = flux.tree;
      out["value"] = flux.value;
      out["edge_flux"] = flux.edge_flux;
    } else {
      sol = steiner_exact(pts);
      out["value"] = sol.length;
    }
    out["length"] = sol.length;
    out["steiner_points"] = json::array();
    for (const Vec2& p : sol.steiner_points) out["steiner_points"].push_back({p.x, p.y});
    out["edges"] = json::array();
    for (const auto& e : sol.edges) out["edges"].push_back({e[0], e[1]});

    const std::string text = out.dump(2);
    if (!out_path.empty()) {
      auto f = open_out(out_path);
      f << text << "\n";
    }
    std::cout << text << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << (e.code() == ErrorCode::size ? "config error: " : "numerical failure: ")
              << e.what() << "\n";
    return e.code() == ErrorCode::size ? 2 : 3;
  }
}

int cmd_validate_recovery(const std::string& net_path, double alpha,
                          const std::vector<double>& eps_list, double h_over_eps,
                          const std::string& out_path, const std::string& vtk_prefix) {
  SegmentNetwork net;
  try {
    std::ifstream in(net_path);
    if (!in) config_error("network file not found: " + net_path);
    json j = json::parse(in, nullptr, true, true);
    for (const json& s : j) {
      net.segments.push_back(make_segment(parse_point(s.at("a"), "a"), parse_point(s.at("b"), "b"),
                                          s.value("theta", 1.0)));
    }
    net.validate();
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    json out;
    out["alpha"] = alpha;
    out["limit_energy"] = limit_energy(net, alpha);
    out["sweep"] = json::array();
    double prev = 1e300;
    bool decreasing = true;
    for (double eps : eps_list) {
      // Disc sized to wrap the network with room for the transition collar.
      Vec2 lo = net.segments[0].a, hi = net.segments[0].a;
      for (const Segment& s : net.segments) {
        for (const Vec2& p : {s.a, s.b}) {
          lo.x = std::min(lo.x, p.x);
          lo.y = std::min(lo.y, p.y);
          hi.x = std::max(hi.x, p.x);
          hi.y = std::max(hi.y, p.y);
        }
      }
      const Vec2 center = (lo + hi) * 0.5;
      const double margin = 3.5 * eps + 0.1;
      const double radius = 0.5 * norm(hi - lo) + margin;
      const double h = eps / h_over_eps;
      Mesh mesh = build_disc_mesh(center, radius, h);
      RecoveryPair pair = build_recovery(net, alpha, eps, mesh);
      if (!vtk_prefix.empty()) {
        char tag[32];
        std::snprintf(tag, sizeof(tag), "%g", eps);
        write_vtk_scalar(vtk_prefix + "_phi_" + tag + ".vtk", pair.phi, "phi");
        write_vtk_vector(vtk_prefix + "_sigma_" + tag + ".vtk", pair.sigma, "sigma");
      }
      const EnergyBreakdown e = total_energy(pair.sigma, pair.phi, eps);
      json row;
      row["epsilon"] = eps;
      row["h"] = h;
      row["constraint"] = e.constraint_term;
      row["dirichlet"] = e.dirichlet_term;
      row["well"] = e.well_term;
      row["total"] = e.total;
      row["transport_mass"] = transport_mass(pair.sigma);
      out["sweep"].push_back(row);
      if (e.total >= prev) decreasing = false;
      prev = e.total;
    }
    out["decreasing"] = decreasing;
    const std::string text = out.dump(2);
    if (!out_path.empty()) {
      auto f = open_out(out_path);
      f << text << "\n";
    }
    std::cout << text << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}

int cmd_render(const std::string& field_path, const std::string& out_path, int grid) {
  try {
    VtkData data = read_vtk(field_path);
    if (!data.point_scalars) {
      config_error("render: VTK file has no nodal scalar field");
    }
    ScalarField field;
    field.mesh = &data.mesh;
    field.values = *data.point_scalars;
    write_pgm_render(out_path, field, grid);
    return 0;
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace spf
