#include "spf/problem.hpp"

#include <algorithm>
#include <cmath>

namespace spf {

void TerminalConfig::validate() const {
  if (sinks.empty()) {
    throw Error(ErrorCode::config, "terminals: at least one sink is required");
  }
  std::vector<Vec2> all = sinks;
  all.push_back(source);
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      if (norm(all[i] - all[j]) == 0.0) {
        throw Error(ErrorCode::config, "terminals: points must be pairwise distinct");
      }
    }
  }
}

double Mollifier::operator()(double r) const {
  const double s = stddev();
  if (!(s > 0.0)) throw Error(ErrorCode::config, "mollifier: width must be positive");
  if (r > cutoff()) return 0.0;
  const double pi = 3.14159265358979323846;
  // Unit mass after truncation at 4 sigma.
  const double norm2d = 2.0 * pi * s * s * (1.0 - std::exp(-8.0));
  return std::exp(-0.5 * (r / s) * (r / s)) / norm2d;
}

void default_disc(const TerminalConfig& t, Vec2& center, double& radius) {
  Vec2 c = t.source;
  for (const Vec2& p : t.sinks) c += p;
  c = c / static_cast<double>(1 + t.sinks.size());
  double spread = norm(t.source - c);
  for (const Vec2& p : t.sinks) spread = std::max(spread, norm(p - c));
  center = c;
  radius = 1.6 * spread;
}

namespace {

void accumulate_terminal(const Mesh& mesh, const Vec2& x0, double weight, const Mollifier& m,
                         std::vector<double>& load) {
  const double cut = m.cutoff();
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec2& a = mesh.vertices[tri[0]];
    const Vec2& b = mesh.vertices[tri[1]];
    const Vec2& c = mesh.vertices[tri[2]];
    // Cheap reject: the kernel support cannot reach this element.
    const Vec2 cen = (a + b + c) / 3.0;
    const double reach = cut + std::max({norm(a - cen), norm(b - cen), norm(c - cen)});
    if (norm(cen - x0) > reach) continue;

    const double area = mesh.triangle_area(t);
    // Edge midpoints; exact for quadratics. Basis value at the midpoint
    // opposite vertex k vanishes, the other two are 1/2.
    const Vec2 m01 = (a + b) * 0.5;
    const Vec2 m12 = (b + c) * 0.5;
    const Vec2 m20 = (c + a) * 0.5;
    const double r01 = weight * m(norm(m01 - x0));
    const double r12 = weight * m(norm(m12 - x0));
    const double r20 = weight * m(norm(m20 - x0));
    const double w = area / 3.0 * 0.5;
    load[tri[0]] += w * (r01 + r20);
    load[tri[1]] += w * (r01 + r12);
    load[tri[2]] += w * (r12 + r20);
  }
}

}  // namespace

SourceLoad build_source_load(const Mesh& mesh, const TerminalConfig& t, const Mollifier& m) {
  t.validate();
  if (!(m.width > 0.0)) throw Error(ErrorCode::config, "mollifier: width must be positive");
  if (mesh.target_edge_length > m.width) {
    throw Error(ErrorCode::invalid_resolution,
                "build_source_load: mesh does not resolve the mollifier width (h > width)");
  }
  if (mesh.disc_radius > 0.0) {
    std::vector<Vec2> all = t.sinks;
    all.push_back(t.source);
    for (const Vec2& p : all) {
      const double margin = mesh.disc_radius - norm(p - mesh.disc_center);
      if (margin < 4.0 * m.width) {
        throw Error(ErrorCode::placement,
                    "build_source_load: terminal closer than 4 widths to the boundary");
      }
    }
  }

  SourceLoad load;
  load.nodal_load.assign(mesh.vertex_count(), 0.0);
  accumulate_terminal(mesh, t.source, t.source_weight(), m, load.nodal_load);
  for (const Vec2& p : t.sinks) accumulate_terminal(mesh, p, -1.0, m, load.nodal_load);

  // Exact de-meaning: the continuous data has zero total mass, the quadrature
  // remainder is removed so the Neumann step is solvable.
  double sum = 0.0;
  for (double v : load.nodal_load) sum += v;
  const double c = sum / mesh.vertex_count();
  for (double& v : load.nodal_load) v -= c;
  return load;
}

CompatibilityReport check_compatibility(const SourceLoad& load) {
  CompatibilityReport rep;
  double sum = 0.0, abs_sum = 0.0;
  for (double v : load.nodal_load) {
    sum += v;
    abs_sum += std::abs(v);
    if (v > 0.0) rep.positive_mass += v;
    else rep.negative_mass -= v;
  }
  rep.zero_sum = (abs_sum == 0.0) || (std::abs(sum) <= 1e-12 * abs_sum);
  return rep;
}

}  // namespace spf
