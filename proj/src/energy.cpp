#include "spf/energy.hpp"

#include <algorithm>
#include <cmath>

namespace spf {

Segment make_segment(const Vec2& a, const Vec2& b, double theta) {
  Segment s;
  s.a = a;
  s.b = b;
  s.theta = theta;
  const double len = norm(b - a);
  if (!(len > 0.0)) throw Error(ErrorCode::geometry, "segment endpoints coincide");
  s.xi = (b - a) / len;
  return s;
}

namespace {

// Distance between closed segments; 0 means they touch.
double segment_distance(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2);

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len2 = norm_sq(d);
  double t = len2 > 0.0 ? dot(p - a, d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + t * d));
}

bool proper_cross(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  // Interior crossing needs a strict sign change on both segments; touching
  // configurations produce a zero and do not count.
  const double d1 = cross(p2 - p1, q1 - p1);
  const double d2 = cross(p2 - p1, q2 - p1);
  const double d3 = cross(q2 - q1, p1 - q1);
  const double d4 = cross(q2 - q1, p2 - q1);
  return d1 * d2 < 0.0 && d3 * d4 < 0.0;
}

double segment_distance(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  if (proper_cross(p1, p2, q1, q2)) return 0.0;
  return std::min(std::min(point_segment_distance(p1, q1, q2), point_segment_distance(p2, q1, q2)),
                  std::min(point_segment_distance(q1, p1, p2), point_segment_distance(q2, p1, p2)));
}

}  // namespace

void SegmentNetwork::validate() const {
  for (const Segment& s : segments) {
    const double len = norm(s.b - s.a);
    if (!(len > 0.0)) throw Error(ErrorCode::geometry, "network: zero-length segment");
    if (!(s.theta > 0.0)) throw Error(ErrorCode::geometry, "network: multiplicity must be positive");
    if (norm(s.xi - (s.b - s.a) / len) > 1e-12) {
      throw Error(ErrorCode::geometry, "network: orientation does not match endpoints");
    }
  }
  // Crossings are allowed only at shared endpoints.
  for (std::size_t i = 0; i < segments.size(); ++i) {
    for (std::size_t j = i + 1; j < segments.size(); ++j) {
      const Segment& s = segments[i];
      const Segment& t = segments[j];
      if (proper_cross(s.a, s.b, t.a, t.b)) {
        throw Error(ErrorCode::geometry, "network: segments cross in their interiors");
      }
      // A touch point must be an endpoint of both.
      if (segment_distance(s.a, s.b, t.a, t.b) == 0.0) {
        const double tol = 1e-12 * std::max(norm(s.b - s.a), norm(t.b - t.a));
        bool at_ends = false;
        for (const Vec2& p : {s.a, s.b}) {
          for (const Vec2& q : {t.a, t.b}) {
            if (norm(p - q) <= tol) at_ends = true;
          }
        }
        if (!at_ends) {
          // Touching along interiors (e.g. T junction into an interior point).
          double dmin = std::min({point_segment_distance(s.a, t.a, t.b),
                                  point_segment_distance(s.b, t.a, t.b),
                                  point_segment_distance(t.a, s.a, s.b),
                                  point_segment_distance(t.b, s.a, s.b)});
          if (dmin <= tol) {
            throw Error(ErrorCode::geometry,
                        "network: segments meet outside their endpoints");
          }
        }
      }
    }
  }
}

double SegmentNetwork::total_length() const {
  double len = 0.0;
  for (const Segment& s : segments) len += norm(s.b - s.a);
  return len;
}

double eta_default(double alpha, double eps) {
  if (alpha > 0.0) return std::min(0.9, alpha * eps);
  return eps * eps;
}

double AlphaRegime::eta(double eps) const { return eta_default(alpha, eps); }

EnergyBreakdown total_energy(const VectorField& sigma, const ScalarField& phi, double eps) {
  if (sigma.mesh != phi.mesh || sigma.mesh == nullptr) {
    throw Error(ErrorCode::mesh_mismatch, "total_energy: fields live on different meshes");
  }
  if (!(eps > 0.0)) throw Error(ErrorCode::config, "total_energy: eps must be positive");
  const Mesh& mesh = *phi.mesh;

  EnergyBreakdown e;
  e.epsilon = eps;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ElementGeometry g = element_geometry(mesh, t);
    const auto& tri = mesh.triangles[t];
    double sq = 0.0, wsq = 0.0;
    Vec2 grad{0.0, 0.0};
    for (int k = 0; k < 3; ++k) {
      const double v = phi.values[tri[k]];
      sq += v * v;
      wsq += (1.0 - v) * (1.0 - v);
      grad += v * g.grad[k];
    }
    sq /= 3.0;
    wsq /= 3.0;
    e.constraint_term += g.area * sq * norm_sq(sigma.values[t]) / (2.0 * eps);
    e.dirichlet_term += g.area * 0.5 * eps * norm_sq(grad);
    e.well_term += g.area * wsq / (2.0 * eps);
  }
  e.total = e.constraint_term + e.dirichlet_term + e.well_term;
  return e;
}

double constraint_energy(const VectorField& sigma, std::span<const double> phi_tilde_sq,
                         double eps) {
  const Mesh& mesh = *sigma.mesh;
  double acc = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    acc += mesh.triangle_area(t) * phi_tilde_sq[t] * norm_sq(sigma.values[t]) / (2.0 * eps);
  }
  return acc;
}

double dual_energy(const ScalarField& u, std::span<const double> phi_tilde_sq,
                   const SourceLoad& load, double eps) {
  const Mesh& mesh = *u.mesh;
  const VectorField grad = p1_gradient(u);
  double acc = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    acc += mesh.triangle_area(t) * eps * norm_sq(grad.values[t]) / (2.0 * phi_tilde_sq[t]);
  }
  for (int i = 0; i < mesh.vertex_count(); ++i) acc += load.nodal_load[i] * u.values[i];
  return acc;
}

double lambda_energy(const ScalarField& phi, double eps) {
  const Mesh& mesh = *phi.mesh;
  double acc = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ElementGeometry g = element_geometry(mesh, t);
    const auto& tri = mesh.triangles[t];
    double wsq = 0.0;
    Vec2 grad{0.0, 0.0};
    for (int k = 0; k < 3; ++k) {
      const double v = phi.values[tri[k]];
      wsq += (1.0 - v) * (1.0 - v);
      grad += v * g.grad[k];
    }
    acc += g.area * (0.5 * eps * norm_sq(grad) + wsq / (3.0 * 2.0 * eps));
  }
  return acc;
}

double limit_energy(const SegmentNetwork& net, double alpha) {
  double acc = 0.0;
  for (const Segment& s : net.segments) {
    acc += (1.0 + alpha * s.theta) * norm(s.b - s.a);
  }
  return acc;
}

double transport_mass(const VectorField& sigma) {
  const Mesh& mesh = *sigma.mesh;
  double acc = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    acc += mesh.triangle_area(t) * norm(sigma.values[t]);
  }
  return acc;
}

}  // namespace spf
