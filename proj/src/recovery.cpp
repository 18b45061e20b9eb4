#include "spf/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "spf/sparse.hpp"

namespace spf {

namespace {

constexpr double kBumpSupport = 0.25;
constexpr double kPi = 3.14159265358979323846;

}  // namespace

double bump_support_radius() { return kBumpSupport; }

double bump_rho(double r) {
  const double t = r / kBumpSupport;
  if (t >= 1.0) return 0.0;
  const double q = 1.0 - t * t;
  // Unit mass: int of (1 - (r/s)^2)^3 over the plane is pi s^2 / 4.
  return 4.0 / (kPi * kBumpSupport * kBumpSupport) * q * q * q;
}

namespace {

double dist1(double x, double lo, double hi) {
  if (x < lo) return lo - x;
  if (x > hi) return x - hi;
  return 0.0;
}

/// d_infinity distance to an axis-aligned rectangle.
double rect_dist(const Vec2& p, double x0, double x1, double y0, double y1) {
  return std::max(dist1(p.x, x0, x1), dist1(p.y, y0, y1));
}

/// Area of triangle clipped to an axis-aligned rectangle (Sutherland-Hodgman).
double clipped_area(const std::array<Vec2, 3>& tri, double x0, double x1, double y0, double y1) {
  std::vector<Vec2> poly(tri.begin(), tri.end());
  std::vector<Vec2> next;
  auto clip = [&](auto inside, auto intersect) {
    next.clear();
    const std::size_t m = poly.size();
    for (std::size_t i = 0; i < m; ++i) {
      const Vec2& a = poly[i];
      const Vec2& b = poly[(i + 1) % m];
      const bool ain = inside(a);
      const bool bin = inside(b);
      if (ain) next.push_back(a);
      if (ain != bin) next.push_back(intersect(a, b));
    }
    poly.swap(next);
  };
  clip([&](const Vec2& p) { return p.x >= x0; },
       [&](const Vec2& a, const Vec2& b) {
         const double t = (x0 - a.x) / (b.x - a.x);
         return Vec2{x0, a.y + t * (b.y - a.y)};
       });
  if (poly.empty()) return 0.0;
  clip([&](const Vec2& p) { return p.x <= x1; },
       [&](const Vec2& a, const Vec2& b) {
         const double t = (x1 - a.x) / (b.x - a.x);
         return Vec2{x1, a.y + t * (b.y - a.y)};
       });
  if (poly.empty()) return 0.0;
  clip([&](const Vec2& p) { return p.y >= y0; },
       [&](const Vec2& a, const Vec2& b) {
         const double t = (y0 - a.y) / (b.y - a.y);
         return Vec2{a.x + t * (b.x - a.x), y0};
       });
  if (poly.empty()) return 0.0;
  clip([&](const Vec2& p) { return p.y <= y1; },
       [&](const Vec2& a, const Vec2& b) {
         const double t = (y1 - a.y) / (b.y - a.y);
         return Vec2{a.x + t * (b.x - a.x), y1};
       });
  if (poly.size() < 3) return 0.0;
  double area2 = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    area2 += cross(a, b);
  }
  return 0.5 * std::abs(area2);
}

/// Local Neumann solve on the rescaled corner square Q_r: laplace u = theta rho
/// with outflow theta/(2s) through the strip {x = r, |y| <= s}. The solution
/// is kept on its structured grid; gradients are looked up per cell.
struct CornerField {
  double r = 0.0;
  double s = 0.0;
  double theta = 0.0;
  int n = 0;
  double hr = 0.0;
  std::vector<Vec2> grad;  // per local triangle
  double energy_constant = 0.0;

  // Gradient of the start-corner solution at local point y (zero outside Q_r).
  Vec2 eval(const Vec2& y) const {
    if (std::abs(y.x) >= r || std::abs(y.y) >= r) return {0.0, 0.0};
    int i = static_cast<int>((y.x + r) / hr);
    int j = static_cast<int>((y.y + r) / hr);
    i = std::clamp(i, 0, n - 1);
    j = std::clamp(j, 0, n - 1);
    const double fx = (y.x + r) / hr - i;
    const double fy = (y.y + r) / hr - j;
    const int cell = j * n + i;
    return grad[2 * cell + (fy <= fx ? 0 : 1)];
  }
  // End-corner field by reflection: u-(y) = -u+(-y1, y2).
  Vec2 eval_reflected(const Vec2& y) const {
    const Vec2 g = eval({-y.x, y.y});
    return {g.x, -g.y};
  }
};

const CornerField& corner_solve(double theta, double s, double r) {
  static std::map<std::tuple<double, double, double>, CornerField> cache;
  auto key = std::make_tuple(theta, s, r);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  CornerField cf;
  cf.r = r;
  cf.s = s;
  cf.theta = theta;
  int n = static_cast<int>(std::ceil(48.0 * r / s));
  n = std::clamp(n, 256, 768);
  if (n % 2) ++n;
  cf.n = n;
  cf.hr = 2.0 * r / n;

  Mesh grid = build_rect_mesh({-r, -r}, {r, r}, n, n);
  SparseMatrix K = assemble_stiffness(grid);

  std::vector<double> rhs(grid.vertex_count(), 0.0);
  // Volume term: -int theta rho v (3-point midpoint rule).
  for (int t = 0; t < grid.triangle_count(); ++t) {
    const auto& tri = grid.triangles[t];
    const Vec2& a = grid.vertices[tri[0]];
    const Vec2& b = grid.vertices[tri[1]];
    const Vec2& c = grid.vertices[tri[2]];
    const Vec2 cen = (a + b + c) / 3.0;
    if (norm(cen) > kBumpSupport + cf.hr) continue;
    const double area = grid.triangle_area(t);
    const Vec2 m01 = (a + b) * 0.5, m12 = (b + c) * 0.5, m20 = (c + a) * 0.5;
    const double r01 = theta * bump_rho(norm(m01));
    const double r12 = theta * bump_rho(norm(m12));
    const double r20 = theta * bump_rho(norm(m20));
    const double w = area / 6.0;
    rhs[tri[0]] -= w * (r01 + r20);
    rhs[tri[1]] -= w * (r01 + r12);
    rhs[tri[2]] -= w * (r12 + r20);
  }
  // Flux term: +int_Sigma g v on the right face, g = theta / (2s).
  const double g = theta / (2.0 * s);
  auto vid = [&](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j) {
    const double ya = -r + j * cf.hr;
    const double yb = ya + cf.hr;
    const double c1 = std::max(ya, -s);
    const double c2 = std::min(yb, s);
    if (c2 <= c1) continue;
    const int va = vid(n, j);
    const int vb = vid(n, j + 1);
    auto lam_a = [&](double y) { return (yb - y) / (yb - ya); };
    rhs[va] += g * (c2 - c1) * 0.5 * (lam_a(c1) + lam_a(c2));
    rhs[vb] += g * (c2 - c1) * 0.5 * ((1.0 - lam_a(c1)) + (1.0 - lam_a(c2)));
  }

  // Kill the quadrature remainder of the compatibility condition before the
  // singular solve.
  double rhs_sum = 0.0;
  for (double v : rhs) rhs_sum += v;
  for (double& v : rhs) v -= rhs_sum / grid.vertex_count();

  auto [u, rep] = solve_spd(K, rhs, 1e-10, /*pin_mean=*/true, {}, {},
                            std::max(4000, 12 * grid.vertex_count()));
  if (!rep.converged) {
    throw Error(ErrorCode::solver_failure, "corner solve did not converge");
  }

  ScalarField uf;
  uf.mesh = &grid;
  uf.values = std::move(u);
  const VectorField gradients = p1_gradient(uf);
  cf.grad = gradients.values;
  double c_energy = 0.0;
  for (int t = 0; t < grid.triangle_count(); ++t) {
    c_energy += grid.triangle_area(t) * norm_sq(gradients.values[t]);
  }
  cf.energy_constant = c_energy;

  return cache.emplace(key, std::move(cf)).first->second;
}

struct SegmentFrame {
  Vec2 origin;
  Vec2 e1;
  Vec2 e2;
  double length = 0.0;
  double theta = 0.0;
  double a_sigma = 0.0;  // half-width of the flux tube
  double a_phi = 0.0;    // half-width of the eta core
  double r_eff = 0.0;    // corner square half-size
  double r_phi = 0.0;

  Vec2 to_local(const Vec2& x) const {
    const Vec2 d = x - origin;
    return {dot(d, e1), dot(d, e2)};
  }
  Vec2 to_global_dir(const Vec2& v) const { return v.x * e1 + v.y * e2; }

  double core_dist(const Vec2& local) const {
    double d = rect_dist(local, -a_phi, length + a_phi, -a_phi, a_phi);
    d = std::min(d, rect_dist(local, -r_phi, r_phi, -r_phi, r_phi));
    d = std::min(d, rect_dist(local, length - r_phi, length + r_phi, -r_phi, r_phi));
    return d;
  }
};

}  // namespace

double transition_cost_check(double eps, double eta) {
  if (!(eta > 0.0) || !(eta < 0.5)) {
    throw Error(ErrorCode::config, "transition_cost_check: requires 0 < eta < 1/2");
  }
  if (!(eps > 0.0) || !(eps < 1.0 - eta)) {
    throw Error(ErrorCode::config, "transition_cost_check: requires 0 < eps < 1 - eta");
  }
  const double b = eps * std::log((1.0 - eta) / eps);
  auto density = [&](double t) {
    const double one_minus_w = (1.0 - eta) * std::exp(-t / eps);
    const double dw = one_minus_w / eps;
    return 0.5 * eps * dw * dw + one_minus_w * one_minus_w / (2.0 * eps);
  };
  // Composite Simpson.
  const int n = 20000;
  const double hstep = b / n;
  double acc = density(0.0) + density(b);
  for (int k = 1; k < n; ++k) acc += density(k * hstep) * (k % 2 ? 4.0 : 2.0);
  return acc * hstep / 3.0;
}

double corner_energy_constant(double theta, double s, double r) {
  return corner_solve(theta, s, r).energy_constant;
}

RecoveryPair build_recovery(const SegmentNetwork& net, double alpha, double eps,
                            const Mesh& mesh) {
  net.validate();
  if (!(alpha > 0.0)) {
    throw Error(ErrorCode::unsupported,
                "build_recovery: the corner flux normalization needs alpha > 0");
  }
  if (!(eps > 0.0) || net.segments.empty()) {
    throw Error(ErrorCode::config, "build_recovery: needs eps > 0 and a nonempty network");
  }
  const double max_edge = mesh.max_edge_length();
  if (max_edge > 0.5 * eps) {
    throw Error(ErrorCode::invalid_resolution,
                "build_recovery: mesh does not resolve the construction scale (max edge > eps/2)");
  }
  const double eta = eta_default(alpha, eps);
  if (!(eps < 1.0 - eta)) {
    throw Error(ErrorCode::config, "build_recovery: eps too large for the transition profile");
  }
  const double b_eps = eps * std::log((1.0 - eta) / eps);

  std::vector<SegmentFrame> frames;
  for (const Segment& seg : net.segments) {
    SegmentFrame f;
    f.origin = seg.a;
    f.e1 = seg.xi;
    f.e2 = perp(seg.xi);
    f.length = norm(seg.b - seg.a);
    f.theta = seg.theta;
    const double a_paper = 0.5 * seg.theta * alpha * eps;
    f.a_sigma = std::max(a_paper, max_edge);
    f.a_phi = f.a_sigma + max_edge * (1.0 + 1e-9);
    f.r_eff = std::max(0.3 * eps, 2.0 * f.a_sigma);
    f.r_phi = f.r_eff + max_edge * (1.0 + 1e-9);
    if (f.length <= 2.0 * f.r_eff) {
      throw Error(ErrorCode::geometry, "build_recovery: segment shorter than its corner squares");
    }
    frames.push_back(f);
  }

  // The construction has to fit strictly inside the meshed domain.
  {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const Vec2& v : mesh.vertices) {
      xmin = std::min(xmin, v.x);
      xmax = std::max(xmax, v.x);
      ymin = std::min(ymin, v.y);
      ymax = std::max(ymax, v.y);
    }
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const Segment& seg = net.segments[i];
      const double reach = frames[i].r_phi * 1.4142136 + b_eps + eps + 2.0 * max_edge;
      for (const Vec2& p : {seg.a, seg.b}) {
        if (mesh.disc_radius > 0.0) {
          if (norm(p - mesh.disc_center) + reach > mesh.disc_radius) {
            throw Error(ErrorCode::geometry, "build_recovery: tube does not fit in the domain");
          }
        } else {
          if (p.x - reach < xmin || p.x + reach > xmax || p.y - reach < ymin ||
              p.y + reach > ymax) {
            throw Error(ErrorCode::geometry, "build_recovery: tube does not fit in the domain");
          }
        }
      }
    }
  }

  RecoveryPair pair;
  pair.epsilon = eps;
  pair.a_eps = frames[0].a_sigma;
  pair.b_eps = b_eps;
  pair.r_eps = frames[0].r_eff;

  // Phase field: minimum over the per-segment profiles.
  pair.phi = ScalarField(mesh, 1.0);
  const double finish = b_eps + eps;
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    double val = 1.0;
    for (const SegmentFrame& f : frames) {
      const double d = f.core_dist(f.to_local(mesh.vertices[v]));
      double g;
      if (d <= 0.0) {
        g = eta;
      } else if (d <= b_eps) {
        g = 1.0 - (1.0 - eta) * std::exp(-d / eps);
      } else if (d <= finish) {
        g = d - b_eps - eps + 1.0;
      } else {
        g = 1.0;
      }
      val = std::min(val, g);
    }
    pair.phi.values[v] = val;
  }

  // Flux: exact clip average over the tube, subdivided quadrature over the
  // corner squares.
  pair.sigma = VectorField(mesh);
  for (std::size_t si = 0; si < frames.size(); ++si) {
    const SegmentFrame& f = frames[si];
    const double tube_mag = f.theta / (2.0 * f.a_sigma);
    const double s_loc = f.a_sigma / eps;
    const double r_loc = f.r_eff / eps;
    const CornerField& corner = corner_solve(f.theta, s_loc, r_loc);

    const double reach_tube = f.a_sigma + max_edge;
    const double reach_corner = f.r_eff + max_edge;
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      const auto& tri = mesh.triangles[t];
      const std::array<Vec2, 3> local = {f.to_local(mesh.vertices[tri[0]]),
                                         f.to_local(mesh.vertices[tri[1]]),
                                         f.to_local(mesh.vertices[tri[2]])};
      const Vec2 cen = (local[0] + local[1] + local[2]) / 3.0;

      // Tube contribution.
      if (rect_dist(cen, f.r_eff, f.length - f.r_eff, -f.a_sigma, f.a_sigma) <= reach_tube) {
        const double area = mesh.triangle_area(t);
        const double inside =
            clipped_area(local, f.r_eff, f.length - f.r_eff, -f.a_sigma, f.a_sigma);
        if (inside > 0.0) {
          pair.sigma.values[t] += f.to_global_dir({tube_mag * inside / area, 0.0});
        }
      }

      // Corner contributions (start at 0, end at length).
      for (int end = 0; end < 2; ++end) {
        const Vec2 p_local = end == 0 ? Vec2{0.0, 0.0} : Vec2{f.length, 0.0};
        if (rect_dist(cen - p_local, -f.r_eff, f.r_eff, -f.r_eff, f.r_eff) > reach_corner) {
          continue;
        }
        // Subtriangle-centroid quadrature (8x refinement, 64 cells).
        constexpr int kRef = 8;
        Vec2 acc{0.0, 0.0};
        for (int su = 0; su < kRef; ++su) {
          for (int sv = 0; su + sv < kRef; ++sv) {
            const Vec2 c0 = local[0] + (local[1] - local[0]) * ((su + 1.0 / 3.0) / kRef) +
                            (local[2] - local[0]) * ((sv + 1.0 / 3.0) / kRef);
            const Vec2 y = (c0 - p_local) / eps;
            acc += (end == 0 ? corner.eval(y) : corner.eval_reflected(y));
            if (su + sv < kRef - 1) {
              const Vec2 c1 = local[0] + (local[1] - local[0]) * ((su + 2.0 / 3.0) / kRef) +
                              (local[2] - local[0]) * ((sv + 2.0 / 3.0) / kRef);
              const Vec2 y1 = (c1 - p_local) / eps;
              acc += (end == 0 ? corner.eval(y1) : corner.eval_reflected(y1));
            }
          }
        }
        pair.sigma.values[t] += f.to_global_dir(acc / (static_cast<double>(kRef * kRef) * eps));
      }
    }
  }

  return pair;
}

std::vector<double> weak_divergence_pairing(const VectorField& sigma) {
  const Mesh& mesh = *sigma.mesh;
  std::vector<double> pairing(mesh.vertex_count(), 0.0);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ElementGeometry g = element_geometry(mesh, t);
    for (int k = 0; k < 3; ++k) {
      pairing[mesh.triangles[t][k]] -= g.area * dot(sigma.values[t], g.grad[k]);
    }
  }
  return pairing;
}

std::vector<double> mollified_source_pairing(const SegmentNetwork& net, double eps,
                                             const Mesh& mesh) {
  std::vector<double> target(mesh.vertex_count(), 0.0);
  const double cutoff = kBumpSupport * eps;
  const double max_edge = mesh.max_edge_length();
  for (const Segment& seg : net.segments) {
    for (int end = 0; end < 2; ++end) {
      const Vec2 p = end == 0 ? seg.a : seg.b;
      const double w = end == 0 ? seg.theta : -seg.theta;
      for (int t = 0; t < mesh.triangle_count(); ++t) {
        const Vec2 cen = mesh.triangle_centroid(t);
        if (norm(cen - p) > cutoff + max_edge) continue;
        const auto& tri = mesh.triangles[t];
        const Vec2& a = mesh.vertices[tri[0]];
        const Vec2& ab = mesh.vertices[tri[1]];
        const Vec2& ac = mesh.vertices[tri[2]];
        const double area = mesh.triangle_area(t);
        // Subtriangle-centroid quadrature of the smooth bump (8x refinement).
        constexpr int kRef = 8;
        for (int su = 0; su < kRef; ++su) {
          for (int sv = 0; su + sv < kRef; ++sv) {
            for (int updown = 0; updown < (su + sv < kRef - 1 ? 2 : 1); ++updown) {
              const double off = updown == 0 ? 1.0 / 3.0 : 2.0 / 3.0;
              const double lu = (su + off) / kRef;
              const double lv = (sv + off) / kRef;
              const Vec2 x = a + (ab - a) * lu + (ac - a) * lv;
              const double rho = bump_rho(norm(x - p) / eps) / (eps * eps);
              if (rho == 0.0) continue;
              const double wq = area / static_cast<double>(kRef * kRef);
              // P1 basis at barycentric (1-lu-lv, lu, lv).
              target[tri[0]] += w * rho * wq * (1.0 - lu - lv);
              target[tri[1]] += w * rho * wq * lu;
              target[tri[2]] += w * rho * wq * lv;
            }
          }
        }
      }
    }
  }
  return target;
}

}  // namespace spf
