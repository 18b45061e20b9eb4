#include "spf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <utility>

namespace spf {

double Mesh::triangle_area(int t) const {
  const auto& tri = triangles[t];
  const Vec2& a = vertices[tri[0]];
  const Vec2& b = vertices[tri[1]];
  const Vec2& c = vertices[tri[2]];
  return 0.5 * cross(b - a, c - a);
}

Vec2 Mesh::triangle_centroid(int t) const {
  const auto& tri = triangles[t];
  return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
}

double Mesh::total_area() const {
  double area = 0.0;
  for (int t = 0; t < triangle_count(); ++t) area += triangle_area(t);
  return area;
}

double Mesh::max_edge_length() const {
  double m = 0.0;
  for (const auto& tri : triangles) {
    for (int k = 0; k < 3; ++k) {
      m = std::max(m, norm(vertices[tri[k]] - vertices[tri[(k + 1) % 3]]));
    }
  }
  return m;
}

const std::vector<std::array<int, 3>>& Mesh::neighbors() const {
  std::call_once(*neighbors_once_, [this] {
    neighbors_.assign(triangles.size(), {-1, -1, -1});
    // Sorted edge list; paired entries are the shared interior edges.
    struct EdgeRef {
      int lo, hi, tri, local;
    };
    std::vector<EdgeRef> edges;
    edges.reserve(3 * triangles.size());
    for (int t = 0; t < triangle_count(); ++t) {
      const auto& tri = triangles[t];
      for (int k = 0; k < 3; ++k) {
        const auto [lo, hi] = std::minmax(tri[(k + 1) % 3], tri[(k + 2) % 3]);
        edges.push_back({lo, hi, t, k});
      }
    }
    std::sort(edges.begin(), edges.end(), [](const EdgeRef& a, const EdgeRef& b) {
      return a.lo != b.lo ? a.lo < b.lo : a.hi < b.hi;
    });
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      if (edges[i].lo == edges[i + 1].lo && edges[i].hi == edges[i + 1].hi) {
        neighbors_[edges[i].tri][edges[i].local] = edges[i + 1].tri;
        neighbors_[edges[i + 1].tri][edges[i + 1].local] = edges[i].tri;
        ++i;
      }
    }
  });
  return neighbors_;
}

namespace {

void orient_ccw(Mesh& mesh) {
  for (auto& tri : mesh.triangles) {
    const Vec2& a = mesh.vertices[tri[0]];
    const Vec2& b = mesh.vertices[tri[1]];
    const Vec2& c = mesh.vertices[tri[2]];
    if (cross(b - a, c - a) < 0.0) std::swap(tri[1], tri[2]);
  }
}

}  // namespace

Mesh build_disc_mesh(const Vec2& center, double radius, double h) {
  if (!(radius > 0.0) || !(h > 0.0) || h >= radius) {
    throw Error(ErrorCode::invalid_resolution,
                "build_disc_mesh: requires 0 < h < radius");
  }

  // Ring count chosen so boundary segments are at most h and no edge exceeds 2h.
  const double pi = 3.14159265358979323846;
  int rings = static_cast<int>(std::ceil(std::max(radius / h, pi * radius / (3.0 * h))));
  rings = std::max(rings, 2);
  const double dr = radius / rings;

  Mesh mesh;
  mesh.target_edge_length = h;
  mesh.disc_center = center;
  mesh.disc_radius = radius;

  // ring_start[k] = global index of the first vertex on ring k (6k vertices, k >= 1).
  std::vector<int> ring_start(rings + 1, 0);
  mesh.vertices.push_back(center);
  for (int k = 1; k <= rings; ++k) {
    ring_start[k] = static_cast<int>(mesh.vertices.size());
    const double rk = k * dr;
    const int nk = 6 * k;
    for (int j = 0; j < nk; ++j) {
      const double a = 2.0 * pi * j / nk;
      mesh.vertices.push_back({center.x + rk * std::cos(a), center.y + rk * std::sin(a)});
    }
  }
  mesh.boundary_vertex.assign(mesh.vertices.size(), 0);
  for (int j = 0; j < 6 * rings; ++j) mesh.boundary_vertex[ring_start[rings] + j] = 1;

  auto ring_vertex = [&](int k, int j) {
    if (k == 0) return 0;
    const int nk = 6 * k;
    return ring_start[k] + ((j % nk) + nk) % nk;
  };

  // Innermost fan around the center.
  for (int j = 0; j < 6; ++j) {
    mesh.triangles.push_back({0, ring_vertex(1, j), ring_vertex(1, j + 1)});
  }
  // Strip between ring k and ring k+1, stitched sector by sector so radial
  // edges at sector boundaries are shared exactly.
  for (int k = 1; k < rings; ++k) {
    for (int s = 0; s < 6; ++s) {
      const int ib = s * k;            // first inner vertex of the sector
      const int ob = s * (k + 1);      // first outer vertex of the sector
      for (int i = 0; i <= k; ++i) {
        mesh.triangles.push_back(
            {ring_vertex(k + 1, ob + i), ring_vertex(k + 1, ob + i + 1), ring_vertex(k, ib + i)});
      }
      for (int i = 0; i < k; ++i) {
        mesh.triangles.push_back(
            {ring_vertex(k, ib + i), ring_vertex(k + 1, ob + i + 1), ring_vertex(k, ib + i + 1)});
      }
    }
  }

  orient_ccw(mesh);
  return mesh;
}

Mesh build_rect_mesh(const Vec2& lo, const Vec2& hi, int nx, int ny) {
  if (nx < 1 || ny < 1 || !(hi.x > lo.x) || !(hi.y > lo.y)) {
    throw Error(ErrorCode::invalid_resolution, "build_rect_mesh: bad grid parameters");
  }
  Mesh mesh;
  const double dx = (hi.x - lo.x) / nx;
  const double dy = (hi.y - lo.y) / ny;
  mesh.target_edge_length = std::max(dx, dy);
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      mesh.vertices.push_back({lo.x + i * dx, lo.y + j * dy});
    }
  }
  mesh.boundary_vertex.assign(mesh.vertices.size(), 0);
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      if (i == 0 || j == 0 || i == nx || j == ny) mesh.boundary_vertex[j * (nx + 1) + i] = 1;
    }
  }
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      mesh.triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      mesh.triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  }
  orient_ccw(mesh);
  return mesh;
}

std::array<double, 3> barycentric(const Mesh& mesh, int t, const Vec2& p) {
  const auto& tri = mesh.triangles[t];
  const Vec2& a = mesh.vertices[tri[0]];
  const Vec2& b = mesh.vertices[tri[1]];
  const Vec2& c = mesh.vertices[tri[2]];
  const double area2 = cross(b - a, c - a);
  const double l0 = cross(b - p, c - p) / area2;
  const double l1 = cross(c - p, a - p) / area2;
  return {l0, l1, 1.0 - l0 - l1};
}

namespace {

std::optional<PointLocation> accept_if_inside(const Mesh& mesh, int t, const Vec2& p,
                                              double tol) {
  auto l = barycentric(mesh, t, p);
  if (l[0] >= -tol && l[1] >= -tol && l[2] >= -tol) {
    // Clamp tiny negatives and renormalize so the reported coordinates are a
    // valid convex combination.
    double sum = 0.0;
    for (double& v : l) {
      v = std::max(v, 0.0);
      sum += v;
    }
    for (double& v : l) v /= sum;
    return PointLocation{t, l};
  }
  return std::nullopt;
}

}  // namespace

std::optional<PointLocation> locate(const Mesh& mesh, const Vec2& p, int hint) {
  const double tol = 1e-12;
  const auto& nb = mesh.neighbors();
  int t = (hint >= 0 && hint < mesh.triangle_count()) ? hint : mesh.triangle_count() / 2;
  int steps_left = mesh.triangle_count() + 8;
  while (steps_left-- > 0) {
    auto l = barycentric(mesh, t, p);
    int worst = 0;
    if (l[1] < l[worst]) worst = 1;
    if (l[2] < l[worst]) worst = 2;
    if (l[worst] >= -tol) return accept_if_inside(mesh, t, p, tol);
    int next = nb[t][worst];
    if (next < 0) break;  // walked off the boundary; p may still be in a sliver elsewhere
    t = next;
  }
  // Exhaustive fallback; also the authoritative outside-domain answer.
  for (int s = 0; s < mesh.triangle_count(); ++s) {
    if (auto hit = accept_if_inside(mesh, s, p, tol)) return hit;
  }
  return std::nullopt;
}

}  // namespace spf
