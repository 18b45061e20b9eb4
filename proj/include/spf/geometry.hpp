#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "spf/common.hpp"

namespace spf {

/// Conforming triangulation of a convex planar domain.
///
/// All triangles are counterclockwise. Immutable after construction; the
/// neighbor table is built lazily under a once-flag so concurrent reads
/// stay safe.
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::uint8_t> boundary_vertex;  // 1 where the vertex lies on the domain boundary
  double target_edge_length = 0.0;            // h

  // Disc metadata (zero radius when the mesh is not a disc).
  Vec2 disc_center;
  double disc_radius = 0.0;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }

  double triangle_area(int t) const;
  Vec2 triangle_centroid(int t) const;
  double total_area() const;
  double max_edge_length() const;

  /// Neighbor across the edge opposite to local vertex k, or -1 on the boundary.
  const std::vector<std::array<int, 3>>& neighbors() const;

 private:
  // Heap-held so the mesh stays movable; moved-from meshes carry their cache.
  mutable std::unique_ptr<std::once_flag> neighbors_once_ = std::make_unique<std::once_flag>();
  mutable std::vector<std::array<int, 3>> neighbors_;
};

struct PointLocation {
  int triangle_index = -1;
  std::array<double, 3> barycentric_coords{};
};

/// Uniform triangulation of the disc B(center, radius) built from concentric
/// rings (ring k carries 6k vertices). Deterministic in its arguments.
/// Throws ErrorCode::invalid_resolution unless 0 < h < radius.
Mesh build_disc_mesh(const Vec2& center, double radius, double h);

/// Structured triangulation of an axis-aligned rectangle with nx-by-ny cells,
/// each split into two triangles. Used for local solves and as a lattice-
/// symmetric substrate in tests.
Mesh build_rect_mesh(const Vec2& lo, const Vec2& hi, int nx, int ny);

/// Locates p by neighbor walking (from `hint` when given), falling back to an
/// exhaustive scan. Returns nullopt when p lies outside every triangle; the
/// caller decides how to clamp.
std::optional<PointLocation> locate(const Mesh& mesh, const Vec2& p, int hint = -1);

/// Barycentric coordinates of p in triangle t (may be negative outside).
std::array<double, 3> barycentric(const Mesh& mesh, int t, const Vec2& p);

}  // namespace spf
