#include "spf/fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace spf {

ElementGeometry element_geometry(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  const Vec2& a = mesh.vertices[tri[0]];
  const Vec2& b = mesh.vertices[tri[1]];
  const Vec2& c = mesh.vertices[tri[2]];
  ElementGeometry g;
  const double area2 = cross(b - a, c - a);
  g.area = 0.5 * area2;
  // grad of the hat function at vertex k is perp(opposite edge) / (2 area).
  g.grad[0] = perp(c - b) / area2;
  g.grad[1] = perp(a - c) / area2;
  g.grad[2] = perp(b - a) / area2;
  return g;
}

namespace {

int assembly_thread_count() {
  if (const char* env = std::getenv("STEINER_PF_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) {
      const int hw = std::max(1u, std::thread::hardware_concurrency());
      return std::min(cap, hw);
    }
  }
  return 1;
}

}  // namespace

SparseMatrix assemble_weighted_stiffness(const Mesh& mesh, std::span<const double> weights) {
  const int nt = mesh.triangle_count();
  if (static_cast<int>(weights.size()) != nt) {
    throw Error(ErrorCode::invalid_weight, "assemble_weighted_stiffness: weight count mismatch");
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::invalid_weight,
                  "assemble_weighted_stiffness: weights must be positive and finite");
    }
  }

  // Per-element triplet slots laid out in element order, independent of the
  // thread partition.
  std::vector<int> rows(9 * static_cast<std::size_t>(nt));
  std::vector<int> cols(9 * static_cast<std::size_t>(nt));
  std::vector<double> vals(9 * static_cast<std::size_t>(nt));

  auto worker = [&](int t_begin, int t_end) {
    for (int t = t_begin; t < t_end; ++t) {
      const ElementGeometry g = element_geometry(mesh, t);
      const auto& tri = mesh.triangles[t];
      const double wA = weights[t] * g.area;
      std::size_t slot = 9 * static_cast<std::size_t>(t);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j, ++slot) {
          rows[slot] = tri[i];
          cols[slot] = tri[j];
          vals[slot] = wA * dot(g.grad[i], g.grad[j]);
        }
      }
    }
  };

  const int nthreads = std::min(assembly_thread_count(), std::max(1, nt));
  if (nthreads == 1) {
    worker(0, nt);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (nt + nthreads - 1) / nthreads;
    for (int k = 0; k < nthreads; ++k) {
      const int lo = k * chunk;
      const int hi = std::min(nt, lo + chunk);
      if (lo < hi) pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  return SparseMatrix::from_triplets(mesh.vertex_count(), rows, cols, vals);
}

std::vector<double> lumped_mass_vector(const Mesh& mesh) {
  std::vector<double> m(mesh.vertex_count(), 0.0);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double third = mesh.triangle_area(t) / 3.0;
    for (int k = 0; k < 3; ++k) m[mesh.triangles[t][k]] += third;
  }
  return m;
}

SparseMatrix assemble_lumped_mass(const Mesh& mesh) {
  const auto m = lumped_mass_vector(mesh);
  const int n = mesh.vertex_count();
  SparseMatrix M;
  M.n = n;
  M.row_ptr.resize(n + 1);
  M.col.resize(n);
  M.val = m;
  for (int i = 0; i <= n; ++i) M.row_ptr[i] = i;
  for (int i = 0; i < n; ++i) M.col[i] = i;
  return M;
}

VectorField p1_gradient(const ScalarField& u) {
  const Mesh& mesh = *u.mesh;
  VectorField g(mesh);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ElementGeometry eg = element_geometry(mesh, t);
    const auto& tri = mesh.triangles[t];
    Vec2 acc{0.0, 0.0};
    for (int k = 0; k < 3; ++k) acc += u.values[tri[k]] * eg.grad[k];
    g.values[t] = acc;
  }
  return g;
}

std::vector<double> element_mean_sq(const ScalarField& phi) {
  const Mesh& mesh = *phi.mesh;
  std::vector<double> out(mesh.triangle_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double v = phi.values[tri[k]];
      acc += v * v;
    }
    out[t] = acc / 3.0;
  }
  return out;
}

std::vector<double> element_mean_one_minus_sq(const ScalarField& phi) {
  const Mesh& mesh = *phi.mesh;
  std::vector<double> out(mesh.triangle_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double v = 1.0 - phi.values[tri[k]];
      acc += v * v;
    }
    out[t] = acc / 3.0;
  }
  return out;
}

}  // namespace spf
