#pragma once

#include <array>
#include <vector>

#include "spf/geometry.hpp"
#include "spf/sparse.hpp"

namespace spf {

/// P1 nodal data bound to a mesh (non-owning reference).
struct ScalarField {
  const Mesh* mesh = nullptr;
  std::vector<double> values;

  ScalarField() = default;
  ScalarField(const Mesh& m, double fill = 0.0)
      : mesh(&m), values(m.vertex_count(), fill) {}
};

/// Per-element constant vectors bound to a mesh.
struct VectorField {
  const Mesh* mesh = nullptr;
  std::vector<Vec2> values;

  VectorField() = default;
  explicit VectorField(const Mesh& m) : mesh(&m), values(m.triangle_count()) {}
};

/// Area and the constant gradients of the three nodal shape functions.
struct ElementGeometry {
  double area = 0.0;
  std::array<Vec2, 3> grad{};
};

ElementGeometry element_geometry(const Mesh& mesh, int t);

/// Stiffness of the form sum_T w_T int_T grad v_i . grad v_j with one positive
/// weight per element. Throws ErrorCode::invalid_weight on nonpositive or
/// nonfinite weights. Element loop may be chunk-parallel (STEINER_PF_THREADS);
/// the triplet stream is merged in element order either way, so the result is
/// identical for any thread count.
SparseMatrix assemble_weighted_stiffness(const Mesh& mesh, std::span<const double> weights);

inline SparseMatrix assemble_stiffness(const Mesh& mesh) {
  std::vector<double> w(mesh.triangle_count(), 1.0);
  return assemble_weighted_stiffness(mesh, w);
}

/// Diagonal (row-sum lumped) mass matrix; entries are positive and sum to the
/// mesh area.
SparseMatrix assemble_lumped_mass(const Mesh& mesh);
std::vector<double> lumped_mass_vector(const Mesh& mesh);

/// Per-element constant gradient of the P1 interpolant. Exact on linears.
VectorField p1_gradient(const ScalarField& u);

/// Element reduction used for coefficient fields: the vertex average of the
/// squared nodal values, one constant per element. This is the projection that
/// makes the weighted forms exactly integrable alongside lumped zero-order
/// terms, so every alternating step minimizes the same discrete energy.
std::vector<double> element_mean_sq(const ScalarField& phi);

/// Same reduction for (1 - phi)^2.
std::vector<double> element_mean_one_minus_sq(const ScalarField& phi);

}  // namespace spf
