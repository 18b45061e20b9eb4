#pragma once

#include <span>
#include <vector>

#include "spf/common.hpp"

namespace spf {

/// Row-compressed symmetric matrix. Assembled from triplets; the triplet
/// stream is sorted and combined in a fixed order, so assembly is
/// deterministic regardless of how the stream was produced.
struct SparseMatrix {
  int n = 0;
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<double> val;

  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(const std::vector<double>& x) const;
  /// x' A x
  double quadratic_form(std::span<const double> x) const;
  std::vector<double> diagonal() const;
  double max_asymmetry() const;

  /// Symmetric Dirichlet elimination: for every flagged index i the row and
  /// column are zeroed, the diagonal set to 1, and b is corrected so that
  /// x[i] = value[i] in the solved system.
  void eliminate_dirichlet(const std::vector<std::uint8_t>& flags,
                           const std::vector<double>& values, std::vector<double>& b);

  static SparseMatrix from_triplets(int n, std::vector<int>& rows, std::vector<int>& cols,
                                    std::vector<double>& vals);
};

struct SolveReport {
  int iterations = 0;
  double final_relative_residual = 0.0;
  bool pinned_mean = false;
  bool converged = false;
};

/// Jacobi-preconditioned conjugate gradients for SPD (or, with pin_mean,
/// consistent semidefinite) systems.
///
/// pin_mean solves in the mean-zero subspace: b must be orthogonal to
/// constants within 1e-10 relative (ErrorCode::incompatible_rhs otherwise) and
/// the solution is returned with zero weighted mean, the weights being `mass`
/// (uniform when empty). Non-convergence is reported, not thrown.
std::pair<std::vector<double>, SolveReport> solve_spd(
    const SparseMatrix& A, const std::vector<double>& b, double tol, bool pin_mean,
    std::span<const double> mass = {}, std::span<const double> x0 = {}, int max_iter = 0);

}  // namespace spf
