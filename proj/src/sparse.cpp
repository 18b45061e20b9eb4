#include "spf/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spf {

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) acc += val[k] * x[col[k]];
    y[i] = acc;
  }
}

std::vector<double> SparseMatrix::multiply(const std::vector<double>& x) const {
  std::vector<double> y(n);
  multiply(x, y);
  return y;
}

double SparseMatrix::quadratic_form(std::span<const double> x) const {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) row += val[k] * x[col[k]];
    acc += x[i] * row;
  }
  return acc;
}

std::vector<double> SparseMatrix::diagonal() const {
  std::vector<double> d(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      if (col[k] == i) d[i] += val[k];
    }
  }
  return d;
}

double SparseMatrix::max_asymmetry() const {
  // Compare A with A' entry by entry via a transposed walk.
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      const int j = col[k];
      if (j < i) continue;
      double aji = 0.0;
      for (int m = row_ptr[j]; m < row_ptr[j + 1]; ++m) {
        if (col[m] == i) {
          aji = val[m];
          break;
        }
      }
      worst = std::max(worst, std::abs(val[k] - aji));
    }
  }
  return worst;
}

void SparseMatrix::eliminate_dirichlet(const std::vector<std::uint8_t>& flags,
                                       const std::vector<double>& values,
                                       std::vector<double>& b) {
  for (int i = 0; i < n; ++i) {
    if (flags[i]) continue;
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      const int j = col[k];
      if (flags[j]) {
        b[i] -= val[k] * values[j];
        val[k] = 0.0;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!flags[i]) continue;
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) val[k] = (col[k] == i) ? 1.0 : 0.0;
    b[i] = values[i];
  }
}

SparseMatrix SparseMatrix::from_triplets(int n, std::vector<int>& rows, std::vector<int>& cols,
                                         std::vector<double>& vals) {
  const std::size_t m = rows.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rows[a] != rows[b] ? rows[a] < rows[b] : cols[a] < cols[b];
  });

  SparseMatrix A;
  A.n = n;
  A.row_ptr.assign(n + 1, 0);
  A.col.reserve(m);
  A.val.reserve(m);
  int prev_row = -1, prev_col = -1;
  for (std::size_t idx : order) {
    const int r = rows[idx];
    const int c = cols[idx];
    if (r == prev_row && c == prev_col) {
      A.val.back() += vals[idx];
    } else {
      A.col.push_back(c);
      A.val.push_back(vals[idx]);
      A.row_ptr[r + 1] += 1;
      prev_row = r;
      prev_col = c;
    }
  }
  for (int i = 0; i < n; ++i) A.row_ptr[i + 1] += A.row_ptr[i];
  return A;
}

namespace {

double dot_v(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void remove_weighted_mean(std::vector<double>& x, std::span<const double> mass) {
  double num = 0.0, den = 0.0;
  if (mass.empty()) {
    for (double v : x) num += v;
    den = static_cast<double>(x.size());
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) {
      num += mass[i] * x[i];
      den += mass[i];
    }
  }
  const double c = num / den;
  for (double& v : x) v -= c;
}

}  // namespace

std::pair<std::vector<double>, SolveReport> solve_spd(const SparseMatrix& A,
                                                      const std::vector<double>& b, double tol,
                                                      bool pin_mean,
                                                      std::span<const double> mass,
                                                      std::span<const double> x0, int max_iter) {
  const int n = A.n;
  SolveReport report;
  report.pinned_mean = pin_mean;

  std::vector<double> rhs = b;
  if (pin_mean) {
    double sum = 0.0, abs_sum = 0.0;
    for (double v : rhs) {
      sum += v;
      abs_sum += std::abs(v);
    }
    if (abs_sum > 0.0 && std::abs(sum) > 1e-10 * abs_sum) {
      throw Error(ErrorCode::incompatible_rhs,
                  "solve_spd: rhs is not orthogonal to constants");
    }
    const double c = sum / n;
    for (double& v : rhs) v -= c;
  }

  std::vector<double> x(n, 0.0);
  if (!x0.empty()) {
    std::copy(x0.begin(), x0.end(), x.begin());
    if (pin_mean) {
      double c = std::accumulate(x.begin(), x.end(), 0.0) / n;
      for (double& v : x) v -= c;
    }
  }

  std::vector<double> diag = A.diagonal();
  for (double& d : diag) d = (d > 0.0) ? 1.0 / d : 1.0;

  std::vector<double> r(n), z(n), p(n), Ap(n);
  A.multiply(x, r);
  for (int i = 0; i < n; ++i) r[i] = rhs[i] - r[i];

  const double b_norm = std::sqrt(dot_v(rhs, rhs));
  const double stop = tol * (b_norm > 0.0 ? b_norm : 1.0);
  if (max_iter <= 0) max_iter = std::max(200, 40 * n);

  double r_norm = std::sqrt(dot_v(r, r));
  int it = 0;
  if (r_norm > stop) {
    for (int i = 0; i < n; ++i) z[i] = diag[i] * r[i];
    p = z;
    double rz = dot_v(r, z);
    for (it = 1; it <= max_iter; ++it) {
      A.multiply(p, Ap);
      const double alpha = rz / dot_v(p, Ap);
      for (int i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * Ap[i];
      }
      if (pin_mean) {
        // Keep the iterate in the mean-zero subspace against rounding drift.
        double c = std::accumulate(r.begin(), r.end(), 0.0) / n;
        for (double& v : r) v -= c;
      }
      r_norm = std::sqrt(dot_v(r, r));
      if (r_norm <= stop) break;
      for (int i = 0; i < n; ++i) z[i] = diag[i] * r[i];
      const double rz_next = dot_v(r, z);
      const double beta = rz_next / rz;
      rz = rz_next;
      for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    it = std::min(it, max_iter);
  }

  if (pin_mean) remove_weighted_mean(x, mass);

  report.iterations = it;
  report.final_relative_residual = (b_norm > 0.0) ? r_norm / b_norm : r_norm;
  report.converged = r_norm <= stop;
  return {std::move(x), report};
}

}  // namespace spf
