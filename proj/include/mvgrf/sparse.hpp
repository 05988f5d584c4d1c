#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mvgrf/grid.hpp"

namespace mvgrf {

struct Triplet {
  std::int32_t row;
  std::int32_t col;
  double value;
};

/// Square sparse matrix in sorted coordinate form, no duplicate (row, col).
struct SparseOperator {
  std::size_t n = 0;
  std::vector<std::int32_t> rows;
  std::vector<std::int32_t> cols;
  std::vector<double> values;
  bool symmetric = false;

  /// Sorts and sums duplicates. With `symmetric` set, verifies entrywise
  /// symmetry to 1e-14 relative to the largest entry.
  static SparseOperator from_triplets(std::size_t n, std::vector<Triplet> triplets,
                                      bool symmetric);

  std::size_t nonzeros() const { return values.size(); }
  double max_abs() const;
  double max_asymmetry() const;
  Eigen::MatrixXd to_dense() const;
  std::vector<double> multiply(std::span<const double> x) const;
  /// Largest number of stored entries in any row.
  std::size_t max_row_nonzeros() const;
};

/// Recursive coordinate bisection on a rectangular grid with separators
/// `stencil_radius` lines thick, so nodes on opposite sides never share a
/// stencil. Components of a site stay adjacent. Returns order[k] = original
/// index (component * sites + site) eliminated k-th.
std::vector<std::int32_t> nested_dissection_order(const GridSpec& grid, int p,
                                                  int stencil_radius = 2);

std::vector<std::int32_t> natural_order(std::size_t n);

/// Sparse lower factor F with F F^T = P Q P^T, stored column-compressed with
/// the diagonal first in every column and rows ascending.
class CholeskyFactor {
 public:
  std::size_t dimension() const { return perm_.size(); }
  std::size_t nonzeros() const { return values_.size(); }
  const std::vector<std::int32_t>& order() const { return perm_; }

  double log_determinant() const;
  /// Q^{-1} b.
  std::vector<double> solve(std::span<const double> b) const;
  /// P^T F^{-T} z: maps standard normal z to a draw with covariance Q^{-1}.
  std::vector<double> sample_transform(std::span<const double> z) const;
  /// diag(Q^{-1}) in original ordering by selected (Takahashi) inversion.
  std::vector<double> inverse_diagonal() const;
  /// F as a dense matrix in permuted coordinates.
  Eigen::MatrixXd dense_lower() const;

 private:
  friend CholeskyFactor sparse_factorize(const SparseOperator& q,
                                         std::span<const std::int32_t> order);
  std::vector<std::size_t> colptr_;
  std::vector<std::int32_t> rowind_;
  std::vector<double> values_;
  std::vector<std::int32_t> perm_;
};

/// Up-looking sparse Cholesky with elimination-tree symbolic analysis.
/// Throws DefinitenessError carrying the pivot value and original index on a
/// non-positive pivot.
CholeskyFactor sparse_factorize(const SparseOperator& q, std::span<const std::int32_t> order);

}  // namespace mvgrf
