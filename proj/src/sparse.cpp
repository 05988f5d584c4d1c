#include "mvgrf/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mvgrf/error.hpp"

namespace mvgrf {

SparseOperator SparseOperator::from_triplets(std::size_t n, std::vector<Triplet> triplets,
                                             bool symmetric) {
  for (const auto& t : triplets)
    if (t.row < 0 || t.col < 0 || static_cast<std::size_t>(t.row) >= n ||
        static_cast<std::size_t>(t.col) >= n)
      throw ShapeError("triplet index out of range");
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseOperator op;
  op.n = n;
  op.symmetric = symmetric;
  for (const auto& t : triplets) {
    if (!op.rows.empty() && op.rows.back() == t.row && op.cols.back() == t.col) {
      op.values.back() += t.value;
    } else {
      op.rows.push_back(t.row);
      op.cols.push_back(t.col);
      op.values.push_back(t.value);
    }
  }
  if (symmetric && op.max_asymmetry() > 1e-14 * std::max(1.0, op.max_abs()))
    throw SymmetryError("operator flagged symmetric is not");
  return op;
}

double SparseOperator::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double SparseOperator::max_asymmetry() const {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return cols[a] != cols[b] ? cols[a] < cols[b] : rows[a] < rows[b];
  });
  // idx walks the transpose in (row, col) order; merge against the original.
  double worst = 0.0;
  std::size_t a = 0;
  std::size_t b = 0;
  while (a < values.size() || b < idx.size()) {
    const bool a_ok = a < values.size();
    const bool b_ok = b < idx.size();
    const auto key_a = a_ok ? std::pair{rows[a], cols[a]} : std::pair{INT32_MAX, INT32_MAX};
    const auto key_b = b_ok ? std::pair{cols[idx[b]], rows[idx[b]]}
                            : std::pair{INT32_MAX, INT32_MAX};
    if (key_a == key_b) {
      worst = std::max(worst, std::abs(values[a] - values[idx[b]]));
      ++a;
      ++b;
    } else if (key_a < key_b) {
      worst = std::max(worst, std::abs(values[a]));
      ++a;
    } else {
      worst = std::max(worst, std::abs(values[idx[b]]));
      ++b;
    }
  }
  return worst;
}

Eigen::MatrixXd SparseOperator::to_dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < values.size(); ++k) m(rows[k], cols[k]) = values[k];
  return m;
}

std::vector<double> SparseOperator::multiply(std::span<const double> x) const {
  if (x.size() != n) throw ShapeError("vector length does not match operator");
  std::vector<double> y(n, 0.0);
  for (std::size_t k = 0; k < values.size(); ++k) y[rows[k]] += values[k] * x[cols[k]];
  return y;
}

std::size_t SparseOperator::max_row_nonzeros() const {
  std::size_t best = 0;
  std::size_t run = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    run = (k > 0 && rows[k] == rows[k - 1]) ? run + 1 : 1;
    best = std::max(best, run);
  }
  return best;
}

namespace {

struct Bisector {
  const GridSpec& grid;
  int separator;
  std::vector<std::size_t>& out;

  static constexpr int kLeafSites = 16;

  void emit(int r0, int r1, int c0, int c1) {
    for (int r = r0; r < r1; ++r)
      for (int c = c0; c < c1; ++c) out.push_back(grid.site(r, c));
  }

  void split(int r0, int r1, int c0, int c1) {
    const int h = r1 - r0;
    const int w = c1 - c0;
    if (h <= 0 || w <= 0) return;
    if (h * w <= kLeafSites || std::max(h, w) <= 2 * separator + 1) {
      emit(r0, r1, c0, c1);
      return;
    }
    if (h >= w) {
      const int mid = r0 + (h - separator) / 2;
      split(r0, mid, c0, c1);
      split(mid + separator, r1, c0, c1);
      emit(mid, mid + separator, c0, c1);
    } else {
      const int mid = c0 + (w - separator) / 2;
      split(r0, r1, c0, mid);
      split(r0, r1, mid + separator, c1);
      emit(r0, r1, mid, mid + separator);
    }
  }
};

}  // namespace

std::vector<std::int32_t> nested_dissection_order(const GridSpec& grid, int p,
                                                  int stencil_radius) {
  grid.validate();
  if (p < 1) throw ParameterError("need at least one component");
  if (stencil_radius < 1) throw ParameterError("stencil radius must be positive");
  const std::size_t n = grid.sites();
  std::vector<std::size_t> sites;
  sites.reserve(n);
  Bisector{grid, stencil_radius, sites}.split(0, grid.sizes[0], 0, grid.sizes[1]);
  std::vector<std::int32_t> order;
  order.reserve(n * static_cast<std::size_t>(p));
  for (std::size_t s : sites)
    for (int c = 0; c < p; ++c)
      order.push_back(static_cast<std::int32_t>(static_cast<std::size_t>(c) * n + s));
  return order;
}

std::vector<std::int32_t> natural_order(std::size_t n) {
  std::vector<std::int32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

CholeskyFactor sparse_factorize(const SparseOperator& q, std::span<const std::int32_t> order) {
  const std::size_t n = q.n;
  if (order.size() != n) throw ShapeError("ordering length does not match operator");
  if (!q.symmetric) throw SymmetryError("sparse_factorize needs a symmetric operator");

  std::vector<std::int32_t> pinv(n, -1);
  for (std::size_t k = 0; k < n; ++k) {
    const auto o = order[k];
    if (o < 0 || static_cast<std::size_t>(o) >= n || pinv[o] != -1)
      throw ParameterError("ordering is not a permutation");
    pinv[o] = static_cast<std::int32_t>(k);
  }

  // Upper triangle of P Q P^T, column-compressed.
  std::vector<std::size_t> cp(n + 1, 0);
  for (std::size_t e = 0; e < q.values.size(); ++e) {
    const auto i = pinv[q.rows[e]];
    const auto j = pinv[q.cols[e]];
    if (i <= j) ++cp[j + 1];
  }
  std::partial_sum(cp.begin(), cp.end(), cp.begin());
  std::vector<std::int32_t> ci(cp[n]);
  std::vector<double> cx(cp[n]);
  {
    std::vector<std::size_t> next(cp.begin(), cp.end() - 1);
    for (std::size_t e = 0; e < q.values.size(); ++e) {
      const auto i = pinv[q.rows[e]];
      const auto j = pinv[q.cols[e]];
      if (i > j) continue;
      ci[next[j]] = i;
      cx[next[j]++] = q.values[e];
    }
  }

  // Elimination tree.
  std::vector<std::int32_t> parent(n, -1);
  {
    std::vector<std::int32_t> ancestor(n, -1);
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t e = cp[k]; e < cp[k + 1]; ++e) {
        std::int32_t i = ci[e];
        while (i != -1 && static_cast<std::size_t>(i) < k) {
          const std::int32_t next = ancestor[i];
          ancestor[i] = static_cast<std::int32_t>(k);
          if (next == -1) parent[i] = static_cast<std::int32_t>(k);
          i = next;
        }
      }
    }
  }

  std::vector<std::int32_t> stack(n);
  std::vector<std::int32_t> mark(n, -1);
  // Nonzero pattern of row k of L (excluding the diagonal) in stack[top, n).
  auto ereach = [&](std::size_t k) {
    std::size_t top = n;
    mark[k] = static_cast<std::int32_t>(k);
    for (std::size_t e = cp[k]; e < cp[k + 1]; ++e) {
      std::int32_t i = ci[e];
      if (static_cast<std::size_t>(i) > k) continue;
      std::size_t len = 0;
      for (; mark[i] != static_cast<std::int32_t>(k); i = parent[i]) {
        stack[len++] = i;
        mark[i] = static_cast<std::int32_t>(k);
      }
      while (len > 0) stack[--top] = stack[--len];
    }
    return top;
  };

  std::vector<std::size_t> counts(n, 1);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t t = ereach(k); t < n; ++t) ++counts[stack[t]];

  CholeskyFactor f;
  f.perm_.assign(order.begin(), order.end());
  f.colptr_.assign(n + 1, 0);
  for (std::size_t j = 0; j < n; ++j) f.colptr_[j + 1] = f.colptr_[j] + counts[j];
  f.rowind_.resize(f.colptr_[n]);
  f.values_.resize(f.colptr_[n]);
  std::vector<std::size_t> fill(f.colptr_.begin(), f.colptr_.end() - 1);
  std::vector<double> x(n, 0.0);
  std::fill(mark.begin(), mark.end(), -1);

  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t top = ereach(k);
    x[k] = 0.0;
    for (std::size_t e = cp[k]; e < cp[k + 1]; ++e)
      if (static_cast<std::size_t>(ci[e]) <= k) x[ci[e]] = cx[e];
    double d = x[k];
    x[k] = 0.0;
    for (std::size_t t = top; t < n; ++t) {
      const std::int32_t i = stack[t];
      const double lki = x[i] / f.values_[f.colptr_[i]];
      x[i] = 0.0;
      const std::size_t end = fill[i];
      for (std::size_t e = f.colptr_[i] + 1; e < end; ++e) x[f.rowind_[e]] -= f.values_[e] * lki;
      d -= lki * lki;
      const std::size_t slot = fill[i]++;
      f.rowind_[slot] = static_cast<std::int32_t>(k);
      f.values_[slot] = lki;
    }
    if (!(d > 0.0))
      throw DefinitenessError("matrix is not positive definite: pivot " + std::to_string(d) +
                                  " at original index " + std::to_string(order[k]),
                              d, order[k]);
    const std::size_t slot = fill[k]++;
    f.rowind_[slot] = static_cast<std::int32_t>(k);
    f.values_[slot] = std::sqrt(d);
  }
  return f;
}

double CholeskyFactor::log_determinant() const {
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < colptr_.size(); ++j) acc += std::log(values_[colptr_[j]]);
  return 2.0 * acc;
}

std::vector<double> CholeskyFactor::solve(std::span<const double> b) const {
  const std::size_t n = dimension();
  if (b.size() != n) throw ShapeError("right-hand side length does not match factor");
  std::vector<double> y(n);
  for (std::size_t k = 0; k < n; ++k) y[k] = b[perm_[k]];
  for (std::size_t j = 0; j < n; ++j) {
    y[j] /= values_[colptr_[j]];
    for (std::size_t e = colptr_[j] + 1; e < colptr_[j + 1]; ++e) y[rowind_[e]] -= values_[e] * y[j];
  }
  for (std::size_t j = n; j-- > 0;) {
    for (std::size_t e = colptr_[j] + 1; e < colptr_[j + 1]; ++e) y[j] -= values_[e] * y[rowind_[e]];
    y[j] /= values_[colptr_[j]];
  }
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[perm_[k]] = y[k];
  return out;
}

std::vector<double> CholeskyFactor::sample_transform(std::span<const double> z) const {
  const std::size_t n = dimension();
  if (z.size() != n) throw ShapeError("noise length does not match factor");
  std::vector<double> y(z.begin(), z.end());
  for (std::size_t j = n; j-- > 0;) {
    for (std::size_t e = colptr_[j] + 1; e < colptr_[j + 1]; ++e) y[j] -= values_[e] * y[rowind_[e]];
    y[j] /= values_[colptr_[j]];
  }
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[perm_[k]] = y[k];
  return out;
}

std::vector<double> CholeskyFactor::inverse_diagonal() const {
  const std::size_t n = dimension();
  std::vector<double> sigma(values_.size(), 0.0);
  std::vector<std::ptrdiff_t> pos(n, -1);
  std::vector<double> acc(n, 0.0);
  for (std::size_t j = n; j-- > 0;) {
    const std::size_t start = colptr_[j];
    const std::size_t end = colptr_[j + 1];
    const double ljj = values_[start];
    for (std::size_t e = start + 1; e < end; ++e) {
      pos[rowind_[e]] = static_cast<std::ptrdiff_t>(e);
      acc[rowind_[e]] = 0.0;
    }
    // acc[i] = sum_{k in pattern(j)} L_kj Sigma_ik for every i in pattern(j).
    for (std::size_t e = start + 1; e < end; ++e) {
      const std::int32_t k = rowind_[e];
      const double lkj = values_[e];
      for (std::size_t q = colptr_[k]; q < colptr_[k + 1]; ++q) {
        const std::int32_t r = rowind_[q];
        if (r == k) {
          acc[k] += lkj * sigma[q];
        } else if (pos[r] >= 0) {
          acc[r] += lkj * sigma[q];
          acc[k] += values_[pos[r]] * sigma[q];
        }
      }
    }
    double diag = 1.0 / (ljj * ljj);
    for (std::size_t e = start + 1; e < end; ++e) {
      sigma[e] = -acc[rowind_[e]] / ljj;
      diag -= values_[e] * sigma[e] / ljj;
    }
    sigma[start] = diag;
    for (std::size_t e = start + 1; e < end; ++e) pos[rowind_[e]] = -1;
  }
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[perm_[k]] = sigma[colptr_[k]];
  return out;
}

Eigen::MatrixXd CholeskyFactor::dense_lower() const {
  const auto n = static_cast<Eigen::Index>(dimension());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (std::size_t e = colptr_[j]; e < colptr_[j + 1]; ++e) l(rowind_[e], j) = values_[e];
  return l;
}

}  // namespace mvgrf
