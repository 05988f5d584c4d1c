#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvgrf/grid.hpp"
#include "mvgrf/sparse.hpp"

namespace mvgrf {

/// A = kappa^2 I - Laplacian_h with the (2d+1)-point stencil and reflecting
/// (cell-centred Neumann) boundary.
SparseOperator assemble_shifted_laplacian(double kappa, const GridSpec& grid);

/// Q = tau^2 h^d A^T A for A = kappa^2 I - Laplacian_h (alpha = 2, nu = 2 - d/2).
SparseOperator assemble_component_precision(double kappa, double tau, const GridSpec& grid);

/// Mean of diag(Q^{-1}) over the central third of every axis.
double interior_mean_variance(const std::vector<double>& marginal_variances,
                              const GridSpec& grid);

/// tau such that the interior-third mean marginal variance equals the target.
/// One factorization at tau = 1, then variance scales as 1 / tau^2.
double calibrate_tau(double kappa, const GridSpec& grid, double target_variance);

struct MarkovComponentSpec {
  double kappa = 1.0;
  double variance = 1.0;
};

/// Coupled Gaussian Markov model x = (T kron I) z with independent components
/// z_k ~ N(0, Q_k^{-1}) and unit lower-triangular T. `grid` is the
/// (non-periodic) computational grid, `observed` the cropped output window.
struct PrecisionModel {
  GridSpec grid;
  GridSpec observed;
  std::array<int, 2> margin{0, 0};
  std::vector<double> kappa;
  std::vector<double> tau;
  Eigen::MatrixXd coupling;
  SparseOperator precision;  // component-major indexing, dimension p * sites
  std::shared_ptr<const CholeskyFactor> factor;

  int components() const { return static_cast<int>(coupling.rows()); }
};

/// Assembles Q = (T^{-T} kron I) blockdiag(Q_k) (T^{-1} kron I) and factorizes
/// it with nested dissection.
PrecisionModel couple_components(const std::vector<SparseOperator>& components,
                                 const Eigen::MatrixXd& coupling, const GridSpec& grid);

/// Cells of margin added on each side: ceil(2 / (kappa_min h)).
int margin_cells(double kappa_min, double spacing);

/// Full pipeline: extend the grid by the margin (when `extend`), calibrate each
/// component's tau to its variance, assemble, couple and factorize.
PrecisionModel build_precision_model(const GridSpec& observed,
                                     const std::vector<MarkovComponentSpec>& components,
                                     const Eigen::MatrixXd& coupling, bool extend = true);

/// Solves F^T w = z for standard normal z, unpermutes and crops to the
/// observed window.
Realization precision_sample(const PrecisionModel& model, std::uint64_t seed,
                             std::uint32_t replicate);

std::vector<Realization> precision_sample_batch(const PrecisionModel& model,
                                                std::uint64_t seed, std::size_t count,
                                                std::size_t threads = 0);

struct BenchRow {
  std::size_t n = 0;
  int p = 1;
  std::string path;  // "dense" | "sparse"
  double median_seconds = 0.0;
  std::size_t factor_nonzeros = 0;
};

/// Times sparse (nested dissection + up-looking Cholesky) and dense (Eigen LLT)
/// factorization of coupled 2D precision matrices with n sites per component.
/// The dense path runs only while p * n <= dense_cap.
std::vector<BenchRow> bench_scaling(const std::vector<std::size_t>& sizes, int p,
                                    int repetitions, std::size_t dense_cap = 8192);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Near-square 2D grid with exactly n sites.
GridSpec bench_grid(std::size_t n);

}  // namespace mvgrf
