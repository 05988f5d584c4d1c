#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvgrf/covariance.hpp"
#include "mvgrf/grid.hpp"

namespace mvgrf {

enum class NoiseFamily { gaussian, centered_gamma, laplace };

const char* to_string(NoiseFamily family);
NoiseFamily parse_noise_family(const std::string& name);

/// Independently scattered measure on grid cells. Every family is
/// standardized to mean zero and variance equal to the cell volume, so only
/// higher moments depend on the family.
struct NoiseMeasureSpec {
  NoiseFamily family = NoiseFamily::gaussian;
  double shape = 1.0;  // centered-gamma
  double scale = 1.0;  // centered-gamma, laplace (cancels after standardization)

  void validate() const;
  double increment_variance(const GridSpec& grid) const { return grid.cell_volume(); }
};

/// p x sites increments, component-major; stream per (seed, replicate, component).
std::vector<double> sample_noise_increments(const NoiseMeasureSpec& spec,
                                            const GridSpec& grid, int p,
                                            std::uint64_t seed, std::uint32_t replicate);

enum class KernelKind { delta, gaussian_bump, varying_width_bump, triangular };

const char* to_string(KernelKind kind);
KernelKind parse_kernel_kind(const std::string& name);

/// Catalog kernel K(s, u) = mixing * k(s, u - s) on a periodic grid, where the
/// displacement is the minimal periodic image and k vanishes beyond the
/// support radius.
///   delta               k = [u == s] / sqrt(cell volume)
///   gaussian-bump       k = amplitude exp(-|r|^2 / (2 width^2))
///   varying-width-bump  as gaussian-bump, width_right for s_0 >= split
///   triangular          k = amplitude max(0, 1 - |r| / width)
struct KernelSpec {
  KernelKind kind = KernelKind::gaussian_bump;
  int p = 1;
  int d = 1;
  Eigen::MatrixXd mixing = Eigen::MatrixXd::Identity(1, 1);
  double amplitude = 1.0;
  double width = 1.0;
  double width_right = 1.0;
  double split = 0.0;
  double support = 4.0;

  static KernelSpec delta(int p, int d);
  static KernelSpec gaussian_bump(int p, int d, double amplitude, double width,
                                  double support);
  static KernelSpec varying_width_bump(int d, double amplitude, double width_left,
                                       double width_right, double split, double support);
  static KernelSpec triangular(int p, int d, double amplitude, double width);

  bool stationary() const { return kind != KernelKind::varying_width_bump; }
  double support_radius() const { return kind == KernelKind::delta ? 0.0 : support; }
  void validate() const;

  /// Untruncated scalar profile at site position `s` and displacement `r`.
  double profile(std::array<double, 2> s, std::array<double, 2> r,
                 double cell_volume) const;
  /// p x p value of K(s, u) on `grid` (zero beyond the support radius).
  Eigen::MatrixXd evaluate(const GridSpec& grid, std::size_t s, std::size_t u) const;
};

/// x_i(s) = sum_j sum_u K_ij(s, u) W_j(u), truncated at the support radius.
Realization sample_convolution_field(const KernelSpec& kernel, const NoiseMeasureSpec& noise,
                                     const GridSpec& grid, std::uint64_t seed,
                                     std::uint32_t replicate);

/// sum_u K(s, u) K(s', u)^T cell_volume.
Eigen::MatrixXd implied_cov_pair(const KernelSpec& kernel, const GridSpec& grid,
                                 std::size_t s, std::size_t s_prime);

/// Exact discrete second moment of sample_convolution_field for stationary
/// kernels, C(h) = implied_cov_pair(0, h).
CrossCovariance implied_cross_cov(const KernelSpec& kernel, const GridSpec& grid,
                                  int max_lag);

/// Squared Frobenius mass (times cell volume) dropped by the support
/// truncation; maximum over sites for nonstationary kernels.
double truncated_mass(const KernelSpec& kernel, const GridSpec& grid);

}  // namespace mvgrf
