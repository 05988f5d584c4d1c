#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mvgrf/grid.hpp"

namespace mvgrf {

/// Matern-type spectral density c (kappa^2 + |omega|^2)^-(nu + d/2).
struct MaternParams {
  double variance = 1.0;  // sigma^2
  double kappa = 1.0;     // inverse range
  double nu = 1.0;        // smoothness
  void validate() const;
};

/// Flat density variance / (2W)^d on the box |omega_a| <= W. With
/// W = pi / h it is discrete white noise on a grid of spacing h.
struct WhiteBandParams {
  double variance = 1.0;
  double bandwidth = std::numbers::pi;
  void validate() const;
};

using ComponentParams = std::variant<MaternParams, WhiteBandParams>;

/// One component's spectral density with its normalization constant fixed at
/// construction so that the density integrates to the variance over R^d.
class ComponentDensity {
 public:
  ComponentDensity(ComponentParams params, int d);

  double operator()(std::span<const double> omega) const;
  double variance() const;
  double normalization() const { return constant_; }
  const ComponentParams& params() const { return params_; }

 private:
  ComponentParams params_;
  int d_;
  double constant_;
};

double component_density(const MaternParams& params, int d,
                         std::span<const double> omega);

/// Coupling between components i < j: colocation coefficient and phase lag
/// (length units, d entries used).
struct CrossTerm {
  int i = 0;
  int j = 1;
  double rho = 0.0;
  std::array<double, 2> delta{0.0, 0.0};
};

/// Geometric-mean cross-spectral model
///   S_ii = f_i,  S_ij = rho_ij exp(-i omega.delta_ij) sqrt(f_i f_j),  i < j.
class SpectrumModel {
 public:
  SpectrumModel(int d, std::vector<ComponentParams> components,
                std::vector<CrossTerm> cross = {});

  int dimension() const { return d_; }
  int components() const { return static_cast<int>(densities_.size()); }
  const ComponentDensity& density(int i) const { return densities_[i]; }
  const std::vector<CrossTerm>& cross_terms() const { return cross_; }
  double colocation(int i, int j) const { return rho_(i, j); }

  Eigen::MatrixXcd cross_spectral_matrix(std::span<const double> omega) const;

  /// Stable 64-bit digest of all parameters.
  std::uint64_t hash() const;

 private:
  int d_;
  std::vector<ComponentDensity> densities_;
  std::vector<CrossTerm> cross_;
  Eigen::MatrixXd rho_;
  std::vector<std::array<double, 2>> delta_;  // p*p, filled for i < j
};

inline Eigen::MatrixXcd cross_spectral_matrix(const SpectrumModel& model,
                                              std::span<const double> omega) {
  return model.cross_spectral_matrix(omega);
}

struct HermitianCheck {
  bool ok = false;
  double min_eigenvalue = 0.0;
  double max_asymmetry = 0.0;
};

HermitianCheck validate_hermitian_psd(const Eigen::MatrixXcd& s, double tol);

enum class SqrtMethod { lower_triangular, hermitian };

const char* to_string(SqrtMethod m);
SqrtMethod parse_sqrt_method(const std::string& name);

/// Matrix square root L with L L^* = S. Eigenvalues in [-1e-8 trace, 0) are
/// clipped; anything more negative raises DefinitenessError.
Eigen::MatrixXcd spectral_sqrt(const Eigen::MatrixXcd& s, SqrtMethod method);

/// S(omega_k) as used on a periodic grid: evaluated on half-space
/// representatives, conjugated onto reflections, and replaced by its real
/// part at self-conjugate frequencies (which stand for both +omega and -omega).
std::vector<Eigen::MatrixXcd> discretized_spectrum(const SpectrumModel& model,
                                                   const FrequencyGrid& freq);

struct SpectralFilter {
  FrequencyGrid freq;
  SqrtMethod method = SqrtMethod::lower_triangular;
  int p = 1;
  std::vector<Eigen::MatrixXcd> factor;  // L(omega_k) per linear index
};

SpectralFilter build_filter(const SpectrumModel& model, const FrequencyGrid& freq,
                            SqrtMethod method);

}  // namespace mvgrf
