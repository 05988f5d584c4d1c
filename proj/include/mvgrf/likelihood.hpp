#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvgrf/grid.hpp"
#include "mvgrf/sparse.hpp"

namespace mvgrf {

enum class LikelihoodFamily { dense_matern, markov };

/// Univariate Gaussian likelihood problem. Parameters are
/// theta = (log sigma^2, log kappa) with the smoothness held fixed.
///   dense_matern: y observed at arbitrary `sites` with a Matern covariance
///                 plus jitter * sigma^2 on the diagonal;
///   markov:       y observed at every site of `grid` under the calibrated
///                 SPDE precision (nu = 2 - d/2, no margin).
struct LikelihoodProblem {
  LikelihoodFamily family = LikelihoodFamily::dense_matern;
  std::vector<double> y;
  int d = 1;
  std::vector<std::array<double, 2>> sites;
  GridSpec grid;
  double nu = 1.0;
  double jitter = 1e-8;

  void validate() const;
  std::size_t size() const { return y.size(); }
  /// Smoothness of the field model (fixed nu, or 2 - d/2 for markov).
  double smoothness() const;
};

using Theta = std::array<double, 2>;

/// sigma^2 2^{1-nu} / Gamma(nu) (kappa r)^nu K_nu(kappa r).
double matern_covariance(double r, double variance, double kappa, double nu);

/// -1/2 (N log 2 pi + log det C + y^T C^{-1} y) for an explicit covariance.
double gaussian_loglik(const Eigen::MatrixXd& covariance, const Eigen::VectorXd& y);

/// -1/2 (N log 2 pi - log det Q + y^T Q y) for an explicit sparse precision.
double precision_loglik(const SparseOperator& precision, const std::vector<double>& y);

/// Covariance matrix of the observations at theta (Q^{-1} for markov).
Eigen::MatrixXd dense_covariance(const LikelihoodProblem& problem, const Theta& theta);

/// -1/2 (N log 2 pi + log det C + y^T C^{-1} y) by dense Cholesky of C.
double dense_loglik(const LikelihoodProblem& problem, const Theta& theta);

/// Same value for the markov family through the sparse factor of Q:
/// -1/2 (N log 2 pi - log det Q + y^T Q y).
double sparse_loglik(const LikelihoodProblem& problem, const Theta& theta);

struct LoglikGradient {
  double value = 0.0;
  Theta gradient{0.0, 0.0};
};

/// dense_loglik with its analytic gradient from the trace identities
/// d l / d theta = -1/2 tr(C^{-1} D) + 1/2 a^T D a,  a = C^{-1} y.
/// Matern family only.
LoglikGradient dense_loglik_gradient(const LikelihoodProblem& problem, const Theta& theta);

/// Max over coordinates of |g - g_fd| / max(1, |g|), g_fd by central
/// differences with the given step.
double fd_gradient_check(const std::function<LoglikGradient(const Theta&)>& objective,
                         const Theta& theta, double step);
double fd_gradient_check(const LikelihoodProblem& problem, const Theta& theta, double step);

struct ProfileSurface {
  std::vector<double> log_sigma2;
  std::vector<double> log_kappa;
  Eigen::MatrixXd loglik;  // rows: log_sigma2, cols: log_kappa

  /// CSV columns log_sigma2, log_kappa, loglik.
  void write_csv(std::ostream& out) const;
};

ProfileSurface profile_surface(const LikelihoodProblem& problem,
                               const std::vector<double>& log_sigma2,
                               const std::vector<double>& log_kappa,
                               std::size_t threads = 0);

struct SearchBox {
  Theta lower;
  Theta upper;
};

/// log sigma^2 within +-10 of log(mean y^2); kappa between 0.01 / extent and
/// 100 / spacing.
SearchBox search_box(const LikelihoodProblem& problem);

/// Four starts: sigma^2 = v e^{+-1/2}, kappa at the 1/3 and 2/3 geometric
/// points between 3 / extent and 1 / spacing.
std::vector<Theta> default_starts(const LikelihoodProblem& problem);

struct OptimizerResult {
  Theta theta;
  double loglik = 0.0;
  int iterations = 0;
};

/// Projected BFGS with Armijo backtracking on -loglik from one start.
OptimizerResult maximize_loglik(const LikelihoodProblem& problem, const Theta& start,
                                const SearchBox& box, int max_iterations = 200);

struct RidgeReport {
  Theta mle{0.0, 0.0};
  double loglik = 0.0;
  double lambda1 = 0.0;  // eigenvalues of the negative Hessian, lambda1 >= lambda2
  double lambda2 = 0.0;
  double anisotropy = 0.0;
  std::array<double, 2> flat_direction{0.0, 0.0};
  std::array<double, 2> microergodic_tangent{0.0, 0.0};
  double angle_degrees = 0.0;
  double nu = 1.0;
  double jitter = 0.0;
  std::vector<Theta> starts;
  std::string coordinates = "log_sigma2,log_kappa";
};

struct RidgeOptions {
  std::vector<Theta> starts;  // empty: default_starts
  double hessian_step = 1e-4;
  int max_iterations = 200;
};

/// MLE from several starts (ties broken by smaller |theta|), negative Hessian
/// by central differences of the analytic gradient, and the angle between its
/// flattest eigenvector and the tangent (-2 nu, 1) of sigma^2 kappa^{2 nu} = const.
/// Throws BoundaryError when the maximizer sits on the search box.
RidgeReport ridge_report(const LikelihoodProblem& problem, const RidgeOptions& options = {});

/// N equispaced sites on [0, domain_length] with y drawn exactly from the
/// Matern model (plus jitter).
LikelihoodProblem simulate_matern_problem(std::size_t count, double domain_length,
                                          double variance, double kappa, double nu,
                                          std::uint64_t seed, std::uint32_t replicate = 0);

/// y drawn from the calibrated SPDE model on `grid` (no margin).
LikelihoodProblem simulate_markov_problem(const GridSpec& grid, double variance, double kappa,
                                          std::uint64_t seed, std::uint32_t replicate = 0);

}  // namespace mvgrf
