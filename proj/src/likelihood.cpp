#include "mvgrf/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "mvgrf/error.hpp"
#include "mvgrf/format.hpp"
#include "mvgrf/markov.hpp"
#include "mvgrf/parallel.hpp"
#include "mvgrf/rng.hpp"

namespace mvgrf {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_theta(const Theta& theta) {
  if (!std::isfinite(theta[0]) || !std::isfinite(theta[1]))
    throw DomainError("theta must be finite");
}

double distance(const std::array<double, 2>& a, const std::array<double, 2>& b, int d) {
  const double dx = a[0] - b[0];
  if (d == 1) return std::abs(dx);
  const double dy = a[1] - b[1];
  return std::hypot(dx, dy);
}

// Correlation and its log-kappa derivative evaluated once per distinct pair
// distance; equispaced designs repeat distances heavily.
struct DistanceTable {
  std::vector<double> unique;
  std::vector<std::uint32_t> index;  // packed upper triangle incl. diagonal
};

DistanceTable distance_table(const LikelihoodProblem& problem) {
  const std::size_t n = problem.size();
  DistanceTable t;
  std::vector<double> all;
  all.reserve(n * (n + 1) / 2);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i <= j; ++i)
      all.push_back(distance(problem.sites[i], problem.sites[j], problem.d));
  t.unique = all;
  std::sort(t.unique.begin(), t.unique.end());
  t.unique.erase(std::unique(t.unique.begin(), t.unique.end()), t.unique.end());
  t.index.resize(all.size());
  for (std::size_t k = 0; k < all.size(); ++k)
    t.index[k] = static_cast<std::uint32_t>(
        std::lower_bound(t.unique.begin(), t.unique.end(), all[k]) - t.unique.begin());
  return t;
}

double matern_correlation(double x, double nu, double lognorm) {
  if (x == 0.0) return 1.0;
  const double k = std::cyl_bessel_k(nu, x);
  if (k == 0.0) return 0.0;
  return std::exp(lognorm + nu * std::log(x) + std::log(k));
}

// d R / d log kappa = -2^{1-nu}/Gamma(nu) x^{nu+1} K_{nu-1}(x), with K even in
// its order.
double matern_correlation_dlogkappa(double x, double nu, double lognorm) {
  if (x == 0.0) return 0.0;
  const double k = std::cyl_bessel_k(std::abs(nu - 1.0), x);
  if (k == 0.0) return 0.0;
  return -std::exp(lognorm + (nu + 1.0) * std::log(x) + std::log(k));
}

struct MaternMatrices {
  Eigen::MatrixXd c;
  Eigen::MatrixXd dc_dlogkappa;
};

MaternMatrices matern_matrices(const LikelihoodProblem& problem, const Theta& theta,
                               bool with_derivative) {
  const std::size_t n = problem.size();
  const double variance = std::exp(theta[0]);
  const double kappa = std::exp(theta[1]);
  const double nu = problem.nu;
  const double lognorm = (1.0 - nu) * std::numbers::ln2 - std::lgamma(nu);
  const DistanceTable table = distance_table(problem);

  std::vector<double> r(table.unique.size());
  std::vector<double> dr(with_derivative ? table.unique.size() : 0);
  for (std::size_t u = 0; u < table.unique.size(); ++u) {
    const double x = kappa * table.unique[u];
    r[u] = matern_correlation(x, nu, lognorm);
    if (with_derivative) dr[u] = matern_correlation_dlogkappa(x, nu, lognorm);
  }

  MaternMatrices m;
  m.c.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  if (with_derivative) m.dc_dlogkappa.resizeLike(m.c);
  std::size_t k = 0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i <= j; ++i, ++k) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      const double v = variance * r[table.index[k]];
      m.c(ii, jj) = v;
      m.c(jj, ii) = v;
      if (with_derivative) {
        const double dv = variance * dr[table.index[k]];
        m.dc_dlogkappa(ii, jj) = dv;
        m.dc_dlogkappa(jj, ii) = dv;
      }
    }
  }
  m.c.diagonal().array() += problem.jitter * variance;
  return m;
}

SparseOperator markov_precision(const LikelihoodProblem& problem, const Theta& theta) {
  const double variance = std::exp(theta[0]);
  const double kappa = std::exp(theta[1]);
  const double tau = calibrate_tau(kappa, problem.grid, variance);
  return assemble_component_precision(kappa, tau, problem.grid);
}

Eigen::LLT<Eigen::MatrixXd> factor_covariance(const Eigen::MatrixXd& c) {
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c, Eigen::EigenvaluesOnly)
                               .eigenvalues()
                               .minCoeff();
    throw DefinitenessError("covariance matrix is not positive definite", min_eig);
  }
  return llt;
}

double loglik_from_factor(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd& l = llt.matrixLLT();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  const Eigen::VectorXd w = llt.matrixL().solve(y);
  return -0.5 * (static_cast<double>(y.size()) * kLog2Pi + logdet + w.squaredNorm());
}

Eigen::VectorXd observations(const LikelihoodProblem& problem) {
  return Eigen::Map<const Eigen::VectorXd>(problem.y.data(),
                                           static_cast<Eigen::Index>(problem.y.size()));
}

double extent(const LikelihoodProblem& problem) {
  if (problem.family == LikelihoodFamily::markov) {
    const int m = *std::max_element(problem.grid.sizes.begin(),
                                    problem.grid.sizes.begin() + problem.grid.d);
    return (m - 1) * problem.grid.spacing;
  }
  double best = 0.0;
  for (int a = 0; a < problem.d; ++a) {
    double lo = problem.sites.front()[a];
    double hi = lo;
    for (const auto& s : problem.sites) {
      lo = std::min(lo, s[a]);
      hi = std::max(hi, s[a]);
    }
    best = std::max(best, hi - lo);
  }
  return best;
}

double typical_spacing(const LikelihoodProblem& problem) {
  if (problem.family == LikelihoodFamily::markov) return problem.grid.spacing;
  const double per_axis = std::pow(static_cast<double>(problem.size()), 1.0 / problem.d);
  return extent(problem) / std::max(1.0, per_axis - 1.0);
}

LoglikGradient objective(const LikelihoodProblem& problem, const Theta& theta) {
  return dense_loglik_gradient(problem, theta);
}

}  // namespace

void LikelihoodProblem::validate() const {
  if (y.size() < 2) throw ShapeError("likelihood needs at least two observations");
  for (double v : y)
    if (!std::isfinite(v)) throw DomainError("observations must be finite");
  if (!(jitter > 0.0) || !std::isfinite(jitter)) throw ParameterError("jitter must be positive");
  if (family == LikelihoodFamily::dense_matern) {
    if (d != 1 && d != 2) throw DomainError("dimension must be 1 or 2");
    if (sites.size() != y.size()) throw ShapeError("sites and observations differ in length");
    if (!(nu > 0.0) || !std::isfinite(nu)) throw ParameterError("smoothness must be positive");
  } else {
    grid.validate();
    if (grid.sites() != y.size()) throw ShapeError("grid sites and observations differ in length");
  }
}

double LikelihoodProblem::smoothness() const {
  return family == LikelihoodFamily::markov ? 2.0 - 0.5 * grid.d : nu;
}

double matern_covariance(double r, double variance, double kappa, double nu) {
  if (!(r >= 0.0) || !(variance > 0.0) || !(kappa > 0.0) || !(nu > 0.0))
    throw ParameterError("matern covariance needs r >= 0 and positive parameters");
  const double lognorm = (1.0 - nu) * std::numbers::ln2 - std::lgamma(nu);
  return variance * matern_correlation(kappa * r, nu, lognorm);
}

double gaussian_loglik(const Eigen::MatrixXd& covariance, const Eigen::VectorXd& y) {
  if (covariance.rows() != covariance.cols() || covariance.rows() != y.size() || y.size() == 0)
    throw ShapeError("covariance and observation sizes differ");
  return loglik_from_factor(factor_covariance(covariance), y);
}

double precision_loglik(const SparseOperator& precision, const std::vector<double>& y) {
  if (precision.n != y.size() || y.empty())
    throw ShapeError("precision and observation sizes differ");
  const auto order = natural_order(precision.n);
  const CholeskyFactor f = sparse_factorize(precision, order);
  const std::vector<double> qy = precision.multiply(y);
  double quad = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) quad += y[i] * qy[i];
  return -0.5 * (static_cast<double>(y.size()) * kLog2Pi - f.log_determinant() + quad);
}

Eigen::MatrixXd dense_covariance(const LikelihoodProblem& problem, const Theta& theta) {
  problem.validate();
  check_theta(theta);
  if (problem.family == LikelihoodFamily::dense_matern)
    return matern_matrices(problem, theta, false).c;
  const Eigen::MatrixXd q = markov_precision(problem, theta).to_dense();
  Eigen::LLT<Eigen::MatrixXd> llt(q);
  if (llt.info() != Eigen::Success)
    throw DefinitenessError("precision matrix is not positive definite", 0.0);
  return llt.solve(Eigen::MatrixXd::Identity(q.rows(), q.cols()));
}

double dense_loglik(const LikelihoodProblem& problem, const Theta& theta) {
  const Eigen::MatrixXd c = dense_covariance(problem, theta);
  return loglik_from_factor(factor_covariance(c), observations(problem));
}

double sparse_loglik(const LikelihoodProblem& problem, const Theta& theta) {
  problem.validate();
  check_theta(theta);
  if (problem.family != LikelihoodFamily::markov)
    throw WrongOperationError("sparse likelihood needs the markov family");
  const SparseOperator q = markov_precision(problem, theta);
  const auto order = nested_dissection_order(problem.grid, 1);
  const CholeskyFactor f = sparse_factorize(q, order);
  const std::vector<double> qy = q.multiply(problem.y);
  double quad = 0.0;
  for (std::size_t i = 0; i < problem.y.size(); ++i) quad += problem.y[i] * qy[i];
  return -0.5 * (static_cast<double>(problem.y.size()) * kLog2Pi - f.log_determinant() + quad);
}

LoglikGradient dense_loglik_gradient(const LikelihoodProblem& problem, const Theta& theta) {
  problem.validate();
  check_theta(theta);
  if (problem.family != LikelihoodFamily::dense_matern)
    throw WrongOperationError("analytic gradient is defined for the dense Matern family");
  const MaternMatrices m = matern_matrices(problem, theta, true);
  const auto llt = factor_covariance(m.c);
  const Eigen::VectorXd y = observations(problem);
  const Eigen::VectorXd alpha = llt.solve(y);
  const auto n = m.c.rows();
  const Eigen::MatrixXd cinv = llt.solve(Eigen::MatrixXd::Identity(n, n));

  LoglikGradient out;
  out.value = loglik_from_factor(llt, y);
  // dC/dlog sigma^2 = C, so tr(C^{-1} C) = N and a^T C a = y^T a.
  out.gradient[0] = -0.5 * static_cast<double>(n) + 0.5 * y.dot(alpha);
  const double trace = (cinv.array() * m.dc_dlogkappa.array()).sum();
  out.gradient[1] = -0.5 * trace + 0.5 * alpha.dot(m.dc_dlogkappa * alpha);
  return out;
}

double fd_gradient_check(const std::function<LoglikGradient(const Theta&)>& f,
                         const Theta& theta, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw StepError("step must be positive and finite");
  check_theta(theta);
  const LoglikGradient g = f(theta);
  double worst = 0.0;
  for (int a = 0; a < 2; ++a) {
    Theta plus = theta;
    Theta minus = theta;
    plus[a] += step;
    minus[a] -= step;
    if (plus[a] == theta[a] || minus[a] == theta[a])
      throw StepError("step is below the resolution of theta");
    const double fd = (f(plus).value - f(minus).value) / (plus[a] - minus[a]);
    worst = std::max(worst, std::abs(g.gradient[a] - fd) / std::max(1.0, std::abs(g.gradient[a])));
  }
  return worst;
}

double fd_gradient_check(const LikelihoodProblem& problem, const Theta& theta, double step) {
  return fd_gradient_check([&](const Theta& t) { return objective(problem, t); }, theta, step);
}

void ProfileSurface::write_csv(std::ostream& out) const {
  out << "log_sigma2,log_kappa,loglik\n";
  for (std::size_t i = 0; i < log_sigma2.size(); ++i)
    for (std::size_t j = 0; j < log_kappa.size(); ++j)
      out << format_double(log_sigma2[i]) << ',' << format_double(log_kappa[j]) << ','
          << format_double(loglik(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
          << '\n';
}

ProfileSurface profile_surface(const LikelihoodProblem& problem,
                               const std::vector<double>& log_sigma2,
                               const std::vector<double>& log_kappa, std::size_t threads) {
  problem.validate();
  if (log_sigma2.empty() || log_kappa.empty()) throw ShapeError("empty theta grid");
  ProfileSurface s;
  s.log_sigma2 = log_sigma2;
  s.log_kappa = log_kappa;
  s.loglik.resize(static_cast<Eigen::Index>(log_sigma2.size()),
                  static_cast<Eigen::Index>(log_kappa.size()));
  const std::size_t cols = log_kappa.size();
  parallel_for(log_sigma2.size() * cols, resolve_threads(threads), [&](std::size_t k) {
    const std::size_t i = k / cols;
    const std::size_t j = k % cols;
    s.loglik(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
        dense_loglik(problem, {log_sigma2[i], log_kappa[j]});
  });
  return s;
}

SearchBox search_box(const LikelihoodProblem& problem) {
  problem.validate();
  double v = 0.0;
  for (double x : problem.y) v += x * x;
  v = std::max(v / static_cast<double>(problem.size()), std::numeric_limits<double>::min());
  const double ext = extent(problem);
  const double h = typical_spacing(problem);
  if (!(ext > 0.0) || !(h > 0.0)) throw DomainError("observation sites are degenerate");
  return {{std::log(v) - 10.0, std::log(0.01 / ext)}, {std::log(v) + 10.0, std::log(100.0 / h)}};
}

std::vector<Theta> default_starts(const LikelihoodProblem& problem) {
  const SearchBox box = search_box(problem);
  const double logv = 0.5 * (box.lower[0] + box.upper[0]);
  const double lo = std::log(3.0 / extent(problem));
  const double hi = std::log(1.0 / typical_spacing(problem));
  std::vector<Theta> starts;
  for (double ds : {-0.5, 0.5})
    for (double t : {1.0 / 3.0, 2.0 / 3.0}) starts.push_back({logv + ds, lo + t * (hi - lo)});
  return starts;
}

OptimizerResult maximize_loglik(const LikelihoodProblem& problem, const Theta& start,
                                const SearchBox& box, int max_iterations) {
  using Vec = Eigen::Vector2d;
  auto clamp = [&](Vec x) {
    for (int a = 0; a < 2; ++a) x[a] = std::clamp(x[a], box.lower[a], box.upper[a]);
    return x;
  };
  // Minimize f = -loglik; failures to factorize count as +inf.
  auto eval = [&](const Vec& x, Vec& g) {
    try {
      const LoglikGradient r = dense_loglik_gradient(problem, {x[0], x[1]});
      g = Vec(-r.gradient[0], -r.gradient[1]);
      return -r.value;
    } catch (const DefinitenessError&) {
      g.setZero();
      return std::numeric_limits<double>::infinity();
    }
  };

  Vec x = clamp(Vec(start[0], start[1]));
  Vec g;
  double f = eval(x, g);
  if (!std::isfinite(f)) throw DefinitenessError("covariance is singular at the start", 0.0);
  Eigen::Matrix2d hinv = Eigen::Matrix2d::Identity();
  int it = 0;
  for (; it < max_iterations; ++it) {
    // Projected gradient: components pushing out of an active bound are zero.
    Vec pg = g;
    for (int a = 0; a < 2; ++a)
      if ((x[a] <= box.lower[a] && g[a] > 0.0) || (x[a] >= box.upper[a] && g[a] < 0.0)) pg[a] = 0.0;
    if (pg.lpNorm<Eigen::Infinity>() < 1e-8 * std::max(1.0, std::abs(f))) break;

    Vec p = -hinv * g;
    if (g.dot(p) >= 0.0) {
      hinv.setIdentity();
      p = -g;
    }
    const double longest = p.lpNorm<Eigen::Infinity>();
    if (longest > 2.0) p *= 2.0 / longest;

    double t = 1.0;
    Vec xn;
    Vec gn;
    double fn = f;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      xn = clamp(x + t * p);
      if ((xn - x).lpNorm<Eigen::Infinity>() == 0.0) break;
      fn = eval(xn, gn);
      if (fn <= f + 1e-4 * g.dot(xn - x)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const Vec s = xn - x;
    const Vec yv = gn - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::Matrix2d i2 = Eigen::Matrix2d::Identity();
      hinv = (i2 - rho * s * yv.transpose()) * hinv * (i2 - rho * yv * s.transpose()) +
             rho * s * s.transpose();
    }
    const double change = f - fn;
    x = xn;
    g = gn;
    f = fn;
    if (change <= 1e-15 * std::max(1.0, std::abs(f)) && s.lpNorm<Eigen::Infinity>() < 1e-12) break;
  }
  return {{x[0], x[1]}, -f, it};
}

RidgeReport ridge_report(const LikelihoodProblem& problem, const RidgeOptions& options) {
  problem.validate();
  if (problem.family != LikelihoodFamily::dense_matern)
    throw WrongOperationError("ridge diagnostics use the dense Matern family");
  const SearchBox box = search_box(problem);
  RidgeReport rep;
  rep.starts = options.starts.empty() ? default_starts(problem) : options.starts;
  rep.nu = problem.nu;
  rep.jitter = problem.jitter;

  bool have = false;
  OptimizerResult best;
  for (const Theta& s : rep.starts) {
    const OptimizerResult r = maximize_loglik(problem, s, box, options.max_iterations);
    const double tol = 1e-9 * std::max(1.0, std::abs(r.loglik));
    const auto norm = [](const Theta& t) { return std::hypot(t[0], t[1]); };
    if (!have || r.loglik > best.loglik + tol ||
        (std::abs(r.loglik - best.loglik) <= tol && norm(r.theta) < norm(best.theta))) {
      best = r;
      have = true;
    }
  }
  rep.mle = best.theta;
  rep.loglik = best.loglik;
  for (int a = 0; a < 2; ++a) {
    const double margin = 1e-3 * (box.upper[a] - box.lower[a]);
    if (rep.mle[a] - box.lower[a] < margin || box.upper[a] - rep.mle[a] < margin)
      throw BoundaryError("maximum likelihood estimate lies on the search boundary");
  }

  const double h = options.hessian_step;
  if (!(h > 0.0)) throw StepError("hessian step must be positive");
  Eigen::Matrix2d neg_hessian;
  for (int b = 0; b < 2; ++b) {
    Theta plus = rep.mle;
    Theta minus = rep.mle;
    plus[b] += h;
    minus[b] -= h;
    if (plus[b] == rep.mle[b]) throw StepError("hessian step is below the resolution of theta");
    const LoglikGradient gp = objective(problem, plus);
    const LoglikGradient gm = objective(problem, minus);
    for (int a = 0; a < 2; ++a)
      neg_hessian(a, b) = -(gp.gradient[a] - gm.gradient[a]) / (plus[b] - minus[b]);
  }
  neg_hessian = 0.5 * (neg_hessian + neg_hessian.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(neg_hessian);
  rep.lambda2 = eig.eigenvalues()[0];
  rep.lambda1 = eig.eigenvalues()[1];
  if (!(rep.lambda2 > 0.0))
    throw BoundaryError("negative Hessian is not positive definite at the estimate");
  rep.anisotropy = rep.lambda1 / rep.lambda2;

  Eigen::Vector2d flat = eig.eigenvectors().col(0);
  if (flat[1] < 0.0 || (flat[1] == 0.0 && flat[0] < 0.0)) flat = -flat;
  rep.flat_direction = {flat[0], flat[1]};
  const double nu = problem.nu;
  const Eigen::Vector2d tangent = Eigen::Vector2d(-2.0 * nu, 1.0).normalized();
  rep.microergodic_tangent = {tangent[0], tangent[1]};
  const double c = std::min(1.0, std::abs(flat.dot(tangent)));
  rep.angle_degrees = std::acos(c) * 180.0 / std::numbers::pi;
  return rep;
}

LikelihoodProblem simulate_matern_problem(std::size_t count, double domain_length,
                                          double variance, double kappa, double nu,
                                          std::uint64_t seed, std::uint32_t replicate) {
  if (count < 2) throw ShapeError("need at least two sites");
  if (!(domain_length > 0.0)) throw ParameterError("domain length must be positive");
  LikelihoodProblem problem;
  problem.family = LikelihoodFamily::dense_matern;
  problem.d = 1;
  problem.nu = nu;
  problem.sites.resize(count);
  for (std::size_t k = 0; k < count; ++k)
    problem.sites[k] = {domain_length * static_cast<double>(k) / static_cast<double>(count - 1), 0.0};
  problem.y.assign(count, 0.0);
  const Eigen::MatrixXd c =
      matern_matrices(problem, {std::log(variance), std::log(kappa)}, false).c;
  const auto llt = factor_covariance(c);
  CounterStream stream(stream_key(seed, replicate, 0, StreamPurpose::observations));
  Eigen::VectorXd z(static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = stream.normal();
  const Eigen::VectorXd y = llt.matrixL() * z;
  problem.y.assign(y.data(), y.data() + y.size());
  return problem;
}

LikelihoodProblem simulate_markov_problem(const GridSpec& grid, double variance, double kappa,
                                          std::uint64_t seed, std::uint32_t replicate) {
  GridSpec g = grid;
  g.periodic = false;
  const PrecisionModel model =
      build_precision_model(g, {{kappa, variance}}, Eigen::MatrixXd::Identity(1, 1), false);
  const Realization r = precision_sample(model, seed, replicate);
  LikelihoodProblem problem;
  problem.family = LikelihoodFamily::markov;
  problem.grid = g;
  problem.d = g.d;
  problem.nu = 2.0 - 0.5 * g.d;
  problem.y = r.values;
  return problem;
}

}  // namespace mvgrf
