#include <cmath>
#include <complex>
#include <numbers>
#include <set>
#include <sstream>

#include "doctest.h"
#include "mvgrf/covariance.hpp"
#include "mvgrf/error.hpp"
#include "mvgrf/simulate_spectral.hpp"
#include "support.hpp"

using namespace mvgrf;

namespace {

// Direct O(m^2) evaluation of sum_k S_ij(omega_k) dOmega exp(+i omega_k h)
// on a 1-d grid, using the model itself rather than the FFT path.
double dft_oracle(const SpectrumModel& model, const GridSpec& grid, int h, int i, int j) {
  const int m = grid.sizes[0];
  const double dw = 2.0 * std::numbers::pi / (m * grid.spacing);
  std::complex<double> acc = 0.0;
  for (int k = -m / 2 + 1; k <= m / 2; ++k) {
    const double w[1] = {k * dw};
    std::complex<double> s = model.cross_spectral_matrix(w)(i, j);
    if (k == 0 || k == m / 2) s = s.real();  // self-conjugate frequencies
    acc += s * std::exp(std::complex<double>(0.0, w[0] * h * grid.spacing));
  }
  return (acc * dw).real();
}

double continuum_matern(double r, double variance, double kappa, double nu) {
  if (r == 0.0) return variance;
  const double x = kappa * r;
  return variance * std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(x, nu) * std::cyl_bessel_k(nu, x);
}

}  // namespace

TEST_CASE("discrete white model has a delta covariance") {
  for (const GridSpec grid : {GridSpec::line(64), GridSpec::square(16, 16, 2.0)}) {
    const double w = std::numbers::pi / grid.spacing;
    const SpectrumModel model(grid.d, {WhiteBandParams{2.5, w}});
    const auto c = analytic_cross_cov(model, grid);
    for (std::size_t li = 0; li < c.lag_count(); ++li) {
      const Lag h = c.lag(li);
      const double expect = (h[0] == 0 && h[1] == 0) ? 2.5 : 0.0;
      CHECK(std::abs(c(h, 0, 0) - expect) < 1e-12);
    }
  }
}

TEST_CASE("proportional spectra give proportional covariances") {
  const GridSpec grid = GridSpec::square(32, 32);
  const auto c = analytic_cross_cov(test::bivariate(2, 0.5, 0.5, {0.0, 0.0}), grid);
  for (std::size_t li = 0; li < c.lag_count(); ++li) {
    const Lag h = c.lag(li);
    CHECK(std::abs(c(h, 0, 1) - 0.5 * c(h, 0, 0)) < 1e-12);
  }
}

TEST_CASE("FFT covariance equals a brute-force DFT of the model spectrum") {
  const GridSpec grid = GridSpec::line(64, 0.5);
  const SpectrumModel model(1, {MaternParams{1.0, 0.8, 1.0}, MaternParams{2.0, 1.5, 0.5}},
                            {CrossTerm{0, 1, 0.4, {2.5, 0.0}}});
  const auto c = analytic_cross_cov(model, grid);
  for (int h = -c.max_lag; h <= c.max_lag; ++h)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(std::abs(c({h, 0}, i, j) - dft_oracle(model, grid, h, i, j)) < 1e-12);
}

TEST_CASE("phase lag of 5 cells puts the cross-covariance peak at +5") {
  const GridSpec grid = GridSpec::line(128);
  const auto model = test::bivariate(1, 0.5, 0.5, {5.0, 0.0});
  const auto c = analytic_cross_cov(model, grid);
  int best = 0;
  for (int h = -c.max_lag; h <= c.max_lag; ++h)
    if (c({h, 0}, 0, 1) > c({best, 0}, 0, 1)) best = h;
  CHECK(best == 5);
  // Continuum quadrature of int rho exp(-i w delta) f(w) exp(i w h) dw on a
  // fine frequency grid peaks at the same lag.
  auto quad = [&](double h) {
    double acc = 0.0;
    const double step = 0.001;
    for (int k = -100000; k <= 100000; ++k) {
      const double w[1] = {k * step};
      acc += 0.5 * model.density(0)(w) * std::cos(w[0] * (h - 5.0));
    }
    return acc * step;
  };
  int qbest = 0;
  double qmax = -1.0;
  for (int h = -10; h <= 10; ++h) {
    const double v = quad(h);
    if (v > qmax) {
      qmax = v;
      qbest = h;
    }
  }
  CHECK(qbest == 5);
}

TEST_CASE("refined periodic covariance approaches the continuum Matern form") {
  // Long torus with fine spacing: aliasing and band truncation are small.
  const GridSpec grid = GridSpec::line(4096, 0.05);
  const double nu = 1.5, kappa = 1.0;
  const SpectrumModel model(1, {MaternParams{1.3, kappa, nu}});
  const auto c = analytic_cross_cov(model, grid, 60);
  for (int h : {0, 5, 20, 60}) {
    const double r = h * grid.spacing;
    CHECK(c({h, 0}, 0, 0) == doctest::Approx(continuum_matern(r, 1.3, kappa, nu)).epsilon(0.01));
  }
}

TEST_CASE("analytic covariance symmetry and positivity") {
  const GridSpec grid = GridSpec::square(32, 16);
  const SpectrumModel model(2, {MaternParams{1.0, 0.5, 1.0}, MaternParams{0.5, 0.9, 2.0}},
                            {CrossTerm{0, 1, -0.7, {3.0, -2.0}}});
  const auto c = analytic_cross_cov(model, grid);
  CHECK(c.kind == CovarianceKind::analytic);
  CHECK(c.model_hash == model.hash());
  for (std::size_t li = 0; li < c.lag_count(); ++li) {
    const Lag h = c.lag(li);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(std::abs(c(h, i, j) - c({-h[0], -h[1]}, j, i)) <= 1e-10);
  }
  CHECK(c({0, 0}, 0, 0) > 0.0);
  CHECK(c({0, 0}, 1, 1) > 0.0);
  // Block-circulant PSD: every discretized S(omega_k) is PSD.
  for (const auto& s : discretized_spectrum(model, build_frequency_grid(grid)))
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(s).eigenvalues().minCoeff() >= -1e-8);
}

TEST_CASE("empirical estimator matches a direct double loop") {
  const GridSpec grid = GridSpec::square(8, 16);
  const auto model = test::bivariate(2, 0.7, 0.3, {1.0, 2.0});
  const auto fields = sample_batch(model, grid, 4, 5);
  const int L = 3;
  const auto c = empirical_cross_cov(fields, L, 1);
  CHECK(c.kind == CovarianceKind::empirical);
  CHECK(c.replicates == 5);
  const double n = static_cast<double>(grid.sites());
  double mean[2] = {0.0, 0.0};
  for (const auto& f : fields)
    for (int comp = 0; comp < 2; ++comp)
      for (double v : f.component(comp)) mean[comp] += v;
  for (double& m : mean) m /= n * 5.0;
  for (int a = -L; a <= L; ++a) {
    for (int b = -L; b <= L; ++b) {
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          double acc = 0.0;
          for (const auto& f : fields)
            for (std::size_t s = 0; s < grid.sites(); ++s)
              acc += f.component(i)[s] * f.component(j)[grid.wrap(s, {a, b})];
          const double expect = acc / (n * 5.0) - mean[i] * mean[j];
          CHECK(c({a, b}, i, j) == doctest::Approx(expect).epsilon(1e-10).scale(1.0));
        }
      }
    }
  }
}

TEST_CASE("empirical estimator structure") {
  const GridSpec grid = GridSpec::square(16, 16);
  SUBCASE("a single zero field gives all zeros") {
    Realization z;
    z.grid = grid;
    z.p = 2;
    z.values.assign(2 * grid.sites(), 0.0);
    const auto c = empirical_cross_cov(std::span<const Realization>(&z, 1), 4, 1);
    for (double v : c.values) CHECK(v == 0.0);
  }
  SUBCASE("exchange symmetry holds exactly and standard errors are positive") {
    const auto fields = sample_batch(test::bivariate(2, 0.5, 0.5, {5.0, 0.0}), grid, 6, 40);
    const auto c = empirical_cross_cov(fields, 7, 2);
    double worst = 0.0;
    for (std::size_t li = 0; li < c.lag_count(); ++li) {
      const Lag h = c.lag(li);
      worst = std::max(worst, std::abs(c(h, 0, 1) - c({-h[0], -h[1]}, 1, 0)));
      CHECK(c.standard_error(h, 0, 0) > 0.0);
    }
    CHECK(worst == 0.0);
    for (std::size_t threads : {1u, 8u}) CHECK(empirical_cross_cov(fields, 7, threads).values == c.values);
  }
  SUBCASE("inconsistent inputs are rejected") {
    auto a = sample_batch(test::bivariate(2, 0.5, 0.5, {}), grid, 1, 1);
    auto b = sample_batch(test::bivariate(2, 0.5, 0.5, {}), GridSpec::square(8, 16), 1, 1);
    a.push_back(b.front());
    CHECK_THROWS_AS(empirical_cross_cov(a, 2, 1), InconsistentInputError);
    auto c = sample_batch(test::bivariate(2, 0.5, 0.5, {}), grid, 1, 2);
    c[1].construction = Construction::convolution;
    CHECK_THROWS_AS(empirical_cross_cov(c, 2, 1), InconsistentInputError);
    CHECK_THROWS_AS(empirical_cross_cov(std::vector<Realization>{}, 2, 1), InconsistentInputError);
  }
}

TEST_CASE("asymmetry index") {
  const GridSpec grid = GridSpec::square(64, 64);
  const auto even = analytic_cross_cov(test::bivariate(2, 0.5, 0.5, {0.0, 0.0}), grid);
  CHECK(asymmetry_index(even, 0, 1) <= 1e-10);
  const auto lagged = analytic_cross_cov(test::bivariate(2, 0.5, 0.5, {5.0, 0.0}), grid);
  CHECK(asymmetry_index(lagged, 0, 1) > 0.5);
  CHECK(asymmetry_index(lagged, 0, 1) == doctest::Approx(asymmetry_index(lagged, 1, 0)).epsilon(1e-12));
  const auto independent = analytic_cross_cov(test::bivariate(2, 0.5, 0.0, {0.0, 0.0}), grid);
  CHECK_THROWS_AS(asymmetry_index(independent, 0, 1), DomainError);
  const auto single = analytic_cross_cov(SpectrumModel(2, {MaternParams{}}), GridSpec::square(8, 8));
  CHECK_THROWS_AS(asymmetry_index(single, 0, 0), DomainError);
}

TEST_CASE("probe lags and CSV export") {
  const auto lags = probe_lags(GridSpec::square(64, 64));
  CHECK(lags.size() == 25);
  CHECK(std::set<Lag>(lags.begin(), lags.end()).size() == 25);
  for (const Lag& h : lags) CHECK(std::max(std::abs(h[0]), std::abs(h[1])) <= 16);
  CHECK(probe_lags(GridSpec::line(64)).size() == 25);

  const auto c = analytic_cross_cov(test::bivariate(1, 0.5, 0.5, {1.0, 0.0}), GridSpec::line(8), 1);
  std::ostringstream out;
  write_csv(out, c);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "lag0,i,j,value,kind");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.substr(line.rfind(',') + 1) == "analytic");
  }
  CHECK(rows == 3 * 4);
}
