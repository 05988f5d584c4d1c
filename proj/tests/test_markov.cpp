#include <cmath>

#include "doctest.h"
#include "mvgrf/error.hpp"
#include "mvgrf/markov.hpp"
#include "support.hpp"

using namespace mvgrf;

namespace {

std::vector<double> site_values(const std::vector<Realization>& fs, int comp, std::size_t site) {
  std::vector<double> v;
  for (const auto& f : fs) v.push_back(f.component(comp)[site]);
  return v;
}

Eigen::MatrixXd tridiag_laplacian_1d(int m, double kappa) {
  // Reflecting ends: the boundary row has a single neighbour.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    a(i, i) = kappa * kappa;
    for (int j : {i - 1, i + 1}) {
      if (j < 0 || j >= m) continue;
      a(i, i) += 1.0;
      a(i, j) = -1.0;
    }
  }
  return a;
}

}  // namespace

TEST_CASE("stencil arithmetic of the shifted Laplacian") {
  const GridSpec grid = GridSpec::line(3, 1.0, false);
  const Eigen::MatrixXd a = assemble_shifted_laplacian(1.0, grid).to_dense();
  CHECK(a(1, 0) == -1.0);
  CHECK(a(1, 1) == 3.0);
  CHECK(a(1, 2) == -1.0);
  const Eigen::MatrixXd lap = assemble_shifted_laplacian(1e-12, grid).to_dense();
  CHECK(lap(1, 1) == doctest::Approx(2.0));
  CHECK((a - tridiag_laplacian_1d(3, 1.0)).norm() < 1e-15);

  const GridSpec g2 = GridSpec::line(9, 0.5, false);
  const Eigen::MatrixXd q = assemble_component_precision(1.5, 2.0, g2).to_dense();
  const Eigen::MatrixXd a2 = tridiag_laplacian_1d(9, 1.5 * 0.5) / (0.5 * 0.5);
  const Eigen::MatrixXd oracle = 4.0 * 0.5 * a2.transpose() * a2;
  CHECK((q - oracle).norm() <= 1e-12 * oracle.norm());
}

TEST_CASE("component precision is symmetric PSD with a 13-point stencil") {
  const GridSpec grid = GridSpec::square(4, 4, 1.0, false);
  const auto q = assemble_component_precision(0.5, 1.0, grid);
  CHECK(q.max_asymmetry() == 0.0);
  const Eigen::MatrixXd d = q.to_dense();
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(d).eigenvalues().minCoeff() >= 0.0);
  CHECK(assemble_component_precision(0.5, 1.0, GridSpec::square(20, 20, 1.0, false)).max_row_nonzeros() <= 13);
  CHECK_THROWS_AS(assemble_component_precision(-1.0, 1.0, grid), ParameterError);
  CHECK_THROWS_AS(assemble_component_precision(1.0, 0.0, grid), ParameterError);
}

TEST_CASE("calibration scales, is monotone in kappa and needs an interior") {
  const GridSpec grid = GridSpec::square(30, 30, 1.0, false);
  const double t1 = calibrate_tau(0.3, grid, 1.0);
  const double t2 = calibrate_tau(0.3, grid, 2.0);
  CHECK(t2 * t2 == doctest::Approx(t1 * t1 / 2.0).epsilon(1e-12));
  double previous = 0.0;
  for (double kappa : {0.1, 0.2, 0.4, 0.8, 1.6}) {
    const double t = calibrate_tau(kappa, grid, 1.0);
    CHECK(t < (previous == 0.0 ? 1e300 : previous));
    previous = t;
  }
  // Calibrated interior variance equals the target via an independent dense inverse.
  const GridSpec small = GridSpec::square(9, 9, 1.0, false);
  const double tau = calibrate_tau(0.6, small, 1.7);
  const Eigen::MatrixXd inv = assemble_component_precision(0.6, tau, small).to_dense().inverse();
  std::vector<double> diag(static_cast<std::size_t>(inv.rows()));
  for (Eigen::Index k = 0; k < inv.rows(); ++k) diag[static_cast<std::size_t>(k)] = inv(k, k);
  CHECK(interior_mean_variance(diag, small) == doctest::Approx(1.7).epsilon(1e-10));
  CHECK_THROWS_AS(calibrate_tau(1.0, GridSpec::square(2, 8, 1.0, false), 1.0), DomainError);
  CHECK_THROWS_AS(calibrate_tau(1.0, grid, 0.0), ParameterError);
}

TEST_CASE("coupling formula matches a dense oracle") {
  const GridSpec grid = GridSpec::square(4, 4, 1.0, false);
  const auto q1 = assemble_component_precision(0.7, 1.0, grid);
  const auto q2 = assemble_component_precision(1.3, 0.8, grid);
  Eigen::MatrixXd t(2, 2);
  t << 1.0, 0.0, 0.6, 1.0;
  const auto model = couple_components({q1, q2}, t, grid);
  const Eigen::MatrixXd s1 = q1.to_dense().inverse(), s2 = q2.to_dense().inverse();
  const Eigen::Index n = s1.rows();
  Eigen::MatrixXd blocks = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  blocks.topLeftCorner(n, n) = s1;
  blocks.bottomRightCorner(n, n) = s2;
  Eigen::MatrixXd tk = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) tk.block(i * n, j * n, n, n) = t(i, j) * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd cov = tk * blocks * tk.transpose();
  const Eigen::MatrixXd implied = model.precision.to_dense().inverse();
  CHECK((implied - cov).norm() <= 1e-10 * cov.norm());

  // Identity coupling is block diagonal and equals the components bit for bit.
  const auto ind = couple_components({q1, q2}, Eigen::MatrixXd::Identity(2, 2), grid);
  const Eigen::MatrixXd qd = ind.precision.to_dense();
  CHECK(qd.topRightCorner(n, n).norm() == 0.0);
  CHECK((qd.topLeftCorner(n, n) - q1.to_dense()).norm() == 0.0);
  CHECK((qd.bottomRightCorner(n, n) - q2.to_dense()).norm() == 0.0);

  // Swapping the component order permutes Q but keeps the covariance blocks.
  const auto swapped = couple_components({q2, q1}, Eigen::MatrixXd::Identity(2, 2), grid);
  const Eigen::MatrixXd cs = swapped.precision.to_dense().inverse();
  const Eigen::MatrixXd ci = qd.inverse();
  CHECK((swapped.precision.to_dense() - qd).norm() > 0.0);
  CHECK((cs.topLeftCorner(n, n) - ci.bottomRightCorner(n, n)).norm() <= 1e-10 * ci.norm());
  CHECK((cs.bottomRightCorner(n, n) - ci.topLeftCorner(n, n)).norm() <= 1e-10 * ci.norm());

  Eigen::MatrixXd bad = t;
  bad(1, 1) = 2.0;
  CHECK_THROWS_AS(couple_components({q1, q2}, bad, grid), ParameterError);
  bad = t;
  bad(0, 1) = 0.1;
  CHECK_THROWS_AS(couple_components({q1, q2}, bad, grid), ParameterError);
}

TEST_CASE("margin and grid extension") {
  CHECK(margin_cells(0.5, 1.0) == 4);
  CHECK(margin_cells(2.0, 1.0) == 1);
  CHECK(margin_cells(0.3, 1.0) == 7);
  const GridSpec obs = GridSpec::square(10, 12, 1.0, false);
  const auto model = build_precision_model(obs, {{0.5, 1.0}}, Eigen::MatrixXd::Identity(1, 1));
  CHECK(model.margin[0] == 4);
  CHECK(model.grid.sizes[0] == 18);
  CHECK(model.grid.sizes[1] == 20);
  const auto r = precision_sample(model, 1, 0);
  CHECK(r.grid.sizes == obs.sizes);
  CHECK(r.values.size() == obs.sites());
  CHECK(r.construction == Construction::markov);
}

TEST_CASE("sampler variance, correlation and coupling by Monte Carlo") {
  const GridSpec obs = GridSpec::square(12, 12, 1.0, false);
  Eigen::MatrixXd t(2, 2);
  t << 1.0, 0.0, 0.6, 1.0;
  const auto model = build_precision_model(obs, {{0.8, 1.0}, {0.8, 1.0}}, t);
  const auto fs = precision_sample_batch(model, 5, 1000);
  const std::size_t centre = obs.site(6, 6);
  const auto x1 = site_values(fs, 0, centre), x2 = site_values(fs, 1, centre);
  CHECK(test::moments(x1).variance == doctest::Approx(1.0).epsilon(0.1));
  CHECK(std::abs(test::correlation(x1, x2) - 0.6 / std::sqrt(1.36)) < 0.05);
  // Far apart compared with the range sqrt(8 nu) / kappa.
  CHECK(std::abs(test::correlation(x1, site_values(fs, 0, obs.site(0, 11)))) < 0.1);

  const auto ind = build_precision_model(obs, {{0.8, 1.0}, {0.8, 1.0}}, Eigen::MatrixXd::Identity(2, 2));
  const auto fi = precision_sample_batch(ind, 6, 1000);
  CHECK(std::abs(test::correlation(site_values(fi, 0, centre), site_values(fi, 1, centre))) < 0.05);

  const auto calibrated = build_precision_model(obs, {{0.8, 2.5}}, Eigen::MatrixXd::Identity(1, 1));
  const auto fc = precision_sample_batch(calibrated, 7, 1000);
  double interior = 0.0;
  int count = 0;
  for (int i = 4; i < 8; ++i)
    for (int j = 4; j < 8; ++j, ++count) interior += test::moments(site_values(fc, 0, obs.site(i, j))).variance;
  CHECK(interior / count == doctest::Approx(2.5).epsilon(0.05));
}

TEST_CASE("short range limit decorrelates neighbours") {
  const GridSpec obs = GridSpec::line(64, 1.0, false);
  const auto model = build_precision_model(obs, {{1000.0, 1.0}}, Eigen::MatrixXd::Identity(1, 1));
  std::vector<double> a, b;
  for (const auto& f : precision_sample_batch(model, 9, 100)) {
    for (std::size_t s = 0; s + 1 < obs.sites(); ++s) {
      a.push_back(f.values[s]);
      b.push_back(f.values[s + 1]);
    }
  }
  CHECK(std::abs(test::correlation(a, b)) < 0.05);
}

TEST_CASE("sampler law matches the dense inverse on a 16-site grid") {
  const GridSpec grid = GridSpec::square(4, 4, 1.0, false);
  const auto model = build_precision_model(grid, {{0.7, 1.0}}, Eigen::MatrixXd::Identity(1, 1), false);
  const Eigen::MatrixXd cov = model.precision.to_dense().inverse();
  const std::size_t reps = 100000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(16, 16);
  for (const auto& f : precision_sample_batch(model, 12, reps)) {
    const Eigen::Map<const Eigen::VectorXd> x(f.values.data(), 16);
    acc.noalias() += x * x.transpose();
  }
  acc /= static_cast<double>(reps);
  int outside = 0;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) {
      const double se = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / static_cast<double>(reps));
      if (std::abs(acc(i, j) - cov(i, j)) > 4.0 * se) ++outside;
    }
  CHECK(outside == 0);
}

TEST_CASE("precision sampling is deterministic across runs and threads") {
  const GridSpec obs = GridSpec::square(16, 16, 1.0, false);
  const auto model = build_precision_model(obs, {{0.5, 1.0}}, Eigen::MatrixXd::Identity(1, 1));
  const auto one = precision_sample_batch(model, 3, 4, 1);
  CHECK(one[2].values == precision_sample(model, 3, 2).values);
  CHECK(one[0].values != one[1].values);
  for (std::size_t threads : {2u, 8u}) {
    const auto many = precision_sample_batch(model, 3, 4, threads);
    for (std::size_t r = 0; r < 4; ++r) CHECK(many[r].values == one[r].values);
  }
}

TEST_CASE("benchmark helpers") {
  CHECK(bench_grid(4096).sites() == 4096);
  CHECK(bench_grid(4096).sizes[0] == 64);
  CHECK(bench_grid(2048).sites() == 2048);
  CHECK(loglog_slope({1.0, 10.0, 100.0}, {3.0, 300.0, 30000.0}) == doctest::Approx(2.0));
  const auto rows = bench_scaling({256, 1024}, 2, 1, 1024);
  CHECK(rows.size() == 3);  // dense only while p n <= cap
  for (const auto& r : rows) CHECK(r.median_seconds > 0.0);
  CHECK_THROWS_AS(bench_scaling({1024, 256}, 1, 1), ParameterError);
}
