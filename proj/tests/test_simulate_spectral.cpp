#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mvgrf/error.hpp"
#include "mvgrf/simulate_spectral.hpp"
#include "support.hpp"

using namespace mvgrf;

TEST_CASE("spectral noise is conjugate symmetric bit for bit and deterministic") {
  const GridSpec grid = GridSpec::square(16, 8);
  const auto freq = build_frequency_grid(grid);
  const auto z = draw_spectral_noise(freq, 2, 42, 3);
  REQUIRE(z.values.size() == 2 * freq.size());
  for (int c = 0; c < 2; ++c) {
    const std::size_t off = static_cast<std::size_t>(c) * freq.size();
    for (std::size_t k = 0; k < freq.size(); ++k) {
      CHECK(z.values[off + freq.reflection[k]] == std::conj(z.values[off + k]));
      if (freq.kind[k] == FrequencyClass::self_conjugate) CHECK(z.values[off + k].imag() == 0.0);
    }
  }
  CHECK(draw_spectral_noise(freq, 2, 42, 3).values == z.values);
  CHECK(draw_spectral_noise(freq, 2, 42, 4).values != z.values);
}

TEST_CASE("spectral noise has unit variance at a representative index") {
  const GridSpec grid = GridSpec::line(8);
  const auto freq = build_frequency_grid(grid);
  std::size_t rep = 0;
  while (freq.kind[rep] != FrequencyClass::representative) ++rep;
  std::vector<double> re, im, self;
  for (std::uint32_t r = 0; r < 100000; ++r) {
    const auto z = draw_spectral_noise(freq, 1, 17, r);
    re.push_back(z.values[rep].real());
    im.push_back(z.values[rep].imag());
    self.push_back(z.values[0].real());
  }
  const double total = test::moments(re).variance + test::moments(im).variance;
  CHECK(total == doctest::Approx(1.0).epsilon(0.02));
  CHECK(test::moments(re).variance == doctest::Approx(0.5).epsilon(0.03));
  CHECK(test::moments(self).variance == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(test::correlation(re, im)) < 0.015);
}

TEST_CASE("discrete white noise is uncorrelated at lag one") {
  const GridSpec grid = GridSpec::line(256);
  const SpectrumModel model(1, {WhiteBandParams{1.0, std::numbers::pi}});
  std::vector<double> a, b;
  for (const auto& f : sample_batch(model, grid, 3, 200)) {
    for (std::size_t s = 0; s < grid.sites(); ++s) {
      a.push_back(f.values[s]);
      b.push_back(f.values[(s + 1) % grid.sites()]);
    }
  }
  const double r = test::correlation(a, b);
  CHECK(r > -0.05);
  CHECK(r < 0.05);
  CHECK(test::moments(a).variance == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("colocated correlation of the bivariate model") {
  const GridSpec grid = GridSpec::square(16, 16);
  const auto model = test::bivariate(2, 0.5, 0.5, {0.0, 0.0});
  const std::size_t centre = grid.site(8, 8);
  std::vector<double> x1, x2;
  for (const auto& f : sample_batch(model, grid, 5, 500)) {
    x1.push_back(f.component(0)[centre]);
    x2.push_back(f.component(1)[centre]);
  }
  CHECK(test::correlation(x1, x2) == doctest::Approx(0.5).epsilon(0.14));
}

TEST_CASE("both square roots give the same law but different paths") {
  const GridSpec grid = GridSpec::line(64);
  const auto model = test::bivariate(1, 0.3, 0.6, {4.0, 0.0});
  const auto lt = sample_batch(model, grid, 8, 2000, SqrtMethod::lower_triangular);
  const auto he = sample_batch(model, grid, 8, 2000, SqrtMethod::hermitian);
  CHECK(lt[0].values != he[0].values);
  // Per-replicate averages of x1^2, x2^2, x1 x2 over the torus.
  auto stats = [&](const std::vector<Realization>& fs, int which) {
    std::vector<double> v;
    for (const auto& f : fs) {
      double acc = 0.0;
      for (std::size_t s = 0; s < grid.sites(); ++s) {
        const double a = f.component(0)[s], b = f.component(1)[s];
        acc += which == 0 ? a * a : which == 1 ? b * b : a * b;
      }
      v.push_back(acc / static_cast<double>(grid.sites()));
    }
    return test::moments(v);
  };
  for (int which = 0; which < 3; ++which) {
    CAPTURE(which);
    const auto a = stats(lt, which), b = stats(he, which);
    const double se = std::sqrt(a.variance / 2000.0 + b.variance / 2000.0);
    CHECK(std::abs(a.mean - b.mean) < 3.0 * se);
  }
}

TEST_CASE("imaginary residual stays tiny across random models") {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 2;
    const int p = 1 + trial % 3;
    std::vector<ComponentParams> comps;
    for (int c = 0; c < p; ++c) comps.push_back(MaternParams{0.2 + 2.0 * u(gen), 0.1 + u(gen), 0.3 + 2.0 * u(gen)});
    std::vector<CrossTerm> cross;
    // Small |rho| keeps the colocation matrix diagonally dominant.
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j)
        cross.push_back({i, j, 0.8 * (u(gen) - 0.5), {10.0 * (u(gen) - 0.5), d == 2 ? 10.0 * (u(gen) - 0.5) : 0.0}});
    const SpectrumModel model(d, comps, cross);
    const GridSpec grid = d == 1 ? GridSpec::line(64, 0.5) : GridSpec::square(16, 32, 0.7);
    for (auto method : {SqrtMethod::lower_triangular, SqrtMethod::hermitian}) {
      const auto filt = build_filter(model, build_frequency_grid(grid), method);
      const auto draw = sample_field_detailed(filt, 100 + static_cast<std::uint64_t>(trial), 0);
      CHECK(draw.imaginary_residual < 1e-8);
      for (double v : draw.field.values) REQUIRE(std::isfinite(v));
    }
  }
}

TEST_CASE("field is stationary on the torus") {
  const GridSpec grid = GridSpec::square(16, 16);
  const SpectrumModel model(2, {MaternParams{1.0, 0.4, 1.0}});
  std::vector<double> a, b;
  for (const auto& f : sample_batch(model, grid, 31, 500)) {
    a.push_back(f.values[grid.site(0, 0)]);
    b.push_back(f.values[grid.site(9, 5)]);
  }
  const double va = test::moments(a).variance, vb = test::moments(b).variance;
  // Var of a sample variance of Gaussians is 2 sigma^4 / (n - 1).
  const double se = std::sqrt(2.0 * va * va / 499.0 + 2.0 * vb * vb / 499.0);
  CHECK(std::abs(va - vb) < 4.0 * se);
}

TEST_CASE("batches are indexed by replicate and independent of thread count") {
  const GridSpec grid = GridSpec::square(32, 32);
  const auto model = test::bivariate(2, 0.5, 0.5, {5.0, 0.0});
  const auto one = sample_batch(model, grid, 9, 3, SqrtMethod::lower_triangular, 1);
  REQUIRE(one.size() == 3);
  for (std::uint32_t r = 0; r < 3; ++r) {
    CHECK(one[r].replicate == r);
    CHECK(one[r].seed == 9);
    CHECK(one[r].construction == Construction::spectral);
    CHECK(one[r].values == sample_field(model, grid, 9, r).values);
  }
  for (std::size_t threads : {2u, 8u}) {
    const auto many = sample_batch(model, grid, 9, 3, SqrtMethod::lower_triangular, threads);
    for (std::size_t r = 0; r < 3; ++r) CHECK(many[r].values == one[r].values);
  }
}

TEST_CASE("invalid grids and mismatched models are rejected") {
  const auto model = test::bivariate(2, 0.5, 0.5, {0.0, 0.0});
  CHECK_THROWS_AS(sample_field(model, GridSpec::square(12, 16), 1, 0), DomainError);
  CHECK_THROWS_AS(sample_field(model, GridSpec::square(4, 4), 1, 0), DomainError);
  CHECK_THROWS_AS(sample_field(model, GridSpec::square(16, 16, 1.0, false), 1, 0), DomainError);
  CHECK_THROWS_AS(sample_field(model, GridSpec::line(16), 1, 0), DomainError);
  CHECK_THROWS_AS(sample_batch(model, GridSpec::square(8, 8), 1, 0), ParameterError);
}
