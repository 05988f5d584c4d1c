#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mvgrf/spectra.hpp"

namespace mvgrf::test {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;  // non-excess
};

inline Moments moments(const std::vector<double>& x) {
  Moments m;
  const double n = static_cast<double>(x.size());
  for (double v : x) m.mean += v;
  m.mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.variance = m2 * n / (n - 1.0);
  m.skewness = m3 / std::pow(m2, 1.5);
  m.kurtosis = m4 / (m2 * m2);
  return m;
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const Moments ma = moments(a), mb = moments(b);
  double c = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) c += (a[k] - ma.mean) * (b[k] - mb.mean);
  c /= static_cast<double>(a.size()) - 1.0;
  return c / std::sqrt(ma.variance * mb.variance);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mvgrf_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline SpectrumModel bivariate(int d, double kappa, double rho, std::array<double, 2> delta,
                               double nu = 1.0) {
  return SpectrumModel(d, {MaternParams{1.0, kappa, nu}, MaternParams{1.0, kappa, nu}},
                       {CrossTerm{0, 1, rho, delta}});
}

/// Random Hermitian PSD p x p matrix A A^* with complex Gaussian A.
inline Eigen::MatrixXcd random_psd(int p, std::mt19937_64& gen, int rank = -1) {
  std::normal_distribution<double> n;
  const int r = rank < 0 ? p : rank;
  Eigen::MatrixXcd a(p, r);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < r; ++j) a(i, j) = {n(gen), n(gen)};
  return a * a.adjoint();
}

}  // namespace mvgrf::test
