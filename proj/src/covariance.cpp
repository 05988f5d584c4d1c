#include "mvgrf/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <ostream>

#include "fft.hpp"
#include "mvgrf/error.hpp"
#include "mvgrf/format.hpp"
#include "mvgrf/parallel.hpp"

namespace mvgrf {

namespace {

constexpr std::size_t kReplicateChunk = 32;

int periodic(int h, int m) {
  const int r = h % m;
  return r < 0 ? r + m : r;
}

// Pairwise sum of equally sized arrays, fixed tree shape.
std::vector<double> pairwise_sum(std::vector<std::vector<double>>& parts, std::size_t lo,
                                 std::size_t hi) {
  if (hi - lo == 1) return std::move(parts[lo]);
  const std::size_t mid = lo + (hi - lo) / 2;
  std::vector<double> left = pairwise_sum(parts, lo, mid);
  const std::vector<double> right = pairwise_sum(parts, mid, hi);
  for (std::size_t k = 0; k < left.size(); ++k) left[k] += right[k];
  return left;
}

bool lex_nonnegative(Lag h) { return h[0] > 0 || (h[0] == 0 && h[1] >= 0); }

}  // namespace

const char* to_string(CovarianceKind kind) {
  switch (kind) {
    case CovarianceKind::analytic: return "analytic";
    case CovarianceKind::empirical: return "empirical";
    case CovarianceKind::implied: return "implied";
  }
  return "unknown";
}

CrossCovariance CrossCovariance::zeros(int d, int p, int max_lag) {
  CrossCovariance c;
  c.d = d;
  c.p = p;
  c.max_lag = max_lag;
  c.values.assign(c.lag_count() * static_cast<std::size_t>(p) * p, 0.0);
  return c;
}

std::size_t CrossCovariance::lag_count() const {
  const std::size_t side = 2 * static_cast<std::size_t>(max_lag) + 1;
  return d == 1 ? side : side * side;
}

Lag CrossCovariance::lag(std::size_t index) const {
  const int side = 2 * max_lag + 1;
  if (d == 1) return {static_cast<int>(index) - max_lag, 0};
  return {static_cast<int>(index) / side - max_lag, static_cast<int>(index) % side - max_lag};
}

bool CrossCovariance::contains(Lag h) const {
  if (std::abs(h[0]) > max_lag) return false;
  return d == 1 ? h[1] == 0 : std::abs(h[1]) <= max_lag;
}

std::size_t CrossCovariance::lag_index(Lag h) const {
  if (!contains(h)) throw DomainError("lag outside the stored lag box");
  const int side = 2 * max_lag + 1;
  if (d == 1) return static_cast<std::size_t>(h[0] + max_lag);
  return static_cast<std::size_t>((h[0] + max_lag) * side + (h[1] + max_lag));
}

double CrossCovariance::operator()(Lag h, int i, int j) const {
  return values[lag_index(h) * p * p + i * p + j];
}

double& CrossCovariance::at(Lag h, int i, int j) {
  return values[lag_index(h) * p * p + i * p + j];
}

double CrossCovariance::standard_error(Lag h, int i, int j) const {
  if (standard_errors.empty()) return 0.0;
  return standard_errors[lag_index(h) * p * p + i * p + j];
}

CrossCovariance analytic_cross_cov(const SpectrumModel& model, const GridSpec& grid,
                                   int max_lag) {
  if (model.dimension() != grid.d) throw DomainError("model and grid dimensions differ");
  const FrequencyGrid freq = build_frequency_grid(grid);
  int limit = grid.sizes[0] / 2;
  if (grid.d == 2) limit = std::min(limit, grid.sizes[1] / 2);
  if (max_lag < 0) max_lag = limit - 1;
  if (max_lag > limit) throw DomainError("max_lag exceeds half the grid size");

  const int p = model.components();
  const auto spectrum = discretized_spectrum(model, freq);
  CrossCovariance out = CrossCovariance::zeros(grid.d, p, max_lag);
  out.kind = CovarianceKind::analytic;
  out.grid = grid;
  out.model_hash = model.hash();

  const std::size_t n = freq.size();
  std::vector<std::complex<double>> buffer(n);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      for (std::size_t k = 0; k < n; ++k) buffer[k] = spectrum[k](i, j) * freq.cell_measure;
      detail::fft_inplace(buffer, grid, detail::FftDirection::backward);
      for (std::size_t li = 0; li < out.lag_count(); ++li) {
        const Lag h = out.lag(li);
        const std::size_t s = grid.site(periodic(h[0], grid.sizes[0]),
                                        periodic(h[1], grid.sizes[1]));
        out.values[li * p * p + i * p + j] = buffer[s].real();
      }
    }
  }
  return out;
}

CrossCovariance empirical_cross_cov(std::span<const Realization> realizations,
                                    int max_lag, std::size_t threads) {
  if (realizations.empty()) throw InconsistentInputError("no realizations given");
  const Realization& first = realizations.front();
  for (const auto& r : realizations) {
    if (!(r.grid == first.grid) || r.p != first.p || r.construction != first.construction)
      throw InconsistentInputError("realizations differ in grid, components or construction");
    if (r.values.size() != first.grid.sites() * static_cast<std::size_t>(first.p))
      throw InconsistentInputError("realization value count does not match its grid");
  }
  const GridSpec& grid = first.grid;
  int limit = grid.sizes[0] / 2;
  if (grid.d == 2) limit = std::min(limit, grid.sizes[1] / 2);
  if (max_lag < 0 || max_lag > limit) throw DomainError("max_lag must lie in [0, m/2]");

  const int p = first.p;
  const std::size_t n = grid.sites();
  const double inv_sites2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  CrossCovariance out = CrossCovariance::zeros(grid.d, p, max_lag);
  out.kind = CovarianceKind::empirical;
  out.grid = grid;
  out.replicates = realizations.size();

  // Accumulator layout: [sum c | sum c^2] over lags x (i <= j) pairs, then p means.
  const std::size_t lags = out.lag_count();
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j) pairs.emplace_back(i, j);
  const std::size_t block = lags * pairs.size();
  const std::size_t acc_size = 2 * block + static_cast<std::size_t>(p);

  const std::size_t reps = realizations.size();
  const std::size_t chunks = (reps + kReplicateChunk - 1) / kReplicateChunk;
  std::vector<std::vector<double>> partial(chunks);
  parallel_for(chunks, threads, [&](std::size_t chunk) {
    std::vector<double> acc(acc_size, 0.0);
    std::vector<std::vector<std::complex<double>>> spectra(p);
    std::vector<std::complex<double>> buffer(n);
    const std::size_t end = std::min(reps, (chunk + 1) * kReplicateChunk);
    for (std::size_t r = chunk * kReplicateChunk; r < end; ++r) {
      const Realization& field = realizations[r];
      for (int c = 0; c < p; ++c) {
        auto values = field.component(c);
        spectra[c].assign(values.begin(), values.end());
        detail::fft_inplace(spectra[c], grid, detail::FftDirection::forward);
        double mean = 0.0;
        for (double v : values) mean += v;
        acc[2 * block + c] += mean / static_cast<double>(n);
      }
      for (std::size_t q = 0; q < pairs.size(); ++q) {
        const auto [i, j] = pairs[q];
        for (std::size_t k = 0; k < n; ++k) buffer[k] = std::conj(spectra[i][k]) * spectra[j][k];
        detail::fft_inplace(buffer, grid, detail::FftDirection::backward);
        for (std::size_t li = 0; li < lags; ++li) {
          const Lag h = out.lag(li);
          const std::size_t s = grid.site(periodic(h[0], grid.sizes[0]),
                                          periodic(h[1], grid.sizes[1]));
          const double c = buffer[s].real() * inv_sites2;
          acc[li * pairs.size() + q] += c;
          acc[block + li * pairs.size() + q] += c * c;
        }
      }
    }
    partial[chunk] = std::move(acc);
  });
  const std::vector<double> total = pairwise_sum(partial, 0, chunks);

  const double count = static_cast<double>(reps);
  std::vector<double> mean(p);
  for (int c = 0; c < p; ++c) mean[c] = total[2 * block + c] / count;
  out.standard_errors.assign(out.values.size(), 0.0);
  for (std::size_t li = 0; li < lags; ++li) {
    const Lag h = out.lag(li);
    const std::size_t mirror = out.lag_index({-h[0], -h[1]});
    for (std::size_t q = 0; q < pairs.size(); ++q) {
      const auto [i, j] = pairs[q];
      if (i == j && !lex_nonnegative(h)) continue;
      const double sum = total[li * pairs.size() + q];
      const double sum_sq = total[block + li * pairs.size() + q];
      const double value = sum / count - mean[i] * mean[j];
      double se = 0.0;
      if (reps > 1) {
        const double var = std::max(0.0, (sum_sq - sum * sum / count) / (count - 1.0));
        se = std::sqrt(var / count);
      }
      out.values[li * p * p + i * p + j] = value;
      out.standard_errors[li * p * p + i * p + j] = se;
      out.values[mirror * p * p + j * p + i] = value;
      out.standard_errors[mirror * p * p + j * p + i] = se;
    }
  }
  return out;
}

double asymmetry_index(const CrossCovariance& c, int i, int j) {
  if (c.p < 2) throw DomainError("asymmetry index needs at least two components");
  if (i < 0 || j < 0 || i >= c.p || j >= c.p) throw DomainError("component index out of range");
  double numerator = 0.0;
  double denominator = 0.0;
  for (std::size_t li = 0; li < c.lag_count(); ++li) {
    const Lag h = c.lag(li);
    const double v = c(h, i, j);
    denominator = std::max(denominator, std::abs(v));
    numerator = std::max(numerator, std::abs(v - c({-h[0], -h[1]}, i, j)));
  }
  if (denominator == 0.0)
    throw DomainError("asymmetry index undefined for an all-zero cross-covariance");
  return numerator / denominator;
}

std::vector<Lag> probe_lags(const GridSpec& grid) {
  std::vector<Lag> out;
  if (grid.d == 1) {
    const int m = grid.sizes[0];
    const int reach = std::min(12, m / 2 - 1);
    const int stride = std::max(1, m / 48);
    for (int k = -reach; k <= reach; ++k) out.push_back({k * stride, 0});
    return out;
  }
  const int m = std::min(grid.sizes[0], grid.sizes[1]);
  const std::array<int, 3> dist = m >= 32 ? std::array<int, 3>{1, 5, m / 4}
                                          : std::array<int, 3>{1, 2, 3};
  const std::array<Lag, 8> dirs{{{1, 0}, {-1, 0}, {0, 1}, {0, -1},
                                 {1, 1}, {-1, -1}, {1, -1}, {-1, 1}}};
  out.push_back({0, 0});
  for (int r : dist)
    for (const Lag& u : dirs) out.push_back({u[0] * r, u[1] * r});
  return out;
}

void write_csv(std::ostream& out, const CrossCovariance& c) {
  out << (c.d == 1 ? "lag0" : "lag0,lag1") << ",i,j,value,kind\n";
  for (std::size_t li = 0; li < c.lag_count(); ++li) {
    const Lag h = c.lag(li);
    for (int i = 0; i < c.p; ++i)
      for (int j = 0; j < c.p; ++j) {
        out << h[0] << ',';
        if (c.d == 2) out << h[1] << ',';
        out << i << ',' << j << ',' << format_double(c.values[li * c.p * c.p + i * c.p + j])
            << ',' << to_string(c.kind) << '\n';
      }
  }
}

}  // namespace mvgrf
