#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "mvgrf/grid.hpp"
#include "mvgrf/spectra.hpp"

namespace mvgrf {

enum class CovarianceKind { analytic, empirical, implied };

const char* to_string(CovarianceKind kind);

using Lag = std::array<int, 2>;

/// Matrix-valued C(h) = Cov(x_i(s), x_j(s + h)) sampled on the lag box
/// [-max_lag, max_lag]^d (grid units). The second lag entry is 0 for d == 1.
struct CrossCovariance {
  int d = 1;
  int p = 1;
  int max_lag = 0;
  CovarianceKind kind = CovarianceKind::analytic;
  GridSpec grid;
  std::uint64_t model_hash = 0;
  std::size_t replicates = 0;
  std::vector<double> values;           // per lag, p*p row-major
  std::vector<double> standard_errors;  // empirical only, same layout

  static CrossCovariance zeros(int d, int p, int max_lag);

  std::size_t lag_count() const;
  Lag lag(std::size_t index) const;
  bool contains(Lag h) const;
  std::size_t lag_index(Lag h) const;
  double operator()(Lag h, int i, int j) const;
  double& at(Lag h, int i, int j);
  double standard_error(Lag h, int i, int j) const;
};

/// Exact covariance of sample_field on the same periodic grid, by inverse FFT
/// of the discretized spectrum. max_lag < 0 selects m/2 - 1.
CrossCovariance analytic_cross_cov(const SpectrumModel& model, const GridSpec& grid,
                                   int max_lag = -1);

/// Periodic-wrap moment estimator averaged over replicates and sites, minus the
/// product of pooled component means. Mirror entries are copied so that
/// C_ij(h) == C_ji(-h) holds exactly. Standard errors come from the spread of
/// per-replicate estimates (zero when there is a single replicate). Replicate
/// sums are reduced in fixed chunks, so results do not depend on `threads`.
CrossCovariance empirical_cross_cov(std::span<const Realization> realizations,
                                    int max_lag, std::size_t threads = 0);

/// max_h |C_ij(h) - C_ij(-h)| / max_h |C_ij(h)|.
double asymmetry_index(const CrossCovariance& c, int i, int j);

/// The fixed set of 25 probe lags (axis-aligned and diagonal, up to m/4).
std::vector<Lag> probe_lags(const GridSpec& grid);

/// CSV: lag components, i, j, value, kind.
void write_csv(std::ostream& out, const CrossCovariance& c);

}  // namespace mvgrf
