#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "mvgrf/grid.hpp"
#include "mvgrf/spectra.hpp"

namespace mvgrf {

/// Conjugate-symmetric complex white noise on a frequency grid,
/// component-major. Z(-omega) == conj(Z(omega)) holds bit-for-bit.
struct SpectralNoise {
  int p = 1;
  std::vector<std::complex<double>> values;
};

SpectralNoise draw_spectral_noise(const FrequencyGrid& freq, int p, std::uint64_t seed,
                                  std::uint32_t replicate);
SpectralNoise draw_spectral_noise(const GridSpec& grid, int p, std::uint64_t seed,
                                  std::uint32_t replicate);

struct SpectralDraw {
  Realization field;
  // max |Im| over the inverse transform, relative to the field's RMS
  double imaginary_residual = 0.0;
};

/// Discretized filtering of white noise:
///   x(s) = Re sum_k L(omega_k) Z_k sqrt(dOmega) exp(-i omega_k . s),
/// dOmega = prod_axis 2 pi / (m h). The sign of the exponent makes
/// C_ij(h) = E[x_i(s) x_j(s+h)] = sum_k S_ij(omega_k) dOmega exp(+i omega_k . h).
SpectralDraw sample_field_detailed(const SpectralFilter& filter, std::uint64_t seed,
                                   std::uint32_t replicate);

Realization sample_field(const SpectralFilter& filter, std::uint64_t seed,
                         std::uint32_t replicate);
Realization sample_field(const SpectrumModel& model, const GridSpec& grid,
                         std::uint64_t seed, std::uint32_t replicate,
                         SqrtMethod method = SqrtMethod::lower_triangular);

/// Replicate r uses (seed, r); output does not depend on `threads`.
std::vector<Realization> sample_batch(const SpectrumModel& model, const GridSpec& grid,
                                      std::uint64_t seed, std::size_t count,
                                      SqrtMethod method = SqrtMethod::lower_triangular,
                                      std::size_t threads = 0);

}  // namespace mvgrf
