#include "mvgrf/simulate_spectral.hpp"

#include <cmath>
#include <numbers>

#include "fft.hpp"
#include "mvgrf/error.hpp"
#include "mvgrf/parallel.hpp"
#include "mvgrf/rng.hpp"

namespace mvgrf {

SpectralNoise draw_spectral_noise(const FrequencyGrid& freq, int p, std::uint64_t seed,
                                  std::uint32_t replicate) {
  if (p < 1) throw ParameterError("need at least one component");
  const std::size_t n = freq.size();
  SpectralNoise noise;
  noise.p = p;
  noise.values.resize(static_cast<std::size_t>(p) * n);
  const double half = std::numbers::sqrt2 / 2.0;
  for (int c = 0; c < p; ++c) {
    CounterStream stream(stream_key(seed, replicate, static_cast<std::uint64_t>(c),
                                    StreamPurpose::spectral_noise));
    std::complex<double>* z = noise.values.data() + static_cast<std::size_t>(c) * n;
    for (std::size_t k = 0; k < n; ++k) {
      switch (freq.kind[k]) {
        case FrequencyClass::self_conjugate:
          z[k] = stream.normal();
          break;
        case FrequencyClass::representative: {
          const double re = stream.normal() * half;
          const double im = stream.normal() * half;
          z[k] = {re, im};
          break;
        }
        case FrequencyClass::reflected:
          break;
      }
    }
    for (std::size_t k = 0; k < n; ++k)
      if (freq.kind[k] == FrequencyClass::reflected) z[k] = std::conj(z[freq.reflection[k]]);
  }
  return noise;
}

SpectralNoise draw_spectral_noise(const GridSpec& grid, int p, std::uint64_t seed,
                                  std::uint32_t replicate) {
  return draw_spectral_noise(build_frequency_grid(grid), p, seed, replicate);
}

SpectralDraw sample_field_detailed(const SpectralFilter& filter, std::uint64_t seed,
                                   std::uint32_t replicate) {
  const FrequencyGrid& freq = filter.freq;
  const GridSpec& grid = freq.grid;
  const std::size_t n = freq.size();
  const int p = filter.p;
  const SpectralNoise noise = draw_spectral_noise(freq, p, seed, replicate);
  const double scale = std::sqrt(freq.cell_measure);

  SpectralDraw draw;
  Realization& out = draw.field;
  out.grid = grid;
  out.p = p;
  out.seed = seed;
  out.replicate = replicate;
  out.construction = Construction::spectral;
  out.values.resize(static_cast<std::size_t>(p) * n);

  std::vector<std::complex<double>> buffer(n);
  double max_imag = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const Eigen::MatrixXcd& l = filter.factor[k];
      std::complex<double> acc = 0.0;
      for (int j = 0; j <= (filter.method == SqrtMethod::lower_triangular ? i : p - 1); ++j)
        acc += l(i, j) * noise.values[static_cast<std::size_t>(j) * n + k];
      buffer[k] = acc * scale;
    }
    detail::fft_inplace(buffer, grid, detail::FftDirection::forward);
    auto dst = out.component(i);
    for (std::size_t s = 0; s < n; ++s) {
      dst[s] = buffer[s].real();
      max_imag = std::max(max_imag, std::abs(buffer[s].imag()));
      sum_sq += buffer[s].real() * buffer[s].real();
    }
  }
  const double rms = std::sqrt(sum_sq / static_cast<double>(out.values.size()));
  draw.imaginary_residual = rms > 0.0 ? max_imag / rms : max_imag;
  if (draw.imaginary_residual >= 1e-8)
    throw SymmetryError("imaginary residual " + std::to_string(draw.imaginary_residual) +
                        " exceeds tolerance; the spectral filter is not conjugate symmetric");
  return draw;
}

Realization sample_field(const SpectralFilter& filter, std::uint64_t seed,
                         std::uint32_t replicate) {
  return sample_field_detailed(filter, seed, replicate).field;
}

Realization sample_field(const SpectrumModel& model, const GridSpec& grid,
                         std::uint64_t seed, std::uint32_t replicate, SqrtMethod method) {
  if (model.dimension() != grid.d) throw DomainError("model and grid dimensions differ");
  return sample_field(build_filter(model, build_frequency_grid(grid), method), seed,
                      replicate);
}

std::vector<Realization> sample_batch(const SpectrumModel& model, const GridSpec& grid,
                                      std::uint64_t seed, std::size_t count,
                                      SqrtMethod method, std::size_t threads) {
  if (count < 1) throw ParameterError("batch count must be at least 1");
  if (model.dimension() != grid.d) throw DomainError("model and grid dimensions differ");
  const SpectralFilter filter = build_filter(model, build_frequency_grid(grid), method);
  std::vector<Realization> out(count);
  parallel_for(count, threads, [&](std::size_t r) {
    out[r] = sample_field(filter, seed, static_cast<std::uint32_t>(r));
  });
  return out;
}

}  // namespace mvgrf
