#include "mvgrf/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mvgrf/error.hpp"

namespace mvgrf {

GridSpec GridSpec::line(int m, double spacing, bool periodic) {
  return GridSpec{1, {m, 1}, spacing, periodic};
}

GridSpec GridSpec::square(int m1, int m2, double spacing, bool periodic) {
  return GridSpec{2, {m1, m2}, spacing, periodic};
}

double GridSpec::cell_volume() const { return std::pow(spacing, d); }

std::size_t GridSpec::wrap(std::size_t s, std::array<int, 2> offset) const {
  auto c = coords(s);
  int i0 = (c[0] + offset[0]) % sizes[0];
  int i1 = (c[1] + offset[1]) % sizes[1];
  if (i0 < 0) i0 += sizes[0];
  if (i1 < 0) i1 += sizes[1];
  return site(i0, i1);
}

void GridSpec::validate() const {
  if (d != 1 && d != 2) throw DomainError("grid dimension must be 1 or 2");
  if (sizes[0] < 1 || sizes[1] < 1) throw DomainError("grid sizes must be positive");
  if (d == 1 && sizes[1] != 1) throw DomainError("1-d grid must have sizes[1] == 1");
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw DomainError("grid spacing must be positive and finite");
}

void GridSpec::validate_fft() const {
  validate();
  if (!periodic) throw DomainError("spectral grids are periodic");
  for (int a = 0; a < d; ++a) {
    const int m = sizes[a];
    if (m < 8 || (m & (m - 1)) != 0)
      throw DomainError("spectral grid sizes must be powers of two >= 8, got " +
                        std::to_string(m));
  }
}

const char* to_string(Construction c) {
  switch (c) {
    case Construction::spectral: return "spectral";
    case Construction::convolution: return "convolution";
    case Construction::markov: return "markov";
  }
  return "unknown";
}

FrequencyGrid build_frequency_grid(const GridSpec& grid) {
  grid.validate_fft();
  FrequencyGrid out;
  out.grid = grid;
  const std::size_t n = grid.sites();
  out.omega.resize(n);
  out.kind.resize(n);
  out.reflection.resize(n);
  out.cell_measure = 1.0;
  for (int a = 0; a < grid.d; ++a)
    out.cell_measure *= 2.0 * std::numbers::pi / (grid.sizes[a] * grid.spacing);

  auto signed_index = [](int k, int m) { return k <= m / 2 ? k : k - m; };
  for (std::size_t idx = 0; idx < n; ++idx) {
    const auto c = grid.coords(idx);
    std::array<double, 2> w{0.0, 0.0};
    for (int a = 0; a < grid.d; ++a) {
      const int m = grid.sizes[a];
      w[a] = 2.0 * std::numbers::pi * signed_index(c[a], m) / (m * grid.spacing);
    }
    out.omega[idx] = w;
    const int r0 = (grid.sizes[0] - c[0]) % grid.sizes[0];
    const int r1 = (grid.sizes[1] - c[1]) % grid.sizes[1];
    const std::size_t refl = grid.site(r0, r1);
    out.reflection[idx] = refl;
    if (refl == idx)
      out.kind[idx] = FrequencyClass::self_conjugate;
    else if (idx < refl)
      out.kind[idx] = FrequencyClass::representative;
    else
      out.kind[idx] = FrequencyClass::reflected;
  }
  return out;
}

}  // namespace mvgrf
