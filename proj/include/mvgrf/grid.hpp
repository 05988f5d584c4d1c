#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mvgrf {

/// Regular grid in one or two dimensions. Values are stored row-major with
/// axis 0 slowest; for d == 1 the second size is 1.
struct GridSpec {
  int d = 1;
  std::array<int, 2> sizes{8, 1};
  double spacing = 1.0;
  bool periodic = true;

  static GridSpec line(int m, double spacing = 1.0, bool periodic = true);
  static GridSpec square(int m1, int m2, double spacing = 1.0,
                         bool periodic = true);

  std::size_t sites() const {
    return static_cast<std::size_t>(sizes[0]) * static_cast<std::size_t>(sizes[1]);
  }
  double cell_volume() const;
  std::array<int, 2> coords(std::size_t site) const {
    return {static_cast<int>(site / static_cast<std::size_t>(sizes[1])),
            static_cast<int>(site % static_cast<std::size_t>(sizes[1]))};
  }
  std::size_t site(int i0, int i1) const {
    return static_cast<std::size_t>(i0) * static_cast<std::size_t>(sizes[1]) +
           static_cast<std::size_t>(i1);
  }
  /// Site reached from `site` by an integer offset, wrapped periodically.
  std::size_t wrap(std::size_t site, std::array<int, 2> offset) const;

  /// Basic validity: d in {1, 2}, positive sizes, positive finite spacing.
  void validate() const;
  /// Additional FFT-grid requirements: periodic, sizes >= 8 and powers of two.
  void validate_fft() const;

  bool operator==(const GridSpec&) const = default;
};

enum class Construction : std::uint8_t { spectral = 0, convolution = 1, markov = 2 };

const char* to_string(Construction c);

/// p-variate real field on a grid with its provenance.
struct Realization {
  GridSpec grid;
  int p = 1;
  std::vector<double> values;  // component-major, then row-major sites
  std::uint64_t seed = 0;
  std::uint32_t replicate = 0;
  Construction construction = Construction::spectral;

  std::span<double> component(int c) {
    return {values.data() + static_cast<std::size_t>(c) * grid.sites(), grid.sites()};
  }
  std::span<const double> component(int c) const {
    return {values.data() + static_cast<std::size_t>(c) * grid.sites(), grid.sites()};
  }
};

enum class FrequencyClass : std::uint8_t { self_conjugate, representative, reflected };

/// Discrete dual of a periodic grid: omega_k = 2 pi k / (m h) per axis with
/// k taken in the signed FFT index range (Nyquist mapped to +pi/h).
struct FrequencyGrid {
  GridSpec grid;
  std::vector<std::array<double, 2>> omega;  // per linear index
  std::vector<FrequencyClass> kind;
  std::vector<std::size_t> reflection;       // linear index of -k mod m
  double cell_measure = 0.0;                 // prod_axis 2 pi / (m h)

  std::size_t size() const { return omega.size(); }
};

FrequencyGrid build_frequency_grid(const GridSpec& grid);

}  // namespace mvgrf
