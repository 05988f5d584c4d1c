#pragma once

#include <complex>
#include <vector>

#include "mvgrf/grid.hpp"

namespace mvgrf::detail {

// forward: sum_s x(s) e^{-i 2 pi k.s / m}; backward uses e^{+i}. Neither
// normalizes.
enum class FftDirection { forward, backward };

void fft_inplace(std::vector<std::complex<double>>& data, const GridSpec& grid,
                 FftDirection direction);

}  // namespace mvgrf::detail
