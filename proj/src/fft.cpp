#include "fft.hpp"

#include <mutex>

#include <fftw3.h>

#include "mvgrf/error.hpp"

namespace mvgrf::detail {

namespace {
// FFTW's planner is not thread-safe; execution on distinct arrays is.
std::mutex planner_mutex;
}  // namespace

void fft_inplace(std::vector<std::complex<double>>& data, const GridSpec& grid,
                 FftDirection direction) {
  if (data.size() != grid.sites()) throw ShapeError("FFT buffer does not match grid");
  auto* buffer = reinterpret_cast<fftw_complex*>(data.data());
  const int sign = direction == FftDirection::forward ? FFTW_FORWARD : FFTW_BACKWARD;
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex);
    if (grid.d == 1)
      plan = fftw_plan_dft_1d(grid.sizes[0], buffer, buffer, sign, FFTW_ESTIMATE);
    else
      plan = fftw_plan_dft_2d(grid.sizes[0], grid.sizes[1], buffer, buffer, sign,
                              FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(planner_mutex);
  fftw_destroy_plan(plan);
}

}  // namespace mvgrf::detail
