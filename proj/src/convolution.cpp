#include "mvgrf/convolution.hpp"

#include <cmath>
#include <numbers>

#include "mvgrf/error.hpp"
#include "mvgrf/rng.hpp"

namespace mvgrf {

namespace {

int minimal_image(int offset, int m) {
  int r = offset % m;
  if (r < 0) r += m;
  if (r >= m - m / 2) r -= m;  // range [-m/2, m - m/2)
  return r;
}

std::array<double, 2> position(const GridSpec& grid, std::size_t s) {
  const auto c = grid.coords(s);
  return {c[0] * grid.spacing, c[1] * grid.spacing};
}

std::array<double, 2> displacement(const GridSpec& grid, std::size_t s, std::size_t u) {
  const auto cs = grid.coords(s);
  const auto cu = grid.coords(u);
  return {minimal_image(cu[0] - cs[0], grid.sizes[0]) * grid.spacing,
          minimal_image(cu[1] - cs[1], grid.sizes[1]) * grid.spacing};
}

bool within_support(const KernelSpec& kernel, std::array<double, 2> r) {
  const double dist = std::hypot(r[0], r[1]);
  if (kernel.kind == KernelKind::delta) return dist == 0.0;
  return dist <= kernel.support * (1.0 + 1e-12);
}

void check_compatible(const KernelSpec& kernel, const GridSpec& grid) {
  kernel.validate();
  grid.validate();
  if (!grid.periodic) throw DomainError("convolution grids are periodic");
  if (kernel.d != grid.d) throw DomainError("kernel and grid dimensions differ");
  if (kernel.kind != KernelKind::delta && kernel.support < grid.spacing)
    throw DegenerateKernelError("kernel support radius is smaller than the grid spacing");
}

// Truncated profile k(s, u) on the grid.
double grid_profile(const KernelSpec& kernel, const GridSpec& grid, std::size_t s,
                    std::size_t u) {
  const auto r = displacement(grid, s, u);
  if (!within_support(kernel, r)) return 0.0;
  return kernel.profile(position(grid, s), r, grid.cell_volume());
}

}  // namespace

const char* to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::gaussian: return "gaussian";
    case NoiseFamily::centered_gamma: return "centered-gamma";
    case NoiseFamily::laplace: return "laplace";
  }
  return "unknown";
}

NoiseFamily parse_noise_family(const std::string& name) {
  if (name == "gaussian") return NoiseFamily::gaussian;
  if (name == "centered-gamma") return NoiseFamily::centered_gamma;
  if (name == "laplace") return NoiseFamily::laplace;
  throw ParameterError("unknown noise family '" + name + "'");
}

void NoiseMeasureSpec::validate() const {
  if (family == NoiseFamily::centered_gamma && !(shape > 0.0 && std::isfinite(shape)))
    throw ParameterError("gamma shape must be positive");
  if (!(scale > 0.0 && std::isfinite(scale))) throw ParameterError("noise scale must be positive");
}

std::vector<double> sample_noise_increments(const NoiseMeasureSpec& spec,
                                            const GridSpec& grid, int p,
                                            std::uint64_t seed, std::uint32_t replicate) {
  spec.validate();
  grid.validate();
  if (p < 1) throw ParameterError("need at least one component");
  const std::size_t n = grid.sites();
  const double sd = std::sqrt(spec.increment_variance(grid));
  std::vector<double> out(static_cast<std::size_t>(p) * n);
  for (int c = 0; c < p; ++c) {
    CounterStream stream(stream_key(seed, replicate, static_cast<std::uint64_t>(c),
                                    StreamPurpose::convolution_noise));
    double* w = out.data() + static_cast<std::size_t>(c) * n;
    for (std::size_t s = 0; s < n; ++s) {
      switch (spec.family) {
        case NoiseFamily::gaussian:
          w[s] = sd * stream.normal();
          break;
        case NoiseFamily::centered_gamma: {
          // (theta G - k theta) / (sqrt(k) theta): the scale cancels.
          const double g = stream.gamma(spec.shape);
          w[s] = sd * (g - spec.shape) / std::sqrt(spec.shape);
          break;
        }
        case NoiseFamily::laplace: {
          const double u = stream.uniform();
          const double l = u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
          w[s] = sd * l / std::numbers::sqrt2;
          break;
        }
      }
    }
  }
  return out;
}

const char* to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::delta: return "delta";
    case KernelKind::gaussian_bump: return "gaussian-bump";
    case KernelKind::varying_width_bump: return "varying-width-bump";
    case KernelKind::triangular: return "triangular";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(const std::string& name) {
  if (name == "delta") return KernelKind::delta;
  if (name == "gaussian-bump") return KernelKind::gaussian_bump;
  if (name == "varying-width-bump") return KernelKind::varying_width_bump;
  if (name == "triangular") return KernelKind::triangular;
  throw ParameterError("unknown kernel '" + name + "'");
}

KernelSpec KernelSpec::delta(int p, int d) {
  KernelSpec k;
  k.kind = KernelKind::delta;
  k.p = p;
  k.d = d;
  k.mixing = Eigen::MatrixXd::Identity(p, p);
  k.support = 0.0;
  return k;
}

KernelSpec KernelSpec::gaussian_bump(int p, int d, double amplitude, double width,
                                     double support) {
  KernelSpec k;
  k.kind = KernelKind::gaussian_bump;
  k.p = p;
  k.d = d;
  k.mixing = Eigen::MatrixXd::Identity(p, p);
  k.amplitude = amplitude;
  k.width = width;
  k.width_right = width;
  k.support = support;
  return k;
}

KernelSpec KernelSpec::varying_width_bump(int d, double amplitude, double width_left,
                                          double width_right, double split, double support) {
  KernelSpec k = gaussian_bump(1, d, amplitude, width_left, support);
  k.kind = KernelKind::varying_width_bump;
  k.width_right = width_right;
  k.split = split;
  return k;
}

KernelSpec KernelSpec::triangular(int p, int d, double amplitude, double width) {
  KernelSpec k = gaussian_bump(p, d, amplitude, width, width);
  k.kind = KernelKind::triangular;
  return k;
}

void KernelSpec::validate() const {
  if (d != 1 && d != 2) throw DomainError("kernel dimension must be 1 or 2");
  if (p < 1) throw ParameterError("kernel needs at least one component");
  if (mixing.rows() != p || mixing.cols() != p)
    throw ShapeError("kernel mixing matrix must be p x p");
  if (!mixing.allFinite()) throw ParameterError("kernel mixing matrix must be finite");
  if (kind == KernelKind::delta) return;
  if (!std::isfinite(amplitude)) throw ParameterError("kernel amplitude must be finite");
  if (!(width > 0.0) || !(width_right > 0.0) || !std::isfinite(width) ||
      !std::isfinite(width_right))
    throw ParameterError("kernel widths must be positive");
  if (!(support >= 0.0) || !std::isfinite(support))
    throw ParameterError("kernel support radius must be finite and nonnegative");
}

double KernelSpec::profile(std::array<double, 2> s, std::array<double, 2> r,
                           double cell_volume) const {
  const double dist2 = r[0] * r[0] + r[1] * r[1];
  switch (kind) {
    case KernelKind::delta:
      return dist2 == 0.0 ? 1.0 / std::sqrt(cell_volume) : 0.0;
    case KernelKind::gaussian_bump:
      return amplitude * std::exp(-dist2 / (2.0 * width * width));
    case KernelKind::varying_width_bump: {
      const double w = s[0] < split ? width : width_right;
      return amplitude * std::exp(-dist2 / (2.0 * w * w));
    }
    case KernelKind::triangular:
      return amplitude * std::max(0.0, 1.0 - std::sqrt(dist2) / width);
  }
  return 0.0;
}

Eigen::MatrixXd KernelSpec::evaluate(const GridSpec& grid, std::size_t s,
                                     std::size_t u) const {
  return mixing * grid_profile(*this, grid, s, u);
}

Realization sample_convolution_field(const KernelSpec& kernel, const NoiseMeasureSpec& noise,
                                     const GridSpec& grid, std::uint64_t seed,
                                     std::uint32_t replicate) {
  check_compatible(kernel, grid);
  const int p = kernel.p;
  const std::size_t n = grid.sites();
  const std::vector<double> w = sample_noise_increments(noise, grid, p, seed, replicate);

  // Offsets inside the support, each distinct modulo the grid.
  std::vector<std::array<int, 2>> offsets;
  const double radius = kernel.support_radius();
  const int reach0 = static_cast<int>(std::floor(radius / grid.spacing + 1e-9));
  for (int o0 = -grid.sizes[0] / 2; o0 < grid.sizes[0] - grid.sizes[0] / 2; ++o0) {
    if (std::abs(o0) > reach0) continue;
    for (int o1 = -grid.sizes[1] / 2; o1 < grid.sizes[1] - grid.sizes[1] / 2; ++o1) {
      if (std::abs(o1) > reach0) continue;
      if (within_support(kernel, {o0 * grid.spacing, o1 * grid.spacing}))
        offsets.push_back({o0, o1});
    }
  }
  std::vector<double> stationary_profile;
  if (kernel.stationary()) {
    for (const auto& o : offsets)
      stationary_profile.push_back(kernel.profile(
          {0.0, 0.0}, {o[0] * grid.spacing, o[1] * grid.spacing}, grid.cell_volume()));
  }

  Realization out;
  out.grid = grid;
  out.p = p;
  out.seed = seed;
  out.replicate = replicate;
  out.construction = Construction::convolution;
  out.values.assign(static_cast<std::size_t>(p) * n, 0.0);
  Eigen::VectorXd filtered(p);
  for (std::size_t s = 0; s < n; ++s) {
    filtered.setZero();
    const auto pos = position(grid, s);
    for (std::size_t q = 0; q < offsets.size(); ++q) {
      const auto& o = offsets[q];
      const double k = kernel.stationary()
                           ? stationary_profile[q]
                           : kernel.profile(pos, {o[0] * grid.spacing, o[1] * grid.spacing},
                                            grid.cell_volume());
      if (k == 0.0) continue;
      const std::size_t u = grid.wrap(s, o);
      for (int j = 0; j < p; ++j) filtered[j] += k * w[static_cast<std::size_t>(j) * n + u];
    }
    const Eigen::VectorXd x = kernel.mixing * filtered;
    for (int i = 0; i < p; ++i) out.values[static_cast<std::size_t>(i) * n + s] = x[i];
  }
  return out;
}

Eigen::MatrixXd implied_cov_pair(const KernelSpec& kernel, const GridSpec& grid,
                                 std::size_t s, std::size_t s_prime) {
  check_compatible(kernel, grid);
  double sum = 0.0;
  for (std::size_t u = 0; u < grid.sites(); ++u)
    sum += grid_profile(kernel, grid, s, u) * grid_profile(kernel, grid, s_prime, u);
  return kernel.mixing * kernel.mixing.transpose() * (sum * grid.cell_volume());
}

CrossCovariance implied_cross_cov(const KernelSpec& kernel, const GridSpec& grid,
                                  int max_lag) {
  check_compatible(kernel, grid);
  if (!kernel.stationary())
    throw WrongOperationError(
        "implied_cross_cov needs a stationary kernel; use implied_cov_pair instead");
  int limit = grid.sizes[0] / 2;
  if (grid.d == 2) limit = std::min(limit, grid.sizes[1] / 2);
  if (max_lag < 0 || max_lag > limit) throw DomainError("max_lag must lie in [0, m/2]");
  CrossCovariance out = CrossCovariance::zeros(grid.d, kernel.p, max_lag);
  out.kind = CovarianceKind::implied;
  out.grid = grid;
  const int p = kernel.p;
  for (std::size_t li = 0; li < out.lag_count(); ++li) {
    const Lag h = out.lag(li);
    const Eigen::MatrixXd c = implied_cov_pair(kernel, grid, 0, grid.wrap(0, h));
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) out.values[li * p * p + i * p + j] = c(i, j);
  }
  return out;
}

double truncated_mass(const KernelSpec& kernel, const GridSpec& grid) {
  check_compatible(kernel, grid);
  const double frob2 = kernel.mixing.squaredNorm();
  const std::size_t origins = kernel.stationary() ? 1 : grid.sites();
  double worst = 0.0;
  for (std::size_t s = 0; s < origins; ++s) {
    double dropped = 0.0;
    for (std::size_t u = 0; u < grid.sites(); ++u) {
      const auto r = displacement(grid, s, u);
      if (within_support(kernel, r)) continue;
      const double k = kernel.profile(position(grid, s), r, grid.cell_volume());
      dropped += k * k;
    }
    worst = std::max(worst, dropped * frob2 * grid.cell_volume());
  }
  return worst;
}

}  // namespace mvgrf
