#include "mvgrf/markov.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mvgrf/error.hpp"
#include "mvgrf/parallel.hpp"
#include "mvgrf/rng.hpp"

namespace mvgrf {

namespace {

void check_kappa_tau(double kappa, double tau) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ParameterError("kappa must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ParameterError("tau must be positive");
}

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Q = (T^{-T} kron I) blockdiag(Q_k) (T^{-1} kron I): block (a, b) is
// sum_k U_ka U_kb Q_k with U = T^{-1}.
SparseOperator assemble_coupled(const std::vector<SparseOperator>& components,
                                const Eigen::MatrixXd& coupling, std::size_t n) {
  const auto p = static_cast<int>(components.size());
  const Eigen::MatrixXd inverse =
      coupling.triangularView<Eigen::UnitLower>().solve(Eigen::MatrixXd::Identity(p, p));
  std::vector<Triplet> t;
  for (int k = 0; k < p; ++k) {
    const SparseOperator& qk = components[k];
    for (int a = 0; a <= k; ++a)
      for (int b = 0; b <= k; ++b) {
        const double w = inverse(k, a) * inverse(k, b);
        if (w == 0.0) continue;
        for (std::size_t e = 0; e < qk.values.size(); ++e)
          t.push_back({static_cast<std::int32_t>(a * n + qk.rows[e]),
                       static_cast<std::int32_t>(b * n + qk.cols[e]), w * qk.values[e]});
      }
  }
  std::stable_sort(t.begin(), t.end(), [](const Triplet& x, const Triplet& y) {
    return x.row != y.row ? x.row < y.row : x.col < y.col;
  });
  return SparseOperator::from_triplets(n * p, std::move(t), true);
}

}  // namespace

SparseOperator assemble_shifted_laplacian(double kappa, const GridSpec& grid) {
  check_kappa_tau(kappa, 1.0);
  grid.validate();
  const double inv_h2 = 1.0 / (grid.spacing * grid.spacing);
  std::vector<Triplet> t;
  t.reserve(grid.sites() * 5);
  for (std::size_t s = 0; s < grid.sites(); ++s) {
    const auto c = grid.coords(s);
    double diag = kappa * kappa;
    const auto row = static_cast<std::int32_t>(s);
    for (int a = 0; a < grid.d; ++a) {
      for (int step : {-1, 1}) {
        auto nb = c;
        nb[a] += step;
        if (nb[a] < 0 || nb[a] >= grid.sizes[a]) continue;
        t.push_back({row, static_cast<std::int32_t>(grid.site(nb[0], nb[1])), -inv_h2});
        diag += inv_h2;
      }
    }
    t.push_back({row, row, diag});
  }
  return SparseOperator::from_triplets(grid.sites(), std::move(t), true);
}

SparseOperator assemble_component_precision(double kappa, double tau, const GridSpec& grid) {
  check_kappa_tau(kappa, tau);
  const SparseOperator a = assemble_shifted_laplacian(kappa, grid);
  const double scale = tau * tau * std::pow(grid.spacing, grid.d);
  std::vector<std::size_t> start(a.n + 1, 0);
  for (auto r : a.rows) ++start[r + 1];
  for (std::size_t r = 0; r < a.n; ++r) start[r + 1] += start[r];

  // A is symmetric, so A^T A = A A; entry (r, c) = sum_m A_rm A_mc with m
  // ascending in both (r, c) and (c, r), keeping the result bitwise symmetric.
  std::vector<Triplet> t;
  t.reserve(a.n * 25);
  for (std::size_t r = 0; r < a.n; ++r)
    for (std::size_t e = start[r]; e < start[r + 1]; ++e) {
      const auto m = static_cast<std::size_t>(a.cols[e]);
      for (std::size_t f = start[m]; f < start[m + 1]; ++f)
        t.push_back({static_cast<std::int32_t>(r), a.cols[f], scale * (a.values[e] * a.values[f])});
    }
  std::stable_sort(t.begin(), t.end(), [](const Triplet& x, const Triplet& y) {
    return x.row != y.row ? x.row < y.row : x.col < y.col;
  });
  return SparseOperator::from_triplets(a.n, std::move(t), true);
}

double interior_mean_variance(const std::vector<double>& marginal_variances,
                              const GridSpec& grid) {
  std::array<int, 2> lo{0, 0};
  std::array<int, 2> hi{grid.sizes[0], grid.sizes[1]};
  for (int a = 0; a < grid.d; ++a) {
    lo[a] = grid.sizes[a] / 3;
    hi[a] = 2 * grid.sizes[a] / 3;
    if (grid.sizes[a] < 3 || hi[a] <= lo[a])
      throw DomainError("grid too small for an interior third");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (int i0 = lo[0]; i0 < hi[0]; ++i0)
    for (int i1 = lo[1]; i1 < hi[1]; ++i1) {
      sum += marginal_variances[grid.site(i0, i1)];
      ++count;
    }
  return sum / static_cast<double>(count);
}

double calibrate_tau(double kappa, const GridSpec& grid, double target_variance) {
  if (!(target_variance > 0.0) || !std::isfinite(target_variance))
    throw ParameterError("target variance must be positive");
  grid.validate();
  for (int a = 0; a < grid.d; ++a)
    if (grid.sizes[a] < 3) throw DomainError("grid too small for an interior third");
  const SparseOperator q = assemble_component_precision(kappa, 1.0, grid);
  const CholeskyFactor f = sparse_factorize(q, nested_dissection_order(grid, 1));
  const double unit_variance = interior_mean_variance(f.inverse_diagonal(), grid);
  return std::sqrt(unit_variance / target_variance);
}

PrecisionModel couple_components(const std::vector<SparseOperator>& components,
                                 const Eigen::MatrixXd& coupling, const GridSpec& grid) {
  grid.validate();
  const auto p = static_cast<int>(components.size());
  if (p < 1) throw ParameterError("need at least one component");
  if (coupling.rows() != p || coupling.cols() != p)
    throw ShapeError("coupling matrix must be p x p");
  for (int i = 0; i < p; ++i) {
    if (coupling(i, i) != 1.0) throw ParameterError("coupling matrix needs a unit diagonal");
    for (int j = i + 1; j < p; ++j)
      if (coupling(i, j) != 0.0) throw ParameterError("coupling matrix must be lower triangular");
  }
  const std::size_t n = grid.sites();
  for (const auto& c : components)
    if (c.n != n || !c.symmetric)
      throw InconsistentInputError("component precision does not match the grid");

  PrecisionModel model;
  model.grid = grid;
  model.grid.periodic = false;
  model.observed = model.grid;
  model.coupling = coupling;
  model.precision = assemble_coupled(components, coupling, n);
  const auto order = nested_dissection_order(grid, p);
  model.factor = std::make_shared<const CholeskyFactor>(sparse_factorize(model.precision, order));
  return model;
}

int margin_cells(double kappa_min, double spacing) {
  return static_cast<int>(std::ceil(2.0 / (kappa_min * spacing) - 1e-12));
}

PrecisionModel build_precision_model(const GridSpec& observed,
                                     const std::vector<MarkovComponentSpec>& components,
                                     const Eigen::MatrixXd& coupling, bool extend) {
  observed.validate();
  if (components.empty()) throw ParameterError("need at least one component");
  double kappa_min = components.front().kappa;
  for (const auto& c : components) {
    check_kappa_tau(c.kappa, 1.0);
    if (!(c.variance > 0.0)) throw ParameterError("component variance must be positive");
    kappa_min = std::min(kappa_min, c.kappa);
  }
  GridSpec grid = observed;
  grid.periodic = false;
  std::array<int, 2> margin{0, 0};
  if (extend) {
    const int cells = margin_cells(kappa_min, observed.spacing);
    for (int a = 0; a < observed.d; ++a) {
      margin[a] = cells;
      grid.sizes[a] += 2 * cells;
    }
  }
  std::vector<SparseOperator> ops;
  std::vector<double> kappa;
  std::vector<double> tau;
  for (const auto& c : components) {
    const double t = calibrate_tau(c.kappa, grid, c.variance);
    ops.push_back(assemble_component_precision(c.kappa, t, grid));
    kappa.push_back(c.kappa);
    tau.push_back(t);
  }
  PrecisionModel model = couple_components(ops, coupling, grid);
  model.observed = observed;
  model.observed.periodic = false;
  model.margin = margin;
  model.kappa = std::move(kappa);
  model.tau = std::move(tau);
  return model;
}

Realization precision_sample(const PrecisionModel& model, std::uint64_t seed,
                             std::uint32_t replicate) {
  if (!model.factor) throw WrongOperationError("precision model has no factorization");
  const std::size_t dim = model.factor->dimension();
  CounterStream stream(stream_key(seed, replicate, 0, StreamPurpose::markov_noise));
  std::vector<double> z(dim);
  for (double& v : z) v = stream.normal();
  const std::vector<double> full = model.factor->sample_transform(z);

  const int p = model.components();
  const std::size_t n = model.grid.sites();
  Realization out;
  out.grid = model.observed;
  out.grid.periodic = false;
  out.p = p;
  out.seed = seed;
  out.replicate = replicate;
  out.construction = Construction::markov;
  out.values.resize(static_cast<std::size_t>(p) * model.observed.sites());
  for (int c = 0; c < p; ++c) {
    auto dst = out.component(c);
    for (std::size_t s = 0; s < model.observed.sites(); ++s) {
      const auto oc = model.observed.coords(s);
      const std::size_t g = model.grid.site(oc[0] + model.margin[0], oc[1] + model.margin[1]);
      dst[s] = full[static_cast<std::size_t>(c) * n + g];
    }
  }
  return out;
}

std::vector<Realization> precision_sample_batch(const PrecisionModel& model,
                                                std::uint64_t seed, std::size_t count,
                                                std::size_t threads) {
  std::vector<Realization> out(count);
  parallel_for(count, threads, [&](std::size_t r) {
    out[r] = precision_sample(model, seed, static_cast<std::uint32_t>(r));
  });
  return out;
}

GridSpec bench_grid(std::size_t n) {
  if (n < 1) throw ParameterError("benchmark size must be positive");
  std::size_t m1 = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while (m1 > 1 && n % m1 != 0) --m1;
  return GridSpec::square(static_cast<int>(m1), static_cast<int>(n / m1), 1.0, false);
}

std::vector<BenchRow> bench_scaling(const std::vector<std::size_t>& sizes, int p,
                                    int repetitions, std::size_t dense_cap) {
  if (p < 1) throw ParameterError("need at least one component");
  if (repetitions < 1) throw ParameterError("need at least one repetition");
  for (std::size_t k = 1; k < sizes.size(); ++k)
    if (sizes[k] <= sizes[k - 1]) throw ParameterError("benchmark sizes must be ascending");

  std::vector<BenchRow> rows;
  for (std::size_t n : sizes) {
    const GridSpec grid = bench_grid(n);
    std::vector<SparseOperator> ops;
    for (int c = 0; c < p; ++c) ops.push_back(assemble_component_precision(0.5, 1.0, grid));
    Eigen::MatrixXd coupling = Eigen::MatrixXd::Identity(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < i; ++j) coupling(i, j) = 0.5;
    const SparseOperator q = assemble_coupled(ops, coupling, n);
    const auto order = nested_dissection_order(grid, p);

    std::vector<double> times;
    std::size_t nnz = 0;
    for (int r = 0; r < repetitions; ++r)
      times.push_back(seconds([&] { nnz = sparse_factorize(q, order).nonzeros(); }));
    rows.push_back({n, p, "sparse", median(times), nnz});

    const std::size_t dim = n * static_cast<std::size_t>(p);
    if (dim <= dense_cap) {
      const Eigen::MatrixXd dense = q.to_dense();
      times.clear();
      for (int r = 0; r < repetitions; ++r) {
        times.push_back(seconds([&] {
          Eigen::LLT<Eigen::MatrixXd> llt(dense);
          if (llt.info() != Eigen::Success)
            throw DefinitenessError("dense factorization failed", 0.0);
        }));
      }
      rows.push_back({n, p, "dense", median(times), dim * (dim + 1) / 2});
    }
  }
  return rows;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ShapeError("need at least two points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += std::log(x[k]);
    my += std::log(y[k]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = std::log(x[k]) - mx;
    sxy += dx * (std::log(y[k]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace mvgrf
