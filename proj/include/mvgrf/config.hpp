#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mvgrf/convolution.hpp"
#include "mvgrf/grid.hpp"
#include "mvgrf/likelihood.hpp"
#include "mvgrf/markov.hpp"
#include "mvgrf/spectra.hpp"

namespace mvgrf {

// Strict parsers: unknown keys, wrong types and out-of-range values raise
// ConfigError naming the offending path.

GridSpec parse_grid(const nlohmann::json& j, bool periodic = true);
nlohmann::json grid_to_json(const GridSpec& grid);

SpectrumModel parse_spectrum(const nlohmann::json& j, int d);

KernelSpec parse_kernel(const nlohmann::json& j, int d);
NoiseMeasureSpec parse_noise(const nlohmann::json& j);

struct MarkovConfig {
  std::vector<MarkovComponentSpec> components;
  Eigen::MatrixXd coupling;
  bool extend = true;
};
MarkovConfig parse_markov(const nlohmann::json& j);

struct AxisSpec {
  double lower = 0.0;
  double upper = 0.0;
  int count = 1;
  std::vector<double> nodes() const;
};

struct LikelihoodConfig {
  LikelihoodFamily family = LikelihoodFamily::dense_matern;
  // Either explicit data ...
  std::vector<double> observations;
  std::vector<std::array<double, 2>> sites;
  // ... or a simulated design.
  std::size_t count = 100;
  double domain_length = 1.0;
  double variance = 1.0;
  double kappa = 1.0;
  double nu = 1.0;
  double jitter = 1e-8;
  std::optional<AxisSpec> log_sigma2;
  std::optional<AxisSpec> log_kappa;
  std::vector<Theta> starts;
};
LikelihoodConfig parse_likelihood(const nlohmann::json& j);

/// Whole run document. Sections irrelevant to a subcommand may be absent.
struct RunConfig {
  nlohmann::json document;
  std::optional<GridSpec> grid;
  std::optional<std::uint64_t> seed;
  std::size_t replicates = 1;
  std::optional<SqrtMethod> sqrt_method;
  std::optional<SpectrumModel> spectrum;
  std::optional<KernelSpec> kernel;
  std::optional<NoiseMeasureSpec> noise;
  std::optional<MarkovConfig> markov;
  std::optional<LikelihoodConfig> likelihood;
  int max_lag = -1;
  std::vector<std::filesystem::path> inputs;

  /// FNV-1a 64 of the canonical (sorted-key, compact) document.
  std::uint64_t hash() const;
};

RunConfig parse_run_config(const nlohmann::json& document,
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

std::string hex64(std::uint64_t value);

}  // namespace mvgrf
