#include "mvgrf/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mvgrf/config.hpp"
#include "mvgrf/convolution.hpp"
#include "mvgrf/covariance.hpp"
#include "mvgrf/error.hpp"
#include "mvgrf/field_io.hpp"
#include "mvgrf/format.hpp"
#include "mvgrf/likelihood.hpp"
#include "mvgrf/markov.hpp"
#include "mvgrf/parallel.hpp"
#include "mvgrf/simulate_spectral.hpp"

namespace mvgrf::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string command;
  std::string config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out = ".";
  std::size_t threads = 0;
  std::vector<std::size_t> sizes{1024, 4096, 16384, 65536};
  int p = 1;
  int repetitions = 5;
  std::size_t dense_cap = 8192;
};

// Everything a run produces is buffered here and written only after the
// computation has succeeded.
struct Outputs {
  std::vector<std::pair<std::string, std::string>> files;

  void add(std::string name, std::string bytes) { files.emplace_back(std::move(name), std::move(bytes)); }
  void add(std::string name, const std::vector<unsigned char>& bytes) {
    files.emplace_back(std::move(name), std::string(bytes.begin(), bytes.end()));
  }
  json names() const {
    json n = json::array();
    for (const auto& f : files) n.push_back(f.first);
    return n;
  }
};

void commit(const fs::path& dir, const Outputs& outputs) {
  fs::create_directories(dir);
  for (const auto& [name, bytes] : outputs.files) {
    const fs::path target = dir / name;
    const fs::path staging = dir / (name + ".partial");
    {
      std::ofstream f(staging, std::ios::binary | std::ios::trunc);
      if (!f) throw std::runtime_error("cannot write " + staging.string());
      f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      if (!f) throw std::runtime_error("failed writing " + staging.string());
    }
    fs::rename(staging, target);
  }
}

RunConfig config_for(const Options& o, bool required) {
  if (o.config.empty()) {
    if (required) throw ConfigError("--config is required for " + o.command);
    return parse_run_config(json::object());
  }
  return load_run_config(o.config);
}

std::uint64_t seed_for(const Options& o, const RunConfig& rc) {
  if (o.seed_given) return o.seed;
  return rc.seed.value_or(0);
}

SqrtMethod sqrt_for(const RunConfig& rc) { return rc.sqrt_method.value_or(SqrtMethod::lower_triangular); }

const GridSpec& grid_for(const RunConfig& rc) {
  if (!rc.grid) throw ConfigError("config needs a grid section");
  return *rc.grid;
}

int default_max_lag(const GridSpec& grid) {
  int lag = grid.sizes[0] / 2 - 1;
  if (grid.d == 2) lag = std::min(lag, grid.sizes[1] / 2 - 1);
  return std::max(lag, 0);
}

int max_lag_for(const RunConfig& rc, const GridSpec& grid) {
  return rc.max_lag >= 0 ? rc.max_lag : default_max_lag(grid);
}

std::string field_name(std::size_t replicate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "field_%06zu.mgrf", replicate);
  return buf;
}

json manifest(const Options& o, const RunConfig& rc, std::uint64_t seed, const Outputs& outputs) {
  return {{"command", o.command},
          {"config_hash", hex64(rc.hash())},
          {"code_version", kCodeVersion},
          {"sqrt_method", to_string(sqrt_for(rc))},
          {"seed", seed},
          {"replicates", rc.replicates},
          {"config", rc.document},
          {"outputs", outputs.names()}};
}

std::vector<Realization> convolution_batch(const RunConfig& rc, std::uint64_t seed,
                                           std::size_t threads) {
  const NoiseMeasureSpec noise = rc.noise.value_or(NoiseMeasureSpec{});
  std::vector<Realization> out(rc.replicates);
  parallel_for(rc.replicates, resolve_threads(threads), [&](std::size_t r) {
    out[r] = sample_convolution_field(*rc.kernel, noise, grid_for(rc), seed,
                                      static_cast<std::uint32_t>(r));
  });
  return out;
}

std::vector<Realization> markov_batch(const RunConfig& rc, std::uint64_t seed,
                                      std::size_t threads) {
  const MarkovConfig& m = *rc.markov;
  const PrecisionModel model =
      build_precision_model(grid_for(rc), m.components, m.coupling, m.extend);
  return precision_sample_batch(model, seed, rc.replicates, threads);
}

// Realizations for the empirical estimators: explicit input files, or fresh
// draws from whichever model the config carries.
std::vector<Realization> realizations_for(const RunConfig& rc, std::uint64_t seed,
                                          std::size_t threads) {
  if (!rc.inputs.empty()) {
    std::vector<Realization> out;
    for (const auto& path : rc.inputs) out.push_back(read_field(path));
    return out;
  }
  if (rc.spectrum)
    return sample_batch(*rc.spectrum, grid_for(rc), seed, rc.replicates, sqrt_for(rc), threads);
  if (rc.kernel) return convolution_batch(rc, seed, threads);
  if (rc.markov) return markov_batch(rc, seed, threads);
  throw ConfigError("config needs inputs, or a spectrum, kernel or markov section");
}

LikelihoodProblem problem_for(const RunConfig& rc, std::uint64_t seed) {
  if (!rc.likelihood) throw ConfigError("config needs a likelihood section");
  const LikelihoodConfig& c = *rc.likelihood;
  LikelihoodProblem problem;
  if (c.family == LikelihoodFamily::markov) {
    const GridSpec& grid = grid_for(rc);
    problem = c.observations.empty() ? simulate_markov_problem(grid, c.variance, c.kappa, seed)
                                     : LikelihoodProblem{};
    if (!c.observations.empty()) {
      problem.family = LikelihoodFamily::markov;
      problem.grid = grid;
      problem.d = grid.d;
      problem.y = c.observations;
    }
  } else if (c.observations.empty()) {
    problem = simulate_matern_problem(c.count, c.domain_length, c.variance, c.kappa, c.nu, seed);
  } else {
    problem.family = LikelihoodFamily::dense_matern;
    problem.d = rc.grid ? rc.grid->d : 1;
    problem.y = c.observations;
    problem.sites = c.sites;
  }
  if (c.family == LikelihoodFamily::dense_matern) problem.nu = c.nu;
  problem.jitter = c.jitter;
  try {
    problem.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("likelihood: ") + e.what());
  }
  return problem;
}

std::string to_text(const CrossCovariance& c) {
  std::ostringstream s;
  write_csv(s, c);
  return s.str();
}

json cmd_simulate(const Options& o, Outputs& outputs) {
  const RunConfig rc = config_for(o, true);
  if (!rc.spectrum) throw ConfigError("simulate needs a spectrum section");
  const std::uint64_t seed = seed_for(o, rc);
  const auto fields =
      sample_batch(*rc.spectrum, grid_for(rc), seed, rc.replicates, sqrt_for(rc), o.threads);
  for (std::size_t r = 0; r < fields.size(); ++r) outputs.add(field_name(r), encode_field(fields[r]));
  outputs.add("manifest.json", manifest(o, rc, seed, outputs).dump(2) + "\n");
  return {{"fields", fields.size()}, {"config_hash", hex64(rc.hash())}, {"seed", seed}};
}

json cmd_convolve(const Options& o, Outputs& outputs) {
  const RunConfig rc = config_for(o, true);
  if (!rc.kernel) throw ConfigError("convolve needs a kernel section");
  const std::uint64_t seed = seed_for(o, rc);
  const auto fields = convolution_batch(rc, seed, o.threads);
  for (std::size_t r = 0; r < fields.size(); ++r) outputs.add(field_name(r), encode_field(fields[r]));
  outputs.add("manifest.json", manifest(o, rc, seed, outputs).dump(2) + "\n");
  return {{"fields", fields.size()},
          {"truncated_mass", truncated_mass(*rc.kernel, grid_for(rc))},
          {"config_hash", hex64(rc.hash())},
          {"seed", seed}};
}

json cmd_spde_sample(const Options& o, Outputs& outputs) {
  const RunConfig rc = config_for(o, true);
  if (!rc.markov) throw ConfigError("spde-sample needs a markov section");
  const std::uint64_t seed = seed_for(o, rc);
  const auto fields = markov_batch(rc, seed, o.threads);
  for (std::size_t r = 0; r < fields.size(); ++r) outputs.add(field_name(r), encode_field(fields[r]));
  outputs.add("manifest.json", manifest(o, rc, seed, outputs).dump(2) + "\n");
  return {{"fields", fields.size()}, {"config_hash", hex64(rc.hash())}, {"seed", seed}};
}

json cmd_covariance(const Options& o, Outputs& outputs) {
  const RunConfig rc = config_for(o, true);
  const GridSpec& grid = grid_for(rc);
  CrossCovariance c;
  if (rc.spectrum) {
    c = analytic_cross_cov(*rc.spectrum, grid, rc.max_lag);
  } else if (rc.kernel) {
    c = implied_cross_cov(*rc.kernel, grid, max_lag_for(rc, grid));
  } else {
    throw ConfigError("covariance needs a spectrum or kernel section");
  }
  outputs.add("covariance.csv", to_text(c));
  outputs.add("manifest.json", manifest(o, rc, seed_for(o, rc), outputs).dump(2) + "\n");
  return {{"kind", to_string(c.kind)}, {"max_lag", c.max_lag}, {"components", c.p}};
}

json cmd_empirical(const Options& o, Outputs& outputs) {
  const RunConfig rc = config_for(o, true);
  const std::uint64_t seed = seed_for(o, rc);
  const auto fields = realizations_for(rc, seed, o.threads);
  const CrossCovariance c =
      empirical_cross_cov(fields, max_lag_for(rc, fields.front().grid), o.threads);
  outputs.add("empirical.csv", to_text(c));
  outputs.add("manifest.json", manifest(o, rc, seed, outputs).dump(2) + "\n");
  return {{"replicates", fields.size()}, {"max_lag", c.max_lag}, {"seed", seed}};
}

json cmd_asymmetry(const Options& o, Outputs& outputs) {
  const RunConfig rc = config_for(o, true);
  const std::uint64_t seed = seed_for(o, rc);
  json pairs = json::array();
  std::optional<CrossCovariance> analytic;
  if (rc.spectrum) analytic = analytic_cross_cov(*rc.spectrum, grid_for(rc), rc.max_lag);
  else if (rc.kernel && rc.kernel->stationary())
    analytic = implied_cross_cov(*rc.kernel, grid_for(rc), max_lag_for(rc, grid_for(rc)));
  std::optional<CrossCovariance> empirical;
  if (!rc.inputs.empty() || rc.document.contains("replicates")) {
    const auto fields = realizations_for(rc, seed, o.threads);
    empirical = empirical_cross_cov(fields, max_lag_for(rc, fields.front().grid), o.threads);
  }
  if (!analytic && !empirical) throw ConfigError("asymmetry needs a model or realizations");
  const int p = analytic ? analytic->p : empirical->p;
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      json e = {{"i", i}, {"j", j}};
      if (analytic) e["analytic"] = asymmetry_index(*analytic, i, j);
      if (empirical) e["empirical"] = asymmetry_index(*empirical, i, j);
      pairs.push_back(e);
    }
  }
  outputs.add("asymmetry.json", json({{"pairs", pairs}}).dump(2) + "\n");
  outputs.add("manifest.json", manifest(o, rc, seed, outputs).dump(2) + "\n");
  return {{"pairs", pairs}};
}

json cmd_bench(const Options& o, Outputs& outputs) {
  const RunConfig rc = config_for(o, false);
  if (o.p < 1) throw ConfigError("--p must be at least 1");
  if (o.repetitions < 1) throw ConfigError("--repetitions must be at least 1");
  if (o.sizes.empty()) throw ConfigError("--sizes must not be empty");
  const auto rows = bench_scaling(o.sizes, o.p, o.repetitions, o.dense_cap);
  std::ostringstream csv;
  csv << "n,p,path,median_seconds,factor_nonzeros\n";
  std::vector<double> xs, ys, xd, yd;
  for (const auto& r : rows) {
    csv << r.n << ',' << r.p << ',' << r.path << ',' << format_double(r.median_seconds) << ','
        << r.factor_nonzeros << '\n';
    auto& x = r.path == "sparse" ? xs : xd;
    auto& y = r.path == "sparse" ? ys : yd;
    x.push_back(static_cast<double>(r.n));
    y.push_back(r.median_seconds);
  }
  outputs.add("bench.csv", csv.str());
  outputs.add("manifest.json", manifest(o, rc, 0, outputs).dump(2) + "\n");
  json summary = {{"rows", rows.size()}};
  if (xs.size() >= 2) summary["sparse_slope"] = loglog_slope(xs, ys);
  if (xd.size() >= 2) summary["dense_slope"] = loglog_slope(xd, yd);
  return summary;
}

json cmd_profile(const Options& o, Outputs& outputs) {
  const RunConfig rc = config_for(o, true);
  const std::uint64_t seed = seed_for(o, rc);
  const LikelihoodProblem problem = problem_for(rc, seed);
  const LikelihoodConfig& c = *rc.likelihood;
  const AxisSpec s2 = c.log_sigma2.value_or(AxisSpec{std::log(c.variance) - 2.0, std::log(c.variance) + 2.0, 21});
  const AxisSpec lk = c.log_kappa.value_or(AxisSpec{std::log(c.kappa) - 1.0, std::log(c.kappa) + 1.0, 21});
  const ProfileSurface surface = profile_surface(problem, s2.nodes(), lk.nodes(), o.threads);
  std::ostringstream csv;
  surface.write_csv(csv);
  outputs.add("profile.csv", csv.str());
  outputs.add("manifest.json", manifest(o, rc, seed, outputs).dump(2) + "\n");
  Eigen::Index bi = 0, bj = 0;
  const double best = surface.loglik.maxCoeff(&bi, &bj);
  return {{"nodes", surface.loglik.size()},
          {"max_loglik", best},
          {"argmax", {surface.log_sigma2[static_cast<std::size_t>(bi)],
                      surface.log_kappa[static_cast<std::size_t>(bj)]}}};
}

json cmd_ridge(const Options& o, Outputs& outputs) {
  const RunConfig rc = config_for(o, true);
  const std::uint64_t seed = seed_for(o, rc);
  const LikelihoodProblem problem = problem_for(rc, seed);
  RidgeOptions options;
  options.starts = rc.likelihood->starts;
  const RidgeReport r = ridge_report(problem, options);
  json starts = json::array();
  for (const auto& s : r.starts) starts.push_back({s[0], s[1]});
  const json report = {{"coordinates", r.coordinates},
                       {"mle", {r.mle[0], r.mle[1]}},
                       {"loglik", r.loglik},
                       {"lambda1", r.lambda1},
                       {"lambda2", r.lambda2},
                       {"anisotropy", r.anisotropy},
                       {"flat_direction", {r.flat_direction[0], r.flat_direction[1]}},
                       {"microergodic_tangent", {r.microergodic_tangent[0], r.microergodic_tangent[1]}},
                       {"angle_degrees", r.angle_degrees},
                       {"nu", r.nu},
                       {"jitter", r.jitter},
                       {"starts", starts}};
  outputs.add("ridge.json", report.dump(2) + "\n");
  outputs.add("manifest.json", manifest(o, rc, seed, outputs).dump(2) + "\n");
  return {{"anisotropy", r.anisotropy}, {"angle_degrees", r.angle_degrees},
          {"mle", {r.mle[0], r.mle[1]}}};
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const DefinitenessError*>(&e) || dynamic_cast<const SymmetryError*>(&e) ||
      dynamic_cast<const BoundaryError*>(&e) || dynamic_cast<const StepError*>(&e))
    return 3;
  return 2;
}

void report_error(std::ostream& err, const std::string& command, const std::string& kind,
                  const std::string& message) {
  err << json({{"command", command}, {"status", "error"}, {"kind", kind}, {"message", message}}).dump()
      << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multivariate Gaussian random field simulation and diagnostics", "mvgrf"};
  app.require_subcommand(1);
  Options o;

  struct Command {
    const char* name;
    const char* help;
    json (*fn)(const Options&, Outputs&);
  };
  const std::vector<Command> commands = {
      {"simulate", "Spectral simulation of a multivariate field", cmd_simulate},
      {"convolve", "Process-convolution simulation", cmd_convolve},
      {"spde-sample", "Sparse precision (SPDE) simulation", cmd_spde_sample},
      {"covariance", "Analytic or kernel-implied cross-covariance", cmd_covariance},
      {"empirical", "Empirical cross-covariance of realizations", cmd_empirical},
      {"asymmetry", "Cross-covariance asymmetry index", cmd_asymmetry},
      {"bench", "Dense versus sparse factorization timings", cmd_bench},
      {"profile", "Log-likelihood surface over (log sigma^2, log kappa)", cmd_profile},
      {"ridge", "Likelihood ridge diagnostics at the MLE", cmd_ridge},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", o.config, "JSON run configuration");
    sub->add_option("--seed", o.seed, "Root seed (overrides the config)")->each([&](const std::string&) {
      o.seed_given = true;
    });
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--threads", o.threads, "Worker threads (0: MVGRF_THREADS or all cores)");
    if (std::string(c.name) == "bench") {
      sub->add_option("--sizes", o.sizes, "Sites per component")->delimiter(',');
      sub->add_option("--p", o.p, "Components");
      sub->add_option("--repetitions", o.repetitions, "Timed repetitions per size");
      sub->add_option("--dense-cap", o.dense_cap, "Largest p*n for the dense path");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::ostringstream msg;
    app.exit(e, msg, msg);
    err << msg.str();
    if (!msg.str().empty() && msg.str().back() != '\n') err << '\n';
    err << app.help();
    return 2;
  }

  for (const auto& c : commands) {
    if (!app.got_subcommand(c.name)) continue;
    o.command = c.name;
    try {
      Outputs outputs;
      json summary = c.fn(o, outputs);
      commit(o.out, outputs);
      summary["command"] = o.command;
      summary["status"] = "ok";
      summary["out"] = o.out;
      summary["outputs"] = outputs.names();
      out << summary.dump() << '\n';
      return 0;
    } catch (const Error& e) {
      report_error(err, o.command, exit_code_for(e) == 3 ? "numerical" : "config", e.what());
      return exit_code_for(e);
    } catch (const std::exception& e) {
      report_error(err, o.command, "runtime", e.what());
      return 1;
    }
  }
  return 2;
}

int run(int argc, const char* const* argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace mvgrf::cli
