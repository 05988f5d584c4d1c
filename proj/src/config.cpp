#include "mvgrf/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>

#include "mvgrf/error.hpp"

namespace mvgrf {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  require_object(j, where);
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

const json& field(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  return j.at(key);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + ": must be finite");
  return v;
}

double number_or(const json& j, const std::string& where, const char* key, double fallback) {
  return j.contains(key) ? number(j.at(key), where + "." + key) : fallback;
}

double positive(const json& j, const std::string& where, const char* key, double fallback) {
  const double v = number_or(j, where, key, fallback);
  if (!(v > 0.0)) throw ConfigError(where + "." + key + ": must be positive");
  return v;
}

std::int64_t integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return j.get<std::int64_t>();
}

std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + ": expected a string");
  return j.get<std::string>();
}

bool flag(const json& j, const std::string& where) {
  if (!j.is_boolean()) throw ConfigError(where + ": expected a boolean");
  return j.get<bool>();
}

Eigen::MatrixXd matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array of rows");
  const std::size_t rows = j.size();
  Eigen::MatrixXd m;
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.empty()) throw ConfigError(where + ": rows must be arrays");
    if (r == 0) m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(row.size()));
    if (static_cast<Eigen::Index>(row.size()) != m.cols())
      throw ConfigError(where + ": ragged rows");
    for (std::size_t c = 0; c < row.size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          number(row[c], where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  }
  return m;
}

// Library validation errors inside a config section are configuration errors.
template <class F>
auto guarded(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

AxisSpec parse_axis(const json& j, const std::string& where) {
  allow_keys(j, where, {"lower", "upper", "count"});
  AxisSpec a;
  a.lower = number(field(j, where, "lower"), where + ".lower");
  a.upper = number(field(j, where, "upper"), where + ".upper");
  const std::int64_t n = integer(field(j, where, "count"), where + ".count");
  if (n < 1 || n > 10000) throw ConfigError(where + ".count: must be in [1, 10000]");
  if (n > 1 && !(a.upper > a.lower)) throw ConfigError(where + ": upper must exceed lower");
  a.count = static_cast<int>(n);
  return a;
}

}  // namespace

std::vector<double> AxisSpec::nodes() const {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k)
    out[static_cast<std::size_t>(k)] =
        count == 1 ? lower : lower + (upper - lower) * k / static_cast<double>(count - 1);
  return out;
}

GridSpec parse_grid(const json& j, bool periodic) {
  const std::string where = "grid";
  allow_keys(j, where, {"d", "sizes", "spacing"});
  const std::int64_t d = integer(field(j, where, "d"), "grid.d");
  if (d != 1 && d != 2) throw ConfigError("grid.d: must be 1 or 2");
  const json& sizes = field(j, where, "sizes");
  if (!sizes.is_array() || static_cast<std::int64_t>(sizes.size()) != d)
    throw ConfigError("grid.sizes: expected " + std::to_string(d) + " entries");
  GridSpec g;
  g.d = static_cast<int>(d);
  g.sizes = {1, 1};
  for (std::size_t a = 0; a < sizes.size(); ++a) {
    const std::int64_t m = integer(sizes[a], "grid.sizes");
    if (m < 1 || m > (1 << 24)) throw ConfigError("grid.sizes: out of range");
    g.sizes[a] = static_cast<int>(m);
  }
  g.spacing = positive(j, where, "spacing", 1.0);
  g.periodic = periodic;
  guarded(where, [&] {
    g.validate();
    return 0;
  });
  return g;
}

json grid_to_json(const GridSpec& grid) {
  json sizes = json::array();
  for (int a = 0; a < grid.d; ++a) sizes.push_back(grid.sizes[a]);
  return {{"d", grid.d}, {"sizes", sizes}, {"spacing", grid.spacing}};
}

SpectrumModel parse_spectrum(const json& j, int d) {
  allow_keys(j, "spectrum", {"components", "cross"});
  const json& comps = field(j, "spectrum", "components");
  if (!comps.is_array() || comps.empty())
    throw ConfigError("spectrum.components: expected a non-empty array");
  std::vector<ComponentParams> params;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const std::string where = "spectrum.components[" + std::to_string(k) + "]";
    const json& c = comps[k];
    require_object(c, where);
    const std::string family = c.contains("family") ? text(c.at("family"), where + ".family") : "matern";
    if (family == "matern") {
      allow_keys(c, where, {"family", "variance", "kappa", "nu"});
      MaternParams m;
      m.variance = positive(c, where, "variance", 1.0);
      m.kappa = positive(c, where, "kappa", 1.0);
      m.nu = positive(c, where, "nu", 1.0);
      params.emplace_back(m);
    } else if (family == "white-band") {
      allow_keys(c, where, {"family", "variance", "bandwidth"});
      WhiteBandParams w;
      w.variance = positive(c, where, "variance", 1.0);
      w.bandwidth = positive(c, where, "bandwidth", w.bandwidth);
      params.emplace_back(w);
    } else {
      throw ConfigError(where + ".family: unknown family '" + family + "'");
    }
  }
  std::vector<CrossTerm> cross;
  if (j.contains("cross")) {
    const json& cs = j.at("cross");
    if (!cs.is_array()) throw ConfigError("spectrum.cross: expected an array");
    for (std::size_t k = 0; k < cs.size(); ++k) {
      const std::string where = "spectrum.cross[" + std::to_string(k) + "]";
      allow_keys(cs[k], where, {"i", "j", "rho", "delta"});
      CrossTerm t;
      t.i = static_cast<int>(integer(field(cs[k], where, "i"), where + ".i"));
      t.j = static_cast<int>(integer(field(cs[k], where, "j"), where + ".j"));
      t.rho = number(field(cs[k], where, "rho"), where + ".rho");
      if (cs[k].contains("delta")) {
        const json& dl = cs[k].at("delta");
        if (!dl.is_array() || static_cast<int>(dl.size()) != d)
          throw ConfigError(where + ".delta: expected " + std::to_string(d) + " entries");
        for (int a = 0; a < d; ++a)
          t.delta[static_cast<std::size_t>(a)] = number(dl[static_cast<std::size_t>(a)], where + ".delta");
      }
      cross.push_back(t);
    }
  }
  return guarded("spectrum", [&] { return SpectrumModel(d, std::move(params), std::move(cross)); });
}

KernelSpec parse_kernel(const json& j, int d) {
  const std::string where = "kernel";
  allow_keys(j, where,
             {"kind", "p", "mixing", "amplitude", "width", "width_right", "split", "support"});
  const KernelKind kind =
      guarded(where, [&] { return parse_kernel_kind(text(field(j, where, "kind"), "kernel.kind")); });
  KernelSpec k;
  k.kind = kind;
  k.d = d;
  k.p = j.contains("p") ? static_cast<int>(integer(j.at("p"), "kernel.p")) : 1;
  if (k.p < 1 || k.p > 64) throw ConfigError("kernel.p: must be in [1, 64]");
  k.mixing = j.contains("mixing") ? matrix(j.at("mixing"), "kernel.mixing")
                                  : Eigen::MatrixXd::Identity(k.p, k.p);
  if (k.mixing.rows() != k.p || k.mixing.cols() != k.p)
    throw ConfigError("kernel.mixing: must be p x p");
  k.amplitude = number_or(j, where, "amplitude", 1.0);
  k.width = positive(j, where, "width", 1.0);
  k.width_right = positive(j, where, "width_right", k.width);
  k.split = number_or(j, where, "split", 0.0);
  k.support = positive(j, where, "support", kind == KernelKind::triangular ? k.width : 4.0 * k.width);
  guarded(where, [&] {
    k.validate();
    return 0;
  });
  return k;
}

NoiseMeasureSpec parse_noise(const json& j) {
  allow_keys(j, "noise", {"family", "shape", "scale"});
  NoiseMeasureSpec n;
  if (j.contains("family"))
    n.family = guarded("noise", [&] { return parse_noise_family(text(j.at("family"), "noise.family")); });
  n.shape = positive(j, "noise", "shape", 1.0);
  n.scale = positive(j, "noise", "scale", 1.0);
  guarded("noise", [&] {
    n.validate();
    return 0;
  });
  return n;
}

MarkovConfig parse_markov(const json& j) {
  allow_keys(j, "markov", {"components", "coupling", "margin"});
  const json& comps = field(j, "markov", "components");
  if (!comps.is_array() || comps.empty())
    throw ConfigError("markov.components: expected a non-empty array");
  MarkovConfig m;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const std::string where = "markov.components[" + std::to_string(k) + "]";
    allow_keys(comps[k], where, {"kappa", "variance"});
    m.components.push_back({positive(comps[k], where, "kappa", 1.0),
                            positive(comps[k], where, "variance", 1.0)});
  }
  const auto p = static_cast<Eigen::Index>(m.components.size());
  m.coupling = j.contains("coupling") ? matrix(j.at("coupling"), "markov.coupling")
                                      : Eigen::MatrixXd::Identity(p, p);
  if (m.coupling.rows() != p || m.coupling.cols() != p)
    throw ConfigError("markov.coupling: must be p x p");
  for (Eigen::Index r = 0; r < p; ++r) {
    if (m.coupling(r, r) != 1.0) throw ConfigError("markov.coupling: diagonal must be 1");
    for (Eigen::Index c = r + 1; c < p; ++c)
      if (m.coupling(r, c) != 0.0) throw ConfigError("markov.coupling: must be lower triangular");
  }
  if (j.contains("margin")) m.extend = flag(j.at("margin"), "markov.margin");
  return m;
}

LikelihoodConfig parse_likelihood(const json& j) {
  const std::string where = "likelihood";
  allow_keys(j, where,
             {"family", "observations", "sites", "count", "domain_length", "variance", "kappa",
              "nu", "jitter", "log_sigma2", "log_kappa", "starts"});
  LikelihoodConfig c;
  if (j.contains("family")) {
    const std::string f = text(j.at("family"), "likelihood.family");
    if (f == "dense-matern") c.family = LikelihoodFamily::dense_matern;
    else if (f == "markov") c.family = LikelihoodFamily::markov;
    else throw ConfigError("likelihood.family: expected 'dense-matern' or 'markov'");
  }
  if (j.contains("observations")) {
    const json& y = j.at("observations");
    if (!y.is_array()) throw ConfigError("likelihood.observations: expected an array");
    for (const json& v : y) c.observations.push_back(number(v, "likelihood.observations"));
    if (c.family == LikelihoodFamily::dense_matern) {
      const json& s = field(j, where, "sites");
      if (!s.is_array() || s.size() != y.size())
        throw ConfigError("likelihood.sites: expected one site per observation");
      for (const json& site : s) {
        std::array<double, 2> xy{0.0, 0.0};
        if (site.is_number()) {
          xy[0] = number(site, "likelihood.sites");
        } else if (site.is_array() && !site.empty() && site.size() <= 2) {
          for (std::size_t a = 0; a < site.size(); ++a) xy[a] = number(site[a], "likelihood.sites");
        } else {
          throw ConfigError("likelihood.sites: each site is a number or a 1-2 element array");
        }
        c.sites.push_back(xy);
      }
    }
  } else if (j.contains("sites")) {
    throw ConfigError("likelihood.sites: only valid together with observations");
  }
  if (j.contains("count")) {
    const std::int64_t n = integer(j.at("count"), "likelihood.count");
    if (n < 2 || n > 20000) throw ConfigError("likelihood.count: must be in [2, 20000]");
    c.count = static_cast<std::size_t>(n);
  }
  c.domain_length = positive(j, where, "domain_length", 1.0);
  c.variance = positive(j, where, "variance", 1.0);
  c.kappa = positive(j, where, "kappa", 1.0);
  c.nu = positive(j, where, "nu", 1.0);
  c.jitter = positive(j, where, "jitter", 1e-8);
  if (j.contains("log_sigma2")) c.log_sigma2 = parse_axis(j.at("log_sigma2"), "likelihood.log_sigma2");
  if (j.contains("log_kappa")) c.log_kappa = parse_axis(j.at("log_kappa"), "likelihood.log_kappa");
  if (j.contains("starts")) {
    const Eigen::MatrixXd s = matrix(j.at("starts"), "likelihood.starts");
    if (s.cols() != 2) throw ConfigError("likelihood.starts: each start is [log_sigma2, log_kappa]");
    for (Eigen::Index r = 0; r < s.rows(); ++r) c.starts.push_back({s(r, 0), s(r, 1)});
  }
  return c;
}

std::uint64_t RunConfig::hash() const {
  const std::string canonical = document.dump();  // object keys are sorted
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RunConfig parse_run_config(const json& document, const std::filesystem::path& base_dir) {
  allow_keys(document, "config",
             {"grid", "seed", "replicates", "sqrt_method", "spectrum", "kernel", "noise", "markov",
              "likelihood", "max_lag", "inputs"});
  RunConfig rc;
  rc.document = document;
  const bool markov_grid = document.contains("markov") ||
                           (document.contains("likelihood") && document.at("likelihood").is_object() &&
                            document.at("likelihood").value("family", "") == "markov");
  if (document.contains("grid")) rc.grid = parse_grid(document.at("grid"), !markov_grid);
  if (document.contains("seed")) {
    const json& s = document.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      throw ConfigError("seed: expected a non-negative integer");
    rc.seed = s.get<std::uint64_t>();
  }
  if (document.contains("replicates")) {
    const std::int64_t r = integer(document.at("replicates"), "replicates");
    if (r < 1 || r > 10000000) throw ConfigError("replicates: must be in [1, 1e7]");
    rc.replicates = static_cast<std::size_t>(r);
  }
  if (document.contains("sqrt_method"))
    rc.sqrt_method = guarded("sqrt_method", [&] {
      return parse_sqrt_method(text(document.at("sqrt_method"), "sqrt_method"));
    });
  const int d = rc.grid ? rc.grid->d : 1;
  if (document.contains("spectrum")) {
    if (!rc.grid) throw ConfigError("spectrum: requires a grid section");
    rc.spectrum = parse_spectrum(document.at("spectrum"), d);
  }
  if (document.contains("kernel")) {
    if (!rc.grid) throw ConfigError("kernel: requires a grid section");
    rc.kernel = parse_kernel(document.at("kernel"), d);
  }
  if (document.contains("noise")) rc.noise = parse_noise(document.at("noise"));
  if (document.contains("markov")) {
    if (!rc.grid) throw ConfigError("markov: requires a grid section");
    rc.markov = parse_markov(document.at("markov"));
  }
  if (document.contains("likelihood")) rc.likelihood = parse_likelihood(document.at("likelihood"));
  if (document.contains("max_lag")) {
    const std::int64_t l = integer(document.at("max_lag"), "max_lag");
    if (l < -1) throw ConfigError("max_lag: must be >= 0, or -1 for the default");
    rc.max_lag = static_cast<int>(l);
  }
  if (document.contains("inputs")) {
    const json& in = document.at("inputs");
    if (!in.is_array()) throw ConfigError("inputs: expected an array of paths");
    for (const json& p : in) {
      std::filesystem::path path = text(p, "inputs");
      if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
      rc.inputs.push_back(path);
    }
  }
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json document;
  try {
    document = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON in ") + path.string() + ": " + e.what());
  }
  return parse_run_config(document, path.parent_path());
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace mvgrf
