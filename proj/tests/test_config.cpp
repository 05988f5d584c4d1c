#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "mvgrf/config.hpp"
#include "mvgrf/error.hpp"
#include "support.hpp"

using namespace mvgrf;
using nlohmann::json;

TEST_CASE("grid section") {
  const GridSpec g = parse_grid(json::parse(R"({"d": 2, "sizes": [16, 32], "spacing": 0.5})"));
  CHECK(g == GridSpec::square(16, 32, 0.5, true));
  CHECK(parse_grid(grid_to_json(g)) == g);
  CHECK(parse_grid(json::parse(R"({"d": 1, "sizes": [8]})"), false) == GridSpec::line(8, 1.0, false));
  CHECK_THROWS_AS(parse_grid(json::parse(R"({"d": 1, "sizes": [8], "spacng": 1})")), ConfigError);
  CHECK_THROWS_AS(parse_grid(json::parse(R"({"d": "1", "sizes": [8]})")), ConfigError);
  CHECK_THROWS_AS(parse_grid(json::parse(R"({"d": 3, "sizes": [8, 8, 8]})")), ConfigError);
  CHECK_THROWS_AS(parse_grid(json::parse(R"({"d": 1, "sizes": [8], "spacing": -1})")), ConfigError);
  CHECK_THROWS_AS(parse_grid(json::parse(R"([1, 2])")), ConfigError);
}

TEST_CASE("spectrum section") {
  const auto s = parse_spectrum(json::parse(R"({
    "components": [{"variance": 2, "kappa": 0.5, "nu": 1},
                   {"family": "white-band", "variance": 1}],
    "cross": [{"i": 0, "j": 1, "rho": 0.3, "delta": [5, 0]}]})"), 2);
  CHECK(s.components() == 2);
  CHECK(s.colocation(0, 1) == doctest::Approx(0.3));
  CHECK_THROWS_AS(parse_spectrum(json::parse(R"({"components": [{"family": "cauchy"}]})"), 1),
                  ConfigError);
  CHECK_THROWS_AS(parse_spectrum(json::parse(R"({"components": [{"kapa": 1}]})"), 1), ConfigError);
  // A colocation matrix that is not PSD is a configuration problem.
  CHECK_THROWS_AS(parse_spectrum(json::parse(R"({"components": [{}, {}, {}],
    "cross": [{"i": 0, "j": 1, "rho": 0.9}, {"i": 0, "j": 2, "rho": 0.9},
              {"i": 1, "j": 2, "rho": -0.9}]})"), 1), ConfigError);
}

TEST_CASE("kernel, noise and markov sections") {
  const auto k = parse_kernel(json::parse(R"({"kind": "gaussian-bump", "width": 2, "p": 2,
                                             "mixing": [[1, 0], [0.5, 1]]})"), 1);
  CHECK(k.kind == KernelKind::gaussian_bump);
  CHECK(k.support == 8.0);
  CHECK(k.mixing(1, 0) == 0.5);
  CHECK_THROWS_AS(parse_kernel(json::parse(R"({"kind": "boxcar"})"), 1), ConfigError);
  CHECK_THROWS_AS(parse_kernel(json::parse(R"({"kind": "delta", "p": 2, "mixing": [[1]]})"), 1),
                  ConfigError);

  CHECK(parse_noise(json::parse(R"({"family": "centered-gamma", "shape": 3})")).shape == 3.0);
  CHECK_THROWS_AS(parse_noise(json::parse(R"({"family": "cauchy"})")), ConfigError);
  CHECK_THROWS_AS(parse_noise(json::parse(R"({"shape": 0})")), ConfigError);

  const auto m = parse_markov(json::parse(R"({"components": [{"kappa": 0.5}, {"kappa": 1, "variance": 2}],
                                             "coupling": [[1, 0], [0.6, 1]], "margin": false})"));
  CHECK(m.components.size() == 2);
  CHECK(m.components[1].variance == 2.0);
  CHECK(m.coupling(1, 0) == 0.6);
  CHECK_FALSE(m.extend);
  CHECK_THROWS_AS(parse_markov(json::parse(R"({"components": [{}, {}], "coupling": [[2, 0], [0, 1]]})")),
                  ConfigError);
}

TEST_CASE("likelihood section") {
  const auto l = parse_likelihood(json::parse(R"({"family": "dense-matern", "count": 50,
    "domain_length": 2, "kappa": 20, "log_kappa": {"lower": 0, "upper": 4, "count": 5},
    "starts": [[0, 1], [0.5, 2]]})"));
  CHECK(l.count == 50);
  CHECK(l.kappa == 20.0);
  REQUIRE(l.log_kappa.has_value());
  CHECK(l.log_kappa->nodes() == std::vector<double>{0.0, 1.0, 2.0, 3.0, 4.0});
  CHECK(l.starts.size() == 2);
  CHECK(l.starts[1][1] == 2.0);
  CHECK_THROWS_AS(parse_likelihood(json::parse(R"({"family": "gaussian"})")), ConfigError);
  CHECK_THROWS_AS(parse_likelihood(json::parse(R"({"observations": [1, 2], "sites": [0]})")), ConfigError);
}

TEST_CASE("run configuration") {
  const json doc = json::parse(R"({"grid": {"d": 1, "sizes": [64]}, "seed": 7, "replicates": 3,
    "sqrt_method": "hermitian", "spectrum": {"components": [{}]}})");
  const auto rc = parse_run_config(doc);
  CHECK(rc.seed == 7u);
  CHECK(rc.replicates == 3u);
  CHECK(rc.sqrt_method == SqrtMethod::hermitian);
  CHECK(rc.grid->periodic);
  CHECK(rc.hash() == parse_run_config(json::parse(doc.dump())).hash());
  json other = doc;
  other["seed"] = 8;
  CHECK(rc.hash() != parse_run_config(other).hash());
  CHECK(hex64(rc.hash()).size() == 16);

  const auto markov = parse_run_config(json::parse(R"({"grid": {"d": 2, "sizes": [10, 10]},
    "markov": {"components": [{}]}})"));
  CHECK_FALSE(markov.grid->periodic);

  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"seeds": 1})")), ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"seed": -1})")), ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"replicates": 0})")), ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"sqrt_method": "qr"})")), ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"spectrum": {"components": [{}]}})")), ConfigError);

  const auto dir = test::scratch_dir("config");
  std::ofstream(dir / "bad.json") << "{\"seed\": 1,";
  CHECK_THROWS_AS(load_run_config(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_run_config(dir / "absent.json"), ConfigError);
  std::ofstream(dir / "good.json") << R"({"seed": 2, "inputs": ["a.mgrf"]})";
  const auto loaded = load_run_config(dir / "good.json");
  CHECK(loaded.inputs.at(0) == dir / "a.mgrf");
}
