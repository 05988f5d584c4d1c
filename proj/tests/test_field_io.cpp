#include <cstring>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "mvgrf/error.hpp"
#include "mvgrf/field_io.hpp"
#include "support.hpp"

using namespace mvgrf;

namespace {

Realization sample_field(int d, int p, int m1, int m2, Construction tag) {
  Realization r;
  r.grid = d == 1 ? GridSpec::line(m1, 0.25, tag != Construction::markov)
                  : GridSpec::square(m1, m2, 0.25, tag != Construction::markov);
  r.p = p;
  r.seed = 0x0123456789abcdefULL;
  r.replicate = 77;
  r.construction = tag;
  std::mt19937_64 gen(9);
  std::normal_distribution<double> n;
  r.values.resize(static_cast<std::size_t>(p) * r.grid.sites());
  for (auto& v : r.values) v = n(gen);
  r.values[0] = -0.0;
  r.values[1] = 1e-310;
  return r;
}

}  // namespace

TEST_CASE("round trip is bit identical") {
  for (auto tag : {Construction::spectral, Construction::convolution, Construction::markov}) {
    const Realization r = sample_field(2, 2, 8, 16, tag);
    const auto bytes = encode_field(r);
    CHECK(bytes.size() == kFieldHeaderBytes + 8 * 2 * 8 * 16);
    const Realization back = decode_field(bytes);
    CHECK(back.grid == r.grid);
    CHECK(back.p == r.p);
    CHECK(back.seed == r.seed);
    CHECK(back.replicate == r.replicate);
    CHECK(back.construction == tag);
    REQUIRE(back.values.size() == r.values.size());
    CHECK(std::memcmp(back.values.data(), r.values.data(), r.values.size() * sizeof(double)) == 0);
    CHECK(encode_field(back) == bytes);
  }
  const Realization line = sample_field(1, 1, 32, 1, Construction::spectral);
  CHECK(encode_field(line).size() == kFieldHeaderBytes + 8 * 32);
  CHECK(decode_field(encode_field(line)).grid == line.grid);
}

TEST_CASE("header layout is little-endian") {
  const auto bytes = encode_field(sample_field(1, 1, 8, 1, Construction::convolution));
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "MGRF");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[8] == 1);   // d
  CHECK(bytes[12] == 1);  // p
  CHECK(bytes[16] == 8);  // m1
  CHECK(bytes[20] == 1);  // m2
  CHECK(bytes[44] == 1);  // construction tag
  CHECK(bytes[32] == 0xef);
}

TEST_CASE("malformed files are rejected") {
  const auto good = encode_field(sample_field(2, 1, 8, 8, Construction::spectral));
  auto bad = good;
  bad[44] = 3;
  CHECK_THROWS_AS(decode_field(bad), FormatError);
  bad = good;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_field(bad), FormatError);
  bad = good;
  bad[4] = 2;
  CHECK_THROWS_AS(decode_field(bad), FormatError);
  bad = good;
  bad[8] = 3;
  CHECK_THROWS_AS(decode_field(bad), FormatError);
  bad = good;
  bad.pop_back();
  CHECK_THROWS_AS(decode_field(bad), LengthError);
  bad = good;
  bad.push_back(0);
  CHECK_THROWS_AS(decode_field(bad), LengthError);
  CHECK_THROWS_AS(decode_field({good.begin(), good.begin() + 20}), LengthError);
}

TEST_CASE("files on disk") {
  const auto dir = test::scratch_dir("field_io");
  const Realization r = sample_field(2, 3, 8, 8, Construction::markov);
  write_field(dir / "f.mgrf", r);
  CHECK(std::filesystem::file_size(dir / "f.mgrf") == kFieldHeaderBytes + 8 * 3 * 64);
  CHECK(read_field(dir / "f.mgrf").values == r.values);
  CHECK_THROWS(read_field(dir / "missing.mgrf"));
}
