#include "mvgrf/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mvgrf/error.hpp"

namespace mvgrf {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put(std::vector<unsigned char>& out, T value) {
  std::uint64_t bits = 0;
  if constexpr (sizeof(T) == 8) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t b = 0; b < sizeof(T); ++b)
    out.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xffu));
}

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  std::uint64_t raw(std::size_t width) {
    if (pos_ + width > bytes_.size()) throw LengthError("field file is truncated");
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < width; ++b)
      bits |= static_cast<std::uint64_t>(bytes_[pos_ + b]) << (8 * b);
    pos_ += width;
    return bits;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(raw(4)); }
  double f64() { return std::bit_cast<double>(raw(8)); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> encode_field(const Realization& field) {
  field.grid.validate();
  const std::size_t count = static_cast<std::size_t>(field.p) * field.grid.sites();
  if (field.p < 1 || field.values.size() != count)
    throw ShapeError("field values do not match p * sites");
  std::vector<unsigned char> out;
  out.reserve(kFieldHeaderBytes + 8 * count);
  for (char c : {'M', 'G', 'R', 'F'}) out.push_back(static_cast<unsigned char>(c));
  put<std::uint32_t>(out, kFieldFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(field.grid.d));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(field.p));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(field.grid.sizes[0]));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(field.grid.d == 1 ? 1 : field.grid.sizes[1]));
  put<double>(out, field.grid.spacing);
  put<std::uint64_t>(out, field.seed);
  put<std::uint32_t>(out, field.replicate);
  out.push_back(static_cast<unsigned char>(field.construction));
  for (double v : field.values) put<double>(out, v);
  return out;
}

Realization decode_field(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "MGRF", 4) != 0)
    throw FormatError("bad magic bytes");
  Reader in(bytes);
  in.raw(4);
  if (in.u32() != kFieldFormatVersion) throw FormatError("unsupported format version");
  const std::uint32_t d = in.u32();
  const std::uint32_t p = in.u32();
  const std::uint32_t m1 = in.u32();
  const std::uint32_t m2 = in.u32();
  const double h = in.f64();
  const std::uint64_t seed = in.raw(8);
  const std::uint32_t replicate = in.u32();
  const std::uint64_t tag = in.raw(1);
  if (tag > 2) throw FormatError("unknown construction tag");
  if ((d != 1 && d != 2) || p == 0 || m1 == 0 || m2 == 0 || (d == 1 && m2 != 1) ||
      m1 > (1u << 30) || m2 > (1u << 30))
    throw FormatError("invalid field dimensions");

  Realization r;
  r.grid.d = static_cast<int>(d);
  r.grid.sizes = {static_cast<int>(m1), static_cast<int>(m2)};
  r.grid.spacing = h;
  r.p = static_cast<int>(p);
  r.seed = seed;
  r.replicate = replicate;
  r.construction = static_cast<Construction>(tag);
  // Markov fields live on a reflecting grid; the other constructions are periodic.
  r.grid.periodic = r.construction != Construction::markov;
  const std::size_t count = static_cast<std::size_t>(p) * m1 * m2;
  if (in.remaining() / 8 < count) throw LengthError("field file is truncated");
  if (in.remaining() != 8 * count) throw LengthError("field file has trailing bytes");
  r.values.resize(count);
  for (double& v : r.values) v = in.f64();
  return r;
}

void write_field(const std::filesystem::path& path, const Realization& field) {
  const std::vector<unsigned char> bytes = encode_field(field);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

Realization read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return decode_field(bytes);
}

}  // namespace mvgrf
