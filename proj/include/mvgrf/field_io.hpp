#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mvgrf/grid.hpp"

namespace mvgrf {

/// Binary field file, all little-endian:
///   "MGRF" | u32 version | u32 d, p, m1, m2 | f64 h | u64 seed |
///   u32 replicate | u8 construction | p*m1*m2 f64 (component-major, row-major)
inline constexpr std::uint32_t kFieldFormatVersion = 1;
inline constexpr std::size_t kFieldHeaderBytes = 45;

std::vector<unsigned char> encode_field(const Realization& field);
/// Throws FormatError on bad magic, version, tag or dimensions and
/// LengthError when the payload is shorter or longer than declared.
Realization decode_field(const std::vector<unsigned char>& bytes);

void write_field(const std::filesystem::path& path, const Realization& field);
Realization read_field(const std::filesystem::path& path);

}  // namespace mvgrf
