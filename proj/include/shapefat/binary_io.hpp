// SPDX-License-Identifier: Apache-2.0
#pragma once

// Little-endian primitives shared by the checkpoint, volume and depth-map
// formats. Byte order is explicit so files are portable across hosts.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

#include "shapefat/error.hpp"

namespace shapefat::io {

template <typename UInt>
void write_le(std::ostream& out, UInt value) {
  static_assert(std::is_unsigned_v<UInt>);
  std::array<char, sizeof(UInt)> bytes{};
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFFu);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename UInt>
UInt read_le(std::istream& in, std::string_view what) {
  static_assert(std::is_unsigned_v<UInt>);
  std::array<unsigned char, sizeof(UInt)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw FormatError("truncated file while reading " + std::string(what));
  }
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    value |= static_cast<UInt>(bytes[i]) << (8 * i);
  }
  return value;
}

inline void write_f32(std::ostream& out, float value) {
  write_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(value));
}

inline float read_f32(std::istream& in, std::string_view what) {
  return std::bit_cast<float>(read_le<std::uint32_t>(in, what));
}

inline void write_i16(std::ostream& out, std::int16_t value) {
  write_le<std::uint16_t>(out, std::bit_cast<std::uint16_t>(value));
}

inline std::int16_t read_i16(std::istream& in, std::string_view what) {
  return std::bit_cast<std::int16_t>(read_le<std::uint16_t>(in, what));
}

/// Checks a four-byte magic of the form "<3-letter tag><version digit>".
/// A matching tag with a different version digit is reported as a version
/// mismatch rather than a foreign file.
inline void expect_magic(std::istream& in, std::string_view magic) {
  std::array<char, 4> got{};
  in.read(got.data(), got.size());
  if (in.gcount() != 4) {
    throw FormatError("truncated file: missing magic '" + std::string(magic) + "'");
  }
  const std::string_view found(got.data(), got.size());
  if (found == magic) return;
  if (found.substr(0, 3) == magic.substr(0, 3)) {
    throw FormatError("unsupported version '" + std::string(found) + "', expected '" +
                      std::string(magic) + "'");
  }
  throw FormatError("bad magic '" + std::string(found) + "', expected '" + std::string(magic) +
                    "'");
}

inline void write_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

}  // namespace shapefat::io
