#pragma once

// Little-endian binary primitives for the cache/weight/checkpoint file
// formats, written byte-by-byte so files are portable across hosts.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "trinorm/common.hpp"

namespace trinorm {

inline void write_u8(std::ostream& os, std::uint8_t v) {
  os.put(static_cast<char>(v));
}

inline void write_u32le(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

inline void write_u64le(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

inline void write_f64le(std::ostream& os, double v) {
  write_u64le(os, std::bit_cast<std::uint64_t>(v));
}

inline std::uint8_t read_u8(std::istream& is) {
  const int c = is.get();
  if (c == std::char_traits<char>::eof()) throw IoError("unexpected end of file");
  return static_cast<std::uint8_t>(c);
}

inline std::uint32_t read_u32le(std::istream& is) {
  char b[4];
  if (!is.read(b, 4)) throw IoError("unexpected end of file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

inline std::uint64_t read_u64le(std::istream& is) {
  char b[8];
  if (!is.read(b, 8)) throw IoError("unexpected end of file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

inline double read_f64le(std::istream& is) {
  return std::bit_cast<double>(read_u64le(is));
}

inline void write_magic(std::ostream& os, const char (&magic)[9]) {
  os.write(magic, 8);
}

inline void expect_magic(std::istream& is, const char (&magic)[9], const char* what) {
  char b[8];
  if (!is.read(b, 8) || std::memcmp(b, magic, 8) != 0) {
    throw IoError(std::string("bad magic bytes, not a ") + what + " file");
  }
}

}  // namespace trinorm
