#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>

#include "vps/errors.hpp"

// Little-endian stream helpers shared by the binary readers and writers.
namespace vps::io {

inline void write_u8(std::ostream& out, std::uint8_t v) {
  out.put(static_cast<char>(v));
}

inline void write_u16(std::ostream& out, std::uint16_t v) {
  write_u8(out, static_cast<std::uint8_t>(v & 0xff));
  write_u8(out, static_cast<std::uint8_t>(v >> 8));
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    write_u8(out, static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
  }
}

inline void write_i32(std::ostream& out, std::int32_t v) {
  write_u32(out, static_cast<std::uint32_t>(v));
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    write_u8(out, static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
  }
}

inline void write_f32(std::ostream& out, float v) {
  write_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline void write_f64(std::ostream& out, double v) {
  write_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint8_t read_u8(std::istream& in, const std::string& what) {
  int c = in.get();
  if (c == std::istream::traits_type::eof()) {
    throw TruncatedFile("unexpected end of file while reading " + what);
  }
  return static_cast<std::uint8_t>(c);
}

inline std::uint16_t read_u16(std::istream& in, const std::string& what) {
  std::uint16_t lo = read_u8(in, what);
  std::uint16_t hi = read_u8(in, what);
  return static_cast<std::uint16_t>(lo | (hi << 8));
}

inline std::uint32_t read_u32(std::istream& in, const std::string& what) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(read_u8(in, what)) << (8 * i);
  }
  return v;
}

inline std::int32_t read_i32(std::istream& in, const std::string& what) {
  return static_cast<std::int32_t>(read_u32(in, what));
}

inline std::uint64_t read_u64(std::istream& in, const std::string& what) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(read_u8(in, what)) << (8 * i);
  }
  return v;
}

inline float read_f32(std::istream& in, const std::string& what) {
  return std::bit_cast<float>(read_u32(in, what));
}

inline double read_f64(std::istream& in, const std::string& what) {
  return std::bit_cast<double>(read_u64(in, what));
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  return out;
}

}  // namespace vps::io
