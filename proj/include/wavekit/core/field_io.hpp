#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>

#include "wavekit/core/grid.hpp"

namespace wavekit {

namespace io {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> buf;
  std::memcpy(buf.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  os.write(buf.data(), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
  std::array<char, sizeof(T)> buf;
  if (!is.read(buf.data(), sizeof(T))) throw std::runtime_error("unexpected end of file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  T value;
  std::memcpy(&value, buf.data(), sizeof(T));
  return value;
}

inline void expect_magic(std::istream& is, const char (&magic)[5], const std::string& what) {
  char got[4];
  if (!is.read(got, 4) || std::memcmp(got, magic, 4) != 0) {
    throw std::runtime_error(what + ": bad magic, expected " + std::string(magic, 4));
  }
}

}  // namespace io

// WKF1 record: 32-byte header
//   [0,4)   magic "WKF1"
//   [4,8)   u32 nx
//   [8,12)  u32 ny
//   [12,20) f64 hx
//   [20,28) f64 hy
//   [28]    u8 dtype (0 = real f64, 1 = complex f64 interleaved re/im)
//   [29,32) zero padding
// followed by nx*ny (real) or 2*nx*ny (complex) little-endian f64 values, row-major.

inline constexpr std::size_t kFieldHeaderBytes = 32;

enum class FieldDtype : std::uint8_t { Real = 0, Complex = 1 };

inline void write_field_header(std::ostream& os, const RegularGrid2D& g, FieldDtype dtype) {
  os.write("WKF1", 4);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.nx));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.ny));
  io::write_le<double>(os, g.hx);
  io::write_le<double>(os, g.hy);
  io::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(dtype));
  const char pad[3] = {0, 0, 0};
  os.write(pad, 3);
}

inline void write_field(std::ostream& os, const RealField& f) {
  write_field_header(os, f.grid, FieldDtype::Real);
  for (double v : f.values) io::write_le<double>(os, v);
}

inline void write_field(std::ostream& os, const ComplexField& f) {
  write_field_header(os, f.grid, FieldDtype::Complex);
  for (const cplx& z : f.values) {
    io::write_le<double>(os, z.real());
    io::write_le<double>(os, z.imag());
  }
}

using AnyField = std::variant<RealField, ComplexField>;

inline AnyField read_field(std::istream& is) {
  io::expect_magic(is, "WKF1", "read_field");
  const auto nx = io::read_le<std::uint32_t>(is);
  const auto ny = io::read_le<std::uint32_t>(is);
  const double hx = io::read_le<double>(is);
  const double hy = io::read_le<double>(is);
  const auto dtype = io::read_le<std::uint8_t>(is);
  char pad[3];
  if (!is.read(pad, 3)) throw std::runtime_error("read_field: truncated header");
  const RegularGrid2D g(static_cast<int>(nx), static_cast<int>(ny), hx, hy);
  if (dtype == static_cast<std::uint8_t>(FieldDtype::Real)) {
    RealField f(g);
    for (double& v : f.values) v = io::read_le<double>(is);
    return f;
  }
  if (dtype == static_cast<std::uint8_t>(FieldDtype::Complex)) {
    ComplexField f(g);
    for (cplx& z : f.values) {
      const double re = io::read_le<double>(is);
      const double im = io::read_le<double>(is);
      z = {re, im};
    }
    return f;
  }
  throw std::runtime_error("read_field: unknown dtype " + std::to_string(dtype));
}

inline RealField read_real_field(std::istream& is) {
  auto f = read_field(is);
  if (!std::holds_alternative<RealField>(f)) throw std::runtime_error("expected a real field");
  return std::get<RealField>(std::move(f));
}

inline ComplexField read_complex_field(std::istream& is) {
  auto f = read_field(is);
  if (!std::holds_alternative<ComplexField>(f)) throw std::runtime_error("expected a complex field");
  return std::get<ComplexField>(std::move(f));
}

inline void save_field(const std::string& path, const RealField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_field(os, f);
}

inline void save_field(const std::string& path, const ComplexField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_field(os, f);
}

inline AnyField load_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_field(is);
}

}  // namespace wavekit
