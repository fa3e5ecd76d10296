#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include "wavekit/core/field_io.hpp"
#include "wavekit/nn/encoder_solver.hpp"

namespace wavekit::nn {

// WKW1 checkpoint:
//   magic "WKW1", u32 levels, u32 base_width, u32 blocks, u32 reserved,
//   u64 encoder count, u64 solver count,
//   encoder then solver parameters as little-endian f64 in declaration order.

template <class T>
void write_checkpoint(std::ostream& os, const EncoderSolver<T>& net) {
  os.write("WKW1", 4);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(net.arch().levels));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(net.arch().base_width));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(net.arch().blocks));
  io::write_le<std::uint32_t>(os, 0);
  io::write_le<std::uint64_t>(os, net.encoder_params().size());
  io::write_le<std::uint64_t>(os, net.solver_params().size());
  for (T v : net.encoder_params()) io::write_le<double>(os, static_cast<double>(v));
  for (T v : net.solver_params()) io::write_le<double>(os, static_cast<double>(v));
}

template <class T>
EncoderSolver<T> read_checkpoint(std::istream& is) {
  io::expect_magic(is, "WKW1", "checkpoint");
  Architecture arch;
  arch.levels = static_cast<int>(io::read_le<std::uint32_t>(is));
  arch.base_width = static_cast<int>(io::read_le<std::uint32_t>(is));
  arch.blocks = static_cast<int>(io::read_le<std::uint32_t>(is));
  io::read_le<std::uint32_t>(is);
  EncoderSolver<T> net(arch);
  const auto ne = io::read_le<std::uint64_t>(is);
  const auto ns = io::read_le<std::uint64_t>(is);
  if (ne != net.encoder_params().size() || ns != net.solver_params().size()) {
    throw std::runtime_error("checkpoint: parameter counts " + std::to_string(ne) + "/" + std::to_string(ns) +
                             " do not match the declared architecture");
  }
  for (T& v : net.encoder_params()) v = static_cast<T>(io::read_le<double>(is));
  for (T& v : net.solver_params()) v = static_cast<T>(io::read_le<double>(is));
  if (!net.finite()) throw std::runtime_error("checkpoint: non-finite parameters");
  return net;
}

template <class T>
void save_checkpoint(const std::string& path, const EncoderSolver<T>& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_checkpoint(os, net);
}

template <class T>
EncoderSolver<T> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_checkpoint<T>(is);
}

}  // namespace wavekit::nn
