#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "reachpred/grid.hpp"

namespace reachpred {

/// Binary value-function container ("HJVF", little-endian):
///   magic[4] "HJVF" | version u32 | kind u8 | dims 3 x u32 | mins 3 x f64 | maxs 3 x f64
///   | speed, omega_min, omega_max f64 | capture_radius f64 | values f64 (row-major, x slowest)
inline constexpr std::uint32_t kHjvfVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_value_function(std::ostream& os, const ValueFunction& vf);
ValueFunction read_value_function(std::istream& is);

void save_value_function(const std::filesystem::path& path, const ValueFunction& vf);
ValueFunction load_value_function(const std::filesystem::path& path);

}  // namespace reachpred
