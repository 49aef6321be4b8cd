#include "reachpred/vf_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace reachpred {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get(std::istream& is, const char* field) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw FormatError(std::string("HJVF: truncated while reading ") + field);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_value_function(std::ostream& os, const ValueFunction& vf) {
  os.write("HJVF", 4);
  put<std::uint32_t>(os, kHjvfVersion);
  put<std::uint8_t>(os, static_cast<std::uint8_t>(vf.kind));
  for (auto d : vf.grid.dims) put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  for (auto m : vf.grid.mins) put<double>(os, m);
  for (auto m : vf.grid.maxs) put<double>(os, m);
  put<double>(os, vf.params.speed);
  put<double>(os, vf.params.omega_min);
  put<double>(os, vf.params.omega_max);
  put<double>(os, vf.capture_radius);
  for (double v : vf.values) put<double>(os, v);
}

ValueFunction read_value_function(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "HJVF", 4) != 0) throw FormatError("HJVF: bad magic");
  const auto version = get<std::uint32_t>(is, "version");
  if (version != kHjvfVersion) throw FormatError("HJVF: unsupported version " + std::to_string(version));
  ValueFunction vf;
  const auto kind = get<std::uint8_t>(is, "kind");
  if (kind > 1) throw FormatError("HJVF: bad kind");
  vf.kind = static_cast<TubeKind>(kind);
  std::array<std::size_t, 3> dims{};
  for (auto& d : dims) d = get<std::uint32_t>(is, "dims");
  std::array<double, 3> mins{}, maxs{};
  for (auto& m : mins) m = get<double>(is, "mins");
  for (auto& m : maxs) m = get<double>(is, "maxs");
  try {
    vf.grid = Grid3::make(mins, maxs, dims);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("HJVF: ") + e.what());
  }
  vf.params.speed = get<double>(is, "speed");
  vf.params.omega_min = get<double>(is, "omega_min");
  vf.params.omega_max = get<double>(is, "omega_max");
  vf.capture_radius = get<double>(is, "capture_radius");
  vf.values.resize(vf.grid.size());
  for (auto& v : vf.values) {
    v = get<double>(is, "values");
    if (!std::isfinite(v)) throw FormatError("HJVF: non-finite node value");
  }
  return vf;
}

void save_value_function(const std::filesystem::path& path, const ValueFunction& vf) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_value_function(os, vf);
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

ValueFunction load_value_function(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_value_function(is);
}

}  // namespace reachpred
