#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "reachpred/dynamics.hpp"

namespace reachpred {

/// Regular 3D grid. Axis 2 (heading) is periodic over [-pi, pi); the node at
/// +pi is not stored. Non-periodic axes include both end points.
struct Grid3 {
  std::array<double, 3> mins{};
  std::array<double, 3> maxs{};
  std::array<std::size_t, 3> dims{};
  std::array<bool, 3> periodic{false, false, true};

  static Grid3 make(std::array<double, 3> mins, std::array<double, 3> maxs,
                    std::array<std::size_t, 3> dims);
  /// Square spatial box [-half_width, half_width]^2 with a full periodic heading axis.
  static Grid3 centered(double half_width, std::size_t n_xy, std::size_t n_theta);

  void validate() const;
  std::size_t size() const { return dims[0] * dims[1] * dims[2]; }
  double spacing(int axis) const;
  double coord(int axis, std::size_t i) const;
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * dims[1] + j) * dims[2] + k;
  }
  std::array<std::size_t, 3> unravel(std::size_t idx) const;
  /// Smallest spatial cell size.
  double cell() const;

  bool operator==(const Grid3&) const = default;
};

/// Named presets used across tools: "default" (81x81x40 over [-20,20]^2),
/// "coarse" (41x41x20), "fine" (161x161x80), "frs" (61x61x40 over [-12,12]^2),
/// or an explicit "NXxNYxNT@HALFWIDTH".
Grid3 grid_preset(const std::string& spec);

enum class TubeKind : unsigned char { backward = 0, forward = 1 };

struct ValueFunction {
  Grid3 grid;
  std::vector<double> values;
  TubeKind kind = TubeKind::backward;
  DubinsParams params;
  double capture_radius = 3.0;
  /// Unset means solved to convergence.
  std::optional<double> horizon;

  double at(std::size_t i, std::size_t j, std::size_t k) const { return values[grid.index(i, j, k)]; }
};

struct Lookup {
  double value = 0.0;
  bool in_bounds = true;
};

/// Trilinear interpolation, periodic on the heading axis. Queries outside the
/// spatial box are clamped to the boundary and flagged.
Lookup value_at(const ValueFunction& vf, double x, double y, double theta);
inline Lookup value_at(const ValueFunction& vf, const RelativeState& s) {
  return value_at(vf, s.xr, s.yr, s.thetar);
}

/// Central-difference gradient of the interpolant.
std::array<double, 3> gradient_at(const ValueFunction& vf, double x, double y, double theta);

}  // namespace reachpred
