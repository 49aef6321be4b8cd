#include "reachpred/grid.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <stdexcept>

namespace reachpred {

Grid3 Grid3::make(std::array<double, 3> mins, std::array<double, 3> maxs,
                  std::array<std::size_t, 3> dims) {
  Grid3 g;
  g.mins = mins;
  g.maxs = maxs;
  g.dims = dims;
  g.validate();
  return g;
}

Grid3 Grid3::centered(double half_width, std::size_t n_xy, std::size_t n_theta) {
  return make({-half_width, -half_width, -kPi}, {half_width, half_width, kPi}, {n_xy, n_xy, n_theta});
}

void Grid3::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 3) throw std::invalid_argument("Grid3: need at least 3 nodes per axis");
    if (!(maxs[a] > mins[a])) throw std::invalid_argument("Grid3: maxs must exceed mins");
  }
  if (periodic[0] || periodic[1] || !periodic[2])
    throw std::invalid_argument("Grid3: only the heading axis may be periodic");
  if (std::abs(mins[2] + kPi) > 1e-12 || std::abs(maxs[2] - kPi) > 1e-12)
    throw std::invalid_argument("Grid3: periodic heading axis must span [-pi, pi)");
}

double Grid3::spacing(int axis) const {
  const double span = maxs[axis] - mins[axis];
  return periodic[axis] ? span / static_cast<double>(dims[axis])
                        : span / static_cast<double>(dims[axis] - 1);
}

double Grid3::coord(int axis, std::size_t i) const {
  return mins[axis] + static_cast<double>(i) * spacing(axis);
}

std::array<std::size_t, 3> Grid3::unravel(std::size_t idx) const {
  const std::size_t k = idx % dims[2];
  const std::size_t j = (idx / dims[2]) % dims[1];
  const std::size_t i = idx / (dims[2] * dims[1]);
  return {i, j, k};
}

double Grid3::cell() const { return std::min(spacing(0), spacing(1)); }

Grid3 grid_preset(const std::string& spec) {
  if (spec == "default") return Grid3::centered(20.0, 81, 40);
  if (spec == "coarse") return Grid3::centered(20.0, 41, 20);
  if (spec == "fine") return Grid3::centered(20.0, 161, 80);
  if (spec == "frs") return Grid3::centered(12.0, 61, 40);
  static const std::regex custom(R"((\d+)x(\d+)x(\d+)@([0-9]*\.?[0-9]+))");
  std::smatch m;
  if (std::regex_match(spec, m, custom)) {
    const double hw = std::stod(m[4]);
    return Grid3::make({-hw, -hw, -kPi}, {hw, hw, kPi},
                       {std::stoul(m[1]), std::stoul(m[2]), std::stoul(m[3])});
  }
  throw std::invalid_argument("unknown grid spec '" + spec + "'");
}

namespace {

// Fractional node positions within rounding of an integer are snapped so that
// node queries return stored values exactly.
double snap(double f) {
  const double r = std::round(f);
  return std::abs(f - r) < 1e-9 ? r : f;
}

struct AxisWeight {
  std::size_t lo;
  std::size_t hi;
  double t;
};

AxisWeight locate_linear(const Grid3& g, int axis, double q, bool& in_bounds) {
  const double h = g.spacing(axis);
  const std::size_t n = g.dims[axis];
  if (q < g.mins[axis] || q > g.maxs[axis]) {
    in_bounds = false;
    q = std::clamp(q, g.mins[axis], g.maxs[axis]);
  }
  const double f = snap((q - g.mins[axis]) / h);
  auto lo = static_cast<std::size_t>(std::floor(f));
  if (lo >= n - 1) lo = n - 2;
  return {lo, lo + 1, std::clamp(f - static_cast<double>(lo), 0.0, 1.0)};
}

AxisWeight locate_periodic(const Grid3& g, double q) {
  const double h = g.spacing(2);
  const std::size_t n = g.dims[2];
  const double f = snap((wrap_angle(q) - g.mins[2]) / h);
  auto lo = static_cast<std::size_t>(std::floor(f));
  if (lo >= n) lo = n - 1;
  return {lo, (lo + 1) % n, std::clamp(f - static_cast<double>(lo), 0.0, 1.0)};
}

}  // namespace

Lookup value_at(const ValueFunction& vf, double x, double y, double theta) {
  const Grid3& g = vf.grid;
  bool in = true;
  const AxisWeight ax = locate_linear(g, 0, x, in);
  const AxisWeight ay = locate_linear(g, 1, y, in);
  const AxisWeight at = locate_periodic(g, theta);

  auto lerp = [](double a, double b, double t) { return a + t * (b - a); };
  auto plane = [&](std::size_t k) {
    const double v0 = lerp(vf.at(ax.lo, ay.lo, k), vf.at(ax.hi, ay.lo, k), ax.t);
    const double v1 = lerp(vf.at(ax.lo, ay.hi, k), vf.at(ax.hi, ay.hi, k), ax.t);
    return lerp(v0, v1, ay.t);
  };
  return {lerp(plane(at.lo), plane(at.hi), at.t), in};
}

std::array<double, 3> gradient_at(const ValueFunction& vf, double x, double y, double theta) {
  std::array<double, 3> h{vf.grid.spacing(0) * 0.5, vf.grid.spacing(1) * 0.5, vf.grid.spacing(2) * 0.5};
  return {
      (value_at(vf, x + h[0], y, theta).value - value_at(vf, x - h[0], y, theta).value) / (2 * h[0]),
      (value_at(vf, x, y + h[1], theta).value - value_at(vf, x, y - h[1], theta).value) / (2 * h[1]),
      (value_at(vf, x, y, theta + h[2]).value - value_at(vf, x, y, theta - h[2]).value) / (2 * h[2]),
  };
}

}  // namespace reachpred
