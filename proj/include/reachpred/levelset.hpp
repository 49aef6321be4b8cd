#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "reachpred/dynamics.hpp"
#include "reachpred/grid.hpp"

namespace reachpred {

double signed_distance_danger_zone(const RelativeState& x, double capture_radius);

struct BrsOptions {
  double capture_radius = 3.0;
  double tol = 1e-3;
  int max_iters = 2000;
  double cfl = 0.5;
};

struct BrsResult {
  ValueFunction vf;
  int iterations = 0;
  bool converged = false;
  /// Max pointwise change of the last iteration.
  double residual = 0.0;
  double dt = 0.0;
};

class GridTooSmall : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Infinite-horizon backward reachable tube of the pairwise collision game in
/// relative coordinates. The reference vehicle (whose body frame holds the
/// state) avoids; the observed vehicle pursues. Non-convergence is reported
/// through BrsResult::converged, not thrown.
BrsResult solve_brs(const Grid3& grid, const DubinsParams& params, const BrsOptions& opts = {});

struct BoundedInterval {
  double lo = 0.0;
  double hi = 0.0;

  void validate(const DubinsParams& params) const;
  bool operator==(const BoundedInterval&) const = default;
  auto operator<=>(const BoundedInterval&) const = default;
};

struct ScheduleEntry {
  double duration = 0.0;
  BoundedInterval bounds;

  bool operator==(const ScheduleEntry&) const = default;
  auto operator<=>(const ScheduleEntry&) const = default;
};

using TubeSchedule = std::vector<ScheduleEntry>;

struct FrsOptions {
  /// Initial-set radius in grid cells.
  double initial_radius_cells = 3.0;
  /// Longest semi-Lagrangian step; each interval is split evenly.
  double max_step = 0.2;
  /// Intermediate times per step folded into the tube.
  int tube_samples = 1;
  /// Turn rates tried inside each interval: its end points plus this lattice.
  double control_lattice = 0.05;
};

/// Signed distance (length units) to the initial ball around `initial`; the ball
/// is measured in cell-normalized coordinates on every axis.
std::vector<double> initial_ball(const Grid3& grid, const VehicleState& initial, double radius_cells);

/// Forward reachable tube in absolute (x, y, psi) coordinates: union over the
/// whole schedule of the states reachable from the initial ball.
ValueFunction solve_frs(const Grid3& grid, const VehicleState& initial, const TubeSchedule& schedule,
                        const DubinsParams& params = {}, const FrsOptions& opts = {});

/// Reachable sets at the interval boundaries t_0 .. t_T (no union over time).
std::vector<ValueFunction> solve_frs_slices(const Grid3& grid, const VehicleState& initial,
                                            const TubeSchedule& schedule,
                                            const DubinsParams& params = {},
                                            const FrsOptions& opts = {});

/// Off-grid states are reported as not contained.
Lookup contains_lookup(const ValueFunction& vf, const VehicleState& s);
bool contains_state(const ValueFunction& vf, const VehicleState& s);

struct SubsetReport {
  bool ok = true;
  std::size_t violations = 0;
  /// First few offending node indices.
  std::vector<std::size_t> offending;
};

SubsetReport subset_report(const ValueFunction& inner, const ValueFunction& outer, double tol);
bool is_subset(const ValueFunction& inner, const ValueFunction& outer, double tol);

}  // namespace reachpred
