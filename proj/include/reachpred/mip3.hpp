#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "reachpred/dynamics.hpp"
#include "reachpred/grid.hpp"

namespace reachpred {

using Matrix3 = std::array<std::array<double, 3>, 3>;

/// Safety values of every ordered pair; sv[i][j] is vehicle i's safety against j.
struct SafetyTriple {
  Matrix3 sv{};
  double K = 2.0;

  void validate() const;
};

struct RewardMatrix {
  Matrix3 rcm{};
};

struct AvoidAssignment {
  std::array<std::array<std::uint8_t, 3>, 3> ulo{};

  bool operator==(const AvoidAssignment&) const = default;
  auto operator<=>(const AvoidAssignment&) const = default;
  bool feasible() const;
  std::string str() const;  // e.g. "{12,23,31}"
};

/// Cycle pairs (0,1), (1,2), (2,0) in priority order, then their reverses.
inline constexpr std::array<std::array<int, 2>, 6> kPairOrder{{{0, 1}, {1, 2}, {2, 0}, {0, 2}, {1, 0}, {2, 1}}};
inline constexpr std::array<double, 6> kPairWeights{36, 25, 16, 9, 4, 1};

bool cycle_pair_active(const SafetyTriple& s, int pair);  // pair indexes kPairOrder[0..2]
RewardMatrix build_rcm(const SafetyTriple& s);
/// The matrix used when every cycle pair is active.
RewardMatrix rcm_full();

std::vector<AvoidAssignment> enumerate_feasible();
double objective(const RewardMatrix& r, const AvoidAssignment& a);

struct MipSolution {
  AvoidAssignment assignment;
  double objective = 0.0;
};

/// Exhaustive; ties go to the lexicographically smallest assignment.
MipSolution solve_mip(const RewardMatrix& r);

struct DominanceStep {
  int i = 0, j = 0;
  double weight = 0.0;
  /// Best objective of the remaining entries over feasible assignments that keep
  /// the earlier active pairs, leave (i,j) at 0 and use a conflicting entry.
  std::optional<double> rival;
  std::optional<AvoidAssignment> rival_assignment;
  bool ok = true;
};

/// Checks, in priority order, that each active pair outweighs everything it
/// excludes once the earlier active pairs are fixed.
std::vector<DominanceStep> check_dominance(const RewardMatrix& r, const std::vector<std::array<int, 2>>& active);

struct PatternResult {
  std::array<bool, 3> active{};
  Matrix3 sv{};
  RewardMatrix rcm;
  MipSolution optimum;
  std::vector<DominanceStep> dominance;
  bool pass = false;
  std::optional<AvoidAssignment> counterexample;
};

struct TheoremReport {
  double K = 2.0;
  std::vector<PatternResult> patterns;
  bool pass = true;
};

/// Every activity pattern of the cycle pairs; with `sweep_reverse`, each pattern
/// is repeated for reverse-pair safety values below zero, inside and above the band.
TheoremReport verify_theorem(double K = 2.0, bool sweep_reverse = true);

struct ThreeVehicleOptions {
  double K = 2.0;
  double horizon = 30.0;
  double dt = 0.05;
  double capture_radius = 3.0;
  /// Keep every n-th step in the log.
  int log_every = 20;
};

struct ThreeVehicleStep {
  double t = 0.0;
  std::array<VehicleState, 3> states;
  Matrix3 sv{};
  AvoidAssignment ulo;
  std::array<double, 3> omega{};
  double min_separation = 0.0;
};

struct ThreeVehicleResult {
  std::vector<ThreeVehicleStep> log;
  double min_separation = 0.0;
  double min_separation_time = 0.0;
  std::array<int, 2> min_pair{};
  int steps = 0;
  int activations = 0;
  bool safe = true;
};

/// Optimal avoidance turn of `self` against `other` (bang-bang on the gradient).
double avoidance_control(const ValueFunction& vf, const VehicleState& self, const VehicleState& other);

ThreeVehicleResult simulate_three(const std::array<VehicleState, 3>& initial, const std::array<Point2, 3>& goals,
                                  const ValueFunction& vf, const ThreeVehicleOptions& opts = {});

/// Three vehicles on a circle of `radius` facing its center, goals antipodal.
std::pair<std::array<VehicleState, 3>, std::array<Point2, 3>> symmetric_scenario(double radius = 15.0);

nlohmann::json to_json(const AvoidAssignment& a);
nlohmann::json to_json(const TheoremReport& r);
nlohmann::json to_json(const ThreeVehicleResult& r);

}  // namespace reachpred
