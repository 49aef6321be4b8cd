#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "reachpred/dynamics.hpp"
#include "reachpred/grid.hpp"
#include "reachpred/learn.hpp"
#include "reachpred/levelset.hpp"
#include "reachpred/scenario.hpp"

namespace reachpred {

struct ShfrsConfig {
  int horizon = 10;
  double dt = 0.2;
  std::vector<double> epsilons{0.0, 0.15, 0.25, 0.4, 1.0};
  /// Top-k count per prediction step; empty means 2, 2, then 1.
  std::vector<int> ks;
  /// Reported target for p of the innermost region.
  double p_floor = 0.75;
  /// Check membership against the per-step sets instead of the tube.
  bool slices = false;
  FrsOptions frs;

  int regions() const { return static_cast<int>(epsilons.size()); }
  int k_at(int step) const;
  void validate() const;
};

std::vector<int> default_ks(int horizon);

/// Probabilities of (left, straight, right).
using ActionProbs = std::array<double, 3>;
/// Receives the joint states seen so far, oldest first; never empty.
using Predictor = std::function<ActionProbs(std::span<const JointState> history)>;

/// Wraps a three-class model; features come from the latest joint state.
Predictor model_predictor(const Classifier& model, const ValueFunction* vf);

/// Highest probabilities first; ties go left, straight, right.
std::vector<Action> top_k(const ActionProbs& p, int k);

struct BoundSchedule {
  double dt = 0.2;
  /// bounds[j][i]: region j, step i.
  std::vector<std::vector<BoundedInterval>> bounds;

  int regions() const { return static_cast<int>(bounds.size()); }
  int steps() const { return bounds.empty() ? 0 : static_cast<int>(bounds.front().size()); }
  TubeSchedule tube(int region) const;
  /// Throws unless every step is nested across regions.
  void check_nested() const;
};

BoundSchedule algorithm1_bounds(std::span<const JointState> history, const Predictor& predictor,
                                const ShfrsConfig& config, Point2 robot_goal, const DubinsParams& params = {});

/// Coordinates relative to `anchor` (anchor at the origin, heading 0).
VehicleState to_anchor_frame(const VehicleState& anchor, const VehicleState& s);

struct Shfrs {
  ShfrsConfig config;
  BoundSchedule schedule;
  /// World state the sets are built around; tubes live in its frame.
  VehicleState anchor;
  std::vector<ValueFunction> tubes;
  /// Per node: 1-based region of the innermost tube containing it, 0 outside.
  std::vector<std::uint8_t> region;
  std::vector<SubsetReport> nesting;
  bool nested = true;

  std::vector<std::size_t> region_sizes() const;
  /// Innermost region containing a world state, 0 if none or off-grid.
  int region_of(const VehicleState& world) const;
};

class NestingError : public std::runtime_error {
 public:
  NestingError(const std::string& what, std::vector<SubsetReport> reports)
      : std::runtime_error(what), reports(std::move(reports)) {}
  std::vector<SubsetReport> reports;
};

/// Anchor-frame tubes keyed by schedule, for one grid and one set of solver
/// options. Oldest entries are dropped past `capacity`.
class TubeCache {
 public:
  explicit TubeCache(std::size_t capacity = 64) : capacity_(capacity) {}
  std::optional<ValueFunction> get(const Grid3& grid, const TubeSchedule& s);
  void put(const TubeSchedule& s, const ValueFunction& vf);

 private:
  std::size_t capacity_;
  std::mutex mu_;
  std::map<TubeSchedule, std::pair<std::uint64_t, ValueFunction>> entries_;
  std::uint64_t tick_ = 0;
};

/// Nesting is checked at one cell of tolerance. A failure is recorded in the
/// result and, with `strict`, thrown.
Shfrs build_shfrs(const BoundSchedule& schedule, const VehicleState& human_now, const ShfrsConfig& config,
                  const Grid3& grid, const DubinsParams& params = {}, bool strict = false,
                  TubeCache* cache = nullptr);

struct ProbabilityEstimate {
  std::vector<double> p;
  /// Same, over anchors whose states all lie on the grid.
  std::vector<double> p_on_grid;
  std::vector<std::size_t> contained;
  std::size_t anchors = 0;
  std::size_t anchors_on_grid = 0;
  std::size_t states_checked = 0;
  std::size_t states_off_grid = 0;
  std::size_t skipped_trajectories = 0;
  std::size_t unique_tubes = 0;
  bool monotone = true;

  double off_grid_fraction() const {
    return states_checked ? static_cast<double>(states_off_grid) / static_cast<double>(states_checked) : 0.0;
  }
};

/// Empirical containment frequency of each region over every window of
/// horizon + 1 samples. Trajectories shorter than that are skipped.
ProbabilityEstimate estimate_probabilities(const std::vector<Trajectory>& trajectories, const Predictor& predictor,
                                           const ShfrsConfig& config, const Grid3& grid,
                                           const DubinsParams& params = {});

/// Heading-minimum projection on a world-aligned raster centered at the anchor.
struct RegionRaster {
  std::size_t width = 0;
  std::size_t height = 0;
  /// Row 0 is the top (largest y).
  std::vector<std::uint8_t> pixels;
  /// col = a*x + b*y + c, row = d*x + e*y + f.
  std::array<double, 6> world_to_pixel{};
};

RegionRaster project_regions(const Shfrs& s);
std::string to_pgm(const RegionRaster& r);
nlohmann::json raster_json(const RegionRaster& r);

nlohmann::json to_json(const ShfrsConfig& c);
ShfrsConfig shfrs_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BoundSchedule& s);
nlohmann::json to_json(const ProbabilityEstimate& e);

}  // namespace reachpred
