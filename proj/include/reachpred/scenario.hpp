#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "reachpred/dynamics.hpp"
#include "reachpred/features.hpp"
#include "reachpred/grid.hpp"
#include "reachpred/learn.hpp"

namespace reachpred {

inline constexpr double kSampleDt = 0.2;
inline constexpr double kSceneDuration = 10.0;
inline constexpr double kCaptureRadius = 3.0;

struct Scene {
  VehicleState human0;
  VehicleState robot0;
  Point2 goal;
  double duration = kSceneDuration;
  std::uint64_t seed = 0;
};

struct SceneOptions {
  double arena = 25.0;
  double goal_distance = 20.0;
  double capture_radius = kCaptureRadius;
  double min_start_separation = 10.0;
  int max_rejections = 10000;
  DubinsParams params;
};

class SceneSamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Scene generate_scene(std::uint64_t seed, const SceneOptions& opts = {});

/// Minimum separation over [0, duration] if both vehicles drive straight.
double straight_min_separation(const Scene& scene, const DubinsParams& params = {});

struct Sample {
  int step = 0;
  double t = 0.0;
  VehicleState human;
  VehicleState robot;
  double u = 0.0;
};

struct Trajectory {
  std::vector<Sample> samples;
  double dt = kSampleDt;

  std::size_t size() const { return samples.size(); }
  /// The robot reaches its goal at the final sample.
  Point2 robot_goal() const;
};

/// Human turn rate given the current joint state and step index.
using HumanController = std::function<double(const VehicleState& human, const VehicleState& robot, int step)>;

/// Records one sample per step from t = 0 to t = duration inclusive; the control
/// queried at the final state is recorded but not applied.
Trajectory simulate_episode(const Scene& scene, const HumanController& human, double dt = kSampleDt,
                            const DubinsParams& params = {});

/// Replays recorded controls.
HumanController replay_controller(const Trajectory& recorded);

/// The human's own safety level: V with the human as the avoiding vehicle.
double human_safety(const ValueFunction& vf, const VehicleState& human, const VehicleState& robot);

struct SyntheticHumanPolicy {
  double tau = 1.0;          // start avoiding below this safety value
  double tau_release = 2.0;  // stop avoiding above this one
  double eta = 0.0;          // probability of a uniformly random control
  std::uint64_t seed = 0;

  void validate() const;
};

/// Hysteresis automaton standing in for a human subject.
class SyntheticHuman {
 public:
  SyntheticHuman(SyntheticHumanPolicy policy, const ValueFunction& vf, const DubinsParams& params = {},
                 double dt = kSampleDt);

  Action act(const VehicleState& human, const VehicleState& robot);
  /// Clears the hysteresis flag; the noise stream continues.
  void reset() { avoiding_ = false; }
  bool avoiding() const { return avoiding_; }
  const SyntheticHumanPolicy& policy() const { return policy_; }

 private:
  SyntheticHumanPolicy policy_;
  const ValueFunction* vf_;
  DubinsParams params_;
  double dt_;
  bool avoiding_ = false;
  std::mt19937_64 rng_;
};

struct PolicyRanges {
  double tau_min = 0.5;
  double tau_max = 2.0;
  double release_gap = 1.0;
  double eta_min = 0.05;
  double eta_max = 0.2;
};

struct SubjectData {
  std::string subject_id;
  SyntheticHumanPolicy policy;
  std::vector<std::uint64_t> scene_seeds;
  std::vector<Trajectory> trajectories;
};

std::vector<SubjectData> make_dataset(int scenes, int subjects, const PolicyRanges& ranges, std::uint64_t seed,
                                      const ValueFunction& vf, const DubinsParams& params = {});

/// Labeled rows for one feature set; the trajectory index becomes the row's fold group.
Dataset to_dataset(const std::vector<Trajectory>& trajectories, const ValueFunction* vf, FeatureSetId layout,
                   Task task, const std::string& subject_id = {});

}  // namespace reachpred
