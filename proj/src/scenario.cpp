#include "reachpred/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace reachpred {

namespace {

bool in_arena(double x, double y, double arena) { return std::abs(x) <= arena && std::abs(y) <= arena; }

}  // namespace

double straight_min_separation(const Scene& s, const DubinsParams& params) {
  const double v = params.speed;
  const double px = s.human0.px - s.robot0.px, py = s.human0.py - s.robot0.py;
  const double vx = v * (std::cos(s.human0.psi) - std::cos(s.robot0.psi));
  const double vy = v * (std::sin(s.human0.psi) - std::sin(s.robot0.psi));
  const double vv = vx * vx + vy * vy;
  double t = vv > 0.0 ? -(px * vx + py * vy) / vv : 0.0;
  t = std::clamp(t, 0.0, s.duration);
  return std::hypot(px + vx * t, py + vy * t);
}

Scene generate_scene(std::uint64_t seed, const SceneOptions& opts) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double v = opts.params.speed;
  const double duration = opts.goal_distance / v;
  const double inner = opts.arena - 2.0;

  for (int attempt = 0; attempt < opts.max_rejections; ++attempt) {
    Scene s;
    s.seed = seed;
    s.duration = duration;
    s.robot0 = {(2.0 * unit(rng) - 1.0) * inner, (2.0 * unit(rng) - 1.0) * inner, wrap_angle((2.0 * unit(rng) - 1.0) * kPi)};
    s.goal = {s.robot0.px + opts.goal_distance * std::cos(s.robot0.psi),
              s.robot0.py + opts.goal_distance * std::sin(s.robot0.psi)};
    const double tc = 3.0 + 4.0 * unit(rng);
    const double miss = 0.5 * opts.capture_radius * unit(rng);
    const double miss_dir = (2.0 * unit(rng) - 1.0) * kPi;
    const double hpsi = wrap_angle((2.0 * unit(rng) - 1.0) * kPi);
    if (!in_arena(s.goal.x, s.goal.y, inner)) continue;

    const double cx = s.robot0.px + v * tc * std::cos(s.robot0.psi) + miss * std::cos(miss_dir);
    const double cy = s.robot0.py + v * tc * std::sin(s.robot0.psi) + miss * std::sin(miss_dir);
    s.human0 = {cx - v * tc * std::cos(hpsi), cy - v * tc * std::sin(hpsi), hpsi};
    const double hx1 = s.human0.px + v * duration * std::cos(hpsi);
    const double hy1 = s.human0.py + v * duration * std::sin(hpsi);
    if (!in_arena(s.human0.px, s.human0.py, opts.arena) || !in_arena(hx1, hy1, opts.arena)) continue;
    if (std::hypot(s.human0.px - s.robot0.px, s.human0.py - s.robot0.py) < opts.min_start_separation) continue;
    if (!(straight_min_separation(s, opts.params) < opts.capture_radius)) continue;
    return s;
  }
  throw SceneSamplingError("generate_scene: no valid scene after " + std::to_string(opts.max_rejections) +
                           " rejections");
}

Point2 Trajectory::robot_goal() const {
  if (samples.empty()) throw std::invalid_argument("robot_goal: empty trajectory");
  return {samples.back().robot.px, samples.back().robot.py};
}

Trajectory simulate_episode(const Scene& scene, const HumanController& human, double dt,
                            const DubinsParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_episode: dt must be positive");
  const auto steps = static_cast<int>(std::lround(scene.duration / dt));
  Trajectory traj;
  traj.dt = dt;
  traj.samples.reserve(static_cast<std::size_t>(steps) + 1);
  VehicleState h = scene.human0, r = scene.robot0;
  for (int k = 0; k <= steps; ++k) {
    Sample s{k, static_cast<double>(k) * dt, h, r, human(h, r, k)};
    traj.samples.push_back(s);
    if (k == steps) break;
    const ControlInput ur = robot_policy(r, scene.goal, params);
    h = step_vehicle(h, {s.u}, dt, params);
    r = step_vehicle(r, ur, dt, params);
  }
  return traj;
}

HumanController replay_controller(const Trajectory& recorded) {
  return [&recorded](const VehicleState&, const VehicleState&, int step) {
    return recorded.samples.at(static_cast<std::size_t>(step)).u;
  };
}

double human_safety(const ValueFunction& vf, const VehicleState& human, const VehicleState& robot) {
  return value_at(vf, relative_state(robot, human)).value;
}

void SyntheticHumanPolicy::validate() const {
  if (!(tau < tau_release)) throw std::invalid_argument("SyntheticHumanPolicy: need tau < tau_release");
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("SyntheticHumanPolicy: eta must lie in [0, 1]");
}

SyntheticHuman::SyntheticHuman(SyntheticHumanPolicy policy, const ValueFunction& vf, const DubinsParams& params,
                               double dt)
    : policy_(policy), vf_(&vf), params_(params), dt_(dt), rng_(policy.seed) {
  policy_.validate();
}

Action SyntheticHuman::act(const VehicleState& human, const VehicleState& robot) {
  const double v = human_safety(*vf_, human, robot);
  if (!avoiding_ && v < policy_.tau) avoiding_ = true;
  else if (avoiding_ && v > policy_.tau_release) avoiding_ = false;

  Action a = Action::straight;
  if (avoiding_) {
    const VehicleState r1 = step_vehicle(robot, {0.0}, dt_, params_);
    const double left = human_safety(*vf_, step_vehicle(human, {params_.omega_max}, dt_, params_), r1);
    const double right = human_safety(*vf_, step_vehicle(human, {params_.omega_min}, dt_, params_), r1);
    a = left >= right ? Action::left : Action::right;
  }
  if (policy_.eta > 0.0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng_) < policy_.eta) a = kActions[std::uniform_int_distribution<int>(0, 2)(rng_)];
  }
  return a;
}

std::vector<SubjectData> make_dataset(int scenes, int subjects, const PolicyRanges& ranges, std::uint64_t seed,
                                      const ValueFunction& vf, const DubinsParams& params) {
  if (scenes < 1 || subjects < 1) throw std::invalid_argument("make_dataset: counts must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SubjectData> out;
  for (int s = 0; s < subjects; ++s) {
    SubjectData sd;
    char id[16];
    std::snprintf(id, sizeof id, "S%02d", s + 1);
    sd.subject_id = id;
    sd.policy.tau = ranges.tau_min + (ranges.tau_max - ranges.tau_min) * unit(rng);
    sd.policy.tau_release = sd.policy.tau + ranges.release_gap;
    sd.policy.eta = ranges.eta_min + (ranges.eta_max - ranges.eta_min) * unit(rng);
    sd.policy.seed = rng();
    for (int k = 0; k < scenes; ++k) sd.scene_seeds.push_back(rng());
    out.push_back(std::move(sd));
  }
  for (auto& sd : out) {
    SyntheticHuman human(sd.policy, vf, params);
    for (std::uint64_t scene_seed : sd.scene_seeds) {
      const Scene scene = generate_scene(scene_seed, {.params = params});
      human.reset();
      sd.trajectories.push_back(simulate_episode(
          scene,
          [&](const VehicleState& h, const VehicleState& r, int) { return action_omega(human.act(h, r), params); },
          kSampleDt, params));
    }
  }
  return out;
}

Dataset to_dataset(const std::vector<Trajectory>& trajectories, const ValueFunction* vf, FeatureSetId layout,
                   Task task, const std::string& subject_id) {
  Dataset d;
  d.layout = layout;
  d.task = task;
  d.subject_id = subject_id;
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    for (const auto& s : trajectories[k].samples) {
      d.x.push_back(build_features(s.human, s.robot, vf, layout).values);
      d.y.push_back(class_of(action_from_omega(s.u), task));
      d.traj.push_back(static_cast<int>(k));
    }
  }
  return d;
}

}  // namespace reachpred
