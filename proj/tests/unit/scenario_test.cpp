#include <cmath>
#include <sstream>

#include "doctest.h"
#include "reachpred/scenario.hpp"
#include "reachpred/trajectory_io.hpp"
#include "support.hpp"

using namespace reachpred;
using doctest::Approx;

namespace {

std::string bytes(const std::vector<Trajectory>& t) {
  std::ostringstream os;
  write_trajectories(os, t);
  return os.str();
}

double min_sep(const Trajectory& t) {
  double m = 1e300;
  for (const auto& s : t.samples) m = std::min(m, std::hypot(s.human.px - s.robot.px, s.human.py - s.robot.py));
  return m;
}

}  // namespace

TEST_CASE("generated scenes") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Scene s = generate_scene(seed);
    CHECK(std::hypot(s.goal.x - s.robot0.px, s.goal.y - s.robot0.py) == Approx(20.0).epsilon(1e-12));
    CHECK(straight_min_separation(s) < 3.0);
    CHECK(s.seed == seed);
  }
  const Scene a = generate_scene(42), b = generate_scene(42);
  CHECK(a.human0 == b.human0);
  CHECK(a.robot0 == b.robot0);
  CHECK(a.goal.x == b.goal.x);
  CHECK_FALSE(generate_scene(43).human0 == a.human0);
}

TEST_CASE("episodes") {
  const Scene scene = generate_scene(7);
  const auto straight = [](const VehicleState&, const VehicleState&, int) { return 0.0; };
  const Trajectory t = simulate_episode(scene, straight);
  CHECK(t.size() == 51);
  CHECK(t.samples.front().t == 0.0);
  CHECK(t.samples.back().t == Approx(10.0));
  CHECK(min_sep(t) < kCaptureRadius);
  // robot drives at its goal
  CHECK(t.robot_goal().x == Approx(scene.goal.x).epsilon(1e-9));
  CHECK(std::hypot(t.samples.back().robot.px - scene.goal.x, t.samples.back().robot.py - scene.goal.y) < 0.5);

  CHECK(bytes({t}) == bytes({simulate_episode(scene, straight)}));

  const Trajectory weave = simulate_episode(scene, [](const VehicleState&, const VehicleState&, int k) {
    return k % 3 == 0 ? 0.5 : (k % 3 == 1 ? -0.5 : 0.0);
  });
  CHECK(bytes({simulate_episode(scene, replay_controller(weave))}) == bytes({weave}));
}

TEST_CASE("synthetic human decisions") {
  const auto& vf = testing::default_brs();
  SyntheticHumanPolicy p;
  p.tau = 1.0;
  p.tau_release = 2.0;

  SUBCASE("far away goes straight") {
    SyntheticHuman h(p, vf);
    const VehicleState human{0, 0, 0}, robot{-18, 0, 0};
    REQUIRE(human_safety(vf, human, robot) > p.tau_release);
    CHECK(h.act(human, robot) == Action::straight);
  }
  SUBCASE("close threat turns toward the safer side") {
    SyntheticHuman h(p, vf);
    const VehicleState human{0, 0, 0}, robot{6, 1.5, kPi};
    REQUIRE(human_safety(vf, human, robot) < p.tau);
    const VehicleState r1 = step_vehicle(robot, {0.0}, kSampleDt);
    const double left = human_safety(vf, step_vehicle(human, {0.5}, kSampleDt), r1);
    const double right = human_safety(vf, step_vehicle(human, {-0.5}, kSampleDt), r1);
    CHECK(h.act(human, robot) == (left >= right ? Action::left : Action::right));
    CHECK(h.avoiding());
  }
  SUBCASE("safety reads the value function from the human's side") {
    const VehicleState human{1, 2, 0.3}, robot{5, -1, 2.0};
    CHECK(human_safety(vf, human, robot) == value_at(vf, relative_state(robot, human)).value);
  }
  SUBCASE("full noise is uniform") {
    p.eta = 1.0;
    p.seed = 17;
    SyntheticHuman h(p, vf);
    int counts[3] = {0, 0, 0};
    const int n = 10000;
    for (int i = 0; i < n; ++i) ++counts[static_cast<int>(h.act({0, 0, 0}, {-18, 0, 0}))];
    const double sigma = std::sqrt(n * (1.0 / 3) * (2.0 / 3));
    for (int c : counts) CHECK(std::abs(c - n / 3.0) < 3 * sigma);
  }
  CHECK_THROWS_AS(SyntheticHuman({.tau = 2.0, .tau_release = 1.0}, vf), std::invalid_argument);
}

TEST_CASE("synthetic dataset") {
  const auto& vf = testing::default_brs();
  const auto subjects = make_dataset(50, 8, {}, 1, vf);
  REQUIRE(subjects.size() == 8);
  for (const auto& s : subjects) {
    CHECK(s.trajectories.size() == 50);
    CHECK(s.policy.tau >= 0.5);
    CHECK(s.policy.tau <= 2.0);
    CHECK(s.policy.tau_release == Approx(s.policy.tau + 1.0));
    CHECK(s.policy.eta >= 0.05);
    CHECK(s.policy.eta <= 0.2);
    for (const auto& t : s.trajectories)
      for (const auto& smp : t.samples) CHECK((smp.u == 0.5 || smp.u == 0.0 || smp.u == -0.5));
  }
  CHECK(subjects[0].policy.tau != subjects[1].policy.tau);
  CHECK(bytes(subjects[3].trajectories) == bytes(make_dataset(50, 8, {}, 1, vf)[3].trajectories));

  // noise-free identical subjects: each trajectory is a function of its scene alone
  PolicyRanges fixed{.tau_min = 1.0, .tau_max = 1.0, .release_gap = 1.0, .eta_min = 0.0, .eta_max = 0.0};
  const auto same = make_dataset(5, 2, fixed, 9, vf);
  SyntheticHuman replay({.tau = 1.0, .tau_release = 2.0}, vf);
  for (const auto& s : same)
    for (std::size_t k = 0; k < s.scene_seeds.size(); ++k) {
      replay.reset();
      const auto t = simulate_episode(generate_scene(s.scene_seeds[k]), [&](const VehicleState& h, const VehicleState& r,
                                                                           int) { return action_omega(replay.act(h, r)); });
      CHECK(bytes({t}) == bytes({s.trajectories[k]}));
    }

  CHECK_THROWS_AS(make_dataset(50, 0, {}, 1, vf), std::invalid_argument);
}

TEST_CASE("labeled rows") {
  const auto& vf = testing::default_brs();
  const auto subjects = make_dataset(3, 1, {}, 4, vf);
  const auto d = to_dataset(subjects[0].trajectories, &vf, FeatureSetId::Bhrd, Task::exact, "S01");
  CHECK(d.size() == 3 * 51);
  CHECK(d.dims() == 8);
  CHECK(d.traj.front() == 0);
  CHECK(d.traj.back() == 2);
  const auto d2 = to_dataset(subjects[0].trajectories, &vf, FeatureSetId::B, Task::avoid);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(d2.y[i] == (d.y[i] == 1 ? 0 : 1));
}
