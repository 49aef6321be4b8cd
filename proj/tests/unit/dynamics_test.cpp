#include <cmath>
#include <random>

#include "doctest.h"
#include "reachpred/dynamics.hpp"

using namespace reachpred;
using doctest::Approx;

namespace {

// Forward Euler with many substeps; independent of the closed-form arc.
VehicleState euler(VehicleState s, double omega, double T, int n, double v = 2.0) {
  const double h = T / n;
  for (int i = 0; i < n; ++i) {
    s.px += v * std::cos(s.psi) * h;
    s.py += v * std::sin(s.psi) * h;
    s.psi += omega * h;
  }
  return s;
}

}  // namespace

TEST_CASE("step_vehicle straight motion") {
  auto s = step_vehicle({0, 0, 0}, {0.0}, 0.2);
  CHECK(s.px == Approx(0.4));
  CHECK(s.py == Approx(0.0));
  CHECK(s.psi == Approx(0.0));

  s = step_vehicle({0, 0, kPi / 2}, {0.0}, 0.2);
  CHECK(s.px == Approx(0.0).epsilon(1e-12));
  CHECK(s.py == Approx(0.4));
  CHECK(s.psi == Approx(kPi / 2));
}

TEST_CASE("step_vehicle max turn matches closed form and fine Euler") {
  const auto s = step_vehicle({0, 0, 0}, {0.5}, 1.0);
  CHECK(s.px == Approx(4.0 * std::sin(0.5)));
  CHECK(s.py == Approx(4.0 * (1.0 - std::cos(0.5))));
  CHECK(s.psi == Approx(0.5));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(-10, 10), ang(-kPi, kPi), om(-0.5, 0.5);
  for (int i = 0; i < 20; ++i) {
    VehicleState s0{pos(rng), pos(rng), ang(rng)};
    const double w = om(rng);
    const auto a = step_vehicle(s0, {w}, 0.7);
    const auto e = euler(s0, w, 0.7, 200000);
    CHECK(a.px == Approx(e.px).epsilon(1e-5));
    CHECK(a.py == Approx(e.py).epsilon(1e-5));
    CHECK(std::abs(wrap_angle(a.psi - e.psi)) < 1e-9);
  }
}

TEST_CASE("step_vehicle rejects bad input") {
  CHECK_THROWS_AS(step_vehicle({}, {0.6}, 0.2), ControlOutOfBounds);
  CHECK_THROWS_AS(step_vehicle({}, {0.0}, 0.0), std::invalid_argument);
}

TEST_CASE("relative_state examples") {
  auto r = relative_state({1, 2, 0.3}, {1, 2, 0.3});
  CHECK(r.xr == Approx(0.0));
  CHECK(r.yr == Approx(0.0));
  CHECK(r.thetar == Approx(0.0));

  r = relative_state({1, 0, 0}, {0, 0, 0});
  CHECK(r.xr == Approx(1.0));
  CHECK(r.yr == Approx(0.0));

  r = relative_state({0, 1, 0}, {0, 0, kPi / 2});
  CHECK(r.xr == Approx(1.0));
  CHECK(r.yr == Approx(0.0).epsilon(1e-12));
  CHECK(r.thetar == Approx(-kPi / 2));
}

TEST_CASE("invert_relative round trip") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(-10, 10), ang(-kPi, kPi);
  for (int i = 0; i < 50; ++i) {
    VehicleState a{pos(rng), pos(rng), ang(rng)}, b{pos(rng), pos(rng), ang(rng)};
    const auto ab = relative_state(a, b);
    const auto ba = invert_relative(ab);
    const auto direct = relative_state(b, a);
    CHECK(ba.xr == Approx(direct.xr));
    CHECK(ba.yr == Approx(direct.yr));
    CHECK(std::abs(wrap_angle(ba.thetar - direct.thetar)) < 1e-12);
  }
}

TEST_CASE("relative_rhs examples") {
  auto d = relative_rhs({0, 0, 0}, {0.0}, {0.0});
  CHECK(d.dxr == Approx(0.0));
  CHECK(d.dyr == Approx(0.0));
  CHECK(d.dthetar == Approx(0.0));

  d = relative_rhs({0, 0, kPi}, {0.0}, {0.0});
  CHECK(d.dxr == Approx(-4.0));
  CHECK(d.dyr == Approx(0.0).epsilon(1e-12));

  d = relative_rhs({0, 1, 0}, {0.5}, {0.0});
  CHECK(d.dxr == Approx(0.5));
  CHECK(d.dyr == Approx(0.0));
  CHECK(d.dthetar == Approx(-0.5));
}

TEST_CASE("relative_rhs agrees with differencing relative_state along motion") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> pos(-8, 8), ang(-kPi, kPi), om(-0.5, 0.5);
  const double h = 1e-6;
  for (int i = 0; i < 30; ++i) {
    VehicleState self{pos(rng), pos(rng), ang(rng)}, other{pos(rng), pos(rng), ang(rng)};
    const double ws = om(rng), wo = om(rng);
    const auto x0 = relative_state(other, self);
    const auto x1 = relative_state(step_vehicle(other, {wo}, h), step_vehicle(self, {ws}, h));
    const auto d = relative_rhs(x0, {ws}, {wo});
    CHECK((x1.xr - x0.xr) / h == Approx(d.dxr).epsilon(1e-4));
    CHECK((x1.yr - x0.yr) / h == Approx(d.dyr).epsilon(1e-4));
    CHECK(wrap_angle(x1.thetar - x0.thetar) / h == Approx(d.dthetar).epsilon(1e-4));
  }
}

TEST_CASE("robot_policy proportional with saturation") {
  CHECK(robot_policy({0, 0, 0}, {10, 0}).omega == Approx(0.0));
  CHECK(robot_policy({0, 0, 0}, {std::cos(0.1), std::sin(0.1)}).omega == Approx(0.1));
  CHECK(robot_policy({0, 0, 0}, {0, 5}).omega == Approx(0.5));
  CHECK(robot_policy({0, 0, 0}, {0, -5}).omega == Approx(-0.5));
}

TEST_CASE("actions and angle wrapping") {
  CHECK(action_omega(Action::left) == 0.5);
  CHECK(action_omega(Action::straight) == 0.0);
  CHECK(action_omega(Action::right) == -0.5);
  for (Action a : kActions) CHECK(action_from_omega(action_omega(a)) == a);
  CHECK_THROWS_AS(action_from_omega(0.25), std::invalid_argument);
  CHECK(wrap_angle(kPi) == Approx(-kPi));
  CHECK(wrap_angle(3 * kPi / 2) == Approx(-kPi / 2));
  CHECK(wrap_angle(-kPi) == Approx(-kPi));
}
