#pragma once

// Reference implementations used to check the solvers. None of these call the
// solver code paths they are compared against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "reachpred/dynamics.hpp"
#include "reachpred/grid.hpp"

namespace testing {

using reachpred::VehicleState;

// Bang-bang evader against the value gradient, in the evader's body frame.
inline double evader_turn(const reachpred::ValueFunction& vf, const VehicleState& self, const VehicleState& other) {
  const auto x = reachpred::relative_state(other, self);
  const auto g = reachpred::gradient_at(vf, x.xr, x.yr, x.thetar);
  const double coef = g[0] * x.yr - g[1] * x.xr - g[2];
  return coef >= 0.0 ? vf.params.omega_max : vf.params.omega_min;
}

struct GameOutcome {
  bool captured = false;
  std::size_t rollouts = 0;
  double min_separation = 1e300;
};

// Plays `samples` adversary strategies against the evader from relative state
// (xr, yr, thr). Strategies: piecewise-constant random turns with random switch
// times, and pure pursuit with a random gain and aim noise. Stops at the first
// capture.
inline GameOutcome game_rollouts(const reachpred::ValueFunction& vf, double xr, double yr, double thr,
                                 int samples, std::uint64_t seed, double horizon = 20.0, double dt = 0.05) {
  const auto& p = vf.params;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GameOutcome out;
  const int steps = static_cast<int>(std::lround(horizon / dt));
  for (int s = 0; s < samples; ++s) {
    ++out.rollouts;
    VehicleState self{0, 0, 0};
    VehicleState other{xr, yr, thr};
    const bool pursuit = s % 2 == 1;
    const double gain = 0.5 + 4.0 * unit(rng);
    const double aim = (unit(rng) - 0.5) * 0.6;
    double omega = p.omega_min + (p.omega_max - p.omega_min) * unit(rng);
    double next_switch = 0.0;
    for (int k = 0; k < steps; ++k) {
      const double t = k * dt;
      const double sep = std::hypot(other.px - self.px, other.py - self.py);
      out.min_separation = std::min(out.min_separation, sep);
      if (sep < vf.capture_radius) {
        out.captured = true;
        return out;
      }
      double wo;
      if (pursuit) {
        const auto me = reachpred::relative_state(self, other);
        wo = std::clamp(gain * (std::atan2(me.yr, me.xr) + aim), p.omega_min, p.omega_max);
      } else {
        if (t >= next_switch) {
          const double r = unit(rng);
          omega = r < 0.3 ? p.omega_max : r < 0.6 ? p.omega_min : p.omega_min + (p.omega_max - p.omega_min) * unit(rng);
          next_switch = t + 0.25 + 2.75 * unit(rng);
        }
        wo = omega;
      }
      const double ws = evader_turn(vf, self, other);
      self = reachpred::step_vehicle(self, {ws}, dt, p);
      other = reachpred::step_vehicle(other, {wo}, dt, p);
    }
  }
  return out;
}

}  // namespace testing
