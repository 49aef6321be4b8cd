#include "reachpred/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace reachpred {

namespace {
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kControlSlack = 1e-12;
}  // namespace

double wrap_angle(double a) {
  if (a >= -kPi && a < kPi) return a;
  double w = std::fmod(a + kPi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  w -= kPi;
  // fmod can land exactly on +pi after the shift back.
  if (w >= kPi) w -= kTwoPi;
  return w;
}

void DubinsParams::validate() const {
  if (!(speed > 0.0)) throw std::invalid_argument("DubinsParams: speed must be positive");
  if (!(omega_min < 0.0 && 0.0 < omega_max))
    throw std::invalid_argument("DubinsParams: need omega_min < 0 < omega_max");
}

double action_omega(Action a, const DubinsParams& params) {
  switch (a) {
    case Action::left: return params.omega_max;
    case Action::straight: return 0.0;
    case Action::right: return params.omega_min;
  }
  throw std::invalid_argument("unknown action");
}

Action action_from_omega(double omega, const DubinsParams& params) {
  if (std::abs(omega - params.omega_max) < 1e-9) return Action::left;
  if (std::abs(omega) < 1e-9) return Action::straight;
  if (std::abs(omega - params.omega_min) < 1e-9) return Action::right;
  throw std::invalid_argument("control " + std::to_string(omega) + " is not a discrete action");
}

VehicleState step_vehicle(const VehicleState& s, ControlInput u, double dt,
                          const DubinsParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_vehicle: dt must be positive");
  if (u.omega < params.omega_min - kControlSlack || u.omega > params.omega_max + kControlSlack)
    throw ControlOutOfBounds("step_vehicle: omega " + std::to_string(u.omega) + " out of bounds");

  const double v = params.speed;
  VehicleState out;
  if (u.omega == 0.0) {
    out.px = s.px + v * dt * std::cos(s.psi);
    out.py = s.py + v * dt * std::sin(s.psi);
    out.psi = wrap_angle(s.psi);
    return out;
  }
  const double radius = v / u.omega;
  const double psi1 = s.psi + u.omega * dt;
  out.px = s.px + radius * (std::sin(psi1) - std::sin(s.psi));
  out.py = s.py + radius * (std::cos(s.psi) - std::cos(psi1));
  out.psi = wrap_angle(psi1);
  return out;
}

RelativeState relative_state(const VehicleState& other, const VehicleState& reference) {
  const double dx = other.px - reference.px;
  const double dy = other.py - reference.py;
  const double c = std::cos(reference.psi);
  const double s = std::sin(reference.psi);
  return {c * dx + s * dy, -s * dx + c * dy, wrap_angle(other.psi - reference.psi)};
}

RelativeState invert_relative(const RelativeState& x) {
  const double c = std::cos(x.thetar);
  const double s = std::sin(x.thetar);
  return {-(c * x.xr + s * x.yr), s * x.xr - c * x.yr, wrap_angle(-x.thetar)};
}

RelativeRate relative_rhs(const RelativeState& x, ControlInput omega_self,
                          ControlInput omega_other, const DubinsParams& params) {
  const double v = params.speed;
  return {-v + v * std::cos(x.thetar) + omega_self.omega * x.yr,
          v * std::sin(x.thetar) - omega_self.omega * x.xr,
          omega_other.omega - omega_self.omega};
}

ControlInput robot_policy(const VehicleState& robot, Point2 goal, const DubinsParams& params,
                          double gain) {
  const double dx = goal.x - robot.px;
  const double dy = goal.y - robot.py;
  // At the goal the bearing is undefined; keep going straight.
  if (std::hypot(dx, dy) < 1e-6) return {0.0};
  const double bearing = std::atan2(dy, dx);
  const double err = wrap_angle(bearing - robot.psi);
  if (std::abs(err) < 1e-9) return {0.0};
  return {std::clamp(gain * err, params.omega_min, params.omega_max)};
}

}  // namespace reachpred
