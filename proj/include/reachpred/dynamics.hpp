#pragma once

#include <array>
#include <stdexcept>

namespace reachpred {

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle into [-pi, pi).
double wrap_angle(double a);

struct DubinsParams {
  double speed = 2.0;
  double omega_min = -0.5;
  double omega_max = 0.5;

  void validate() const;
  bool operator==(const DubinsParams&) const = default;
};

struct VehicleState {
  double px = 0.0;
  double py = 0.0;
  double psi = 0.0;

  bool operator==(const VehicleState&) const = default;
};

/// Pose of one vehicle expressed in the body frame of a reference vehicle.
struct RelativeState {
  double xr = 0.0;
  double yr = 0.0;
  double thetar = 0.0;

  bool operator==(const RelativeState&) const = default;
};

struct RelativeRate {
  double dxr = 0.0;
  double dyr = 0.0;
  double dthetar = 0.0;
};

struct ControlInput {
  double omega = 0.0;
};

/// The three discrete human controls. Index order is also the class order used
/// by every classifier: left (+omega_max), straight, right (omega_min).
enum class Action : int { left = 0, straight = 1, right = 2 };

inline constexpr std::array<Action, 3> kActions{Action::left, Action::straight, Action::right};

double action_omega(Action a, const DubinsParams& params = {});
/// Maps a recorded turn rate back to its discrete action; throws if it is not
/// one of the three admissible values.
Action action_from_omega(double omega, const DubinsParams& params = {});

struct JointState {
  VehicleState human;
  VehicleState robot;
};

class ControlOutOfBounds : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

VehicleState step_vehicle(const VehicleState& state, ControlInput u, double dt,
                          const DubinsParams& params = {});

/// `other` expressed in the body frame of `reference`.
RelativeState relative_state(const VehicleState& other, const VehicleState& reference);

/// Given `other` in the frame of `reference`, returns `reference` in the frame of `other`.
RelativeState invert_relative(const RelativeState& x);

/// Time derivative of the relative state. `omega_self` is the reference
/// vehicle's turn rate, `omega_other` the turn rate of the observed vehicle.
RelativeRate relative_rhs(const RelativeState& x, ControlInput omega_self,
                          ControlInput omega_other, const DubinsParams& params = {});

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

ControlInput robot_policy(const VehicleState& robot, Point2 goal,
                          const DubinsParams& params = {}, double gain = 1.0);

}  // namespace reachpred
