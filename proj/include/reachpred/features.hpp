#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reachpred/dynamics.hpp"
#include "reachpred/grid.hpp"

namespace reachpred {

/// Subscripts add features to the standard set B: d -> distance d_HR,
/// h -> v_R = V(x_HR), r -> v_H = V(x_RH).
enum class FeatureSetId { B, Bd, Bh, Br, Bhd, Brd, Bhr, Bhrd };

inline constexpr std::array<FeatureSetId, 8> kFeatureSets{
    FeatureSetId::B,   FeatureSetId::Bd,  FeatureSetId::Bh,  FeatureSetId::Br,
    FeatureSetId::Bhd, FeatureSetId::Brd, FeatureSetId::Bhr, FeatureSetId::Bhrd};

std::string_view feature_set_name(FeatureSetId id);
FeatureSetId parse_feature_set(std::string_view name);

bool has_distance(FeatureSetId id);
bool has_robot_safety(FeatureSetId id);  // v_R
bool has_human_safety(FeatureSetId id);  // v_H
std::size_t feature_count(FeatureSetId id);
bool needs_value_function(FeatureSetId id);

struct FeatureVector {
  std::vector<double> values;
  FeatureSetId layout = FeatureSetId::B;
  /// A safety lookup fell outside the value-function grid and was clamped.
  bool clamped = false;
};

/// Layout: |xr|, |yr|, thetar, cos thetar, sin thetar, [d_HR], [v_R], [v_H],
/// where (xr, yr, thetar) is the human in the robot's body frame.
FeatureVector build_features(const VehicleState& human, const VehicleState& robot,
                             const ValueFunction* vf_hr, const ValueFunction* vf_rh, FeatureSetId set);

/// Both safety values from one symmetric game solution.
inline FeatureVector build_features(const VehicleState& human, const VehicleState& robot,
                                    const ValueFunction* vf, FeatureSetId set) {
  return build_features(human, robot, vf, vf, set);
}

}  // namespace reachpred
