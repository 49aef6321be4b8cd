#include "reachpred/features.hpp"

#include <cmath>
#include <stdexcept>

namespace reachpred {

namespace {
constexpr std::array<std::string_view, 8> kNames{"B", "Bd", "Bh", "Br", "Bhd", "Brd", "Bhr", "Bhrd"};
}

std::string_view feature_set_name(FeatureSetId id) { return kNames[static_cast<std::size_t>(id)]; }

FeatureSetId parse_feature_set(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<FeatureSetId>(i);
  throw std::invalid_argument("unknown feature set '" + std::string(name) + "'");
}

bool has_distance(FeatureSetId id) { return feature_set_name(id).find('d') != std::string_view::npos; }
bool has_robot_safety(FeatureSetId id) { return feature_set_name(id).find('h') != std::string_view::npos; }
bool has_human_safety(FeatureSetId id) { return feature_set_name(id).find('r') != std::string_view::npos; }

std::size_t feature_count(FeatureSetId id) {
  return 5 + has_distance(id) + has_robot_safety(id) + has_human_safety(id);
}

bool needs_value_function(FeatureSetId id) { return has_robot_safety(id) || has_human_safety(id); }

FeatureVector build_features(const VehicleState& human, const VehicleState& robot,
                             const ValueFunction* vf_hr, const ValueFunction* vf_rh, FeatureSetId set) {
  if (has_robot_safety(set) && vf_hr == nullptr)
    throw std::invalid_argument("feature set " + std::string(feature_set_name(set)) + " needs V_HR");
  if (has_human_safety(set) && vf_rh == nullptr)
    throw std::invalid_argument("feature set " + std::string(feature_set_name(set)) + " needs V_RH");

  const RelativeState x = relative_state(human, robot);
  FeatureVector f;
  f.layout = set;
  f.values.reserve(feature_count(set));
  f.values = {std::abs(x.xr), std::abs(x.yr), x.thetar, std::cos(x.thetar), std::sin(x.thetar)};
  if (has_distance(set)) f.values.push_back(std::hypot(x.xr, x.yr));
  if (has_robot_safety(set)) {
    const Lookup l = value_at(*vf_hr, x);
    f.values.push_back(l.value);
    f.clamped |= !l.in_bounds;
  }
  if (has_human_safety(set)) {
    const Lookup l = value_at(*vf_rh, relative_state(robot, human));
    f.values.push_back(l.value);
    f.clamped |= !l.in_bounds;
  }
  return f;
}

}  // namespace reachpred
