#include "reachpred/trajectory_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace reachpred {

namespace {

nlohmann::json state_json(const VehicleState& s) { return {{"x", s.px}, {"y", s.py}, {"psi", s.psi}}; }

double number_field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(where + ": missing field '" + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number()) throw SchemaError(where + ": field '" + key + "' is not a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(where + ": field '" + key + "' is not finite");
  return d;
}

VehicleState state_from(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_object()) throw SchemaError(where + ": missing object '" + key + "'");
  const std::string sub = where + "." + key;
  return {number_field(j.at(key), "x", sub), number_field(j.at(key), "y", sub), number_field(j.at(key), "psi", sub)};
}

}  // namespace

nlohmann::json sample_to_json(int traj, const Sample& s, const FeatureVector* features) {
  nlohmann::json j = {{"traj", traj}, {"t", s.t}, {"human", state_json(s.human)}, {"robot", state_json(s.robot)},
                      {"u", s.u}};
  if (features) {
    j["features"] = features->values;
    j["layout"] = std::string(feature_set_name(features->layout));
    if (features->clamped) j["clamped"] = true;
  }
  return j;
}

void write_trajectories(std::ostream& os, const std::vector<Trajectory>& trajectories, const ValueFunction* vf,
                        std::optional<FeatureSetId> layout) {
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    for (const auto& s : trajectories[k].samples) {
      if (layout) {
        const FeatureVector f = build_features(s.human, s.robot, vf, *layout);
        os << sample_to_json(static_cast<int>(k), s, &f).dump() << '\n';
      } else {
        os << sample_to_json(static_cast<int>(k), s).dump() << '\n';
      }
    }
  }
}

std::vector<Trajectory> read_trajectories(std::istream& is) {
  std::vector<Trajectory> out;
  std::string line;
  int line_no = 0;
  int current = -1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(where + ": " + e.what());
    }
    if (!j.is_object()) throw SchemaError(where + ": row is not an object");
    Sample s;
    s.t = number_field(j, "t", where);
    s.human = state_from(j, "human", where);
    s.robot = state_from(j, "robot", where);
    s.u = number_field(j, "u", where);
    try {
      action_from_omega(s.u);
    } catch (const std::invalid_argument&) {
      throw SchemaError(where + ": field 'u' must be one of -0.5, 0, 0.5");
    }
    int traj = current;
    if (j.contains("traj")) {
      if (!j.at("traj").is_number_integer()) throw SchemaError(where + ": field 'traj' is not an integer");
      traj = j.at("traj").get<int>();
    } else if (s.t == 0.0) {
      traj = current + 1;
    }
    if (traj < 0) throw SchemaError(where + ": first row of a trajectory must have t = 0 or a 'traj' field");
    if (traj != current) {
      if (traj < current) throw SchemaError(where + ": field 'traj' is not non-decreasing");
      out.emplace_back();
      current = traj;
    }
    Trajectory& tr = out.back();
    s.step = static_cast<int>(tr.samples.size());
    if (!tr.samples.empty() && !(s.t > tr.samples.back().t))
      throw SchemaError(where + ": field 't' is not strictly increasing");
    if (tr.samples.size() == 1) tr.dt = s.t - tr.samples.front().t;
    tr.samples.push_back(s);
  }
  return out;
}

void save_trajectories(const std::filesystem::path& path, const std::vector<Trajectory>& trajectories,
                       const ValueFunction* vf, std::optional<FeatureSetId> layout) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_trajectories(os, trajectories, vf, layout);
}

std::vector<Trajectory> load_trajectories(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  try {
    return read_trajectories(is);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void save_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

}  // namespace reachpred
