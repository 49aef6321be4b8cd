#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "reachpred/features.hpp"
#include "reachpred/scenario.hpp"

namespace reachpred {

/// Malformed input; the message names the offending field.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One JSONL row: {traj, t, human:{x,y,psi}, robot:{x,y,psi}, u, features?, layout?}.
nlohmann::json sample_to_json(int traj, const Sample& s, const FeatureVector* features = nullptr);

void write_trajectories(std::ostream& os, const std::vector<Trajectory>& trajectories,
                        const ValueFunction* vf = nullptr, std::optional<FeatureSetId> layout = std::nullopt);
std::vector<Trajectory> read_trajectories(std::istream& is);

void save_trajectories(const std::filesystem::path& path, const std::vector<Trajectory>& trajectories,
                       const ValueFunction* vf = nullptr, std::optional<FeatureSetId> layout = std::nullopt);
std::vector<Trajectory> load_trajectories(const std::filesystem::path& path);

/// Parses a JSON document, wrapping parse errors with the file name.
nlohmann::json load_json(const std::filesystem::path& path);
/// Writes `j.dump(2)` plus a trailing newline.
void save_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace reachpred
