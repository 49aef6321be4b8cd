#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace reachpred {

inline constexpr const char* kToolVersion = "0.3.0";

/// Everything needed to rerun a command. Output digests let two runs be compared
/// without diffing files.
class RunManifest {
 public:
  explicit RunManifest(std::string command);

  nlohmann::json config = nlohmann::json::object();
  nlohmann::json seeds = nlohmann::json::object();

  void add_input(const std::filesystem::path& p);
  void add_output(const std::filesystem::path& p);
  nlohmann::json to_json() const;
  /// Stamps the wall time and writes the manifest.
  void write(const std::filesystem::path& p);

 private:
  std::string command_;
  std::vector<std::filesystem::path> inputs_, outputs_;
  std::chrono::steady_clock::time_point start_;
  double wall_time_ = 0.0;
};

}  // namespace reachpred
