#include "reachpred/manifest.hpp"

#include "reachpred/codec.hpp"
#include "reachpred/trajectory_io.hpp"

namespace reachpred {

RunManifest::RunManifest(std::string command)
    : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

void RunManifest::add_input(const std::filesystem::path& p) { inputs_.push_back(p); }
void RunManifest::add_output(const std::filesystem::path& p) { outputs_.push_back(p); }

nlohmann::json RunManifest::to_json() const {
  auto files = [](const std::vector<std::filesystem::path>& ps) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : ps) {
      nlohmann::json e = {{"path", p.string()}};
      e["sha256"] = std::filesystem::is_regular_file(p) ? nlohmann::json(sha256_file(p)) : nlohmann::json(nullptr);
      a.push_back(e);
    }
    return a;
  };
  return {{"command", command_},
          {"config", config},
          {"seeds", seeds},
          {"inputs", files(inputs_)},
          {"outputs", files(outputs_)},
          {"version", kToolVersion},
          {"wall_time_s", wall_time_}};
}

void RunManifest::write(const std::filesystem::path& p) {
  wall_time_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  save_json(p, to_json());
}

}  // namespace reachpred
