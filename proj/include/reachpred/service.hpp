#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "reachpred/learn.hpp"
#include "reachpred/scenario.hpp"
#include "reachpred/shfrs.hpp"

namespace reachpred {

struct ServiceConfig {
  std::filesystem::path data_dir = "sessions";
  /// Scanned recursively for model JSON files.
  std::filesystem::path models_dir;
  std::string default_model;
  std::string grid = "frs";
  /// Value function for safety features; models may also name their own.
  std::filesystem::path vf;
  std::string host = "127.0.0.1";
  int port = 8080;
  ShfrsConfig shfrs;
};

/// Carries the HTTP status and a JSON body.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& msg, nlohmann::json extra = nlohmann::json::object())
      : std::runtime_error(msg), status(status), extra(std::move(extra)) {}
  int status;
  nlohmann::json extra;
  nlohmann::json body() const;
};

enum class Phase { instructions, practice, main };
std::string_view phase_name(Phase p);
Phase parse_phase(std::string_view s);

/// Keys map to turn rates: left +0.5, straight 0, right -0.5.
double key_omega(std::string_view key);

struct Session {
  std::string id;
  std::string subject_id;
  Scene scene;
  Phase phase = Phase::main;
  std::optional<std::string> model_id;
  int step = 0;
  int steps = 0;
  JointState state;
  Trajectory recording;
  bool sealed = false;
  double min_separation = 0.0;
  std::mutex mu;
};

class SessionManager {
 public:
  explicit SessionManager(ServiceConfig config);
  ~SessionManager();

  /// Body fields, all optional: seed, phase, model_id, subject_id.
  nlohmann::json create(const nlohmann::json& body);
  nlohmann::json step(const std::string& id, const std::string& key);
  nlohmann::json get(const std::string& id);
  nlohmann::json overlay(const std::string& id);
  /// One entry per subject with stored trajectories.
  nlohmann::json list_trajectories(bool include_practice = false);
  /// JSONL in the trajectory-store format.
  std::string export_trajectories(const std::string& subject, bool include_practice = false);
  nlohmann::json models();

  const ServiceConfig& config() const { return config_; }

 private:
  struct ModelEntry {
    std::string id;
    std::filesystem::path file;
    Classifier model;
    std::string task;
    std::filesystem::path vf_path;
    std::optional<std::vector<double>> probabilities;
  };

  std::shared_ptr<Session> find(const std::string& id);
  void seal(Session& s);
  void load_models();
  void load_index();
  void save_index();
  const ValueFunction* value_function(const std::filesystem::path& p);
  std::filesystem::path store_file(const std::string& subject, bool practice) const;

  ServiceConfig config_;
  Grid3 grid_;
  std::mutex mu_;
  std::mutex store_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
  std::map<std::string, ModelEntry> models_;
  std::map<std::string, std::unique_ptr<ValueFunction>> vfs_;
  nlohmann::json index_ = nlohmann::json::array();
  TubeCache cache_;
};

/// HTTP front end. start() binds and serves on a background thread.
class HttpService {
 public:
  explicit HttpService(SessionManager& manager);
  ~HttpService();
  /// Returns the bound port (port 0 picks a free one).
  int start(const std::string& host, int port);
  /// Blocks until stop().
  void run(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace reachpred
