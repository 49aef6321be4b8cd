#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "reachpred/features.hpp"
#include "reachpred/learn.hpp"
#include "reachpred/levelset.hpp"
#include "reachpred/scenario.hpp"
#include "reachpred/shfrs.hpp"

namespace reachpred {

/// Bad flags or input files. Exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A solver did not converge or produced non-finite values. Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A property check failed; the report was still written. Exit code 4.
class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitNumerical = 3, kExitVerification = 4 };

struct BrsCommand {
  std::string grid = "default";
  std::filesystem::path out = "brs.hjvf";
  BrsOptions options;
};

struct GendataCommand {
  int subjects = 8;
  int scenes = 50;
  std::uint64_t seed = 1;
  std::filesystem::path out = "data";
  /// Solved with `grid` when empty.
  std::filesystem::path vf;
  std::string grid = "default";
  PolicyRanges ranges;
};

struct TrainEvalCommand {
  std::filesystem::path data = "data";
  std::vector<Task> tasks{Task::exact};
  std::vector<Family> models{Family::logistic, Family::tree, Family::svm};
  std::vector<FeatureSetId> feature_sets{kFeatureSets.begin(), kFeatureSets.end()};
  int folds = 5;
  std::uint64_t seed = 1;
  std::filesystem::path out = "results";
  bool save_models = true;
  TrainSettings settings;
};

struct ShfrsCommand {
  std::filesystem::path model;
  /// Falls back to the path recorded in the model file.
  std::filesystem::path vf;
  /// JSONL trajectories; the anchor comes from trajectory `traj` at `step`.
  std::filesystem::path data;
  int traj = 0;
  int step = 0;
  /// Without data: a closed-loop episode of this scene driven by the model.
  std::optional<std::uint64_t> scene_seed;
  ShfrsConfig config;
  std::string grid = "frs";
  std::filesystem::path out = "shfrs";
  bool estimate = true;
  /// 0 uses every trajectory in `data`.
  int max_trajectories = 0;
};

struct Mip3Command {
  std::string mode = "verify";
  double K = 2.0;
  std::filesystem::path vf;
  std::string grid = "default";
  double radius = 15.0;
  double horizon = 30.0;
  double dt = 0.05;
  std::filesystem::path out = "mip3";
};

/// Each command writes its outputs plus a run manifest and returns a summary.
nlohmann::json cmd_brs(const BrsCommand& c);
nlohmann::json cmd_gendata(const GendataCommand& c);
nlohmann::json cmd_train_eval(const TrainEvalCommand& c);
nlohmann::json cmd_shfrs(const ShfrsCommand& c);
nlohmann::json cmd_mip3(const Mip3Command& c);

/// Subjects listed in a gendata directory.
struct StoredSubject {
  std::string subject_id;
  std::filesystem::path file;
  std::vector<Trajectory> trajectories;
};

struct StoredDataset {
  std::vector<StoredSubject> subjects;
  std::filesystem::path vf_path;
  ValueFunction vf;
};

StoredDataset load_dataset_dir(const std::filesystem::path& dir);

}  // namespace reachpred
