#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "reachpred/dynamics.hpp"
#include "reachpred/features.hpp"

namespace reachpred {

/// Task I predicts the exact control (classes: left, straight, right).
/// Task II predicts avoid vs straight (classes: straight, avoid).
enum class Task { exact, avoid };

int num_classes(Task task);
int class_of(Action a, Task task);
std::string_view task_name(Task task);  // "I" / "II"
Task parse_task(std::string_view name);

struct Dataset {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  /// Trajectory id of every row; folds never split a trajectory.
  std::vector<int> traj;
  FeatureSetId layout = FeatureSetId::B;
  Task task = Task::exact;
  std::string subject_id;

  std::size_t size() const { return y.size(); }
  std::size_t dims() const { return x.empty() ? 0 : x.front().size(); }
  int classes() const { return num_classes(task); }
  void validate() const;
  Dataset subset(std::span<const std::size_t> rows) const;
};

struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardization fit(const Dataset& d);
  std::vector<double> apply(std::span<const double> x) const;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LogisticModel {
  FeatureSetId layout = FeatureSetId::B;
  int classes = 3;
  std::size_t dims = 0;
  /// classes x (dims + 1), row-major, bias last.
  std::vector<double> weights;
  Standardization standardization;
  double l2 = 0.0;
  double lr = 0.0;
  double stability_bound = 0.0;
  int epochs = 0;
  std::uint64_t seed = 0;
  double final_loglik = 0.0;
  /// Penalized objective after every epoch.
  std::vector<double> objective_trace;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> freq;
};

struct DecisionTree {
  FeatureSetId layout = FeatureSetId::B;
  int classes = 3;
  int max_depth = 0;
  int min_leaf = 1;
  std::uint64_t seed = 0;
  std::vector<TreeNode> nodes;

  int depth() const;
};

struct LinearSvm {
  FeatureSetId layout = FeatureSetId::B;
  int classes = 3;
  std::size_t dims = 0;
  /// One-vs-rest rows of (dims + 1); a single row in binary mode, scoring class 1.
  std::vector<double> weights;
  Standardization standardization;
  double c = 1.0;
  int epochs = 0;
  std::uint64_t seed = 0;
  double final_objective = 0.0;
};

// Mean log-likelihood minus (l2/2)*|W|^2 (bias unpenalized) on already
// standardized inputs.
double logistic_objective(std::span<const double> weights, const std::vector<std::vector<double>>& x,
                          std::span<const int> y, int classes, double l2);
std::vector<double> logistic_gradient(std::span<const double> weights,
                                      const std::vector<std::vector<double>>& x, std::span<const int> y,
                                      int classes, double l2);

LogisticModel train_logistic(const Dataset& data, double l2, double lr, int epochs, std::uint64_t seed);
DecisionTree train_tree(const Dataset& data, int max_depth, int min_leaf, std::uint64_t seed);
LinearSvm train_svm(const Dataset& data, double c, int epochs, std::uint64_t seed);

enum class Family { logistic, tree, svm };
std::string_view family_name(Family f);  // "LR" / "DT" / "SVM"
Family parse_family(std::string_view name);

struct Hyper {
  double l2 = 0.01;
  int max_depth = 5;
  int min_leaf = 1;
  double c = 1.0;
};

/// Grids ordered from smallest to largest capacity.
std::vector<Hyper> default_grid(Family f);

struct TrainSettings {
  double lr = 1.0;
  int lr_epochs = 400;
  int svm_epochs = 300;
};

using Classifier = std::variant<LogisticModel, DecisionTree, LinearSvm>;

Classifier train(const Dataset& data, Family f, const Hyper& h, std::uint64_t seed,
                 const TrainSettings& settings = {});

FeatureSetId layout_of(const Classifier& m);
int classes_of(const Classifier& m);
Family family_of(const Classifier& m);

/// Probabilities over the task's classes; SVM outputs a softmax over margins
/// (a surrogate, not calibrated).
std::vector<double> predict_proba(const Classifier& m, std::span<const double> features);
std::vector<double> predict_proba(const Classifier& m, const FeatureVector& f);
int predict(const Classifier& m, std::span<const double> features);

struct CvResult {
  Hyper best;
  std::size_t best_index = 0;
  std::vector<double> fold_accuracy;  // percent, for the selected hypers
  double mean_accuracy = 0.0;
  std::vector<double> grid_mean_accuracy;
  /// Out-of-fold predicted class for every row, for the selected hypers.
  std::vector<int> oof_prediction;
};

CvResult cross_validate(const Dataset& data, Family f, const std::vector<Hyper>& grid, int folds,
                        std::uint64_t seed, const TrainSettings& settings = {});

nlohmann::json to_json(const Classifier& m);
Classifier classifier_from_json(const nlohmann::json& j);

}  // namespace reachpred
