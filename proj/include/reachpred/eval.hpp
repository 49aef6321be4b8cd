#pragma once

#include <span>
#include <vector>

namespace reachpred {

/// Predicted and true class per step of one trajectory.
struct TrajectoryPrediction {
  std::vector<int> predicted;
  std::vector<int> truth;
};

/// Pooled per-step accuracy in percent.
double accuracy(std::span<const TrajectoryPrediction> preds);

/// Mean |first predicted avoid step - first true avoid step| over trajectories.
/// `avoid_class` marks avoidance. A trajectory where either side never avoids
/// contributes its length.
double d_start(std::span<const TrajectoryPrediction> preds, int avoid_class = 1);
double d_end(std::span<const TrajectoryPrediction> preds, int avoid_class = 1);

struct MannWhitney {
  double u = 0.0;  // U statistic of the first sample
  double p = 1.0;  // two-sided
  bool exact = false;
};

/// Exact permutation distribution (mid-ranks) unless both samples exceed 8,
/// in which case a tie-corrected normal approximation is used.
MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b);

inline constexpr double kSignificance = 0.05;

}  // namespace reachpred
