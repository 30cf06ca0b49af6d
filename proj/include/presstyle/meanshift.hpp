#pragma once

#include <stdexcept>
#include <vector>

namespace ptn {

class ClusterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mode points found by mean shift plus the bandwidth they were found at.
// Modes are pairwise farther apart than bandwidth/2.
struct ClusterModel {
  std::vector<std::vector<double>> modes;
  double bandwidth = 0.0;

  int nearest_mode(const std::vector<double>& point) const;
};

struct MeanShiftResult {
  ClusterModel model;
  std::vector<int> labels;  // nearest mode per input point
};

struct MeanShiftOptions {
  double bandwidth = 0.0;  // 0 = auto_bandwidth heuristic
  bool gaussian_kernel = true;
  int max_iterations = 300;
  double tolerance_factor = 1e-4;  // stop when shift < factor * bandwidth
};

// 10th-percentile pairwise distance heuristic (deterministic subsample for
// large sets): tracks the within-cluster scale of multi-blob sets without
// fragmenting a single blob.
double auto_bandwidth(const std::vector<std::vector<double>>& points);

MeanShiftResult mean_shift(const std::vector<std::vector<double>>& points,
                           const MeanShiftOptions& opts = {});

}  // namespace ptn
