#pragma once

#include <string>
#include <vector>

#include "presstyle/manifest.hpp"
#include "presstyle/meanshift.hpp"
#include "presstyle/model.hpp"
#include "presstyle/sequence.hpp"
#include "presstyle/weights.hpp"

namespace ptn {

class HarError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 12-dim summary of a window, the clustering feature basis:
//   0 total force mean            1 total force std
//   2 contact area mean           3 contact area std
//   4 centroid row mean           5 centroid col mean
//   6 centroid row range          7 centroid col range
//   8 row pressure-profile spread 9 col pressure-profile spread
//  10 centroid row temporal std  11 centroid col temporal std
std::vector<double> window_descriptor(const Window& w);

struct PseudoLabels {
  std::vector<int> labels;  // one per input window
  ClusterModel model;
  int cluster_count = 0;
  // z-score stats applied to descriptors before clustering
  std::vector<double> feature_mean;
  std::vector<double> feature_std;
};

// Descriptors -> z-score -> mean shift. bandwidth 0 = auto.
PseudoLabels pseudo_label(const std::vector<Window>& windows, double bandwidth = 0.0);

// window id, start frame, pseudo-label per row
std::string cluster_csv(const std::vector<Window>& windows,
                        const std::vector<int>& labels);

struct ClassifierConfig {
  int classes = 0;  // inferred from labels when 0
  int c1 = 8;
  int c2 = 16;
  double learning_rate = 1e-3;
  int batch = 32;
  int max_epochs = 20;
  int patience = 4;
  std::uint64_t seed = 1;
  double pressure_scale = 100.0;  // newtons mapped to 1.0 input units
};

// Two conv/pool blocks plus a dense softmax head over 30-frame windows.
class WindowClassifier {
 public:
  explicit WindowClassifier(const ClassifierConfig& cfg);

  // 9:1 train/val split; keeps the best-val parameters. Throws HarError when
  // fewer than two classes are present.
  void train(const std::vector<Window>& windows, const std::vector<int>& labels);

  int predict(const Window& w) const;
  std::vector<int> predict_all(const std::vector<Window>& windows) const;

  const ClassifierConfig& config() const { return cfg_; }
  const ParamStore& weights() const { return weights_; }

 private:
  struct Nodes;
  Graph::NodeId logits(Graph& g, Graph::NodeId x, Nodes& n) const;
  Tensor batch_tensor(const std::vector<Window>& windows,
                      const std::vector<std::size_t>& idx, std::size_t lo,
                      std::size_t hi) const;
  void init_params();

  ClassifierConfig cfg_;
  mutable ParamStore weights_;
};

// Unweighted mean of per-class F1 over the union of label sets; classes never
// predicted get F1 = 0.
double macro_f1(const std::vector<int>& predictions, const std::vector<int>& labels);

struct Table3Options {
  int iterations = 10;
  double bandwidth = 0.0;      // 0 = auto
  int window_stride = 15;      // descriptor/classifier windowing
  int transfer_stride = kWindowFrames;
  int max_windows_per_source = 0;  // 0 = all
  int synth_targets_per_sequence = 1;  // other-subject attrs per train sequence
  ClassifierConfig classifier;
};

struct Table3Report {
  double real_mean = 0.0, real_std = 0.0;
  double synth_mean = 0.0, synth_std = 0.0;
  double combined_mean = 0.0, combined_std = 0.0;
  int iterations = 0;
  int cluster_count = 0;
  std::string cluster_assignments_csv;

  std::string to_text() const;
  std::string to_json() const;
};

// Pseudo-labels the whole real pool once, then per iteration trains real-only,
// synthetic-only, and combined classifiers and scores macro F1 on windows of
// held-out subjects. Synthetic windows come from transferring train-subject
// sequences to the other train subjects' attributes.
Table3Report table3_protocol(const DatasetManifest& manifest,
                             const TransferNet& model,
                             const Table3Options& opts = {});

}  // namespace ptn
