#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "presstyle/graph.hpp"
#include "presstyle/manifest.hpp"
#include "presstyle/sequence.hpp"
#include "presstyle/weights.hpp"

namespace ptn {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NetConfig {
  // encoder channel widths for the three conv blocks
  int c1 = 16;
  int c2 = 32;
  int c3 = 64;
  int latent = 128;
  int attr_size = 3;
  int window = kWindowFrames;
  int rows = kGridRows;
  int cols = kGridCols;

  double learning_rate = 0.01;
  int lr_halve_every = 20;
  int batch = 64;
  int max_epochs = 500;
  int patience = 50;
  std::uint64_t seed = 1;

  int window_stride = 1;        // training window stride
  int max_pairs_per_epoch = 0;  // 0 = use every pair each epoch
  // input/output scaling hook; raw newtons train best with this decoder, so
  // the default is no rescaling
  double pressure_scale = 1.0;
  // power compression of cell values before the net (p^gamma), inverted on
  // output; gamma < 1 narrows the dynamic range (an experiment knob; raw
  // newtons have trained better than any compression tried so far)
  double input_gamma = 1.0;
  // transfer-time dead zone in newtons: cells below it are reported as exact
  // zeros, mirroring a sensor mat's noise floor (binarized metrics treat any
  // nonzero cell as contact, so residual decoder ripple must not register)
  double output_noise_floor = 2.0;
  bool feature_loss = false;      // content loss on encoder features
  int threads = 1;

  // training hyperparameters as reported (batch size 1028 verbatim)
  static NetConfig paper_preset();
  // laptop-scale smoke configuration
  static NetConfig desk_preset();

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  bool early_stopped = false;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

// Attribute-conditioned encoder-decoder. The encoder folds a 30-frame window
// (frames as channels) through three conv/BN/pool blocks to a 128-latent; the
// decoder mirrors it with unpooling driven by the encoder's argmax records,
// conditioned on the target attribute vector. Output is ReLU-clamped, so
// cells are non-negative by construction.
class TransferNet {
 public:
  explicit TransferNet(const NetConfig& cfg);
  TransferNet(const NetConfig& cfg, ParamStore weights);  // from a PTNW file

  const NetConfig& config() const { return cfg_; }

  struct Encoded {
    Tensor latent;                    // [N, latent]
    std::array<PoolRecord, 3> records;
  };

  // windows [N,30,80,28] in raw newtons; attrs [N,3] normalized.
  Encoded encode(const Tensor& windows, const Tensor& src_attrs) const;
  Tensor decode(const Tensor& latent, const Tensor& tgt_attrs,
                const std::array<PoolRecord, 3>& records) const;  // raw newtons

  TrainResult train(const DatasetManifest& manifest);

  PressureSequence transfer(const PressureSequence& src, const AttributeVector& tgt,
                            int stride = kWindowFrames) const;

  void save(const std::string& path) const;
  static TransferNet load(const std::string& path, const NetConfig& cfg);

  // Normalization used for attribute conditioning (combined generator
  // population by default).
  PopulationStats attr_stats() const { return attr_stats_; }
  void set_attr_stats(const PopulationStats& s) { attr_stats_ = s; }

  Tensor window_tensor(const Window& w) const;  // [1,30,80,28] raw newtons
  Tensor attr_tensor(const AttributeVector& a) const;

 private:
  struct ForwardOut {
    Graph::NodeId output;  // scaled pressure [N,30,80,28]
    Graph::NodeId latent;
    std::array<PoolRecord, 3> records;
  };
  struct ParamNodes;

  ForwardOut forward(Graph& g, Graph::NodeId x_scaled, Graph::NodeId src_attrs,
                     Graph::NodeId tgt_attrs, bool train, ParamNodes& nodes) const;
  void register_params(Graph& g, ParamNodes& nodes) const;
  Graph::NodeId feature_maps(Graph& g, Graph::NodeId x_scaled,
                             ParamNodes& nodes) const;

  void init_params();
  std::vector<std::string> trainable_names() const;

  NetConfig cfg_;
  PopulationStats attr_stats_ = PopulationStats::combined_population();
  mutable ParamStore weights_;  // includes BN running stats (*.rmean, *.rvar)
  mutable std::array<BatchNormState, 6> bn_;  // enc 1-3, dec 1-3
  void sync_bn_to_store() const;
  void sync_bn_from_store();
};

// Mean content loss over feature maps: (1/M) * sum of squared map distances,
// M = number of maps (all but the last two axes).
double content_loss(const Tensor& generated, const Tensor& target);

}  // namespace ptn
