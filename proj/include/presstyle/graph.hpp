#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "presstyle/ops.hpp"
#include "presstyle/tensor.hpp"

namespace ptn {

// Define-by-run tape. Each op appends a node holding its forward value and a
// closure that scatters the node's gradient back to its inputs; nodes are in
// topological order by construction, so backward() is a single reverse sweep.
class Graph {
 public:
  using NodeId = int;

  NodeId input(Tensor value);

  NodeId conv2d(NodeId x, NodeId kernels, NodeId bias, int stride, int padding);
  NodeId conv2d_transpose(NodeId x, NodeId kernels, NodeId bias, int stride,
                          int padding, int out_h, int out_w);
  NodeId max_pool2d(NodeId x, PoolRecord* record_out);
  NodeId max_unpool2d(NodeId x, const PoolRecord& rec);
  NodeId batch_norm(NodeId x, NodeId scale, NodeId shift, BatchNormState& state,
                    bool train);
  NodeId dense(NodeId x, NodeId weights, NodeId bias);
  NodeId relu(NodeId x);
  NodeId concat_cols(NodeId a, NodeId b);
  NodeId reshape(NodeId x, std::vector<int> shape);
  NodeId add(NodeId a, NodeId b);
  NodeId scale_by(NodeId x, double factor);
  NodeId sum(NodeId x);

  // (1/M) * sum of squared differences where M = number of feature maps,
  // i.e. the product of all but the last two dimensions.
  NodeId content_loss(NodeId generated, NodeId target);

  // logits [N,K]; mean negative log softmax probability of the labels.
  NodeId softmax_cross_entropy(NodeId logits, std::vector<int> labels);

  // Seeds d(loss)/d(loss)=1 and sweeps the tape in reverse. Loss must be scalar.
  void backward(NodeId loss);

  const Tensor& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Tensor& grad(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Graph&)> back;  // empty for leaves
  };

  NodeId push(Tensor value, std::function<void(Graph&)> back);
  Tensor& mutable_grad(NodeId id) { return nodes_[static_cast<std::size_t>(id)].grad; }
  void accumulate(NodeId id, const Tensor& g);

  std::vector<Node> nodes_;
};

}  // namespace ptn
