#include "presstyle/graph.hpp"

#include <cmath>
#include <string>

namespace ptn {

Graph::NodeId Graph::push(Tensor value, std::function<void(Graph&)> back) {
  nodes_.push_back(Node{std::move(value), Tensor{}, std::move(back)});
  return static_cast<NodeId>(nodes_.size()) - 1;
}

void Graph::accumulate(NodeId id, const Tensor& g) {
  Tensor& dst = mutable_grad(id);
  if (dst.empty()) {
    dst = g;
    return;
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
}

Graph::NodeId Graph::input(Tensor value) { return push(std::move(value), {}); }

Graph::NodeId Graph::conv2d(NodeId x, NodeId k, NodeId b, int stride, int padding) {
  Tensor out = ptn::conv2d(value(x), value(k), value(b), stride, padding);
  NodeId id = push(std::move(out), {});
  nodes_.back().back = [x, k, b, id, stride, padding](Graph& g) {
    Tensor gi, gk, gb;
    conv2d_backward(g.value(x), g.value(k), g.grad(id), stride, padding, &gi, &gk, &gb);
    g.accumulate(x, gi);
    g.accumulate(k, gk);
    g.accumulate(b, gb);
  };
  return id;
}

Graph::NodeId Graph::conv2d_transpose(NodeId x, NodeId k, NodeId b, int stride,
                                      int padding, int out_h, int out_w) {
  Tensor out =
      ptn::conv2d_transpose(value(x), value(k), value(b), stride, padding, out_h, out_w);
  NodeId id = push(std::move(out), {});
  nodes_.back().back = [x, k, b, id, stride, padding](Graph& g) {
    Tensor gi, gk, gb;
    conv2d_transpose_backward(g.value(x), g.value(k), g.grad(id), stride, padding,
                              &gi, &gk, &gb);
    g.accumulate(x, gi);
    g.accumulate(k, gk);
    g.accumulate(b, gb);
  };
  return id;
}

Graph::NodeId Graph::max_pool2d(NodeId x, PoolRecord* record_out) {
  auto [out, rec] = ptn::max_pool2d(value(x));
  auto rec_ptr = std::make_shared<PoolRecord>(std::move(rec));
  if (record_out) *record_out = *rec_ptr;
  NodeId id = push(std::move(out), {});
  nodes_.back().back = [x, id, rec_ptr](Graph& g) {
    g.accumulate(x, max_pool2d_backward(*rec_ptr, g.grad(id)));
  };
  return id;
}

Graph::NodeId Graph::max_unpool2d(NodeId x, const PoolRecord& rec) {
  Tensor out = ptn::max_unpool2d(value(x), rec);
  auto rec_ptr = std::make_shared<PoolRecord>(rec);
  NodeId id = push(std::move(out), {});
  nodes_.back().back = [x, id, rec_ptr](Graph& g) {
    g.accumulate(x, max_unpool2d_backward(*rec_ptr, g.grad(id)));
  };
  return id;
}

Graph::NodeId Graph::batch_norm(NodeId x, NodeId scale, NodeId shift,
                                BatchNormState& state, bool train) {
  auto cache = std::make_shared<BatchNormCache>();
  Tensor out = ptn::batch_norm(value(x), value(scale), value(shift), state, train,
                               cache.get());
  NodeId id = push(std::move(out), {});
  nodes_.back().back = [x, scale, shift, id, cache](Graph& g) {
    Tensor gi, gs, gb;
    batch_norm_backward(g.value(x), g.value(scale), *cache, g.grad(id), &gi, &gs,
                        &gb);
    g.accumulate(x, gi);
    g.accumulate(scale, gs);
    g.accumulate(shift, gb);
  };
  return id;
}

Graph::NodeId Graph::dense(NodeId x, NodeId w, NodeId b) {
  Tensor out = ptn::dense(value(x), value(w), value(b));
  NodeId id = push(std::move(out), {});
  nodes_.back().back = [x, w, b, id](Graph& g) {
    Tensor gi, gw, gb;
    dense_backward(g.value(x), g.value(w), g.grad(id), &gi, &gw, &gb);
    g.accumulate(x, gi);
    g.accumulate(w, gw);
    g.accumulate(b, gb);
  };
  return id;
}

Graph::NodeId Graph::relu(NodeId x) {
  Tensor out = ptn::relu(value(x));
  NodeId id = push(std::move(out), {});
  nodes_.back().back = [x, id](Graph& g) {
    g.accumulate(x, relu_backward(g.value(x), g.grad(id)));
  };
  return id;
}

Graph::NodeId Graph::concat_cols(NodeId a, NodeId b) {
  Tensor out = ptn::concat_cols(value(a), value(b));
  NodeId id = push(std::move(out), {});
  nodes_.back().back = [a, b, id](Graph& g) {
    const Tensor& go = g.grad(id);
    const int n = g.value(a).dim(0);
    const int da = g.value(a).dim(1), db = g.value(b).dim(1);
    Tensor ga(g.value(a).shape());
    Tensor gb(g.value(b).shape());
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < da; ++j) ga.at(i, j) = go.at(i, j);
      for (int j = 0; j < db; ++j) gb.at(i, j) = go.at(i, da + j);
    }
    g.accumulate(a, ga);
    g.accumulate(b, gb);
  };
  return id;
}

Graph::NodeId Graph::reshape(NodeId x, std::vector<int> shape) {
  Tensor out = value(x).reshaped(shape);
  NodeId id = push(std::move(out), {});
  nodes_.back().back = [x, id](Graph& g) {
    g.accumulate(x, g.grad(id).reshaped(g.value(x).shape()));
  };
  return id;
}

Graph::NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!va.same_shape(vb)) {
    throw ShapeError("add shape mismatch: " + va.shape_str() + " vs " + vb.shape_str());
  }
  Tensor out(va.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
  NodeId id = push(std::move(out), {});
  nodes_.back().back = [a, b, id](Graph& g) {
    g.accumulate(a, g.grad(id));
    g.accumulate(b, g.grad(id));
  };
  return id;
}

Graph::NodeId Graph::scale_by(NodeId x, double factor) {
  Tensor out(value(x).shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(x)[i] * factor;
  NodeId id = push(std::move(out), {});
  nodes_.back().back = [x, id, factor](Graph& g) {
    Tensor gi(g.value(x).shape());
    const Tensor& go = g.grad(id);
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] = go[i] * factor;
    g.accumulate(x, gi);
  };
  return id;
}

Graph::NodeId Graph::sum(NodeId x) {
  double s = 0.0;
  for (std::size_t i = 0; i < value(x).size(); ++i) s += value(x)[i];
  NodeId id = push(Tensor({1}, {s}), {});
  nodes_.back().back = [x, id](Graph& g) {
    Tensor gi(g.value(x).shape());
    gi.fill(g.grad(id)[0]);
    g.accumulate(x, gi);
  };
  return id;
}

Graph::NodeId Graph::content_loss(NodeId generated, NodeId target) {
  const Tensor& gen = value(generated);
  const Tensor& tgt = value(target);
  if (!gen.same_shape(tgt)) {
    throw ShapeError("content_loss shape mismatch: " + gen.shape_str() + " vs " +
                     tgt.shape_str());
  }
  if (gen.rank() < 2) throw ShapeError("content_loss needs rank >= 2 maps");
  std::size_t maps = 1;
  for (int i = 0; i < gen.rank() - 2; ++i) maps *= static_cast<std::size_t>(gen.dim(i));
  const double inv = 1.0 / static_cast<double>(maps);
  double loss = 0.0;
  for (std::size_t i = 0; i < gen.size(); ++i) {
    const double d = gen[i] - tgt[i];
    loss += d * d;
  }
  loss *= inv;
  NodeId id = push(Tensor({1}, {loss}), {});
  nodes_.back().back = [generated, target, id, inv](Graph& g) {
    const double up = g.grad(id)[0];
    const Tensor& ge = g.value(generated);
    const Tensor& ta = g.value(target);
    Tensor gg(ge.shape());
    Tensor gt(ta.shape());
    for (std::size_t i = 0; i < ge.size(); ++i) {
      const double d = 2.0 * inv * (ge[i] - ta[i]) * up;
      gg[i] = d;
      gt[i] = -d;
    }
    g.accumulate(generated, gg);
    g.accumulate(target, gt);
  };
  return id;
}

Graph::NodeId Graph::softmax_cross_entropy(NodeId logits, std::vector<int> labels) {
  const Tensor& z = value(logits);
  if (z.rank() != 2) throw ShapeError("softmax_cross_entropy expects logits [N,K]");
  const int n = z.dim(0), k = z.dim(1);
  if (static_cast<int>(labels.size()) != n) {
    throw ShapeError("softmax_cross_entropy labels length " +
                     std::to_string(labels.size()) + " != batch " + std::to_string(n));
  }
  auto probs = std::make_shared<Tensor>(std::vector<int>{n, k});
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    double mx = z.at(i, 0);
    for (int j = 1; j < k; ++j) mx = std::max(mx, z.at(i, j));
    double denom = 0.0;
    for (int j = 0; j < k; ++j) denom += std::exp(z.at(i, j) - mx);
    for (int j = 0; j < k; ++j) probs->at(i, j) = std::exp(z.at(i, j) - mx) / denom;
    loss -= std::log(probs->at(i, labels[static_cast<std::size_t>(i)]));
  }
  loss /= n;
  NodeId id = push(Tensor({1}, {loss}), {});
  auto lab = std::make_shared<std::vector<int>>(std::move(labels));
  nodes_.back().back = [logits, id, probs, lab, n, k](Graph& g) {
    const double up = g.grad(id)[0] / n;
    Tensor gz({n, k});
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < k; ++j) {
        const double onehot = (*lab)[static_cast<std::size_t>(i)] == j ? 1.0 : 0.0;
        gz.at(i, j) = up * (probs->at(i, j) - onehot);
      }
    }
    g.accumulate(logits, gz);
  };
  return id;
}

void Graph::backward(NodeId loss) {
  const Tensor& lv = value(loss);
  if (lv.size() != 1) {
    throw ShapeError("backward requires a scalar loss node, got " + lv.shape_str());
  }
  for (auto& n : nodes_) n.grad = Tensor{};
  mutable_grad(loss) = Tensor({1}, {1.0});
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.back || n.grad.empty()) continue;
    n.back(*this);
  }
}

}  // namespace ptn
