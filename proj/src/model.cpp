#include "presstyle/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "presstyle/adam.hpp"
#include "presstyle/rng.hpp"

namespace ptn {

NetConfig NetConfig::paper_preset() {
  NetConfig c;
  c.c1 = 16;
  c.c2 = 32;
  c.c3 = 64;
  c.batch = 1028;  // as reported
  c.max_epochs = 500;
  c.patience = 50;
  c.window_stride = 1;
  c.max_pairs_per_epoch = 0;
  return c;
}

NetConfig NetConfig::desk_preset() {
  NetConfig c;
  c.c1 = 16;
  c.c2 = 32;
  c.c3 = 64;
  c.batch = 64;
  c.learning_rate = 3e-3;
  c.max_epochs = 15;
  c.patience = 15;
  c.window_stride = 10;
  c.max_pairs_per_epoch = 640;
  return c;
}

void NetConfig::validate() const {
  if (c1 <= 0 || c2 <= 0 || c3 <= 0) throw ModelError("channel widths must be positive");
  if (latent != 128) throw ModelError("latent size is fixed to 128");
  if (attr_size != 3) throw ModelError("attribute size is fixed to 3");
  if (window != 30 || rows != 80 || cols != 28) {
    throw ModelError("input geometry is fixed to 30x80x28");
  }
  if (batch < 2) throw ModelError("batch size must be >= 2 (batch norm)");
  if (learning_rate <= 0.0) throw ModelError("learning rate must be positive");
  if (pressure_scale <= 0.0) throw ModelError("pressure scale must be positive");
  if (output_noise_floor < 0.0) throw ModelError("output noise floor must be >= 0");
  if (input_gamma <= 0.0 || input_gamma > 1.0) {
    throw ModelError("input gamma must be in (0, 1]");
  }
  if (window_stride < 1) throw ModelError("window stride must be >= 1");
}

namespace {
constexpr int kBottleH = 10;
constexpr int kBottleW = 3;

// cell values live in compressed net units: p -> p^gamma / scale
double to_net_units(double p, const NetConfig& cfg) {
  const double c = cfg.input_gamma == 1.0 ? p : std::pow(p, cfg.input_gamma);
  return c / cfg.pressure_scale;
}

double to_pressure(double y, const NetConfig& cfg) {
  const double c = y * cfg.pressure_scale;
  return cfg.input_gamma == 1.0 ? c : std::pow(c, 1.0 / cfg.input_gamma);
}
}  // namespace

struct TransferNet::ParamNodes {
  std::map<std::string, Graph::NodeId> by_name;
  std::vector<std::string> order;
  std::vector<Graph::NodeId> ids;

  Graph::NodeId id(const std::string& n) const {
    auto it = by_name.find(n);
    if (it == by_name.end()) throw ModelError("missing parameter node: " + n);
    return it->second;
  }
};

std::vector<std::string> TransferNet::trainable_names() const {
  std::vector<std::string> out;
  for (const auto& n : weights_.names()) {
    if (n.ends_with(".rmean") || n.ends_with(".rvar")) continue;
    out.push_back(n);
  }
  return out;
}

void TransferNet::init_params() {
  Rng rng(cfg_.seed);
  auto he_uniform = [&](std::vector<int> shape, int fan_in) {
    Tensor t(shape);
    const double limit = std::sqrt(6.0 / fan_in);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-limit, limit);
    return t;
  };
  auto add_conv = [&](const std::string& name, int c_out, int c_in) {
    weights_.add(name + ".w", he_uniform({c_out, c_in, 3, 3}, c_in * 9));
    weights_.add(name + ".b", Tensor({c_out}));
  };
  auto add_tconv = [&](const std::string& name, int c_in, int c_out) {
    weights_.add(name + ".w", he_uniform({c_in, c_out, 3, 3}, c_in * 9));
    weights_.add(name + ".b", Tensor({c_out}));
  };
  auto add_bn = [&](const std::string& name, int c) {
    Tensor gamma({c});
    gamma.fill(1.0);
    weights_.add(name + ".gamma", std::move(gamma));
    weights_.add(name + ".beta", Tensor({c}));
    weights_.add(name + ".rmean", Tensor({c}));
    Tensor rv({c});
    rv.fill(1.0);
    weights_.add(name + ".rvar", std::move(rv));
  };
  auto add_dense = [&](const std::string& name, int d_in, int d_out) {
    weights_.add(name + ".w", he_uniform({d_in, d_out}, d_in));
    weights_.add(name + ".b", Tensor({d_out}));
  };

  const int flat = cfg_.c3 * kBottleH * kBottleW;
  add_conv("enc.conv1", cfg_.c1, cfg_.window);
  add_bn("enc.bn1", cfg_.c1);
  add_conv("enc.conv2", cfg_.c2, cfg_.c1);
  add_bn("enc.bn2", cfg_.c2);
  add_conv("enc.conv3", cfg_.c3, cfg_.c2);
  add_bn("enc.bn3", cfg_.c3);
  add_dense("enc.fc1", flat, cfg_.latent);
  add_dense("enc.fc2", cfg_.latent + cfg_.attr_size, cfg_.latent);
  add_dense("dec.fc", cfg_.latent + cfg_.attr_size, flat);
  add_tconv("dec.tconv1", cfg_.c3, cfg_.c2);
  add_bn("dec.bn1", cfg_.c2);
  add_tconv("dec.tconv2", cfg_.c2, cfg_.c1);
  add_bn("dec.bn2", cfg_.c1);
  add_tconv("dec.tconv3", cfg_.c1, cfg_.window);
  add_bn("dec.bn3", cfg_.window);
  sync_bn_from_store();
}

void TransferNet::sync_bn_from_store() {
  static const char* names[6] = {"enc.bn1", "enc.bn2", "enc.bn3",
                                 "dec.bn1", "dec.bn2", "dec.bn3"};
  for (int i = 0; i < 6; ++i) {
    bn_[static_cast<std::size_t>(i)].running_mean =
        weights_.get(std::string(names[i]) + ".rmean");
    bn_[static_cast<std::size_t>(i)].running_var =
        weights_.get(std::string(names[i]) + ".rvar");
  }
}

void TransferNet::sync_bn_to_store() const {
  static const char* names[6] = {"enc.bn1", "enc.bn2", "enc.bn3",
                                 "dec.bn1", "dec.bn2", "dec.bn3"};
  for (int i = 0; i < 6; ++i) {
    weights_.get(std::string(names[i]) + ".rmean") =
        bn_[static_cast<std::size_t>(i)].running_mean;
    weights_.get(std::string(names[i]) + ".rvar") =
        bn_[static_cast<std::size_t>(i)].running_var;
  }
}

TransferNet::TransferNet(const NetConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  init_params();
}

TransferNet::TransferNet(const NetConfig& cfg, ParamStore weights)
    : cfg_(cfg), weights_(std::move(weights)) {
  cfg_.validate();
  // verify the blob matches the configured architecture
  const std::vector<std::pair<std::string, std::vector<int>>> expected = {
      {"enc.conv1.w", {cfg_.c1, cfg_.window, 3, 3}},
      {"enc.conv3.w", {cfg_.c3, cfg_.c2, 3, 3}},
      {"dec.tconv3.w", {cfg_.c1, cfg_.window, 3, 3}},
      {"enc.fc2.w", {cfg_.latent + cfg_.attr_size, cfg_.latent}},
  };
  for (const auto& [name, shape] : expected) {
    if (!weights_.has(name) || weights_.get(name).shape() != shape) {
      throw ModelError("weight file does not match the configured architecture (" +
                       name + ")");
    }
  }
  sync_bn_from_store();
}

void TransferNet::register_params(Graph& g, ParamNodes& nodes) const {
  for (const auto& n : trainable_names()) {
    Graph::NodeId id = g.input(weights_.get(n));
    nodes.by_name[n] = id;
    nodes.order.push_back(n);
    nodes.ids.push_back(id);
  }
}

Graph::NodeId TransferNet::feature_maps(Graph& g, Graph::NodeId x_scaled,
                                        ParamNodes& nodes) const {
  Graph::NodeId x = x_scaled;
  const char* convs[3] = {"enc.conv1", "enc.conv2", "enc.conv3"};
  const char* bns[3] = {"enc.bn1", "enc.bn2", "enc.bn3"};
  for (int i = 0; i < 3; ++i) {
    Graph::NodeId c = g.conv2d(x, nodes.id(std::string(convs[i]) + ".w"),
                               nodes.id(std::string(convs[i]) + ".b"), 1, 1);
    Graph::NodeId b = g.batch_norm(c, nodes.id(std::string(bns[i]) + ".gamma"),
                                   nodes.id(std::string(bns[i]) + ".beta"),
                                   bn_[static_cast<std::size_t>(i)], false);
    Graph::NodeId r = g.relu(b);
    x = g.max_pool2d(r, nullptr);
  }
  return x;
}

TransferNet::ForwardOut TransferNet::forward(Graph& g, Graph::NodeId x_scaled,
                                             Graph::NodeId src_attrs,
                                             Graph::NodeId tgt_attrs, bool train,
                                             ParamNodes& nodes) const {
  ForwardOut out;
  const int n = g.value(x_scaled).dim(0);

  // encoder: three conv/BN/pool blocks, 80x28 -> 40x14 -> 20x7 -> 10x3
  Graph::NodeId x = x_scaled;
  const char* convs[3] = {"enc.conv1", "enc.conv2", "enc.conv3"};
  const char* bns[3] = {"enc.bn1", "enc.bn2", "enc.bn3"};
  for (int i = 0; i < 3; ++i) {
    Graph::NodeId c = g.conv2d(x, nodes.id(std::string(convs[i]) + ".w"),
                               nodes.id(std::string(convs[i]) + ".b"), 1, 1);
    Graph::NodeId b = g.batch_norm(c, nodes.id(std::string(bns[i]) + ".gamma"),
                                   nodes.id(std::string(bns[i]) + ".beta"),
                                   bn_[static_cast<std::size_t>(i)], train);
    Graph::NodeId r = g.relu(b);
    x = g.max_pool2d(r, &out.records[static_cast<std::size_t>(i)]);
  }
  const int flat_dim = cfg_.c3 * kBottleH * kBottleW;
  Graph::NodeId flat = g.reshape(x, {n, flat_dim});
  Graph::NodeId f1 =
      g.relu(g.dense(flat, nodes.id("enc.fc1.w"), nodes.id("enc.fc1.b")));
  out.latent = g.dense(g.concat_cols(f1, src_attrs), nodes.id("enc.fc2.w"),
                       nodes.id("enc.fc2.b"));

  // decoder: dense to bottleneck, then three unpool/tconv/BN blocks
  Graph::NodeId d = g.relu(g.dense(g.concat_cols(out.latent, tgt_attrs),
                                   nodes.id("dec.fc.w"), nodes.id("dec.fc.b")));
  Graph::NodeId y = g.reshape(d, {n, cfg_.c3, kBottleH, kBottleW});
  const char* tconvs[3] = {"dec.tconv1", "dec.tconv2", "dec.tconv3"};
  const char* dbns[3] = {"dec.bn1", "dec.bn2", "dec.bn3"};
  for (int i = 0; i < 3; ++i) {
    const PoolRecord& rec = out.records[static_cast<std::size_t>(2 - i)];
    Graph::NodeId u = g.max_unpool2d(y, rec);
    Graph::NodeId t = g.conv2d_transpose(u, nodes.id(std::string(tconvs[i]) + ".w"),
                                         nodes.id(std::string(tconvs[i]) + ".b"), 1, 1,
                                         rec.in_h, rec.in_w);
    t = g.batch_norm(t, nodes.id(std::string(dbns[i]) + ".gamma"),
                     nodes.id(std::string(dbns[i]) + ".beta"),
                     bn_[static_cast<std::size_t>(3 + i)], train);
    y = g.relu(t);
  }
  out.output = y;
  return out;
}

Tensor TransferNet::window_tensor(const Window& w) const {
  Tensor t({1, cfg_.window, cfg_.rows, cfg_.cols});
  std::size_t k = 0;
  for (int f = 0; f < cfg_.window; ++f) {
    const Frame& fr = w.frame(static_cast<std::size_t>(f));
    for (float v : fr) t[k++] = static_cast<double>(v);
  }
  return t;
}

Tensor TransferNet::attr_tensor(const AttributeVector& a) const {
  const auto v = normalize_attributes(a, attr_stats_);
  return Tensor({1, 3}, {v[0], v[1], v[2]});
}

TransferNet::Encoded TransferNet::encode(const Tensor& windows,
                                         const Tensor& src_attrs) const {
  if (windows.rank() != 4 || windows.dim(1) != cfg_.window ||
      windows.dim(2) != cfg_.rows || windows.dim(3) != cfg_.cols) {
    throw ModelError("encode expects windows [N,30,80,28], got " + windows.shape_str());
  }
  Tensor scaled = windows;
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    scaled[i] = to_net_units(scaled[i], cfg_);
  }

  Graph g;
  ParamNodes nodes;
  register_params(g, nodes);
  Graph::NodeId x = g.input(std::move(scaled));
  Graph::NodeId attrs = g.input(src_attrs);

  // encoder-only path (eval-mode BN)
  Encoded enc;
  const char* convs[3] = {"enc.conv1", "enc.conv2", "enc.conv3"};
  const char* bns[3] = {"enc.bn1", "enc.bn2", "enc.bn3"};
  Graph::NodeId y = x;
  for (int i = 0; i < 3; ++i) {
    Graph::NodeId c = g.conv2d(y, nodes.id(std::string(convs[i]) + ".w"),
                               nodes.id(std::string(convs[i]) + ".b"), 1, 1);
    Graph::NodeId b = g.batch_norm(c, nodes.id(std::string(bns[i]) + ".gamma"),
                                   nodes.id(std::string(bns[i]) + ".beta"),
                                   bn_[static_cast<std::size_t>(i)], false);
    Graph::NodeId r = g.relu(b);
    y = g.max_pool2d(r, &enc.records[static_cast<std::size_t>(i)]);
  }
  Graph::NodeId flat = g.reshape(y, {windows.dim(0), cfg_.c3 * kBottleH * kBottleW});
  Graph::NodeId f1 =
      g.relu(g.dense(flat, nodes.id("enc.fc1.w"), nodes.id("enc.fc1.b")));
  Graph::NodeId lat = g.dense(g.concat_cols(f1, attrs), nodes.id("enc.fc2.w"),
                              nodes.id("enc.fc2.b"));
  enc.latent = g.value(lat);
  return enc;
}

Tensor TransferNet::decode(const Tensor& latent, const Tensor& tgt_attrs,
                           const std::array<PoolRecord, 3>& records) const {
  if (latent.rank() != 2 || latent.dim(1) != cfg_.latent) {
    throw ModelError("decode expects latent [N,128], got " + latent.shape_str());
  }
  if (records[0].argmax.empty() || records[1].argmax.empty() ||
      records[2].argmax.empty()) {
    throw ModelError("decode requires the encoder's pool records");
  }
  Graph g;
  ParamNodes nodes;
  register_params(g, nodes);
  Graph::NodeId lat = g.input(latent);
  Graph::NodeId attrs = g.input(tgt_attrs);
  Graph::NodeId d = g.relu(g.dense(g.concat_cols(lat, attrs), nodes.id("dec.fc.w"),
                                   nodes.id("dec.fc.b")));
  Graph::NodeId y = g.reshape(d, {latent.dim(0), cfg_.c3, kBottleH, kBottleW});
  const char* tconvs[3] = {"dec.tconv1", "dec.tconv2", "dec.tconv3"};
  const char* dbns[3] = {"dec.bn1", "dec.bn2", "dec.bn3"};
  for (int i = 0; i < 3; ++i) {
    const PoolRecord& rec = records[static_cast<std::size_t>(2 - i)];
    Graph::NodeId u = g.max_unpool2d(y, rec);
    Graph::NodeId t = g.conv2d_transpose(u, nodes.id(std::string(tconvs[i]) + ".w"),
                                         nodes.id(std::string(tconvs[i]) + ".b"), 1, 1,
                                         rec.in_h, rec.in_w);
    t = g.batch_norm(t, nodes.id(std::string(dbns[i]) + ".gamma"),
                     nodes.id(std::string(dbns[i]) + ".beta"),
                     bn_[static_cast<std::size_t>(3 + i)], false);
    y = g.relu(t);
  }
  Tensor out = g.value(y);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_pressure(out[i], cfg_);
  return out;
}

double content_loss(const Tensor& generated, const Tensor& target) {
  if (!generated.same_shape(target)) {
    throw ShapeError("content_loss shape mismatch: " + generated.shape_str() + " vs " +
                     target.shape_str());
  }
  if (generated.rank() < 2) throw ShapeError("content_loss needs rank >= 2 maps");
  std::size_t maps = 1;
  for (int i = 0; i < generated.rank() - 2; ++i) {
    maps *= static_cast<std::size_t>(generated.dim(i));
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const double d = generated[i] - target[i];
    loss += d * d;
  }
  return loss / static_cast<double>(maps);
}

namespace {

struct AlignedPair {
  const PressureSequence* src;
  const PressureSequence* tgt;
  std::size_t start;
};

}  // namespace

TrainResult TransferNet::train(const DatasetManifest& manifest) {
  cfg_.validate();
  const auto train_entries = manifest.filter_split("train");
  if (train_entries.empty()) throw ModelError("manifest has no train split");

  // load sequences, grouped by script so windows align across subjects
  std::map<std::string, std::vector<PressureSequence>> by_script;
  for (const auto& e : train_entries) {
    by_script[e.script_id].push_back(load_sequence(e.path));
  }

  std::vector<AlignedPair> pairs;
  for (const auto& [script, seqs] : by_script) {
    std::size_t len = seqs.front().frame_count();
    for (const auto& s : seqs) len = std::min(len, s.frame_count());
    if (len < static_cast<std::size_t>(cfg_.window)) continue;
    for (std::size_t start = 0; start + cfg_.window <= len;
         start += static_cast<std::size_t>(cfg_.window_stride)) {
      for (const auto& src : seqs) {
        for (const auto& tgt : seqs) {
          pairs.push_back({&src, &tgt, start});
        }
      }
    }
  }
  if (pairs.empty()) throw ModelError("no alignable training pairs in manifest");

  Rng rng(cfg_.seed ^ 0x5eedf00dULL);
  rng.shuffle(pairs);
  const std::size_t val_count = std::max<std::size_t>(1, pairs.size() / 10);
  std::vector<AlignedPair> val_pairs(pairs.begin(),
                                     pairs.begin() + static_cast<long>(val_count));
  std::vector<AlignedPair> train_pairs(pairs.begin() + static_cast<long>(val_count),
                                       pairs.end());
  if (train_pairs.empty()) throw ModelError("too few pairs for a 9:1 split");
  // cap validation cost
  if (val_pairs.size() > static_cast<std::size_t>(2 * cfg_.batch)) {
    val_pairs.resize(static_cast<std::size_t>(2 * cfg_.batch));
  }

  auto fill_batch = [&](const std::vector<AlignedPair>& list, std::size_t lo,
                        std::size_t hi, Tensor* x, Tensor* y, Tensor* sa, Tensor* ta) {
    const int b = static_cast<int>(hi - lo);
    *x = Tensor({b, cfg_.window, cfg_.rows, cfg_.cols});
    *y = Tensor({b, cfg_.window, cfg_.rows, cfg_.cols});
    *sa = Tensor({b, 3});
    *ta = Tensor({b, 3});
    std::size_t xi = 0;
    for (std::size_t p = lo; p < hi; ++p) {
      const AlignedPair& pr = list[p];
      for (int f = 0; f < cfg_.window; ++f) {
        const Frame& sf = pr.src->frames[pr.start + static_cast<std::size_t>(f)];
        const Frame& tf = pr.tgt->frames[pr.start + static_cast<std::size_t>(f)];
        for (std::size_t c = 0; c < sf.size(); ++c, ++xi) {
          (*x)[xi] = to_net_units(sf[c], cfg_);
          (*y)[xi] = to_net_units(tf[c], cfg_);
        }
      }
      const auto sv = normalize_attributes(pr.src->attributes, attr_stats_);
      const auto tv = normalize_attributes(pr.tgt->attributes, attr_stats_);
      const int row = static_cast<int>(p - lo);
      for (int j = 0; j < 3; ++j) {
        sa->at(row, j) = sv[static_cast<std::size_t>(j)];
        ta->at(row, j) = tv[static_cast<std::size_t>(j)];
      }
    }
  };

  auto run_loss = [&](const std::vector<AlignedPair>& list, std::size_t lo,
                      std::size_t hi, bool train_mode, AdamState* opt) {
    Tensor x, y, sa, ta;
    fill_batch(list, lo, hi, &x, &y, &sa, &ta);
    Graph g;
    ParamNodes nodes;
    register_params(g, nodes);
    Graph::NodeId xn = g.input(std::move(x));
    Graph::NodeId yn = g.input(std::move(y));
    Graph::NodeId san = g.input(std::move(sa));
    Graph::NodeId tan = g.input(std::move(ta));
    ForwardOut fw = forward(g, xn, san, tan, train_mode, nodes);
    Graph::NodeId loss;
    if (cfg_.feature_loss) {
      loss = g.content_loss(feature_maps(g, fw.output, nodes),
                            feature_maps(g, yn, nodes));
    } else {
      loss = g.content_loss(fw.output, yn);
    }
    const double loss_value = g.value(loss)[0];
    if (opt) {
      g.backward(loss);
      std::vector<Tensor> grads;
      grads.reserve(nodes.ids.size());
      for (std::size_t i = 0; i < nodes.ids.size(); ++i) {
        const Tensor& gr = g.grad(nodes.ids[i]);
        grads.push_back(gr.empty() ? Tensor(g.value(nodes.ids[i]).shape()) : gr);
      }
      std::vector<Tensor*> params;
      for (const auto& n : nodes.order) params.push_back(&weights_.get(n));
      adam_step(params, grads, *opt, nodes.order);
    }
    return loss_value;
  };

  AdamState opt;
  opt.learning_rate = cfg_.learning_rate;

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  ParamStore best_weights;
  int since_best = 0;

  for (int epoch = 0; epoch < cfg_.max_epochs; ++epoch) {
    opt.learning_rate =
        cfg_.learning_rate * std::pow(0.5, epoch / cfg_.lr_halve_every);

    rng.shuffle(train_pairs);
    std::size_t epoch_pairs = train_pairs.size();
    if (cfg_.max_pairs_per_epoch > 0) {
      epoch_pairs = std::min<std::size_t>(epoch_pairs,
                                          static_cast<std::size_t>(cfg_.max_pairs_per_epoch));
    }

    double train_loss = 0.0;
    std::size_t trained = 0;
    for (std::size_t lo = 0; lo < epoch_pairs;
         lo += static_cast<std::size_t>(cfg_.batch)) {
      const std::size_t hi = std::min(epoch_pairs, lo + static_cast<std::size_t>(cfg_.batch));
      if (hi - lo < 2) break;  // train-mode BN needs a batch
      train_loss += run_loss(train_pairs, lo, hi, true, &opt) *
                    static_cast<double>(hi - lo);
      trained += hi - lo;
    }
    if (trained == 0) throw ModelError("batch size exceeds available pairs");
    train_loss /= static_cast<double>(trained);

    double val_loss = 0.0;
    for (std::size_t lo = 0; lo < val_pairs.size();
         lo += static_cast<std::size_t>(cfg_.batch)) {
      const std::size_t hi =
          std::min(val_pairs.size(), lo + static_cast<std::size_t>(cfg_.batch));
      val_loss += run_loss(val_pairs, lo, hi, false, nullptr) *
                  static_cast<double>(hi - lo);
    }
    val_loss /= static_cast<double>(val_pairs.size());

    result.history.push_back({epoch, train_loss, val_loss, opt.learning_rate});

    if (val_loss < best_val) {
      best_val = val_loss;
      result.best_epoch = epoch;
      since_best = 0;
      sync_bn_to_store();
      best_weights = weights_;
    } else if (++since_best >= cfg_.patience) {
      result.early_stopped = true;
      break;
    }
  }

  if (best_weights.count() > 0) {
    weights_ = std::move(best_weights);
    sync_bn_from_store();
  }
  result.best_val_loss = best_val;
  return result;
}

PressureSequence TransferNet::transfer(const PressureSequence& src,
                                       const AttributeVector& tgt, int stride) const {
  const std::size_t len = src.frame_count();
  if (len < static_cast<std::size_t>(cfg_.window)) {
    throw ModelError("sequence too short to transfer: " + std::to_string(len) +
                     " frames < " + std::to_string(cfg_.window));
  }
  if (stride < 1) throw ModelError("transfer stride must be >= 1");
  tgt.validate();

  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + cfg_.window <= len; s += static_cast<std::size_t>(stride)) {
    starts.push_back(s);
  }
  const std::size_t tail = len - static_cast<std::size_t>(cfg_.window);
  if (starts.empty() || starts.back() != tail) starts.push_back(tail);

  const std::size_t cells = static_cast<std::size_t>(cfg_.rows) * cfg_.cols;
  std::vector<double> sum(len * cells, 0.0);
  std::vector<double> count(len, 0.0);

  const Tensor tgt_attrs = attr_tensor(tgt);
  const Tensor src_attrs = attr_tensor(src.attributes);

  for (std::size_t s : starts) {
    Window w{&src, s};
    Encoded enc = encode(window_tensor(w), src_attrs);
    Tensor out = decode(enc.latent, tgt_attrs, enc.records);
    for (int f = 0; f < cfg_.window; ++f) {
      const std::size_t t = s + static_cast<std::size_t>(f);
      count[t] += 1.0;
      double* dst = sum.data() + t * cells;
      const double* row = out.data() + static_cast<std::size_t>(f) * cells;
      for (std::size_t c = 0; c < cells; ++c) dst[c] += row[c];
    }
  }

  PressureSequence out;
  out.fps = src.fps;
  out.attributes = tgt;
  out.motion_label = src.motion_label;
  out.subject_id = src.subject_id;
  out.frames.resize(len);
  for (std::size_t t = 0; t < len; ++t) {
    Frame& f = out.frames[t];
    f.resize(cells);
    const double inv = 1.0 / count[t];
    const double* row = sum.data() + t * cells;
    for (std::size_t c = 0; c < cells; ++c) {
      const double v = row[c] * inv;
      f[c] = v < cfg_.output_noise_floor ? 0.0f : static_cast<float>(v);
    }
  }
  return out;
}

void TransferNet::save(const std::string& path) const {
  sync_bn_to_store();
  save_weights(weights_, path);
}

TransferNet TransferNet::load(const std::string& path, const NetConfig& cfg) {
  return TransferNet(cfg, load_weights(path));
}

}  // namespace ptn
