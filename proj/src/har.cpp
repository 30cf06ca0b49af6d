#include "presstyle/har.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "presstyle/adam.hpp"
#include "presstyle/graph.hpp"
#include "presstyle/rng.hpp"

namespace ptn {

std::vector<double> window_descriptor(const Window& w) {
  if (!w.sequence) throw HarError("window_descriptor: null sequence");
  const int rows = kGridRows, cols = kGridCols;

  std::vector<double> totals, areas, cr, cc, rspread, cspread;
  for (int f = 0; f < kWindowFrames; ++f) {
    const Frame& fr = w.frame(static_cast<std::size_t>(f));
    double total = 0.0, area = 0.0;
    double sr = 0.0, sc = 0.0, srr = 0.0, scc = 0.0;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const double v = fr[static_cast<std::size_t>(r * cols + c)];
        if (v <= 0.0) continue;
        total += v;
        area += 1.0;
        sr += v * r;
        sc += v * c;
        srr += v * r * r;
        scc += v * c * c;
      }
    }
    totals.push_back(total);
    areas.push_back(area);
    if (total > 0.0) {
      const double mr = sr / total, mc = sc / total;
      cr.push_back(mr);
      cc.push_back(mc);
      rspread.push_back(std::sqrt(std::max(0.0, srr / total - mr * mr)));
      cspread.push_back(std::sqrt(std::max(0.0, scc / total - mc * mc)));
    } else {  // empty frame (e.g. flight phase): park at grid center
      cr.push_back((rows - 1) / 2.0);
      cc.push_back((cols - 1) / 2.0);
      rspread.push_back(0.0);
      cspread.push_back(0.0);
    }
  }

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto stdev = [&](const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
  };
  auto range = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
  };

  std::vector<double> d = {mean(totals), stdev(totals), mean(areas),
                           stdev(areas),  mean(cr),     mean(cc),
                           range(cr),     range(cc),    mean(rspread),
                           mean(cspread), stdev(cr),    stdev(cc)};
  for (double v : d) {
    if (!std::isfinite(v)) throw HarError("window_descriptor: non-finite feature");
  }
  return d;
}

PseudoLabels pseudo_label(const std::vector<Window>& windows, double bandwidth) {
  if (windows.size() < 2) throw HarError("pseudo_label: need at least two windows");
  std::vector<std::vector<double>> desc(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    desc[i] = window_descriptor(windows[i]);
  }
  const std::size_t dim = desc[0].size();

  PseudoLabels out;
  out.feature_mean.assign(dim, 0.0);
  out.feature_std.assign(dim, 0.0);
  for (const auto& d : desc) {
    for (std::size_t k = 0; k < dim; ++k) out.feature_mean[k] += d[k];
  }
  for (std::size_t k = 0; k < dim; ++k) {
    out.feature_mean[k] /= static_cast<double>(desc.size());
  }
  for (const auto& d : desc) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double c = d[k] - out.feature_mean[k];
      out.feature_std[k] += c * c;
    }
  }
  for (std::size_t k = 0; k < dim; ++k) {
    out.feature_std[k] = std::sqrt(out.feature_std[k] / static_cast<double>(desc.size()));
    if (out.feature_std[k] == 0.0) out.feature_std[k] = 1.0;  // constant feature
  }
  for (auto& d : desc) {
    for (std::size_t k = 0; k < dim; ++k) {
      d[k] = (d[k] - out.feature_mean[k]) / out.feature_std[k];
    }
  }

  MeanShiftOptions ms;
  ms.bandwidth = bandwidth;
  MeanShiftResult res = mean_shift(desc, ms);
  out.labels = std::move(res.labels);
  out.model = std::move(res.model);
  out.cluster_count = static_cast<int>(out.model.modes.size());
  return out;
}

std::string cluster_csv(const std::vector<Window>& windows,
                        const std::vector<int>& labels) {
  if (windows.size() != labels.size()) {
    throw HarError("cluster_csv: windows/labels size mismatch");
  }
  std::ostringstream os;
  os << "window,subject,motion,start,label\n";
  for (std::size_t i = 0; i < windows.size(); ++i) {
    os << i << ',' << windows[i].sequence->subject_id << ','
       << windows[i].sequence->motion_label << ',' << windows[i].start << ','
       << labels[i] << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------

struct WindowClassifier::Nodes {
  std::vector<Graph::NodeId> ids;  // aligned with weights_ order
};

WindowClassifier::WindowClassifier(const ClassifierConfig& cfg) : cfg_(cfg) {
  if (cfg_.classes > 0) init_params();
}

void WindowClassifier::init_params() {
  if (cfg_.classes < 2) throw HarError("classifier needs at least two classes");
  weights_ = ParamStore();
  Rng rng(cfg_.seed);
  auto he_uniform = [&](std::vector<int> shape, int fan_in) {
    Tensor t(shape);
    const double limit = std::sqrt(6.0 / fan_in);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-limit, limit);
    return t;
  };
  const int flat = cfg_.c2 * (kGridRows / 4) * (kGridCols / 4);
  weights_.add("conv1.w", he_uniform({cfg_.c1, kWindowFrames, 3, 3}, kWindowFrames * 9));
  weights_.add("conv1.b", Tensor({cfg_.c1}));
  weights_.add("conv2.w", he_uniform({cfg_.c2, cfg_.c1, 3, 3}, cfg_.c1 * 9));
  weights_.add("conv2.b", Tensor({cfg_.c2}));
  weights_.add("fc.w", he_uniform({flat, cfg_.classes}, flat));
  weights_.add("fc.b", Tensor({cfg_.classes}));
}

Graph::NodeId WindowClassifier::logits(Graph& g, Graph::NodeId x, Nodes& n) const {
  n.ids.clear();
  for (std::size_t i = 0; i < weights_.count(); ++i) {
    n.ids.push_back(g.input(weights_.tensor(i)));
  }
  const int batch = g.value(x).dim(0);
  auto h = g.relu(g.conv2d(x, n.ids[0], n.ids[1], 1, 1));
  h = g.max_pool2d(h, nullptr);
  h = g.relu(g.conv2d(h, n.ids[2], n.ids[3], 1, 1));
  h = g.max_pool2d(h, nullptr);
  const int flat = cfg_.c2 * (kGridRows / 4) * (kGridCols / 4);
  h = g.reshape(h, {batch, flat});
  return g.dense(h, n.ids[4], n.ids[5]);
}

Tensor WindowClassifier::batch_tensor(const std::vector<Window>& windows,
                                      const std::vector<std::size_t>& idx,
                                      std::size_t lo, std::size_t hi) const {
  Tensor t({static_cast<int>(hi - lo), kWindowFrames, kGridRows, kGridCols});
  std::size_t k = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    const Window& w = windows[idx[i]];
    for (int f = 0; f < kWindowFrames; ++f) {
      for (float v : w.frame(static_cast<std::size_t>(f))) {
        t[k++] = static_cast<double>(v) / cfg_.pressure_scale;
      }
    }
  }
  return t;
}

void WindowClassifier::train(const std::vector<Window>& windows,
                             const std::vector<int>& labels) {
  if (windows.empty() || windows.size() != labels.size()) {
    throw HarError("train: empty input or size mismatch");
  }
  std::set<int> classes(labels.begin(), labels.end());
  if (classes.size() < 2) throw HarError("train: fewer than two classes present");
  const int max_label = *classes.rbegin();
  if (*classes.begin() < 0) throw HarError("train: negative label");
  if (cfg_.classes == 0) {
    cfg_.classes = max_label + 1;
    init_params();
  } else if (max_label >= cfg_.classes) {
    throw HarError("train: label outside configured class count");
  }

  Rng rng(cfg_.seed ^ 0x7a11f00dULL);
  std::vector<std::size_t> order(windows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::size_t n_val = std::max<std::size_t>(1, order.size() / 10);
  if (n_val >= order.size()) n_val = order.size() - 1;
  std::vector<std::size_t> val(order.end() - static_cast<long>(n_val), order.end());
  order.resize(order.size() - n_val);

  AdamState adam;
  adam.learning_rate = cfg_.learning_rate;
  auto params = weights_.pointers();
  const std::size_t batch = static_cast<std::size_t>(cfg_.batch);

  auto run_loss = [&](const std::vector<std::size_t>& idx, std::size_t lo,
                      std::size_t hi, bool update) {
    Graph g;
    Nodes n;
    Graph::NodeId x = g.input(batch_tensor(windows, idx, lo, hi));
    Graph::NodeId lg = logits(g, x, n);
    std::vector<int> y;
    for (std::size_t i = lo; i < hi; ++i) y.push_back(labels[idx[i]]);
    Graph::NodeId loss = g.softmax_cross_entropy(lg, std::move(y));
    const double value = g.value(loss)[0];
    if (update) {
      g.backward(loss);
      std::vector<Tensor> grads;
      for (auto id : n.ids) grads.push_back(g.grad(id));
      adam_step(params, grads, adam, weights_.names());
    }
    return value;
  };
  auto val_loss = [&]() {
    double acc = 0.0;
    std::size_t seen = 0;
    for (std::size_t lo = 0; lo < val.size(); lo += batch) {
      const std::size_t hi = std::min(val.size(), lo + batch);
      acc += run_loss(val, lo, hi, false) * static_cast<double>(hi - lo);
      seen += hi - lo;
    }
    return acc / static_cast<double>(seen);
  };

  double best = val_loss();
  ParamStore best_weights = weights_;
  int stale = 0;
  for (int epoch = 0; epoch < cfg_.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t lo = 0; lo < order.size(); lo += batch) {
      run_loss(order, lo, std::min(order.size(), lo + batch), true);
    }
    const double v = val_loss();
    if (v < best) {
      best = v;
      best_weights = weights_;
      stale = 0;
    } else if (++stale >= cfg_.patience) {
      break;
    }
  }
  weights_ = std::move(best_weights);
}

std::vector<int> WindowClassifier::predict_all(
    const std::vector<Window>& windows) const {
  if (cfg_.classes < 2) throw HarError("predict: classifier is untrained");
  std::vector<int> out;
  std::vector<std::size_t> idx(windows.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const std::size_t batch = static_cast<std::size_t>(std::max(1, cfg_.batch));
  for (std::size_t lo = 0; lo < windows.size(); lo += batch) {
    const std::size_t hi = std::min(windows.size(), lo + batch);
    Graph g;
    Nodes n;
    Graph::NodeId lg =
        logits(g, g.input(batch_tensor(windows, idx, lo, hi)), n);
    const Tensor& v = g.value(lg);
    for (std::size_t r = 0; r < hi - lo; ++r) {
      int arg = 0;
      double top = v[r * static_cast<std::size_t>(cfg_.classes)];
      for (int c = 1; c < cfg_.classes; ++c) {
        const double x = v[r * static_cast<std::size_t>(cfg_.classes) +
                           static_cast<std::size_t>(c)];
        if (x > top) {
          top = x;
          arg = c;
        }
      }
      out.push_back(arg);
    }
  }
  return out;
}

int WindowClassifier::predict(const Window& w) const {
  return predict_all({w})[0];
}

double macro_f1(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.empty() || predictions.size() != labels.size()) {
    throw HarError("macro_f1: empty input or size mismatch");
  }
  std::set<int> classes(labels.begin(), labels.end());
  classes.insert(predictions.begin(), predictions.end());
  double acc = 0.0;
  for (int c : classes) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool p = predictions[i] == c, t = labels[i] == c;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    const double denom = 2.0 * tp + fp + fn;
    acc += denom > 0.0 ? 2.0 * tp / denom : 0.0;
  }
  return acc / static_cast<double>(classes.size());
}

// ---------------------------------------------------------------------------

namespace {

struct MeanStd {
  double mean = 0.0, std = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double s = 0.0;
    for (double x : v) s += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(s / static_cast<double>(v.size() - 1));
  }
  return out;
}

}  // namespace

Table3Report table3_protocol(const DatasetManifest& manifest,
                             const TransferNet& model, const Table3Options& opts) {
  if (opts.iterations < 1) throw HarError("table3_protocol: iterations must be >= 1");

  std::set<std::string> train_subjects;
  for (const auto& e : manifest.entries) {
    if (e.split == "train") train_subjects.insert(e.subject_id);
  }
  if (train_subjects.empty()) throw HarError("table3_protocol: no train subjects");

  // stable storage so Window pointers survive
  std::deque<PressureSequence> store;
  std::vector<Window> train_windows, eval_windows;
  std::vector<const PressureSequence*> train_seqs;
  auto take_windows = [&](const PressureSequence& seq, std::vector<Window>& dst) {
    auto ws = make_windows(seq, kWindowFrames, opts.window_stride);
    if (opts.max_windows_per_source > 0 &&
        ws.size() > static_cast<std::size_t>(opts.max_windows_per_source)) {
      ws.resize(static_cast<std::size_t>(opts.max_windows_per_source));
    }
    dst.insert(dst.end(), ws.begin(), ws.end());
    return ws.size();
  };
  for (const auto& e : manifest.entries) {
    if (e.split == "train") {
      store.push_back(load_sequence(e.path));
      train_seqs.push_back(&store.back());
      take_windows(store.back(), train_windows);
    } else if (!train_subjects.count(e.subject_id)) {
      store.push_back(load_sequence(e.path));
      take_windows(store.back(), eval_windows);
    }
  }
  if (train_windows.empty() || eval_windows.empty()) {
    throw HarError("table3_protocol: need both train and held-out windows");
  }

  // one clustering pass over the whole real pool keeps the label space shared
  std::vector<Window> pool = train_windows;
  pool.insert(pool.end(), eval_windows.begin(), eval_windows.end());
  PseudoLabels pl = pseudo_label(pool, opts.bandwidth);
  std::vector<int> train_labels(pl.labels.begin(),
                                pl.labels.begin() + static_cast<long>(train_windows.size()));
  std::vector<int> eval_labels(pl.labels.begin() + static_cast<long>(train_windows.size()),
                               pl.labels.end());

  // synthetic corpus: each train sequence re-rendered with other train
  // subjects' attributes; windows inherit the source window's pseudo-label
  std::vector<Window> synth_windows;
  std::vector<int> synth_labels;
  {
    std::map<std::string, AttributeVector> subject_attrs;
    for (const auto* s : train_seqs) subject_attrs[s->subject_id] = s->attributes;
    std::vector<std::string> subjects;
    for (const auto& [id, a] : subject_attrs) subjects.push_back(id);

    std::size_t label_cursor = 0;
    for (const auto* src : train_seqs) {
      auto ws = make_windows(*src, kWindowFrames, opts.window_stride);
      std::size_t n_src = ws.size();
      if (opts.max_windows_per_source > 0 &&
          n_src > static_cast<std::size_t>(opts.max_windows_per_source)) {
        n_src = static_cast<std::size_t>(opts.max_windows_per_source);
      }
      // cyclic pick of other subjects keeps the choice deterministic
      std::vector<std::string> others;
      for (const auto& id : subjects) {
        if (id != src->subject_id) others.push_back(id);
      }
      const int n_tgt = std::min<int>(opts.synth_targets_per_sequence,
                                      static_cast<int>(others.size()));
      for (int t = 0; t < n_tgt; ++t) {
        const auto& tgt_id = others[static_cast<std::size_t>(
            (static_cast<int>(label_cursor) + t) % static_cast<int>(others.size()))];
        store.push_back(model.transfer(*src, subject_attrs[tgt_id],
                                       opts.transfer_stride));
        store.back().subject_id = tgt_id + "_synth";
        auto sws = make_windows(store.back(), kWindowFrames, opts.window_stride);
        for (std::size_t i = 0; i < n_src && i < sws.size(); ++i) {
          synth_windows.push_back(sws[i]);
          synth_labels.push_back(train_labels[label_cursor + i]);
        }
      }
      label_cursor += n_src;
    }
  }
  if (synth_windows.empty()) throw HarError("table3_protocol: no synthetic windows");

  std::vector<Window> combined_windows = train_windows;
  combined_windows.insert(combined_windows.end(), synth_windows.begin(),
                          synth_windows.end());
  std::vector<int> combined_labels = train_labels;
  combined_labels.insert(combined_labels.end(), synth_labels.begin(),
                         synth_labels.end());

  std::vector<double> real_f1, synth_f1, combined_f1;
  for (int it = 0; it < opts.iterations; ++it) {
    auto run = [&](const std::vector<Window>& ws, const std::vector<int>& ls) {
      ClassifierConfig cc = opts.classifier;
      cc.classes = pl.cluster_count;
      cc.seed = opts.classifier.seed + static_cast<std::uint64_t>(it) * 1000003ULL;
      WindowClassifier clf(cc);
      clf.train(ws, ls);
      return macro_f1(clf.predict_all(eval_windows), eval_labels);
    };
    real_f1.push_back(run(train_windows, train_labels));
    synth_f1.push_back(run(synth_windows, synth_labels));
    combined_f1.push_back(run(combined_windows, combined_labels));
  }

  Table3Report rep;
  rep.iterations = opts.iterations;
  rep.cluster_count = pl.cluster_count;
  rep.cluster_assignments_csv = cluster_csv(pool, pl.labels);
  const MeanStd r = mean_std(real_f1), s = mean_std(synth_f1),
                c = mean_std(combined_f1);
  rep.real_mean = r.mean;
  rep.real_std = r.std;
  rep.synth_mean = s.mean;
  rep.synth_std = s.std;
  rep.combined_mean = c.mean;
  rep.combined_std = c.std;
  return rep;
}

std::string Table3Report::to_text() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "Real            Synthetic       Real+Synthetic\n"
                "%.3f+-%.3f   %.3f+-%.3f   %.3f+-%.3f\n",
                real_mean, real_std, synth_mean, synth_std, combined_mean,
                combined_std);
  std::ostringstream os;
  os << buf << "macro F1 over " << iterations << " iterations, "
     << cluster_count << " pseudo-label clusters\n";
  return os.str();
}

std::string Table3Report::to_json() const {
  nlohmann::json doc;
  doc["iterations"] = iterations;
  doc["cluster_count"] = cluster_count;
  doc["real"] = {{"mean", real_mean}, {"std", real_std}};
  doc["synthetic"] = {{"mean", synth_mean}, {"std", synth_std}};
  doc["combined"] = {{"mean", combined_mean}, {"std", combined_std}};
  return doc.dump(2);
}

}  // namespace ptn
