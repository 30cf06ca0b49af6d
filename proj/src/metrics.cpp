#include "presstyle/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ptn {

double rmse(const PressureSequence& synth, const PressureSequence& truth) {
  if (synth.frame_count() != truth.frame_count()) {
    throw MetricError("rmse: frame counts differ (" +
                      std::to_string(synth.frame_count()) + " vs " +
                      std::to_string(truth.frame_count()) + ")");
  }
  if (synth.frame_count() == 0) throw MetricError("rmse: empty sequences");
  double acc = 0.0;
  for (std::size_t t = 0; t < synth.frame_count(); ++t) {
    const Frame& a = synth.frames[t];
    const Frame& b = truth.frames[t];
    if (a.size() != b.size()) throw MetricError("rmse: frame shapes differ");
    double frame_ms = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
      frame_ms += d * d;
    }
    acc += frame_ms / static_cast<double>(a.size());
  }
  return std::sqrt(acc / static_cast<double>(synth.frame_count()));
}

double binary_r2(const PressureSequence& synth, const PressureSequence& truth,
                 double contact_threshold, bool mask_contact_union) {
  if (synth.frame_count() != truth.frame_count()) {
    throw MetricError("binary_r2: frame counts differ");
  }
  if (synth.frame_count() == 0) throw MetricError("binary_r2: empty sequences");

  // first pass: truth mean over the (optionally masked) support
  double sum_t = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < truth.frame_count(); ++t) {
    const Frame& a = synth.frames[t];
    const Frame& b = truth.frames[t];
    if (a.size() != b.size()) throw MetricError("binary_r2: frame shapes differ");
    for (std::size_t i = 0; i < b.size(); ++i) {
      const bool bs = a[i] > contact_threshold;
      const bool bt = b[i] > contact_threshold;
      if (mask_contact_union && !bs && !bt) continue;
      sum_t += bt ? 1.0 : 0.0;
      ++n;
    }
  }
  if (n == 0) throw MetricError("binary_r2: empty contact mask");
  const double mean_t = sum_t / static_cast<double>(n);

  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t t = 0; t < truth.frame_count(); ++t) {
    const Frame& a = synth.frames[t];
    const Frame& b = truth.frames[t];
    for (std::size_t i = 0; i < b.size(); ++i) {
      const bool bs = a[i] > contact_threshold;
      const bool bt = b[i] > contact_threshold;
      if (mask_contact_union && !bs && !bt) continue;
      const double ds = (bs ? 1.0 : 0.0) - (bt ? 1.0 : 0.0);
      const double dt = (bt ? 1.0 : 0.0) - mean_t;
      ss_res += ds * ds;
      ss_tot += dt * dt;
    }
  }
  if (ss_tot == 0.0) {
    throw MetricError("binary_r2: binarized truth is constant (degenerate denominator)");
  }
  return 1.0 - ss_res / ss_tot;
}

EvalReport evaluate(const DatasetManifest& manifest, const TransferNet& model,
                    const EvalOptions& opts) {
  if (opts.protocol != "seen" && opts.protocol != "unseen") {
    throw MetricError("protocol must be 'seen' or 'unseen'");
  }
  const bool want_seen = opts.protocol == "seen";

  std::set<std::string> train_subjects;
  for (const auto& e : manifest.entries) {
    if (e.split == "train") train_subjects.insert(e.subject_id);
  }

  // held-out subjects only, scripts filtered by protocol
  std::map<std::string, std::vector<const ManifestEntry*>> by_script;
  for (const auto& e : manifest.entries) {
    if (e.seen != want_seen) continue;
    if (train_subjects.count(e.subject_id)) continue;
    by_script[e.script_id].push_back(&e);
  }
  if (by_script.empty()) {
    throw MetricError("no held-out sequences for protocol '" + opts.protocol + "'");
  }

  struct Acc {
    double rmse_sum = 0.0;
    double r2_sum = 0.0;
    int n = 0;
  };
  std::map<std::string, Acc> per_category;
  EvalReport report;

  for (const auto& [script, entries] : by_script) {
    std::map<std::string, PressureSequence> cache;
    auto seq_of = [&](const ManifestEntry* e) -> const PressureSequence& {
      auto it = cache.find(e->path);
      if (it == cache.end()) it = cache.emplace(e->path, load_sequence(e->path)).first;
      return it->second;
    };
    int used = 0;
    for (const auto* src : entries) {
      for (const auto* tgt : entries) {
        if (src->subject_id == tgt->subject_id) continue;
        if (opts.max_pairs_per_category > 0 && used >= opts.max_pairs_per_category) break;
        const PressureSequence& src_seq = seq_of(src);
        const PressureSequence& tgt_seq = seq_of(tgt);
        PressureSequence out =
            model.transfer(src_seq, tgt->attributes, opts.transfer_stride);
        Acc& acc = per_category[src->motion_label];
        acc.rmse_sum += rmse(out, tgt_seq);
        try {
          acc.r2_sum += binary_r2(out, tgt_seq, opts.contact_threshold);
        } catch (const MetricError& err) {
          report.warnings.push_back(std::string("skipped degenerate pair: ") +
                                    err.what());
          acc.rmse_sum -= rmse(out, tgt_seq);
          continue;
        }
        acc.n += 1;
        ++used;
      }
    }
  }

  for (const auto& [cat, acc] : per_category) {
    if (acc.n == 0) {
      report.warnings.push_back("category " + cat + " had no valid pairs; skipped");
      continue;
    }
    EvalRow row;
    row.category = cat;
    row.protocol = opts.protocol;
    row.rmse = acc.rmse_sum / acc.n;
    row.binary_r2 = acc.r2_sum / acc.n;
    row.pair_count = acc.n;
    report.rows.push_back(row);
  }
  if (report.rows.empty()) throw MetricError("evaluation produced no category rows");

  report.average.category = "average";
  report.average.protocol = opts.protocol;
  for (const auto& r : report.rows) {
    report.average.rmse += r.rmse;
    report.average.binary_r2 += r.binary_r2;
    report.average.pair_count += r.pair_count;
  }
  report.average.rmse /= static_cast<double>(report.rows.size());
  report.average.binary_r2 /= static_cast<double>(report.rows.size());
  return report;
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << "category    protocol  rmse       binary_r2  pairs\n";
  auto line = [&os](const EvalRow& r) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-11s %-9s %-10.4f %-10.4f %d\n",
                  r.category.c_str(), r.protocol.c_str(), r.rmse, r.binary_r2,
                  r.pair_count);
    os << buf;
  };
  for (const auto& r : rows) line(r);
  line(average);
  return os.str();
}

std::string EvalReport::to_json() const {
  nlohmann::json doc;
  auto row_json = [](const EvalRow& r) {
    return nlohmann::json{{"category", r.category},
                          {"protocol", r.protocol},
                          {"rmse", r.rmse},
                          {"binary_r2", r.binary_r2},
                          {"pairs", r.pair_count}};
  };
  doc["rows"] = nlohmann::json::array();
  for (const auto& r : rows) doc["rows"].push_back(row_json(r));
  doc["average"] = row_json(average);
  doc["warnings"] = warnings;
  return doc.dump(2);
}

}  // namespace ptn
