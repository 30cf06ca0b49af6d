#pragma once

#include <string>
#include <vector>

#include "presstyle/manifest.hpp"
#include "presstyle/model.hpp"
#include "presstyle/sequence.hpp"

namespace ptn {

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// sqrt of the mean over frames of the per-frame mean squared cell difference.
double rmse(const PressureSequence& synth, const PressureSequence& truth);

// Coefficient of determination after thresholding both sequences to {0,1}
// (cell > threshold). Throws MetricError when the binarized truth is constant.
// mask_contact_union restricts the sums to cells in contact in either input.
double binary_r2(const PressureSequence& synth, const PressureSequence& truth,
                 double contact_threshold = 0.0, bool mask_contact_union = false);

struct EvalRow {
  std::string category;
  std::string protocol;  // seen | unseen
  double rmse = 0.0;
  double binary_r2 = 0.0;
  int pair_count = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;  // one per motion category
  EvalRow average;            // mean of category rows
  std::vector<std::string> warnings;

  std::string to_text() const;
  std::string to_json() const;
};

struct EvalOptions {
  std::string protocol = "seen";  // seen | unseen
  int transfer_stride = kWindowFrames;
  int max_pairs_per_category = 0;  // 0 = all
  double contact_threshold = 0.0;
};

// Transfers each held-out source sequence to each aligned target subject's
// attributes and scores against that subject's ground truth, averaged per
// motion category.
EvalReport evaluate(const DatasetManifest& manifest, const TransferNet& model,
                    const EvalOptions& opts);

}  // namespace ptn
