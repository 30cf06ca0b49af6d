#pragma once

#include <string>
#include <vector>

#include "presstyle/sequence.hpp"

namespace ptn {

// One corpus entry. script_id identifies the motion timeline so that
// sequences from different subjects can be paired frame-for-frame; seen marks
// scripts that participate in transfer-model training.
struct ManifestEntry {
  std::string path;
  std::string subject_id;
  AttributeVector attributes;
  std::string motion_label;  // walk | exercise | freestyle | act
  std::string split;         // train | val | test
  std::string script_id;
  bool seen = true;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  std::vector<ManifestEntry> filter_split(const std::string& split) const;

  // Serialized as a JSON document. load() verifies every referenced file
  // exists and fails loudly otherwise.
  void save(const std::string& path) const;
  static DatasetManifest load(const std::string& path);
};

}  // namespace ptn
