#include "presstyle/manifest.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace ptn {

using nlohmann::json;

std::vector<ManifestEntry> DatasetManifest::filter_split(const std::string& split) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    if (e.split == split) out.push_back(e);
  }
  return out;
}

void DatasetManifest::save(const std::string& path) const {
  json doc;
  doc["entries"] = json::array();
  for (const auto& e : entries) {
    doc["entries"].push_back({{"path", e.path},
                              {"subject_id", e.subject_id},
                              {"sex", e.attributes.sex},
                              {"weight_kg", e.attributes.weight_kg},
                              {"height_cm", e.attributes.height_cm},
                              {"motion_label", e.motion_label},
                              {"split", e.split},
                              {"script_id", e.script_id},
                              {"seen", e.seen}});
  }
  std::ofstream os(path);
  if (!os) throw DataError("cannot open manifest for writing: " + path);
  os << doc.dump(2) << "\n";
}

DatasetManifest DatasetManifest::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open manifest: " + path);
  json doc;
  try {
    is >> doc;
  } catch (const json::exception& e) {
    throw DataError("malformed manifest " + path + ": " + e.what());
  }
  if (!doc.contains("entries") || !doc["entries"].is_array()) {
    throw DataError("manifest " + path + " has no entries array");
  }
  const auto base = std::filesystem::path(path).parent_path();
  DatasetManifest m;
  bool any_train = false;
  for (const auto& j : doc["entries"]) {
    ManifestEntry e;
    e.path = j.at("path").get<std::string>();
    e.subject_id = j.at("subject_id").get<std::string>();
    e.attributes.sex = j.at("sex").get<int>();
    e.attributes.weight_kg = j.at("weight_kg").get<double>();
    e.attributes.height_cm = j.at("height_cm").get<double>();
    e.motion_label = j.at("motion_label").get<std::string>();
    e.split = j.at("split").get<std::string>();
    e.script_id = j.value("script_id", e.motion_label);
    e.seen = j.value("seen", true);
    // relative paths resolve against the manifest's directory
    std::filesystem::path p(e.path);
    if (p.is_relative()) p = base / p;
    if (!std::filesystem::exists(p)) {
      throw DataError("manifest references missing file: " + p.string());
    }
    e.path = p.string();
    if (e.split == "train") any_train = true;
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) throw DataError("manifest " + path + " is empty");
  if (!any_train) throw DataError("manifest " + path + " has no train split");
  return m;
}

}  // namespace ptn
