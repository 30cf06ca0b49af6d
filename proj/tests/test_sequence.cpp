#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "presstyle/manifest.hpp"
#include "presstyle/rng.hpp"
#include "presstyle/sequence.hpp"

using namespace ptn;
namespace fs = std::filesystem;

namespace {

PressureSequence make_seq(std::size_t frames, float base = 1.0f) {
  PressureSequence s;
  s.fps = 60.0;
  s.attributes = {1, 75.0, 175.0};
  s.motion_label = "walk";
  s.subject_id = "s1";
  for (std::size_t t = 0; t < frames; ++t) {
    Frame f(static_cast<std::size_t>(kGridRows * kGridCols), 0.0f);
    f[t % f.size()] = base + static_cast<float>(t);
    s.frames.push_back(std::move(f));
  }
  return s;
}

fs::path temp_file(const char* name) {
  return fs::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("pseq round trip is bit exact") {
  Rng rng(1);
  PressureSequence s = make_seq(7);
  for (auto& f : s.frames) {
    for (auto& v : f) v = static_cast<float>(rng.uniform(0.0, 900.0));
  }
  const auto path = temp_file("roundtrip.pseq");
  save_sequence(s, path.string());
  PressureSequence r = load_sequence(path.string());
  CHECK(r == s);
  fs::remove(path);
}

TEST_CASE("pseq bad magic is a distinct error") {
  const auto path = temp_file("badmagic.pseq");
  std::ofstream(path.string(), std::ios::binary) << "XXXXjunkjunkjunk";
  CHECK_THROWS_WITH_AS(load_sequence(path.string()), doctest::Contains("magic"),
                       DataError);
  fs::remove(path);
}

TEST_CASE("pseq truncated payload is rejected") {
  PressureSequence s = make_seq(4);
  const auto path = temp_file("trunc.pseq");
  save_sequence(s, path.string());
  fs::resize_file(path, fs::file_size(path) - 100);
  CHECK_THROWS_AS(load_sequence(path.string()), DataError);
  fs::remove(path);
}

TEST_CASE("pseq file size arithmetic for 100 frames") {
  PressureSequence s = make_seq(100);
  const auto path = temp_file("size.pseq");
  save_sequence(s, path.string());
  // header: magic 4 + version 2 + rows 2 + cols 2 + count 4 + fps 4
  //         + sex 1 + weight 4 + height 4 + 2 length-prefixed strings
  const std::size_t header = 27 + 2 + s.motion_label.size() + 2 + s.subject_id.size();
  CHECK(fs::file_size(path) == header + 100ull * 80 * 28 * 4);
  fs::remove(path);
}

TEST_CASE("negative cells are rejected on save") {
  PressureSequence s = make_seq(2);
  s.frames[0][5] = -1.0f;
  CHECK_THROWS_AS(save_sequence(s, temp_file("neg.pseq").string()), DataError);
}

TEST_CASE("make_windows counts and indexing") {
  CHECK(make_windows(make_seq(30)).size() == 1);
  CHECK(make_windows(make_seq(100)).size() == 71);

  PressureSequence s = make_seq(50);
  auto ws = make_windows(s);
  Rng rng(9);
  for (int probe = 0; probe < 20; ++probe) {
    const auto k = static_cast<std::size_t>(rng.uniform_int(0, 20));
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, 29));
    CHECK(ws[k].frame(j) == s.frames[k + j]);
  }

  bool too_short = false;
  CHECK(make_windows(make_seq(10), kWindowFrames, 1, &too_short).empty());
  CHECK(too_short);
}

TEST_CASE("attribute normalization population centers") {
  auto m = normalize_attributes({1, 75.0, 175.0}, PopulationStats::male_population());
  CHECK(m[0] == doctest::Approx(1.0));
  CHECK(m[1] == doctest::Approx(0.0));
  CHECK(m[2] == doctest::Approx(0.0));

  auto f =
      normalize_attributes({0, 65.0, 165.0}, PopulationStats::female_population());
  CHECK(f[0] == doctest::Approx(0.0));
  CHECK(f[1] == doctest::Approx(0.0));
  CHECK(f[2] == doctest::Approx(0.0));
}

TEST_CASE("normalize/denormalize are inverse within 1e-9") {
  const auto pop = PopulationStats::combined_population();
  AttributeVector a{0, 82.5, 158.0};
  AttributeVector back = denormalize_attributes(normalize_attributes(a, pop), pop);
  CHECK(std::fabs(back.weight_kg - a.weight_kg) < 1e-9);
  CHECK(std::fabs(back.height_cm - a.height_cm) < 1e-9);
  CHECK(back.sex == a.sex);
}

TEST_CASE("zero population spread is an error") {
  PopulationStats pop;
  pop.weight_spread = 0.0;
  CHECK_THROWS_AS(normalize_attributes({1, 70.0, 170.0}, pop), DataError);
}

TEST_CASE("attribute bounds are validated") {
  CHECK_THROWS_AS((AttributeVector{1, 10.0, 170.0}).validate(), DataError);
  CHECK_THROWS_AS((AttributeVector{1, 70.0, 20.0}).validate(), DataError);
  CHECK_NOTHROW((AttributeVector{0, 70.0, 170.0}).validate());
}

TEST_CASE("manifest referencing a missing file fails loudly") {
  const auto dir = fs::temp_directory_path() / "pseq_manifest_test";
  fs::create_directories(dir);
  PressureSequence s = make_seq(30);
  save_sequence(s, (dir / "ok.pseq").string());

  DatasetManifest m;
  m.entries.push_back({"ok.pseq", "s1", s.attributes, "walk", "train", "w0", true});
  m.save((dir / "manifest.json").string());
  CHECK(DatasetManifest::load((dir / "manifest.json").string()).entries.size() == 1);

  m.entries.push_back({"gone.pseq", "s2", s.attributes, "walk", "train", "w0", true});
  m.save((dir / "manifest.json").string());
  CHECK_THROWS_AS(DatasetManifest::load((dir / "manifest.json").string()), DataError);
  fs::remove_all(dir);
}
