#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "presstyle/synth.hpp"

using namespace ptn;
namespace fs = std::filesystem;

namespace {

// Static double stance, full support on every frame.
MotionScript double_stance(std::size_t frames) {
  MotionScript s;
  s.activity = "act";
  s.script_id = "stance";
  s.fps = 60.0;
  for (std::size_t t = 0; t < frames; ++t) {
    s.frames.push_back({{ContactEvent::kLeftFoot, 0.0, -1.0, 0.5, 0.3},
                        {ContactEvent::kRightFoot, 0.0, 1.0, 0.5, 0.3}});
    s.full_support.push_back(true);
  }
  return s;
}

double frame_sum(const std::vector<double>& frame) {
  double s = 0.0;
  for (double v : frame) s += v;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("conservation: double stance at 75 kg sums to 735.75 N") {
  MotionScript script = double_stance(10);
  const AttributeVector attrs{1, 75.0, 175.0};
  for (std::size_t t = 0; t < script.frame_count(); ++t) {
    const auto frame = render_frame(script.frames[t], attrs, t);
    CHECK(frame_sum(frame) == doctest::Approx(735.75).epsilon(1e-6));
  }
  // float-stored sequence stays within the 0.1% conservation budget
  PressureSequence seq = generate_sequence(script, attrs, 60.0);
  for (std::size_t t = 0; t < seq.frame_count(); ++t) {
    CHECK(std::fabs(seq.frame_total(t) - 735.75) < 0.001 * 735.75);
  }
}

TEST_CASE("weight scaling: 65 vs 75 kg force ratio is exact") {
  MotionScript script = double_stance(5);
  const AttributeVector a65{0, 65.0, 170.0};
  const AttributeVector a75{0, 75.0, 170.0};
  for (std::size_t t = 0; t < script.frame_count(); ++t) {
    const double s65 = frame_sum(render_frame(script.frames[t], a65, t));
    const double s75 = frame_sum(render_frame(script.frames[t], a75, t));
    CHECK(std::fabs(s65 / s75 - 65.0 / 75.0) < 1e-9);
  }
}

TEST_CASE("height scales contact geometry, not timing") {
  MotionScript script = make_script("walk", 2.0, 60.0, 5);
  PressureSequence lo = generate_sequence(script, {1, 75.0, 160.0}, 60.0);
  PressureSequence hi = generate_sequence(script, {1, 75.0, 190.0}, 60.0);
  CHECK(lo.frame_count() == hi.frame_count());

  // single-stance probe: the taller body's binarized footprint is longer
  std::vector<ContactEvent> ev{{ContactEvent::kLeftFoot, 0.0, 0.0, 1.0, 0.5}};
  auto bbox_rows = [](const std::vector<double>& frame) {
    int lo_r = kGridRows, hi_r = -1;
    for (int r = 0; r < kGridRows; ++r) {
      for (int c = 0; c < kGridCols; ++c) {
        if (frame[static_cast<std::size_t>(r * kGridCols + c)] > 0.0) {
          lo_r = std::min(lo_r, r);
          hi_r = std::max(hi_r, r);
        }
      }
    }
    return hi_r - lo_r + 1;
  };
  const int len_lo = bbox_rows(render_frame(ev, {1, 75.0, 160.0}, 0));
  const int len_hi = bbox_rows(render_frame(ev, {1, 75.0, 190.0}, 0));
  CHECK(len_hi > len_lo);
}

TEST_CASE("contact area is non-decreasing in height") {
  std::vector<ContactEvent> ev{{ContactEvent::kLeftFoot, 0.0, -1.0, 0.5, 0.4},
                               {ContactEvent::kRightFoot, 0.0, 1.0, 0.5, 0.4}};
  int prev = 0;
  for (double h : {155.0, 165.0, 175.0, 185.0, 195.0}) {
    const auto frame = render_frame(ev, {1, 75.0, h}, 0);
    int area = 0;
    for (double v : frame) area += v > 0.0;
    CHECK(area >= prev);
    prev = area;
  }
}

TEST_CASE("out-of-grid placement errors with the frame index") {
  std::vector<ContactEvent> ev{{ContactEvent::kLeftFoot, 0.0, 40.0, 1.0, 0.5}};
  CHECK_THROWS_WITH_AS(render_frame(ev, {1, 75.0, 175.0}, 17),
                       doctest::Contains("17"), DataError);
}

TEST_CASE("script timelines are attribute free and aligned") {
  MotionScript script = make_script("exercise", 2.0, 60.0, 9);
  PressureSequence a = generate_sequence(script, {1, 90.0, 185.0}, 60.0);
  PressureSequence b = generate_sequence(script, {0, 55.0, 155.0}, 60.0);
  REQUIRE(a.frame_count() == b.frame_count());
  // full-support frames conserve each body's own weight
  for (std::size_t t = 0; t < a.frame_count(); ++t) {
    if (!script.full_support[t]) continue;
    CHECK(std::fabs(a.frame_total(t) - 90.0 * kGravity) < 0.001 * 90.0 * kGravity);
    CHECK(std::fabs(b.frame_total(t) - 55.0 * kGravity) < 0.001 * 55.0 * kGravity);
  }
}

TEST_CASE("corpus arithmetic: 8+8 train subjects x 4 scripts = 64 files") {
  GenConfig cfg;
  cfg.train_subjects_per_sex = 8;
  cfg.eval_subjects_per_sex = 0;
  cfg.unseen_scripts_per_activity = 0;
  cfg.duration_s = 1.0;
  cfg.seed = 21;
  const auto dir = fs::temp_directory_path() / "corpus64";
  fs::remove_all(dir);
  DatasetManifest m = generate_corpus(cfg, dir.string());
  CHECK(m.entries.size() == 64);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    files += e.path().extension() == ".pseq";
  }
  CHECK(files == 64);
  for (const auto& e : m.entries) CHECK(e.split == "train");
  fs::remove_all(dir);
}

TEST_CASE("attribute sampler hits the population moments") {
  Rng rng(33);
  double mean = 0.0, var = 0.0;
  std::vector<double> hs;
  for (int i = 0; i < 1000; ++i) {
    AttributeVector a = sample_attributes(1, rng);
    CHECK(a.sex == 1);
    hs.push_back(a.height_cm);
    mean += a.height_cm;
  }
  mean /= 1000.0;
  for (double h : hs) var += (h - mean) * (h - mean);
  const double spread = std::sqrt(var / 1000.0);
  CHECK(std::fabs(mean - 175.0) < 1.5);
  CHECK(std::fabs(spread - 15.0) < 1.5);
}

TEST_CASE("identical corpus seeds produce identical bytes") {
  GenConfig cfg;
  cfg.train_subjects_per_sex = 1;
  cfg.eval_subjects_per_sex = 1;
  cfg.duration_s = 1.0;
  cfg.seed = 77;
  const auto d1 = fs::temp_directory_path() / "corpus_a";
  const auto d2 = fs::temp_directory_path() / "corpus_b";
  fs::remove_all(d1);
  fs::remove_all(d2);
  DatasetManifest m1 = generate_corpus(cfg, d1.string());
  DatasetManifest m2 = generate_corpus(cfg, d2.string());
  REQUIRE(m1.entries.size() == m2.entries.size());
  for (std::size_t i = 0; i < m1.entries.size(); ++i) {
    CHECK(slurp(m1.entries[i].path) == slurp(m2.entries[i].path));
  }
  CHECK(slurp(d1 / "manifest.json") == slurp(d2 / "manifest.json"));
  fs::remove_all(d1);
  fs::remove_all(d2);
}
