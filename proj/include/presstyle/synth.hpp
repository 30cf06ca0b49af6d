#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "presstyle/manifest.hpp"
#include "presstyle/rng.hpp"
#include "presstyle/sequence.hpp"

namespace ptn {

// One body region touching the ground in one frame. Coordinates are
// attribute-free: `along` is measured in step units along the long grid axis
// and `lateral` in hip-half-width units across it; the renderer converts both
// to cells using the body's height.
struct ContactEvent {
  enum Region { kLeftFoot, kRightFoot, kLeftKnee, kRightKnee };
  Region region = kLeftFoot;
  double along = 0.0;
  double lateral = 0.0;
  double load = 0.0;  // fraction of body weight
  double roll = 0.0;  // 0 = heel-weighted, 1 = forefoot, feet only
};

// Attribute-independent motion timeline. The same script rendered with two
// different bodies yields frame counts and per-frame load fractions that
// match exactly.
struct MotionScript {
  std::string activity;  // walk | exercise | freestyle | act
  std::string script_id;
  double fps = 60.0;
  std::uint64_t seed = 0;
  std::vector<std::vector<ContactEvent>> frames;
  std::vector<bool> full_support;  // per frame: loads sum to 1

  std::size_t frame_count() const { return frames.size(); }
};

MotionScript make_script(const std::string& activity, double duration_s, double fps,
                         std::uint64_t seed, const std::string& script_id = "");

// Ellipse-pair heel/forefoot contact mask; weights per part sum to 1.
struct FootprintTemplate {
  int length_cells = 0;
  int width_cells = 0;
  struct Cell {
    int dr, dc;
    double w;
  };
  std::vector<Cell> heel;  // weights sum to 1
  std::vector<Cell> fore;  // weights sum to 1
};

FootprintTemplate make_footprint(const AttributeVector& attrs);
FootprintTemplate make_knee_print(const AttributeVector& attrs);

// Renders one frame at double precision (newtons per cell, row-major 80x28).
// frame_index is only used in error messages.
std::vector<double> render_frame(const std::vector<ContactEvent>& events,
                                 const AttributeVector& attrs,
                                 std::size_t frame_index);

PressureSequence generate_sequence(const MotionScript& script,
                                   const AttributeVector& attrs, double fps);

struct GenConfig {
  int train_subjects_per_sex = 8;
  int eval_subjects_per_sex = 2;
  std::vector<std::string> activities = {"walk", "exercise", "freestyle", "act"};
  int unseen_scripts_per_activity = 1;
  double duration_s = 10.0;
  double fps = 60.0;
  std::uint64_t seed = 7;
};

// Samples attribute populations (male 175+-15 cm / 75+-10 kg, female
// 165+-15 / 65+-10, truncated at 3 spreads), has every subject perform every
// script, writes .pseq files under out_dir and returns the manifest.
// Train-subject seen-script sequences are tagged split=train, the rest test.
DatasetManifest generate_corpus(const GenConfig& cfg, const std::string& out_dir);

// Truncated-Gaussian attribute sampler used by generate_corpus.
AttributeVector sample_attributes(int sex, Rng& rng);

}  // namespace ptn
