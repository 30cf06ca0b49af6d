#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ptn {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr int kGridRows = 80;
constexpr int kGridCols = 28;
constexpr int kWindowFrames = 30;
constexpr double kGravity = 9.81;

// (sex, weight kg, height cm). sex: 0 = female, 1 = male.
struct AttributeVector {
  int sex = 0;
  double weight_kg = 0.0;
  double height_cm = 0.0;

  void validate() const;
  bool operator==(const AttributeVector&) const = default;
};

// Population centers/spreads used to z-score weight and height.
struct PopulationStats {
  double weight_mean = 0.0;
  double weight_spread = 1.0;
  double height_mean = 0.0;
  double height_spread = 1.0;

  // Generator recipe: male 175+-15 cm / 75+-10 kg, female 165+-15 / 65+-10.
  static PopulationStats male_population();
  static PopulationStats female_population();
  // Equal-weight pool of the two sexes (closed-form mixture moments).
  static PopulationStats combined_population();
};

std::array<double, 3> normalize_attributes(const AttributeVector& a,
                                           const PopulationStats& pop);
AttributeVector denormalize_attributes(const std::array<double, 3>& v,
                                       const PopulationStats& pop);

// One 80x28 frame, newtons per cell, row-major floats. Float storage keeps
// the on-disk round trip bit-exact.
using Frame = std::vector<float>;

struct PressureSequence {
  std::vector<Frame> frames;
  double fps = 60.0;
  AttributeVector attributes;
  std::string motion_label;
  std::string subject_id;

  std::size_t frame_count() const { return frames.size(); }
  void validate() const;
  double frame_total(std::size_t t) const;
  bool operator==(const PressureSequence&) const = default;
};

// 30 consecutive frames viewed as one instance.
struct Window {
  const PressureSequence* sequence = nullptr;
  std::size_t start = 0;

  const Frame& frame(std::size_t j) const { return sequence->frames[start + j]; }
  const AttributeVector& attributes() const { return sequence->attributes; }
};

// stride-1 sliding windows; too-short sequences yield an empty list and set
// *too_short when provided.
std::vector<Window> make_windows(const PressureSequence& seq,
                                 int size = kWindowFrames, int stride = 1,
                                 bool* too_short = nullptr);

// .pseq binary format: magic PSEQ, version u16, rows u16, cols u16, frame
// count u32, fps f32, attributes (u8 sex, f32 weight, f32 height), motion
// label and subject id as u16 length + UTF-8, frames f32 LE row-major.
void save_sequence(const PressureSequence& seq, const std::string& path);
PressureSequence load_sequence(const std::string& path);

}  // namespace ptn
