#include "presstyle/sequence.hpp"

#include <cmath>
#include <fstream>

#include "presstyle/binio.hpp"

namespace ptn {

namespace {
constexpr char kMagic[4] = {'P', 'S', 'E', 'Q'};
constexpr std::uint16_t kVersion = 1;
}  // namespace

void AttributeVector::validate() const {
  if (sex != 0 && sex != 1) {
    throw DataError("attribute sex must be 0 (female) or 1 (male), got " +
                    std::to_string(sex));
  }
  if (!(weight_kg > 20.0 && weight_kg < 300.0)) {
    throw DataError("attribute weight " + std::to_string(weight_kg) +
                    " kg outside (20, 300)");
  }
  if (!(height_cm > 50.0 && height_cm < 250.0)) {
    throw DataError("attribute height " + std::to_string(height_cm) +
                    " cm outside (50, 250)");
  }
}

PopulationStats PopulationStats::male_population() { return {75.0, 10.0, 175.0, 15.0}; }
PopulationStats PopulationStats::female_population() { return {65.0, 10.0, 165.0, 15.0}; }

PopulationStats PopulationStats::combined_population() {
  // Equal mixture of N(75,10^2) and N(65,10^2): mean 70, var 10^2 + 5^2.
  // Heights: mean 170, var 15^2 + 5^2.
  return {70.0, std::sqrt(125.0), 170.0, std::sqrt(250.0)};
}

std::array<double, 3> normalize_attributes(const AttributeVector& a,
                                           const PopulationStats& pop) {
  if (pop.weight_spread == 0.0 || pop.height_spread == 0.0) {
    throw DataError("population spread is zero; cannot normalize attributes");
  }
  return {static_cast<double>(a.sex),
          (a.weight_kg - pop.weight_mean) / pop.weight_spread,
          (a.height_cm - pop.height_mean) / pop.height_spread};
}

AttributeVector denormalize_attributes(const std::array<double, 3>& v,
                                       const PopulationStats& pop) {
  AttributeVector a;
  a.sex = v[0] >= 0.5 ? 1 : 0;
  a.weight_kg = v[1] * pop.weight_spread + pop.weight_mean;
  a.height_cm = v[2] * pop.height_spread + pop.height_mean;
  return a;
}

void PressureSequence::validate() const {
  if (fps <= 0.0) throw DataError("fps must be positive");
  attributes.validate();
  const std::size_t cells = static_cast<std::size_t>(kGridRows) * kGridCols;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].size() != cells) {
      throw DataError("frame " + std::to_string(t) + " has " +
                      std::to_string(frames[t].size()) + " cells, expected " +
                      std::to_string(cells));
    }
    for (float v : frames[t]) {
      if (!(v >= 0.0f) || !std::isfinite(v)) {
        throw DataError("frame " + std::to_string(t) +
                        " contains a negative or non-finite cell");
      }
    }
  }
}

double PressureSequence::frame_total(std::size_t t) const {
  double s = 0.0;
  for (float v : frames[t]) s += v;
  return s;
}

std::vector<Window> make_windows(const PressureSequence& seq, int size, int stride,
                                 bool* too_short) {
  if (size <= 0 || stride <= 0) throw DataError("window size and stride must be positive");
  std::vector<Window> out;
  if (seq.frames.size() < static_cast<std::size_t>(size)) {
    if (too_short) *too_short = true;
    return out;
  }
  if (too_short) *too_short = false;
  for (std::size_t s = 0; s + size <= seq.frames.size();
       s += static_cast<std::size_t>(stride)) {
    out.push_back(Window{&seq, s});
  }
  return out;
}

void save_sequence(const PressureSequence& seq, const std::string& path) {
  seq.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path);
  os.write(kMagic, 4);
  binio::write_u16(os, kVersion);
  binio::write_u16(os, static_cast<std::uint16_t>(kGridRows));
  binio::write_u16(os, static_cast<std::uint16_t>(kGridCols));
  binio::write_u32(os, static_cast<std::uint32_t>(seq.frames.size()));
  binio::write_f32(os, static_cast<float>(seq.fps));
  binio::write_u8(os, static_cast<std::uint8_t>(seq.attributes.sex));
  binio::write_f32(os, static_cast<float>(seq.attributes.weight_kg));
  binio::write_f32(os, static_cast<float>(seq.attributes.height_cm));
  binio::write_str(os, seq.motion_label, /*u32_len=*/false);
  binio::write_str(os, seq.subject_id, /*u32_len=*/false);
  for (const Frame& f : seq.frames) {
    for (float v : f) binio::write_f32(os, v);
  }
  if (!os) throw DataError("write failed: " + path);
}

PressureSequence load_sequence(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open for reading: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != std::string(kMagic, 4)) {
    throw DataError("bad magic in sequence file: " + path);
  }
  std::uint16_t version;
  if (!binio::read_u16(is, &version)) throw DataError("truncated sequence file: " + path);
  if (version != kVersion) {
    throw DataError("unsupported sequence version " + std::to_string(version) +
                    " in " + path);
  }
  std::uint16_t rows, cols;
  std::uint32_t count;
  float fps;
  if (!binio::read_u16(is, &rows) || !binio::read_u16(is, &cols) ||
      !binio::read_u32(is, &count) || !binio::read_f32(is, &fps)) {
    throw DataError("truncated sequence file: " + path);
  }
  if (rows != kGridRows || cols != kGridCols) {
    throw DataError("sequence grid " + std::to_string(rows) + "x" +
                    std::to_string(cols) + " unsupported (expected 80x28) in " + path);
  }
  PressureSequence seq;
  seq.fps = fps;
  std::uint8_t sex;
  float weight, height;
  if (!binio::read_u8(is, &sex) || !binio::read_f32(is, &weight) ||
      !binio::read_f32(is, &height)) {
    throw DataError("truncated sequence file: " + path);
  }
  seq.attributes.sex = sex;
  seq.attributes.weight_kg = weight;
  seq.attributes.height_cm = height;
  if (!binio::read_str(is, &seq.motion_label, /*u32_len=*/false) ||
      !binio::read_str(is, &seq.subject_id, /*u32_len=*/false)) {
    throw DataError("truncated sequence file: " + path);
  }
  const std::size_t cells = static_cast<std::size_t>(rows) * cols;
  seq.frames.resize(count);
  for (std::uint32_t t = 0; t < count; ++t) {
    Frame& f = seq.frames[t];
    f.resize(cells);
    for (std::size_t i = 0; i < cells; ++i) {
      if (!binio::read_f32(is, &f[i])) {
        throw DataError("truncated sequence payload at frame " + std::to_string(t) +
                        " in " + path);
      }
      if (f[i] < 0.0f) {
        throw DataError("negative cell value at frame " + std::to_string(t) + " in " +
                        path);
      }
    }
  }
  return seq;
}

}  // namespace ptn
