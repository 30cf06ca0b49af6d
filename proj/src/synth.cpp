#include "presstyle/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace ptn {

namespace {

constexpr double kCellCm = 2.0;  // 80x28 grid covers 160x56 cm

double foot_length_cells(const AttributeVector& a) {
  return 0.152 * a.height_cm / kCellCm;
}

double stride_cells(const AttributeVector& a) { return 0.33 * a.height_cm / kCellCm; }

double hip_half_cells(const AttributeVector& a) { return 0.065 * a.height_cm / kCellCm; }

// Dome-weighted ellipse centered at (cr, cc) in template coordinates.
void add_ellipse(std::vector<FootprintTemplate::Cell>& cells, double cr, double cc,
                 double ra, double rb) {
  const int r0 = static_cast<int>(std::floor(cr - ra)),
            r1 = static_cast<int>(std::ceil(cr + ra));
  const int c0 = static_cast<int>(std::floor(cc - rb)),
            c1 = static_cast<int>(std::ceil(cc + rb));
  double total = 0.0;
  std::vector<FootprintTemplate::Cell> part;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const double er = (r - cr) / ra;
      const double ec = (c - cc) / rb;
      const double d2 = er * er + ec * ec;
      if (d2 > 1.0) continue;
      part.push_back({r, c, 1.0 - 0.7 * d2});
      total += part.back().w;
    }
  }
  if (part.empty()) {  // degenerate radius, keep at least the center cell
    part.push_back({static_cast<int>(std::lround(cr)),
                    static_cast<int>(std::lround(cc)), 1.0});
    total = 1.0;
  }
  for (auto& p : part) p.w /= total;
  cells.insert(cells.end(), part.begin(), part.end());
}

double fold(double x, double span) {
  if (span <= 0.0) return 0.0;
  const double y = std::fabs(x);
  const double t = std::fmod(y, 2.0 * span);
  return t <= span ? t : 2.0 * span - t;
}

struct ScriptBuilder {
  MotionScript s;
  void push(std::vector<ContactEvent> events) {
    double sum = 0.0;
    for (const auto& e : events) sum += e.load;
    s.frames.push_back(std::move(events));
    s.full_support.push_back(std::fabs(sum - 1.0) < 1e-9);
  }
};

ContactEvent foot(ContactEvent::Region r, double along, double lateral, double load,
                  double roll) {
  return ContactEvent{r, along, lateral, load, roll};
}

void build_walk(ScriptBuilder& b, std::size_t n_frames, double fps, Rng& rng) {
  const double step_dur = rng.uniform(0.5, 0.62);
  const int step_frames = std::max(6, static_cast<int>(std::lround(step_dur * fps)));
  std::vector<double> alongs;  // landing position of step k
  alongs.push_back(0.0);
  while (b.s.frames.size() < n_frames) {
    const std::size_t k = alongs.size() - 1;
    const auto stance =
        (k % 2 == 0) ? ContactEvent::kLeftFoot : ContactEvent::kRightFoot;
    const auto other =
        (k % 2 == 0) ? ContactEvent::kRightFoot : ContactEvent::kLeftFoot;
    const double stance_lat = (stance == ContactEvent::kLeftFoot) ? -1.0 : 1.0;
    const double a_k = alongs.back();
    const double a_next = a_k + 1.0 + rng.uniform(-0.05, 0.05);
    for (int f = 0; f < step_frames && b.s.frames.size() < n_frames; ++f) {
      const double phase = static_cast<double>(f) / step_frames;
      std::vector<ContactEvent> ev;
      double others = 0.0;
      if (phase < 0.25 && k > 0) {  // trailing double support
        const double l = 0.5 * (1.0 - phase / 0.25);
        ev.push_back(foot(other, alongs[k - 1], -stance_lat, l, 1.0));
        others += l;
      }
      if (phase > 0.75) {  // leading double support, next foot lands
        const double l = 0.5 * (phase - 0.75) / 0.25;
        ev.push_back(foot(other, a_next, -stance_lat, l, 0.0));
        others += l;
      }
      ev.push_back(foot(stance, a_k, stance_lat, 1.0 - others, phase));
      b.push(std::move(ev));
    }
    alongs.push_back(a_next);
  }
}

void build_exercise(ScriptBuilder& b, std::size_t n_frames, double fps, Rng& rng) {
  const double cycle_dur = rng.uniform(2.2, 2.8);
  const int cycle_frames = std::max(10, static_cast<int>(std::lround(cycle_dur * fps)));
  std::size_t cycle = 0;
  while (b.s.frames.size() < n_frames) {
    const bool lunge = (cycle % 3 == 2);
    const double lunge_adv = lunge ? 0.3 : 0.0;
    for (int f = 0; f < cycle_frames && b.s.frames.size() < n_frames; ++f) {
      const double phase = static_cast<double>(f) / cycle_frames;
      const double roll = 0.5 + 0.4 * std::sin(2.0 * M_PI * phase);
      // lateral rocking faster than the window length so every window sees
      // the same oscillation statistics
      const double t = static_cast<double>(b.s.frames.size()) / fps;
      const double shift = 0.35 * std::sin(2.0 * M_PI * t / 0.6);
      const double l_load = 0.5 + shift;
      std::vector<ContactEvent> ev;
      ev.push_back(foot(ContactEvent::kLeftFoot, 0.0, -1.2, l_load, roll));
      ev.push_back(foot(ContactEvent::kRightFoot, lunge_adv * std::sin(M_PI * phase),
                        1.2, 1.0 - l_load, roll));
      b.push(std::move(ev));
    }
    ++cycle;
  }
}

// Hop-dominated routine: short stands separated by takeoff/flight/landing
// cycles with randomized rhythm and hop distance. The flight phases give
// freestyle a per-window force variance no full-support activity has.
void build_freestyle(ScriptBuilder& b, std::size_t n_frames, double fps, Rng& rng) {
  double l_along = 0.0, r_along = 0.0;
  while (b.s.frames.size() < n_frames) {
    const int stand = static_cast<int>(std::lround(rng.uniform(0.15, 0.35) * fps));
    for (int f = 0; f < stand && b.s.frames.size() < n_frames; ++f) {
      b.push({foot(ContactEvent::kLeftFoot, l_along, -1.0, 0.5, 0.3),
              foot(ContactEvent::kRightFoot, r_along, 1.0, 0.5, 0.3)});
    }
    const int ramp = std::max(3, static_cast<int>(std::lround(0.1 * fps)));
    const int flight =
        std::max(2, static_cast<int>(std::lround(rng.uniform(0.15, 0.3) * fps)));
    for (int f = 0; f < ramp && b.s.frames.size() < n_frames; ++f) {
      const double l = 0.5 * (1.0 - static_cast<double>(f) / ramp);
      b.push({foot(ContactEvent::kLeftFoot, l_along, -1.0, l, 0.8),
              foot(ContactEvent::kRightFoot, r_along, 1.0, l, 0.8)});
    }
    for (int f = 0; f < flight && b.s.frames.size() < n_frames; ++f) {
      b.push({});
    }
    const double hop = rng.uniform(-0.4, 0.6);
    l_along += hop;
    r_along += hop;
    for (int f = 0; f < ramp && b.s.frames.size() < n_frames; ++f) {
      const double l = 0.5 * (static_cast<double>(f + 1) / ramp);
      b.push({foot(ContactEvent::kLeftFoot, l_along, -1.0, l, 0.1),
              foot(ContactEvent::kRightFoot, r_along, 1.0, l, 0.1)});
    }
  }
}

void build_act(ScriptBuilder& b, std::size_t n_frames, double fps, Rng& rng) {
  while (b.s.frames.size() < n_frames) {
    const double jitter = rng.uniform(0.9, 1.1);
    const int stand_f = static_cast<int>(std::lround(0.5 * jitter * fps));
    const int step_f = std::max(4, static_cast<int>(std::lround(0.4 * fps)));
    const int kneel_f = static_cast<int>(std::lround(2.5 * jitter * fps));
    for (int f = 0; f < stand_f && b.s.frames.size() < n_frames; ++f) {
      b.push({foot(ContactEvent::kLeftFoot, 0.0, -1.0, 0.5, 0.25),
              foot(ContactEvent::kRightFoot, 0.0, 1.0, 0.5, 0.25)});
    }
    for (int f = 0; f < step_f && b.s.frames.size() < n_frames; ++f) {
      const double phase = static_cast<double>(f) / step_f;
      const double adv = 0.8 * phase;
      b.push({foot(ContactEvent::kLeftFoot, adv, -1.0, 0.6, 0.3 + 0.4 * phase),
              foot(ContactEvent::kRightFoot, 0.0, 1.0, 0.4, 0.5)});
    }
    for (int f = 0; f < kneel_f && b.s.frames.size() < n_frames; ++f) {
      std::vector<ContactEvent> ev;
      ev.push_back(foot(ContactEvent::kLeftFoot, 0.8, -1.2, 0.5, 0.2));
      ev.push_back({ContactEvent::kRightKnee, -0.3, 1.2, 0.45, 0.0});
      ev.push_back(foot(ContactEvent::kRightFoot, -0.9, 1.3, 0.05, 1.0));
      b.push(std::move(ev));
    }
    for (int f = 0; f < step_f && b.s.frames.size() < n_frames; ++f) {
      const double phase = static_cast<double>(f) / step_f;
      b.push({foot(ContactEvent::kLeftFoot, 0.8 * (1.0 - phase), -1.0, 0.6, 0.4),
              foot(ContactEvent::kRightFoot, 0.0, 1.0, 0.4, 0.3)});
    }
  }
}

}  // namespace

MotionScript make_script(const std::string& activity, double duration_s, double fps,
                         std::uint64_t seed, const std::string& script_id) {
  if (fps <= 0.0 || duration_s <= 0.0) {
    throw DataError("script duration and fps must be positive");
  }
  const auto n_frames = static_cast<std::size_t>(std::lround(duration_s * fps));
  Rng rng(seed);
  ScriptBuilder b;
  b.s.activity = activity;
  b.s.script_id = script_id.empty() ? activity : script_id;
  b.s.fps = fps;
  b.s.seed = seed;
  if (activity == "walk") {
    build_walk(b, n_frames, fps, rng);
  } else if (activity == "exercise") {
    build_exercise(b, n_frames, fps, rng);
  } else if (activity == "freestyle") {
    build_freestyle(b, n_frames, fps, rng);
  } else if (activity == "act") {
    build_act(b, n_frames, fps, rng);
  } else {
    throw DataError("unknown activity: " + activity);
  }
  return b.s;
}

FootprintTemplate make_footprint(const AttributeVector& attrs) {
  FootprintTemplate t;
  const double len = std::max(4.0, foot_length_cells(attrs));
  const double width_ratio = attrs.sex == 1 ? 0.40 : 0.37;
  const double wid = std::max(2.0, len * width_ratio);
  t.length_cells = static_cast<int>(std::lround(len));
  t.width_cells = static_cast<int>(std::lround(wid));
  add_ellipse(t.heel, -0.27 * len, 0.0, 0.20 * len, 0.5 * wid);
  add_ellipse(t.fore, 0.22 * len, 0.0, 0.27 * len, 0.5 * wid);
  return t;
}

FootprintTemplate make_knee_print(const AttributeVector& attrs) {
  FootprintTemplate t;
  const double len = std::max(2.5, 0.065 * attrs.height_cm / kCellCm);
  const double wid = std::max(2.0, 0.055 * attrs.height_cm / kCellCm);
  t.length_cells = static_cast<int>(std::lround(len));
  t.width_cells = static_cast<int>(std::lround(wid));
  add_ellipse(t.heel, 0.0, 0.0, 0.5 * len, 0.5 * wid);
  return t;
}

std::vector<double> render_frame(const std::vector<ContactEvent>& events,
                                 const AttributeVector& attrs,
                                 std::size_t frame_index) {
  const FootprintTemplate foot_t = make_footprint(attrs);
  const FootprintTemplate knee_t = make_knee_print(attrs);
  const double stride = stride_cells(attrs);
  const double hip = hip_half_cells(attrs);
  const double force = attrs.weight_kg * kGravity;

  // margin keeps the largest template inside the grid after folding
  const double margin_r = 0.5 * foot_t.length_cells + 2.0;
  const double span = (kGridRows - 1) - 2.0 * margin_r;

  std::vector<double> grid(static_cast<std::size_t>(kGridRows) * kGridCols, 0.0);
  for (const auto& e : events) {
    const bool knee = e.region == ContactEvent::kLeftKnee ||
                      e.region == ContactEvent::kRightKnee;
    const FootprintTemplate& tpl = knee ? knee_t : foot_t;
    const int r0 = static_cast<int>(std::lround(margin_r + fold(e.along * stride, span)));
    const int c0 = static_cast<int>(std::lround((kGridCols - 1) / 2.0 + e.lateral * hip));
    const double heel_share = knee ? 1.0 : 0.6 * (1.0 - e.roll);
    auto splat = [&](const std::vector<FootprintTemplate::Cell>& part, double share) {
      if (share == 0.0) return;
      for (const auto& cell : part) {
        const int r = r0 + cell.dr, c = c0 + cell.dc;
        if (r < 0 || r >= kGridRows || c < 0 || c >= kGridCols) {
          throw DataError("scripted contact out of grid at frame " +
                          std::to_string(frame_index) + " (row " + std::to_string(r) +
                          ", col " + std::to_string(c) + ")");
        }
        grid[static_cast<std::size_t>(r) * kGridCols + c] +=
            force * e.load * share * cell.w;
      }
    };
    splat(tpl.heel, heel_share);
    if (!knee) splat(tpl.fore, 1.0 - heel_share);
  }
  return grid;
}

PressureSequence generate_sequence(const MotionScript& script,
                                   const AttributeVector& attrs, double fps) {
  attrs.validate();
  PressureSequence seq;
  seq.fps = fps > 0.0 ? fps : script.fps;
  seq.attributes = attrs;
  seq.motion_label = script.activity;
  seq.frames.reserve(script.frames.size());
  for (std::size_t t = 0; t < script.frames.size(); ++t) {
    const std::vector<double> grid = render_frame(script.frames[t], attrs, t);
    Frame f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) f[i] = static_cast<float>(grid[i]);
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

AttributeVector sample_attributes(int sex, Rng& rng) {
  const PopulationStats pop = sex == 1 ? PopulationStats::male_population()
                                       : PopulationStats::female_population();
  AttributeVector a;
  a.sex = sex;
  do {
    a.height_cm = rng.gaussian(pop.height_mean, pop.height_spread);
  } while (std::fabs(a.height_cm - pop.height_mean) > 3.0 * pop.height_spread ||
           a.height_cm <= 50.0 || a.height_cm >= 250.0);
  do {
    a.weight_kg = rng.gaussian(pop.weight_mean, pop.weight_spread);
  } while (std::fabs(a.weight_kg - pop.weight_mean) > 3.0 * pop.weight_spread ||
           a.weight_kg <= 20.0 || a.weight_kg >= 300.0);
  return a;
}

DatasetManifest generate_corpus(const GenConfig& cfg, const std::string& out_dir) {
  if (cfg.train_subjects_per_sex < 1) {
    throw DataError("need at least one training subject per sex");
  }
  std::filesystem::create_directories(out_dir);
  Rng rng(cfg.seed);

  struct Subject {
    std::string id;
    AttributeVector attrs;
    bool train;
  };
  std::vector<Subject> subjects;
  for (int sex = 1; sex >= 0; --sex) {
    const char tag = sex == 1 ? 'm' : 'f';
    for (int i = 0; i < cfg.train_subjects_per_sex; ++i) {
      subjects.push_back({std::string(1, tag) + "_train_" + std::to_string(i),
                          sample_attributes(sex, rng), true});
    }
    for (int i = 0; i < cfg.eval_subjects_per_sex; ++i) {
      subjects.push_back({std::string(1, tag) + "_eval_" + std::to_string(i),
                          sample_attributes(sex, rng), false});
    }
  }

  struct ScriptSpec {
    MotionScript script;
    bool seen;
  };
  std::vector<ScriptSpec> scripts;
  for (const auto& act : cfg.activities) {
    scripts.push_back(
        {make_script(act, cfg.duration_s, cfg.fps, rng.next_u64(), act + "-seen0"),
         true});
    for (int u = 0; u < cfg.unseen_scripts_per_activity; ++u) {
      scripts.push_back({make_script(act, cfg.duration_s, cfg.fps, rng.next_u64(),
                                     act + "-unseen" + std::to_string(u)),
                         false});
    }
  }

  DatasetManifest manifest;
  for (const auto& sub : subjects) {
    for (const auto& sc : scripts) {
      PressureSequence seq = generate_sequence(sc.script, sub.attrs, cfg.fps);
      seq.subject_id = sub.id;
      const std::string fname = sub.id + "_" + sc.script.script_id + ".pseq";
      const std::string path = (std::filesystem::path(out_dir) / fname).string();
      save_sequence(seq, path);
      ManifestEntry e;
      e.path = fname;  // manifest-relative
      e.subject_id = sub.id;
      e.attributes = sub.attrs;
      e.motion_label = sc.script.activity;
      e.split = (sub.train && sc.seen) ? "train" : "test";
      e.script_id = sc.script.script_id;
      e.seen = sc.seen;
      manifest.entries.push_back(std::move(e));
    }
  }
  const std::string manifest_path =
      (std::filesystem::path(out_dir) / "manifest.json").string();
  manifest.save(manifest_path);
  // reload so returned paths are resolved and verified
  return DatasetManifest::load(manifest_path);
}

}  // namespace ptn
