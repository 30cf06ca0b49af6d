#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "presstyle/model.hpp"
#include "presstyle/rng.hpp"
#include "presstyle/synth.hpp"

using namespace ptn;
namespace fs = std::filesystem;

namespace {

NetConfig tiny_config() {
  NetConfig cfg = NetConfig::desk_preset();
  cfg.c1 = 4;
  cfg.c2 = 6;
  cfg.c3 = 8;
  cfg.batch = 4;
  cfg.seed = 5;
  return cfg;
}

Tensor random_window(Rng& rng) {
  Tensor t({1, kWindowFrames, kGridRows, kGridCols});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(0.0, 500.0);
  return t;
}

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

}  // namespace

TEST_CASE("encode yields a 128-latent and decode restores the window shape") {
  TransferNet net(tiny_config());
  Rng rng(2);
  Tensor w = random_window(rng);
  Tensor attrs({1, 3}, {1.0, 0.3, -0.2});
  auto enc = net.encode(w, attrs);
  CHECK(enc.latent.shape() == std::vector<int>{1, 128});

  Tensor out = net.decode(enc.latent, attrs, enc.records);
  CHECK(out.shape() == std::vector<int>{1, kWindowFrames, kGridRows, kGridCols});
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] >= 0.0);

  // decode is deterministic
  Tensor out2 = net.decode(enc.latent, attrs, enc.records);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == out2[i]);
}

TEST_CASE("zero window at fresh init: latent is a function of attributes only") {
  TransferNet net(tiny_config());
  Tensor zero({1, kWindowFrames, kGridRows, kGridCols});
  Tensor a0({1, 3}, {0.0, 0.0, 0.0});
  Tensor a1({1, 3}, {1.0, 0.5, -0.5});
  // zero attrs ride through zero features and zero-initialized biases
  auto e0 = net.encode(zero, a0);
  for (std::size_t i = 0; i < e0.latent.size(); ++i) CHECK(e0.latent[i] == 0.0);
  // nonzero attrs must reach the latent
  auto e1 = net.encode(zero, a1);
  double mag = 0.0;
  for (std::size_t i = 0; i < e1.latent.size(); ++i) mag += std::fabs(e1.latent[i]);
  CHECK(mag > 0.0);
}

TEST_CASE("latent is sensitive to a single-cell change") {
  TransferNet net(tiny_config());
  Rng rng(3);
  Tensor w = random_window(rng);
  Tensor attrs({1, 3}, {0.0, 0.1, 0.1});
  auto a = net.encode(w, attrs);
  w[12345] += 200.0;
  auto b = net.encode(w, attrs);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.latent.size(); ++i) {
    diff += std::fabs(a.latent[i] - b.latent[i]);
  }
  CHECK(diff > 0.0);
}

TEST_CASE("content loss closed forms") {
  Tensor a({2, 3, 4, 5});
  Tensor b({2, 3, 4, 5});
  CHECK(content_loss(a, b) == 0.0);

  Tensor x({1, kWindowFrames, kGridRows, kGridCols});
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + 1.0;
  // per frame-map convention: each of the 30 maps contributes 80*28
  CHECK(content_loss(y, x) == doctest::Approx(2240.0).epsilon(1e-12));
  CHECK(content_loss(x, y) == doctest::Approx(content_loss(y, x)));

  Tensor wrong({2, 3, 4, 4});
  CHECK_THROWS_AS(content_loss(a, wrong), ShapeError);
}

TEST_CASE("weights round-trip through the PTNW file") {
  NetConfig cfg = tiny_config();
  TransferNet net(cfg);
  const auto path = fs::temp_directory_path() / "model_roundtrip.ptnw";
  net.save(path.string());
  TransferNet back = TransferNet::load(path.string(), cfg);

  Rng rng(4);
  Tensor w = random_window(rng);
  Tensor attrs({1, 3}, {1.0, -0.3, 0.4});
  auto e1 = net.encode(w, attrs);
  auto e2 = back.encode(w, attrs);
  // PTNW stores float32 payloads, so agreement is to float precision
  for (std::size_t i = 0; i < e1.latent.size(); ++i) {
    CHECK(e1.latent[i] == doctest::Approx(e2.latent[i]).epsilon(1e-4));
  }
  fs::remove(path);
}

TEST_CASE("loading weights of the wrong architecture fails") {
  NetConfig cfg = tiny_config();
  TransferNet net(cfg);
  const auto path = fs::temp_directory_path() / "model_arch.ptnw";
  net.save(path.string());
  NetConfig other = tiny_config();
  other.c1 = 5;
  CHECK_THROWS_AS(TransferNet::load(path.string(), other), ModelError);
  fs::remove(path);
}

TEST_CASE("config validation pins the paper geometry") {
  NetConfig cfg = tiny_config();
  cfg.latent = 64;
  CHECK_THROWS_AS(cfg.validate(), ModelError);
  cfg = tiny_config();
  cfg.rows = 64;
  CHECK_THROWS_AS(cfg.validate(), ModelError);
  CHECK(NetConfig::paper_preset().batch == 1028);  // verbatim from the paper
  CHECK(NetConfig::paper_preset().learning_rate == 0.01);
}

TEST_CASE("transfer keeps sequence length for 30, 31 and 100 frames") {
  TransferNet net(tiny_config());
  MotionScript script = double_stance(100);
  PressureSequence seq = generate_sequence(script, {1, 75.0, 175.0}, 60.0);
  for (std::size_t len : {30u, 31u, 100u}) {
    PressureSequence cut = seq;
    cut.frames.resize(len);
    PressureSequence out = net.transfer(cut, {0, 60.0, 160.0});
    CHECK(out.frame_count() == len);
    CHECK(out.attributes == AttributeVector{0, 60.0, 160.0});
  }
  PressureSequence tiny = seq;
  tiny.frames.resize(10);
  CHECK_THROWS_AS(net.transfer(tiny, {0, 60.0, 160.0}), ModelError);
}

TEST_CASE("identity autoencoder training: val loss decreases over 10 epochs") {
  const auto dir = fs::temp_directory_path() / "model_train_sanity";
  fs::remove_all(dir);
  fs::create_directories(dir);
  MotionScript script = make_script("walk", 2.0, 60.0, 31, "walk-seen0");
  PressureSequence seq = generate_sequence(script, {1, 75.0, 175.0}, 60.0);
  seq.subject_id = "solo";
  seq.motion_label = "walk";
  save_sequence(seq, (dir / "solo.pseq").string());
  DatasetManifest m;
  m.entries.push_back(
      {(dir / "solo.pseq").string(), "solo", seq.attributes, "walk", "train",
       "walk-seen0", true});

  NetConfig cfg = tiny_config();
  cfg.max_epochs = 10;
  cfg.patience = 10;
  cfg.window_stride = 4;
  cfg.max_pairs_per_epoch = 16;
  TransferNet net(cfg);
  TrainResult r = net.train(m);
  REQUIRE(r.history.size() == 10);
  CHECK(r.history.back().val_loss < r.history.front().val_loss);
  fs::remove_all(dir);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto dir = fs::temp_directory_path() / "model_train_det";
  fs::remove_all(dir);
  fs::create_directories(dir);
  MotionScript script = make_script("exercise", 1.5, 60.0, 8, "exercise-seen0");
  PressureSequence seq = generate_sequence(script, {0, 62.0, 168.0}, 60.0);
  seq.subject_id = "solo";
  seq.motion_label = "exercise";
  save_sequence(seq, (dir / "solo.pseq").string());
  DatasetManifest m;
  m.entries.push_back(
      {(dir / "solo.pseq").string(), "solo", seq.attributes, "exercise", "train",
       "exercise-seen0", true});

  NetConfig cfg = tiny_config();
  cfg.max_epochs = 3;
  cfg.window_stride = 8;
  auto run = [&] {
    TransferNet net(cfg);
    return net.train(m).history;
  };
  auto h1 = run();
  auto h2 = run();
  REQUIRE(h1.size() == h2.size());
  for (std::size_t i = 0; i < h1.size(); ++i) {
    CHECK(h1[i].train_loss == h2[i].train_loss);
    CHECK(h1[i].val_loss == h2[i].val_loss);
  }
  fs::remove_all(dir);
}
