#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "presstyle/model.hpp"
#include "presstyle/synth.hpp"

using namespace ptn;
namespace fs = std::filesystem;

#ifndef PRESSTYLE_CLI
#error "PRESSTYLE_CLI must point at the built binary"
#endif

namespace {

const char* kCli = PRESSTYLE_CLI;

int run(const std::string& args, const std::string& capture = "/dev/null") {
  const std::string cmd =
      std::string(kCli) + " " + args + " >" + capture + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path scratch(const char* name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::size_t count_pseq(const fs::path& dir) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    n += e.path().extension() == ".pseq";
  }
  return n;
}

const char* kTinyNet = R"({"network": {"c1": 4, "c2": 6, "c3": 8}})";

}  // namespace

TEST_CASE("gen writes the full corpus and exits 0") {
  const fs::path dir = scratch("cli_gen");
  write_file(dir / "gen.json",
             R"({"gen": {"train_subjects_per_sex": 8, "eval_subjects_per_sex": 0,
                 "unseen_scripts_per_activity": 0, "duration_s": 1.0}})");
  const int rc = run("gen --config " + (dir / "gen.json").string() + " --out " +
                     (dir / "corpus").string() + " --seed 3");
  CHECK(rc == 0);
  CHECK(count_pseq(dir / "corpus") == 64);
  CHECK(fs::exists(dir / "corpus" / "manifest.json"));
  CHECK(fs::exists(dir / "corpus" / "run.json"));
  fs::remove_all(dir);
}

TEST_CASE("bad flags are usage errors (exit 2)") {
  CHECK(run("gen --bogus-flag 1 --out /tmp/x") == 2);
  CHECK(run("") == 2);                 // missing subcommand
  CHECK(run("frobnicate --out /tmp/x") == 2);
  CHECK(run("--help") == 0);
}

TEST_CASE("runtime failures exit 1 with an error message") {
  const fs::path dir = scratch("cli_err");
  const fs::path log = dir / "err.log";
  CHECK(run("gen --seed 1", log.string()) == 1);  // --out missing
  CHECK(slurp(log).find("error:") != std::string::npos);

  CHECK(run("transfer --in /nonexistent.pseq --weights /nonexistent.ptnw "
            "--target-sex male --target-weight 70 --target-height 170 --out " +
                (dir / "o.pseq").string(),
            log.string()) == 1);
  CHECK(slurp(log).find("error:") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("unknown config keys are rejected") {
  const fs::path dir = scratch("cli_unknown");
  const fs::path log = dir / "err.log";
  write_file(dir / "bad.json", R"({"gen": {"subjects": 4}})");
  CHECK(run("gen --config " + (dir / "bad.json").string() + " --out " +
                (dir / "out").string(),
            log.string()) == 1);
  CHECK(slurp(log).find("unknown config key 'subjects'") != std::string::npos);

  write_file(dir / "bad2.json", R"({"generate": {}})");
  CHECK(run("gen --config " + (dir / "bad2.json").string() + " --out " +
                (dir / "out").string(),
            log.string()) == 1);
  CHECK(slurp(log).find("unknown config key 'generate'") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("PRESSTYLE_SEED is the seed fallback") {
  const fs::path dir = scratch("cli_envseed");
  write_file(dir / "gen.json",
             R"({"gen": {"train_subjects_per_sex": 1, "eval_subjects_per_sex": 0,
                 "unseen_scripts_per_activity": 0, "duration_s": 1.0}})");
  const std::string base = "gen --config " + (dir / "gen.json").string();
  auto run_env = [&](const std::string& out) {
    const std::string cmd = "PRESSTYLE_SEED=99 " + std::string(kCli) + " " + base +
                            " --out " + out + " >/dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };
  CHECK(run_env((dir / "a").string()) == 0);
  CHECK(run_env((dir / "b").string()) == 0);
  CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));
  CHECK(slurp(dir / "a" / "run.json").find("\"seed\": 99") != std::string::npos);

  // an explicit flag wins over the env var
  const std::string cmd = "PRESSTYLE_SEED=99 " + std::string(kCli) + " " + base +
                          " --seed 5 --out " + (dir / "c").string() +
                          " >/dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(slurp(dir / "c" / "run.json").find("\"seed\": 5") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("run.json replays byte-identically with --threads 1") {
  const fs::path dir = scratch("cli_replay");
  write_file(dir / "gen.json",
             R"({"gen": {"train_subjects_per_sex": 2, "eval_subjects_per_sex": 0,
                 "unseen_scripts_per_activity": 0, "duration_s": 1.0}})");
  CHECK(run("gen --config " + (dir / "gen.json").string() + " --out " +
            (dir / "one").string() + " --seed 11") == 0);
  CHECK(run("gen --config " + (dir / "one" / "run.json").string() + " --out " +
            (dir / "two").string() + " --threads 1") == 0);

  CHECK(slurp(dir / "one" / "manifest.json") == slurp(dir / "two" / "manifest.json"));
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(dir / "one")) {
    if (e.path().extension() != ".pseq") continue;
    CHECK(slurp(e.path()) == slurp(dir / "two" / e.path().filename()));
    ++compared;
  }
  CHECK(compared == 16);  // 4 subjects x 4 seen scripts

  // a run.json is refused by the wrong subcommand
  const fs::path log = dir / "err.log";
  CHECK(run("train --config " + (dir / "one" / "run.json").string() + " --out " +
                (dir / "three").string(),
            log.string()) == 1);
  CHECK(slurp(log).find("written for command 'gen'") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("transfer preserves the frame count") {
  const fs::path dir = scratch("cli_transfer");
  // tiny untrained net saved through the library; CLI must accept it
  NetConfig cfg = NetConfig::desk_preset();
  cfg.c1 = 4;
  cfg.c2 = 6;
  cfg.c3 = 8;
  TransferNet net(cfg);
  net.save((dir / "weights.ptnw").string());

  MotionScript script = make_script("walk", 1.5, 60.0, 4);
  PressureSequence src = generate_sequence(script, {1, 80.0, 180.0}, 60.0);
  src.subject_id = "src";
  save_sequence(src, (dir / "src.pseq").string());

  write_file(dir / "net.json", kTinyNet);
  const int rc = run("transfer --config " + (dir / "net.json").string() + " --in " +
                     (dir / "src.pseq").string() + " --weights " +
                     (dir / "weights.ptnw").string() +
                     " --target-sex female --target-weight 60 --target-height 162"
                     " --out " +
                     (dir / "out.pseq").string());
  CHECK(rc == 0);
  PressureSequence out = load_sequence((dir / "out.pseq").string());
  CHECK(out.frame_count() == src.frame_count());
  CHECK(out.attributes.sex == 0);
  CHECK(out.attributes.weight_kg == doctest::Approx(60.0));
  CHECK(fs::exists(dir / "run.json"));  // next to the output file
  fs::remove_all(dir);
}
