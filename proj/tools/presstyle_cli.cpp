// presstyle: generate pressure corpora, train the attribute-conditioned
// transfer network, run transfers, and evaluate. Every run writes a run.json
// echoing the fully resolved configuration; re-running a command with
// `--config run.json --threads 1` reproduces its artifacts byte for byte.
//
// Precedence for every setting: command-line flag > config file > built-in
// default. The seed additionally falls back to the PRESSTYLE_SEED env var.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "presstyle/har.hpp"
#include "presstyle/metrics.hpp"
#include "presstyle/model.hpp"
#include "presstyle/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class CliError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError("cannot open config file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw CliError("bad JSON in " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw CliError("config root must be a JSON object: " + path);
  return doc;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& context) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw CliError("unknown config key '" + key + "' in " + context);
    }
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError("cannot write " + path);
  out << text;
}

// Shared flags and config plumbing for one subcommand.
struct Common {
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 1;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  json cfg = json::object();

  void attach(CLI::App* cmd, bool out_is_dir = true) {
    cmd->add_option("--config", config_path, "JSON config file");
    out_opt = cmd->add_option("--out", out,
                              out_is_dir ? "output directory" : "output file");
    seed_opt = cmd->add_option("--seed", seed, "global RNG seed");
    threads_opt =
        cmd->add_option("--threads", threads, "worker threads (1 = deterministic)");
  }

  // Loads the config and resolves out/seed/threads by precedence.
  void resolve(const std::string& command, std::uint64_t default_seed) {
    if (!config_path.empty()) cfg = load_json_file(config_path);
    if (cfg.contains("command") && cfg["command"] != command) {
      throw CliError("config was written for command '" +
                     cfg["command"].get<std::string>() + "', not '" + command + "'");
    }
    if (out_opt->count() == 0 && cfg.contains("out")) {
      out = cfg["out"].get<std::string>();
    }
    if (threads_opt->count() == 0 && cfg.contains("threads")) {
      threads = cfg["threads"].get<int>();
    }
    if (threads < 1) throw CliError("--threads must be >= 1");
    if (seed_opt->count() == 0) {
      if (cfg.contains("seed")) {
        seed = cfg["seed"].get<std::uint64_t>();
      } else if (const char* env = std::getenv("PRESSTYLE_SEED")) {
        seed = std::strtoull(env, nullptr, 10);
      } else {
        seed = default_seed;
      }
    }
    if (out.empty()) throw CliError("--out is required (flag or config)");
  }

  json section(const std::string& name) const {
    if (!cfg.contains(name)) return json::object();
    if (!cfg[name].is_object()) throw CliError("config section '" + name + "' must be an object");
    return cfg[name];
  }

  void write_run_json(const std::string& command, const std::string& dir,
                      json sections) const {
    sections["command"] = command;
    sections["out"] = out;
    sections["seed"] = seed;
    sections["threads"] = threads;
    write_text((fs::path(dir) / "run.json").string(), sections.dump(2) + "\n");
  }
};

template <typename T>
void take(const json& sec, const std::string& key, T& dst) {
  if (sec.contains(key)) dst = sec[key].get<T>();
}

ptn::GenConfig gen_from_json(const json& sec) {
  reject_unknown(sec,
                 {"train_subjects_per_sex", "eval_subjects_per_sex", "activities",
                  "unseen_scripts_per_activity", "duration_s", "fps"},
                 "gen");
  ptn::GenConfig g;
  take(sec, "train_subjects_per_sex", g.train_subjects_per_sex);
  take(sec, "eval_subjects_per_sex", g.eval_subjects_per_sex);
  take(sec, "activities", g.activities);
  take(sec, "unseen_scripts_per_activity", g.unseen_scripts_per_activity);
  take(sec, "duration_s", g.duration_s);
  take(sec, "fps", g.fps);
  return g;
}

json gen_to_json(const ptn::GenConfig& g) {
  return {{"train_subjects_per_sex", g.train_subjects_per_sex},
          {"eval_subjects_per_sex", g.eval_subjects_per_sex},
          {"activities", g.activities},
          {"unseen_scripts_per_activity", g.unseen_scripts_per_activity},
          {"duration_s", g.duration_s},
          {"fps", g.fps}};
}

ptn::NetConfig net_from_json(const json& sec) {
  reject_unknown(sec,
                 {"preset", "c1", "c2", "c3", "learning_rate", "lr_halve_every",
                  "batch", "max_epochs", "patience", "window_stride",
                  "max_pairs_per_epoch", "pressure_scale", "input_gamma",
                  "output_noise_floor", "feature_loss"},
                 "network");
  std::string preset = "desk";
  take(sec, "preset", preset);
  ptn::NetConfig n;
  if (preset == "desk") {
    n = ptn::NetConfig::desk_preset();
  } else if (preset == "paper") {
    n = ptn::NetConfig::paper_preset();
  } else {
    throw CliError("network.preset must be 'desk' or 'paper'");
  }
  take(sec, "c1", n.c1);
  take(sec, "c2", n.c2);
  take(sec, "c3", n.c3);
  take(sec, "learning_rate", n.learning_rate);
  take(sec, "lr_halve_every", n.lr_halve_every);
  take(sec, "batch", n.batch);
  take(sec, "max_epochs", n.max_epochs);
  take(sec, "patience", n.patience);
  take(sec, "window_stride", n.window_stride);
  take(sec, "max_pairs_per_epoch", n.max_pairs_per_epoch);
  take(sec, "pressure_scale", n.pressure_scale);
  take(sec, "input_gamma", n.input_gamma);
  take(sec, "output_noise_floor", n.output_noise_floor);
  take(sec, "feature_loss", n.feature_loss);
  n.validate();
  return n;
}

json net_to_json(const ptn::NetConfig& n) {
  return {{"c1", n.c1},
          {"c2", n.c2},
          {"c3", n.c3},
          {"learning_rate", n.learning_rate},
          {"lr_halve_every", n.lr_halve_every},
          {"batch", n.batch},
          {"max_epochs", n.max_epochs},
          {"patience", n.patience},
          {"window_stride", n.window_stride},
          {"max_pairs_per_epoch", n.max_pairs_per_epoch},
          {"pressure_scale", n.pressure_scale},
          {"input_gamma", n.input_gamma},
          {"output_noise_floor", n.output_noise_floor},
          {"feature_loss", n.feature_loss}};
}

int parse_sex(const std::string& s) {
  if (s == "male" || s == "m" || s == "1") return 1;
  if (s == "female" || s == "f" || s == "0") return 0;
  throw CliError("--target-sex must be 'male' or 'female'");
}

struct TopAllowed {
  std::set<std::string> keys;
};

void check_top(const json& cfg, std::set<std::string> sections) {
  sections.insert({"command", "out", "seed", "threads"});
  reject_unknown(cfg, sections, "config root");
}

// ---- subcommand bodies ----------------------------------------------------

int run_gen(Common& c) {
  c.resolve("gen", 7);
  check_top(c.cfg, {"gen"});
  ptn::GenConfig g = gen_from_json(c.section("gen"));
  g.seed = c.seed;
  fs::create_directories(c.out);
  ptn::DatasetManifest manifest = ptn::generate_corpus(g, c.out);
  c.write_run_json("gen", c.out, {{"gen", gen_to_json(g)}});
  std::cout << "wrote " << manifest.entries.size() << " sequences + manifest to "
            << c.out << "\n";
  return 0;
}

int run_train(Common& c, std::string manifest_path) {
  c.resolve("train", 1);
  check_top(c.cfg, {"train", "network"});
  json sec = c.section("train");
  reject_unknown(sec, {"manifest"}, "train");
  if (manifest_path.empty()) take(sec, "manifest", manifest_path);
  if (manifest_path.empty()) throw CliError("--manifest is required");

  ptn::NetConfig net = net_from_json(c.section("network"));
  net.seed = c.seed;
  net.threads = c.threads;
  ptn::DatasetManifest manifest = ptn::DatasetManifest::load(manifest_path);

  ptn::TransferNet model(net);
  ptn::TrainResult result = model.train(manifest);

  fs::create_directories(c.out);
  model.save((fs::path(c.out) / "weights.ptnw").string());
  json hist = json::array();
  for (const auto& e : result.history) {
    hist.push_back({{"epoch", e.epoch},
                    {"train_loss", e.train_loss},
                    {"val_loss", e.val_loss},
                    {"learning_rate", e.learning_rate}});
  }
  json summary = {{"history", hist},
                  {"early_stopped", result.early_stopped},
                  {"best_epoch", result.best_epoch},
                  {"best_val_loss", result.best_val_loss}};
  write_text((fs::path(c.out) / "history.json").string(), summary.dump(2) + "\n");
  c.write_run_json("train", c.out,
                   {{"train", {{"manifest", manifest_path}}},
                    {"network", net_to_json(net)}});
  std::cout << "best val loss " << result.best_val_loss << " at epoch "
            << result.best_epoch << "; weights in " << c.out << "\n";
  return 0;
}

struct TransferArgs {
  std::string input, weights, sex;
  double weight_kg = 0.0, height_cm = 0.0;
  int stride = ptn::kWindowFrames;
  CLI::Option *in_opt, *w_opt, *sex_opt, *wt_opt, *ht_opt, *stride_opt;
};

int run_transfer(Common& c, TransferArgs& a) {
  c.resolve("transfer", 1);
  check_top(c.cfg, {"transfer", "network"});
  json sec = c.section("transfer");
  reject_unknown(sec,
                 {"in", "weights", "target_sex", "target_weight", "target_height",
                  "stride"},
                 "transfer");
  if (a.in_opt->count() == 0) take(sec, "in", a.input);
  if (a.w_opt->count() == 0) take(sec, "weights", a.weights);
  if (a.sex_opt->count() == 0) take(sec, "target_sex", a.sex);
  if (a.wt_opt->count() == 0) take(sec, "target_weight", a.weight_kg);
  if (a.ht_opt->count() == 0) take(sec, "target_height", a.height_cm);
  if (a.stride_opt->count() == 0) take(sec, "stride", a.stride);
  if (a.input.empty() || a.weights.empty() || a.sex.empty()) {
    throw CliError("transfer needs --in, --weights and --target-sex");
  }

  ptn::AttributeVector target;
  target.sex = parse_sex(a.sex);
  target.weight_kg = a.weight_kg;
  target.height_cm = a.height_cm;
  target.validate();

  ptn::NetConfig net = net_from_json(c.section("network"));
  ptn::TransferNet model = ptn::TransferNet::load(a.weights, net);
  ptn::PressureSequence src = ptn::load_sequence(a.input);
  ptn::PressureSequence out = model.transfer(src, target, a.stride);
  fs::path out_path(c.out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  ptn::save_sequence(out, c.out);
  c.write_run_json(
      "transfer",
      out_path.has_parent_path() ? out_path.parent_path().string() : ".",
      {{"transfer",
        {{"in", a.input},
         {"weights", a.weights},
         {"target_sex", a.sex},
         {"target_weight", a.weight_kg},
         {"target_height", a.height_cm},
         {"stride", a.stride}}},
       {"network", net_to_json(net)}});
  std::cout << "wrote " << out.frame_count() << " frames to " << c.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string manifest, weights, protocol = "seen";
  int stride = ptn::kWindowFrames;
  int max_pairs = 0;
  CLI::Option *m_opt, *w_opt, *p_opt, *stride_opt, *pairs_opt;
};

int run_eval(Common& c, EvalArgs& a) {
  c.resolve("eval", 1);
  check_top(c.cfg, {"eval", "network"});
  json sec = c.section("eval");
  reject_unknown(sec,
                 {"manifest", "weights", "protocol", "transfer_stride",
                  "max_pairs_per_category"},
                 "eval");
  if (a.m_opt->count() == 0) take(sec, "manifest", a.manifest);
  if (a.w_opt->count() == 0) take(sec, "weights", a.weights);
  if (a.p_opt->count() == 0) take(sec, "protocol", a.protocol);
  if (a.stride_opt->count() == 0) take(sec, "transfer_stride", a.stride);
  if (a.pairs_opt->count() == 0) take(sec, "max_pairs_per_category", a.max_pairs);
  if (a.manifest.empty() || a.weights.empty()) {
    throw CliError("eval needs --manifest and --weights");
  }

  ptn::NetConfig net = net_from_json(c.section("network"));
  ptn::TransferNet model = ptn::TransferNet::load(a.weights, net);
  ptn::DatasetManifest manifest = ptn::DatasetManifest::load(a.manifest);
  ptn::EvalOptions opts;
  opts.protocol = a.protocol;
  opts.transfer_stride = a.stride;
  opts.max_pairs_per_category = a.max_pairs;
  ptn::EvalReport report = ptn::evaluate(manifest, model, opts);

  fs::create_directories(c.out);
  write_text((fs::path(c.out) / "report.json").string(), report.to_json() + "\n");
  write_text((fs::path(c.out) / "report.txt").string(), report.to_text());
  c.write_run_json("eval", c.out,
                   {{"eval",
                     {{"manifest", a.manifest},
                      {"weights", a.weights},
                      {"protocol", a.protocol},
                      {"transfer_stride", a.stride},
                      {"max_pairs_per_category", a.max_pairs}}},
                    {"network", net_to_json(net)}});
  std::cout << report.to_text();
  return 0;
}

struct HarArgs {
  std::string manifest, weights;
  int iterations = 10;
  double bandwidth = 0.0;
  int window_stride = 15;
  CLI::Option *m_opt, *w_opt, *it_opt, *bw_opt, *ws_opt;
};

int run_har(Common& c, HarArgs& a) {
  c.resolve("har-eval", 1);
  check_top(c.cfg, {"har", "network"});
  json sec = c.section("har");
  reject_unknown(sec,
                 {"manifest", "weights", "iterations", "bandwidth", "window_stride",
                  "transfer_stride", "max_windows_per_source",
                  "synth_targets_per_sequence", "classifier"},
                 "har");
  if (a.m_opt->count() == 0) take(sec, "manifest", a.manifest);
  if (a.w_opt->count() == 0) take(sec, "weights", a.weights);
  if (a.it_opt->count() == 0) take(sec, "iterations", a.iterations);
  if (a.bw_opt->count() == 0) take(sec, "bandwidth", a.bandwidth);
  if (a.ws_opt->count() == 0) take(sec, "window_stride", a.window_stride);
  if (a.manifest.empty() || a.weights.empty()) {
    throw CliError("har-eval needs --manifest and --weights");
  }

  ptn::Table3Options opts;
  opts.iterations = a.iterations;
  opts.bandwidth = a.bandwidth;
  opts.window_stride = a.window_stride;
  take(sec, "transfer_stride", opts.transfer_stride);
  take(sec, "max_windows_per_source", opts.max_windows_per_source);
  take(sec, "synth_targets_per_sequence", opts.synth_targets_per_sequence);
  if (sec.contains("classifier")) {
    const json& cl = sec["classifier"];
    reject_unknown(cl,
                   {"c1", "c2", "learning_rate", "batch", "max_epochs", "patience"},
                   "har.classifier");
    take(cl, "c1", opts.classifier.c1);
    take(cl, "c2", opts.classifier.c2);
    take(cl, "learning_rate", opts.classifier.learning_rate);
    take(cl, "batch", opts.classifier.batch);
    take(cl, "max_epochs", opts.classifier.max_epochs);
    take(cl, "patience", opts.classifier.patience);
  }
  opts.classifier.seed = c.seed;

  ptn::NetConfig net = net_from_json(c.section("network"));
  ptn::TransferNet model = ptn::TransferNet::load(a.weights, net);
  ptn::DatasetManifest manifest = ptn::DatasetManifest::load(a.manifest);
  ptn::Table3Report report = ptn::table3_protocol(manifest, model, opts);

  fs::create_directories(c.out);
  write_text((fs::path(c.out) / "table3.json").string(), report.to_json() + "\n");
  write_text((fs::path(c.out) / "table3.txt").string(), report.to_text());
  write_text((fs::path(c.out) / "clusters.csv").string(),
             report.cluster_assignments_csv);
  json har_echo = {{"manifest", a.manifest},
                   {"weights", a.weights},
                   {"iterations", opts.iterations},
                   {"bandwidth", opts.bandwidth},
                   {"window_stride", opts.window_stride},
                   {"transfer_stride", opts.transfer_stride},
                   {"max_windows_per_source", opts.max_windows_per_source},
                   {"synth_targets_per_sequence", opts.synth_targets_per_sequence},
                   {"classifier",
                    {{"c1", opts.classifier.c1},
                     {"c2", opts.classifier.c2},
                     {"learning_rate", opts.classifier.learning_rate},
                     {"batch", opts.classifier.batch},
                     {"max_epochs", opts.classifier.max_epochs},
                     {"patience", opts.classifier.patience}}}};
  c.write_run_json("har-eval", c.out,
                   {{"har", har_echo}, {"network", net_to_json(net)}});
  std::cout << report.to_text();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"presstyle: attribute-conditioned pressure-map style transfer"};
  app.require_subcommand(1);

  Common gen_c, train_c, transfer_c, eval_c, har_c;

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic corpus");
  gen_c.attach(gen);

  CLI::App* train = app.add_subcommand("train", "train the transfer network");
  train_c.attach(train);
  std::string train_manifest;
  train->add_option("--manifest", train_manifest, "dataset manifest JSON");

  CLI::App* transfer =
      app.add_subcommand("transfer", "re-render a sequence for a target body");
  transfer_c.attach(transfer, /*out_is_dir=*/false);
  TransferArgs ta;
  ta.in_opt = transfer->add_option("--in", ta.input, "source .pseq");
  ta.w_opt = transfer->add_option("--weights", ta.weights, "PTNW weight file");
  ta.sex_opt = transfer->add_option("--target-sex", ta.sex, "male | female");
  ta.wt_opt = transfer->add_option("--target-weight", ta.weight_kg, "kg");
  ta.ht_opt = transfer->add_option("--target-height", ta.height_cm, "cm");
  ta.stride_opt = transfer->add_option("--stride", ta.stride, "window stride");

  CLI::App* eval = app.add_subcommand("eval", "seen/unseen transfer quality report");
  eval_c.attach(eval);
  EvalArgs ea;
  ea.m_opt = eval->add_option("--manifest", ea.manifest, "dataset manifest JSON");
  ea.w_opt = eval->add_option("--weights", ea.weights, "PTNW weight file");
  ea.p_opt = eval->add_option("--protocol", ea.protocol, "seen | unseen");
  ea.stride_opt = eval->add_option("--transfer-stride", ea.stride, "window stride");
  ea.pairs_opt =
      eval->add_option("--max-pairs", ea.max_pairs, "cap pairs per category");

  CLI::App* har = app.add_subcommand("har-eval", "Table-3-style HAR comparison");
  har_c.attach(har);
  HarArgs ha;
  ha.m_opt = har->add_option("--manifest", ha.manifest, "dataset manifest JSON");
  ha.w_opt = har->add_option("--weights", ha.weights, "PTNW weight file");
  ha.it_opt = har->add_option("--iterations", ha.iterations, "training repeats");
  ha.bw_opt = har->add_option("--bandwidth", ha.bandwidth, "mean-shift bandwidth");
  ha.ws_opt = har->add_option("--window-stride", ha.window_stride, "window stride");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // --help is 0; every flag error is usage error
  }

  try {
    if (gen->parsed()) return run_gen(gen_c);
    if (train->parsed()) return run_train(train_c, train_manifest);
    if (transfer->parsed()) return run_transfer(transfer_c, ta);
    if (eval->parsed()) return run_eval(eval_c, ea);
    if (har->parsed()) return run_har(har_c, ha);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
