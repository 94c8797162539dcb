#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "firstcontact/persist.hpp"
#include "firstcontact/pipeline.hpp"
#include "firstcontact/wire.hpp"
#include "firstcontact/workflow.hpp"

using namespace firstcontact;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitAcceptance = 4;

// Settings for one subcommand: defaults, then the --config file, then flags
// given on the command line. Every accepted key appears in `defaults`.
struct Command {
  CLI::App* app = nullptr;
  std::string name;
  Json defaults = Json::object();
  std::string config_path;
  std::vector<std::function<void(Json&)>> overrides;

  template <typename T>
  void option(const std::string& key, Json fallback, const std::string& help) {
    defaults[key] = std::move(fallback);
    auto holder = std::make_shared<T>();
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    CLI::Option* opt = app->add_option(flag, *holder, help + " [" + defaults[key].dump() + "]");
    overrides.push_back([key, holder, opt](Json& j) {
      if (opt->count() > 0) j[key] = *holder;
    });
  }

  void flag(const std::string& key, bool fallback, const std::string& help) {
    defaults[key] = fallback;
    std::string name = "--" + key;
    std::replace(name.begin(), name.end(), '_', '-');
    auto holder = std::make_shared<bool>(fallback);
    CLI::Option* opt = app->add_flag(name, *holder, help + " [" + defaults[key].dump() + "]");
    overrides.push_back([key, holder, opt](Json& j) {
      if (opt->count() > 0) j[key] = *holder;
    });
  }

  // Nested object settable only from the config file.
  void section(const std::string& key) { defaults[key] = Json::object(); }

  [[nodiscard]] Json resolve() const {
    Json j = defaults;
    if (!config_path.empty()) {
      Json file;
      try {
        file = read_json_file(config_path);
      } catch (const DataError& e) {
        throw ConfigError(e.what());
      }
      if (!file.is_object()) throw ConfigError(config_path + ": config must be a JSON object");
      for (const auto& [k, v] : file.items()) {
        if (!defaults.contains(k)) throw ConfigError(config_path + ": unknown key '" + k + "' for " + name);
        j[k] = v;
      }
    }
    for (const auto& o : overrides) o(j);
    return j;
  }
};

Command& add_command(std::vector<std::unique_ptr<Command>>& all, CLI::App& parent, const std::string& name,
                     const std::string& help) {
  auto c = std::make_unique<Command>();
  c->app = parent.add_subcommand(name, help);
  c->name = name;
  c->app->add_option("--config", c->config_path, "JSON file with settings; flags override it");
  all.push_back(std::move(c));
  return *all.back();
}

template <typename T>
std::optional<T> get_opt(const Json& j, const std::string& key) {
  if (j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::string require_path(const Json& j, const std::string& key) {
  const auto v = get_opt<std::string>(j, key);
  if (!v || v->empty()) throw ConfigError("missing required setting '" + key + "'");
  return *v;
}

// Output locations do not change results, so they stay out of the hash.
Json stamp(Json report, const std::string& command, const Json& config) {
  Json hashed = config;
  for (const char* k : {"out", "log", "csv", "report"}) hashed.erase(k);
  report["command"] = command;
  report["config_hash"] = config_hash(hashed);
  report["format_version"] = kFormatVersion;
  report["generator"] = kToolVersion;
  return report;
}

// Writes to `path`, or to stdout for null / "-".
void emit_text(const std::optional<std::string>& path, const std::string& text) {
  if (!path || *path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(*path, std::ios::binary);
  if (!out) throw DataError("cannot write " + *path);
  out << text;
}

void emit_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  if (path == "-") {
    std::cout.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::vector<std::uint8_t> bytes;
  if (path == "-") {
    bytes.assign(std::istreambuf_iterator<char>(std::cin), {});
    return bytes;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  bytes.assign(std::istreambuf_iterator<char>(in), {});
  return bytes;
}

Json to_json(const wire::ParserState& s) {
  return {{"frames_ok", s.frames_ok},           {"crc_fail_count", s.crc_fail_count},
          {"resync_count", s.resync_count},     {"bytes_discarded", s.bytes_discarded},
          {"seq_gap_count", s.seq_gap_count},   {"frames_missing", s.frames_missing},
          {"pending_bytes", s.pending.size()}};
}

std::vector<Scenario> preset_scenarios(const std::string& preset) {
  if (preset == "paper-blocks") return paper_blocks();
  if (preset == "real-objects") return real_objects();
  throw ConfigError("unknown preset '" + preset + "' (paper-blocks, real-objects)");
}

// ---------------------------------------------------------------- synth

int cmd_synth(const Json& j) {
  const auto preset = j.at("preset").get<std::string>();
  const auto scenarios = preset_scenarios(preset);
  const auto seed = j.at("seed").get<std::uint64_t>();
  const auto pinches = get_opt<std::size_t>(j, "pinches").value_or(preset == "paper-blocks" ? 500 : 50);
  SynthConfig cfg = synth_config_from_json(j.at("synth"));
  cfg.seed = seed;
  cfg.validate();

  Rng rng(seed);
  const auto traces = make_dataset(cfg, scenarios, pinches, rng);
  DatasetManifest m;
  m.preset = preset;
  m.synth = cfg;
  m.scenarios = scenarios;
  m.pinches_per_label = pinches;
  m.windows = window_spec_from_json(j.at("windows"));
  m.seed = seed;
  m.trace_count = traces.size();
  const auto out = require_path(j, "out");
  save_dataset(out, m, traces);
  emit_text(std::nullopt, stamp({{"out", out}, {"trace_count", traces.size()}}, "synth", j).dump() + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------- train

int cmd_train(const Json& j) {
  const auto data = load_dataset(require_path(j, "data"));
  const auto& manifest = data.manifest;
  const auto kind_name = j.at("model").get<std::string>();
  const auto seed = j.at("seed").get<std::uint64_t>();
  const auto out = require_path(j, "out");
  const auto log_path = get_opt<std::string>(j, "log").value_or(fs::path(out).replace_extension().string() +
                                                                 ".log.json");
  SvmParams svm;
  svm.c_penalty = j.at("c_penalty").get<double>();
  svm.gamma = get_opt<double>(j, "gamma");
  svm.epsilon = j.at("epsilon").get<double>();
  Json log = {{"model", kind_name}, {"dataset", manifest.preset}, {"trace_count", data.traces.size()}, {"config", j}};

  if (kind_name == "svm-detector") {
    auto traces = data.traces;
    Rng rng(derive_seed(seed, 0x646574));
    if (j.at("bursts").get<bool>()) inject_burst_corpus(traces, manifest.synth, rng);
    const auto thr = calibrated_threshold(manifest.synth, manifest.synth.seed);
    svm.seed = seed;
    const auto det = train_svm_detector(detection_windows(traces, manifest.windows, rng), thr.baseline, svm);
    std::vector<DetectionResult> results;
    for (const auto& t : traces) results.push_back(detect(condition_vibration(t.vibration), Detector{det}, manifest.windows));
    log["training_detection"] = to_json(score_detections(results, traces));
    log["support_vectors"] = det.model.support_vectors.size();
    write_json_file(out, stamp(to_json(Detector{det}), "train", j));
  } else {
    const auto kind = parse_model_kind(kind_name);
    if (!kind) throw ConfigError("unknown model '" + kind_name + "' (svc, svr, cnn-classifier, cnn-regressor, svm-detector)");
    TrainOptions opts;
    opts.svm = svm;
    opts.grid = j.at("grid").get<bool>();
    opts.schedule = train_schedule_from_json(j.at("schedule"));
    opts.validation_fraction = j.at("validation_fraction").get<double>();
    opts.seed = seed;
    const auto windows = corpus_windows(data.traces, manifest.synth, manifest.windows);
    const auto outcome = train_stiffness(*kind, windows, opts);

    std::vector<std::uint64_t> held;
    for (auto i : outcome.split.validation) held.push_back(windows.trace_id[i]);
    log["train_count"] = outcome.split.train.size();
    log["validation_trace_ids"] = held;
    if (outcome.grid) {
      Json table = Json::array();
      for (const auto& p : outcome.grid->table)
        table.push_back({{"c_penalty", p.c_penalty}, {"gamma", p.gamma}, {"score", p.score}});
      log["grid"] = table;
    }
    if (!outcome.conv_log.epoch_loss.empty()) {
      log["epoch_loss"] = outcome.conv_log.epoch_loss;
      log["lr"] = outcome.conv_log.lr;
      log["validation_loss"] = outcome.conv_log.validation_loss;
      log["best_epoch"] = outcome.conv_log.best_epoch ? Json(*outcome.conv_log.best_epoch) : Json(nullptr);
    }
    if (!held.empty()) {
      const Task task = is_classifier(*kind) ? Task::discrimination : Task::regression;
      log["validation"] = to_json(evaluate(outcome.model, windows.subset(outcome.split.validation), task));
    }
    write_json_file(out, stamp(to_json(outcome.model), "train", j));
  }
  write_json_file(log_path, stamp(log, "train", j));
  emit_text(std::nullopt, stamp({{"model", out}, {"log", log_path}}, "train", j).dump() + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------- eval

int cmd_eval(const Json& j) {
  const auto data = load_dataset(require_path(j, "data"));
  const auto model = stiffness_model_from_json(read_json_file(require_path(j, "model")));
  auto windows = corpus_windows(data.traces, data.manifest.synth, data.manifest.windows);

  if (const auto holdout = get_opt<std::string>(j, "holdout")) {
    const auto log = read_json_file(*holdout);
    if (!log.contains("validation_trace_ids")) throw DataError(*holdout + ": no validation_trace_ids");
    const auto ids = log.at("validation_trace_ids").get<std::set<std::uint64_t>>();
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < windows.size(); ++i)
      if (ids.count(windows.trace_id[i])) keep.push_back(i);
    if (keep.empty()) throw DataError(*holdout + ": held-out traces are not in this dataset");
    windows = windows.subset(keep);
  }

  const auto task_name = j.at("task").get<std::string>();
  Task task = is_classifier(model) ? Task::discrimination : Task::regression;
  if (task_name == "regression") task = Task::regression;
  else if (task_name == "discrimination") task = Task::discrimination;
  else if (task_name != "auto") throw ConfigError("unknown task '" + task_name + "' (auto, discrimination, regression)");

  const auto report = evaluate(model, windows, task);
  Json out = to_json(report);

  Json checks = Json::array();
  bool passed = true;
  if (const auto min_acc = get_opt<double>(j, "min_accuracy")) {
    const bool ok = report.accuracy && *report.accuracy >= *min_acc;
    checks.push_back({{"name", "min_accuracy"}, {"limit", *min_acc}, {"passed", ok}});
    passed = passed && ok;
  }
  if (const auto max_rmse = get_opt<double>(j, "max_rmse")) {
    const bool ok = report.rmse_shore && *report.rmse_shore <= *max_rmse;
    checks.push_back({{"name", "max_rmse"}, {"limit", *max_rmse}, {"passed", ok}});
    passed = passed && ok;
  }
  out["acceptance"] = {{"checks", checks}, {"passed", passed}};

  if (const auto csv = get_opt<std::string>(j, "csv")) {
    std::string text = "object,true_shore,prediction\n";
    for (const auto& [name, obj] : report.per_object)
      for (double p : obj.predictions) text += name + "," + Json(obj.true_shore).dump() + "," + Json(p).dump() + "\n";
    emit_text(*csv, text);
  }
  emit_text(get_opt<std::string>(j, "out"), stamp(out, "eval", j).dump(2) + "\n");
  return passed ? kExitOk : kExitAcceptance;
}

// ---------------------------------------------------------------- stream

int cmd_stream(const Json& j) {
  const auto data = load_dataset(require_path(j, "data"));
  const auto model = stiffness_model_from_json(read_json_file(require_path(j, "model")));
  const Detector detector = [&]() -> Detector {
    if (const auto path = get_opt<std::string>(j, "detector")) return detector_from_json(read_json_file(*path));
    return calibrated_threshold(data.manifest.synth, data.manifest.synth.seed);
  }();
  PipelineConfig cfg;
  cfg.spec = data.manifest.windows;
  cfg.paced = j.at("paced").get<bool>();

  auto traces = data.traces;
  const auto limit = j.at("limit").get<std::size_t>();
  if (limit > 0 && traces.size() > limit) traces.resize(limit);
  const auto corpus = run_corpus(traces, detector, model, cfg);

  std::string text;
  for (const auto& g : corpus.grasps) text += to_json(g).dump() + "\n";
  Json summary = {{"grasps", corpus.grasps.size()},
                  {"detected", corpus.detected},
                  {"predicted", corpus.predicted},
                  {"fraction_within_budget", corpus.fraction_within_budget},
                  {"inference", to_json(corpus.inference)}};
  bool passed = true;
  if (const auto min_within = get_opt<double>(j, "min_within_budget")) {
    passed = corpus.fraction_within_budget >= *min_within;
    summary["acceptance"] = {{"min_within_budget", *min_within}, {"passed", passed}};
  }
  text += Json{{"summary", stamp(summary, "stream", j)}}.dump() + "\n";
  emit_text(get_opt<std::string>(j, "out"), text);
  return passed ? kExitOk : kExitAcceptance;
}

// ---------------------------------------------------------------- bench

int cmd_bench(const Json& j) {
  const auto model = stiffness_model_from_json(read_json_file(require_path(j, "model")));
  const auto stats = bench_inference(model, j.at("trials").get<std::size_t>(), j.at("seed").get<std::uint64_t>());
  Json out = to_json(stats);
  bool passed = true;
  if (const auto max_mean = get_opt<double>(j, "max_mean_ms")) {
    passed = stats.mean_ms <= *max_mean;
    out["acceptance"] = {{"max_mean_ms", *max_mean}, {"passed", passed}};
  }
  emit_text(get_opt<std::string>(j, "out"), stamp(out, "bench", j).dump(2) + "\n");
  return passed ? kExitOk : kExitAcceptance;
}

// ---------------------------------------------------------------- wire

int cmd_wire_encode(const Json& j) {
  const auto data = load_dataset(require_path(j, "data"));
  const auto index = j.at("trace").get<std::size_t>();
  if (index >= data.traces.size())
    throw ConfigError("trace index " + std::to_string(index) + " out of range (dataset has " +
                      std::to_string(data.traces.size()) + ")");
  emit_bytes(j.at("out").get<std::string>(), wire::stream_trace(data.traces[index], data.manifest.synth.adc()));
  return kExitOk;
}

int cmd_wire_decode(const Json& j) {
  const auto bytes = read_bytes(j.at("in").get<std::string>());
  wire::FrameParser parser;
  const auto frames = parser.feed(bytes);
  std::string text = "seq,timestamp_us,piezo";
  for (std::size_t c = 0; c < kForceChannels; ++c) text += ",force" + std::to_string(c);
  text += "\n";
  for (const auto& f : frames) {
    text += std::to_string(f.seq) + "," + std::to_string(f.timestamp_us) + "," + std::to_string(f.piezo);
    for (auto v : f.force) text += "," + std::to_string(v);
    text += "\n";
  }
  emit_text(j.at("out").get<std::string>(), text);
  const Json counters = stamp(to_json(parser.state()), "wire decode", j);
  if (const auto report = get_opt<std::string>(j, "report"))
    emit_text(*report, counters.dump(2) + "\n");
  else
    std::cerr << counters.dump() << "\n";
  return kExitOk;
}

int cmd_wire_fuzz(const Json& j) {
  const auto frames = j.at("frames").get<std::size_t>();
  const auto corruptions = j.at("corruptions").get<std::size_t>();
  const auto r = wire::fuzz(frames, corruptions, j.at("seed").get<std::uint64_t>());
  const std::size_t lost = r.frames_sent - r.frames_decoded;
  // A single corrupted byte may cost its own frame and one more while re-locking.
  const bool passed = lost <= 2 * r.corruptions;
  Json out = {{"frames_sent", r.frames_sent},
              {"frames_decoded", r.frames_decoded},
              {"corruptions", r.corruptions},
              {"frames_lost", lost},
              {"counters", to_json(r.counters)},
              {"acceptance", {{"max_lost", 2 * r.corruptions}, {"passed", passed}}}};
  emit_text(get_opt<std::string>(j, "out"), stamp(out, "wire fuzz", j).dump(2) + "\n");
  return passed ? kExitOk : kExitAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shore A estimation from grasp vibration: synthesis, training, evaluation, streaming and wire tools"};
  app.footer(
      "Exit codes: 0 success, 1 internal error, 2 configuration error, 3 data error, 4 acceptance check failed.");
  app.require_subcommand(1);
  std::vector<std::unique_ptr<Command>> commands;
  std::map<const CLI::App*, std::function<int(const Json&)>> handlers;

  {
    auto& c = add_command(commands, app, "synth", "Generate a labelled grasp dataset");
    c.option<std::string>("preset", "paper-blocks", "scenario preset: paper-blocks or real-objects");
    c.option<std::uint64_t>("seed", 7, "random seed");
    c.option<std::size_t>("pinches", nullptr, "pinches per scenario (500 for paper-blocks, 50 for real-objects)");
    c.option<std::string>("out", "dataset", "output directory");
    c.section("synth");
    c.section("windows");
    handlers[c.app] = cmd_synth;
  }
  {
    auto& c = add_command(commands, app, "train", "Train a stiffness model or an SVM contact detector");
    c.option<std::string>("data", nullptr, "dataset directory");
    c.option<std::string>("model", "svr", "svc, svr, cnn-classifier, cnn-regressor or svm-detector");
    c.option<std::uint64_t>("seed", 0, "split and initialization seed");
    c.flag("grid", false, "grid-search C and gamma (kernel models)");
    c.option<double>("validation_fraction", 0.1, "held-out fraction");
    c.option<double>("c_penalty", 10.0, "SVM C");
    c.option<double>("gamma", nullptr, "RBF gamma; 1/(dim*var) when unset");
    c.option<double>("epsilon", 1.0, "SVR tube half-width in Shore A");
    c.flag("bursts", true, "svm-detector: inject noise bursts before training");
    c.option<std::string>("out", "model.json", "model file");
    c.option<std::string>("log", nullptr, "training log (default <out>.log.json)");
    c.section("schedule");
    handlers[c.app] = cmd_train;
  }
  {
    auto& c = add_command(commands, app, "eval", "Evaluate a stiffness model on a dataset");
    c.option<std::string>("data", nullptr, "dataset directory");
    c.option<std::string>("model", nullptr, "model file");
    c.option<std::string>("holdout", nullptr, "training log; restricts evaluation to its held-out traces");
    c.option<std::string>("task", "auto", "auto, discrimination or regression");
    c.option<std::string>("out", nullptr, "report file (stdout when unset)");
    c.option<std::string>("csv", nullptr, "per-object predictions as CSV");
    c.option<double>("min_accuracy", nullptr, "fail with exit 4 below this accuracy");
    c.option<double>("max_rmse", nullptr, "fail with exit 4 above this RMSE");
    handlers[c.app] = cmd_eval;
  }
  {
    auto& c = add_command(commands, app, "stream", "Replay traces through the streaming pipeline");
    c.option<std::string>("data", nullptr, "dataset directory");
    c.option<std::string>("model", nullptr, "stiffness model file");
    c.option<std::string>("detector", nullptr, "detector file; calibrated threshold when unset");
    c.option<std::size_t>("limit", 0, "replay at most this many traces (0 = all)");
    c.flag("paced", false, "sleep to real time between samples");
    c.option<std::string>("out", nullptr, "JSON-lines output (stdout when unset)");
    c.option<double>("min_within_budget", nullptr, "fail with exit 4 below this fraction");
    handlers[c.app] = cmd_stream;
  }
  {
    auto& c = add_command(commands, app, "bench", "Measure single-window inference latency");
    c.option<std::string>("model", nullptr, "model file");
    c.option<std::size_t>("trials", 10000, "model calls, the first 10% are warm-up");
    c.option<std::uint64_t>("seed", 0, "window generator seed");
    c.option<std::string>("out", nullptr, "report file (stdout when unset)");
    c.option<double>("max_mean_ms", nullptr, "fail with exit 4 above this mean latency");
    handlers[c.app] = cmd_bench;
  }
  {
    CLI::App* wire_app = app.add_subcommand("wire", "Serial frame tools");
    wire_app->require_subcommand(1);
    auto& e = add_command(commands, *wire_app, "encode", "Encode one dataset trace as a frame stream");
    e.option<std::string>("data", nullptr, "dataset directory");
    e.option<std::size_t>("trace", 0, "trace index");
    e.option<std::string>("out", "-", "output file, - for stdout");
    handlers[e.app] = cmd_wire_encode;
    auto& d = add_command(commands, *wire_app, "decode", "Decode a frame stream to CSV");
    d.option<std::string>("in", "-", "input file, - for stdin");
    d.option<std::string>("out", "-", "CSV output, - for stdout");
    d.option<std::string>("report", nullptr, "parser counters as JSON (stderr when unset)");
    handlers[d.app] = cmd_wire_decode;
    auto& f = add_command(commands, *wire_app, "fuzz", "Corrupt random streams and count surviving frames");
    f.option<std::size_t>("frames", 10000, "frames to send");
    f.option<std::size_t>("corruptions", 100, "single-byte corruptions, each in a different frame");
    f.option<std::uint64_t>("seed", 0, "random seed");
    f.option<std::string>("out", nullptr, "report file (stdout when unset)");
    handlers[f.app] = cmd_wire_fuzz;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    for (const auto& c : commands) {
      if (!c->app->parsed()) continue;
      return handlers.at(c->app)(c->resolve());
    }
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}
