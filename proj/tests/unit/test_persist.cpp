#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "firstcontact/persist.hpp"
#include "firstcontact/workflow.hpp"
#include "gen.hpp"

using namespace firstcontact;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("fc_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

DatasetManifest manifest_for(const SynthConfig& cfg, std::size_t pinches, std::uint64_t seed, std::size_t n) {
  DatasetManifest m;
  m.preset = "paper-blocks";
  m.synth = cfg;
  m.scenarios = paper_blocks();
  m.pinches_per_label = pinches;
  m.seed = seed;
  m.trace_count = n;
  return m;
}

}  // namespace

TEST_CASE("configs round trip and reject unknown keys") {
  SynthConfig c;
  c.delta_mean_ms = 21.5;
  c.noise_std_v = 0.004;
  const auto back = synth_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));

  Json j = to_json(c);
  j["delta_mean"] = 3;
  CHECK_THROWS_AS((void)synth_config_from_json(j), ConfigError);
  CHECK_THROWS_AS((void)synth_config_from_json(Json{{"delta_mean_ms", "fast"}}), ConfigError);
  CHECK(synth_config_from_json(Json::object()).delta_mean_ms == SynthConfig{}.delta_mean_ms);

  TrainSchedule s;
  s.epochs = 7;
  s.restore_best = false;
  const auto sb = train_schedule_from_json(to_json(s));
  CHECK(sb.epochs == 7);
  CHECK_FALSE(sb.restore_best);
  CHECK_THROWS_AS((void)train_schedule_from_json(Json{{"learning_rate", 1}}), ConfigError);

  WindowSpec w;
  CHECK(window_spec_from_json(to_json(w)).stiffness_len() == 74);
}

TEST_CASE("config hash is stable and sensitive") {
  const Json a = to_json(SynthConfig{});
  CHECK(config_hash(a) == config_hash(to_json(SynthConfig{})));
  CHECK(config_hash(a).size() == 16);
  SynthConfig c;
  c.seed = 99;
  CHECK(config_hash(to_json(c)) != config_hash(a));
}

TEST_CASE("dataset round trip is exact and byte-stable") {
  const SynthConfig cfg;
  Rng r1(61);
  const auto traces = make_dataset(cfg, paper_blocks(), 2, r1);
  const auto m = manifest_for(cfg, 2, 61, traces.size());
  TempDir a("ds_a");
  TempDir b("ds_b");
  save_dataset(a.path, m, traces);
  save_dataset(b.path, m, traces);
  for (const char* f : {"manifest.json", "traces.bin", "labels.csv"}) {
    REQUIRE(fs::exists(a.path / f));
    CHECK(slurp(a.path / f) == slurp(b.path / f));
  }
  const auto loaded = load_dataset(a.path);
  CHECK(loaded.traces == traces);
  CHECK(loaded.manifest.trace_count == traces.size());
  CHECK(loaded.manifest.preset == "paper-blocks");
  CHECK(loaded.manifest.scenarios.size() == 5);
  const auto csv = slurp(a.path / "labels.csv");
  CHECK(csv.rfind("trace_id,source,shore_a,t_contact1,t_contact2,samples\n", 0) == 0);
}

TEST_CASE("corrupt datasets raise DataError") {
  const SynthConfig cfg;
  Rng rng(62);
  const auto traces = make_dataset(cfg, paper_blocks(), 1, rng);
  TempDir d("ds_bad");
  save_dataset(d.path, manifest_for(cfg, 1, 62, traces.size()), traces);

  const auto bin = d.path / "traces.bin";
  auto bytes = slurp(bin);
  {
    auto bad = bytes;
    bad[0] = 'X';
    std::ofstream(bin, std::ios::binary | std::ios::trunc) << bad;
    CHECK_THROWS_AS((void)load_dataset(d.path), DataError);
  }
  {
    std::ofstream(bin, std::ios::binary | std::ios::trunc) << bytes.substr(0, bytes.size() / 2);
    CHECK_THROWS_AS((void)load_dataset(d.path), DataError);
  }
  std::ofstream(bin, std::ios::binary | std::ios::trunc) << bytes;
  CHECK_NOTHROW((void)load_dataset(d.path));
  fs::remove(d.path / "manifest.json");
  CHECK_THROWS_AS((void)load_dataset(d.path), DataError);
  CHECK_THROWS_AS((void)load_dataset(d.path / "missing"), DataError);
}

TEST_CASE("models round trip through JSON with identical predictions") {
  const SynthConfig cfg;
  Rng rng(63);
  const auto traces = make_dataset(cfg, paper_blocks(), 6, rng);
  const auto data = corpus_windows(traces, cfg, WindowSpec{});
  TrainOptions opts;
  opts.seed = 64;
  opts.schedule.epochs = 1;
  TempDir dir("models");
  for (auto kind : {ModelKind::svc, ModelKind::svr, ModelKind::cnn_classifier, ModelKind::cnn_regressor}) {
    CAPTURE(model_kind_name(kind));
    const auto model = train_stiffness(kind, data, opts).model;
    const auto path = dir.path / (std::string(model_kind_name(kind)) + ".json");
    write_json_file(path, to_json(model));
    const auto back = stiffness_model_from_json(read_json_file(path));
    CHECK(is_classifier(back) == is_classifier(model));
    for (const auto& w : data.windows) CHECK(predict_value(back, w) == predict_value(model, w));
  }
}

TEST_CASE("detectors round trip") {
  const SynthConfig cfg;
  const auto thr = calibrated_threshold(cfg, 65);
  const auto back = detector_from_json(to_json(Detector{thr}));
  REQUIRE(std::holds_alternative<ThresholdDetector>(back));
  const auto& t = std::get<ThresholdDetector>(back);
  CHECK(t.baseline.mean_v == thr.baseline.mean_v);
  CHECK(t.baseline.sigma_v == thr.baseline.sigma_v);
  CHECK(t.threshold_v() == thr.threshold_v());

  Rng rng(66);
  const auto traces = make_dataset(cfg, paper_blocks(), 4, rng);
  const auto svm = train_svm_detector(detection_windows(traces, WindowSpec{}, rng), thr.baseline);
  const auto sback = detector_from_json(to_json(Detector{svm}));
  REQUIRE(std::holds_alternative<SvmDetector>(sback));
  for (const auto& tr : traces) {
    const auto y = condition_vibration(tr.vibration);
    CHECK(detect(y, sback, WindowSpec{}).detect_index == detect(y, Detector{svm}, WindowSpec{}).detect_index);
  }
  CHECK_THROWS_AS((void)detector_from_json(Json{{"type", "oracle"}}), DataError);
}

TEST_CASE("malformed model JSON is rejected") {
  CHECK_THROWS_AS((void)stiffness_model_from_json(Json{{"type", "forest"}}), DataError);
  CHECK_THROWS_AS((void)stiffness_model_from_json(Json::array()), DataError);
  TempDir d("bad_json");
  std::ofstream(d.path / "m.json") << "{not json";
  CHECK_THROWS_AS((void)read_json_file(d.path / "m.json"), DataError);
}

TEST_CASE("report JSON carries the ledger") {
  GraspReport r;
  r.trace_id = 3;
  r.source = "block-20";
  r.predicted_shore = 21.0;
  r.ledger.total_ms = 17.5;
  r.ledger.within_budget = true;
  const auto j = to_json(r);
  CHECK(j.at("trace_id") == 3);
  CHECK(j.at("ledger").at("total_ms") == 17.5);
  CHECK(j.at("ledger").at("within_budget") == true);
}
