#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "firstcontact/detect.hpp"
#include "firstcontact/features.hpp"
#include "gen.hpp"

using namespace firstcontact;

TEST_CASE("baseline calibration") {
  CHECK_THROWS_AS((void)calibrate_baseline(std::vector<double>(99, 1.0)), std::invalid_argument);
  std::vector<double> seg(100);
  for (std::size_t i = 0; i < seg.size(); ++i) seg[i] = i % 2 == 0 ? 1.0 : 3.0;
  const auto b = calibrate_baseline(seg);
  CHECK(b.mean_v == doctest::Approx(2.0));
  // 100 deviations of magnitude 1 -> unbiased variance 100 / 99.
  CHECK(b.sigma_v == doctest::Approx(std::sqrt(100.0 / 99.0)));
  CHECK(b.n_samples == 100);
}

TEST_CASE("threshold level is the larger of k sigma and the floor") {
  ThresholdDetector d;
  d.baseline = {1.65, 0.001, 200};
  d.floor_v = 0.005;
  CHECK(d.threshold_v() == 0.005);
  d.baseline.sigma_v = 0.01;
  CHECK(d.threshold_v() == doctest::Approx(0.03));
}

TEST_CASE("threshold detector flags the first deviating sample in the new region") {
  const WindowSpec spec;
  ThresholdDetector d;
  d.baseline = {0.0, 0.001, 200};
  std::vector<double> s(1000, 0.0);
  for (std::size_t k = 517; k < s.size(); ++k) s[k] = 0.5;
  const auto r = detect_threshold(s, d, spec);
  CHECK(r.detected);
  REQUIRE(r.detect_index.has_value());
  CHECK(*r.detect_index == 517);
  CHECK(r.method == DetectMethod::threshold);
  // Windows end at 98, 113, ...; the first containing 517 ends at 518.
  CHECK(r.windows_scanned == (518 - 98) / 15 + 1);

  const std::vector<double> flat(1000, 0.0);
  const auto none = detect_threshold(flat, d, spec);
  CHECK_FALSE(none.detected);
  CHECK_FALSE(none.detect_index.has_value());
}

TEST_CASE("detection is causal: truncating after the detection changes nothing") {
  const SynthConfig cfg;
  const WindowSpec spec;
  const auto thr = calibrated_threshold(cfg, 3);
  gen::for_cases(4, 20, [&](gen::Source& g, int) {
    Rng rng(g.engine()());
    const auto t = synthesize_grasp(cfg, StiffnessLabel(g.uniform(5, 70)), rng);
    const auto y = condition_vibration(t.vibration);
    const auto full = detect_threshold(y, thr, spec);
    REQUIRE(full.detected);
    // The scan needs the whole window that contained the detection.
    const std::size_t end = *full.detect_index + spec.new_len();
    const std::vector<double> prefix(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(std::min(end + 1, y.size())));
    const auto cut = detect_threshold(prefix, thr, spec);
    CHECK(cut.detect_index == full.detect_index);
  });
}

TEST_CASE("idle vibration does not trigger the calibrated threshold") {
  const SynthConfig cfg;
  const WindowSpec spec;
  const auto thr = calibrated_threshold(cfg, 5);
  Rng rng(6);
  const auto idle = condition_vibration(synthesize_idle(cfg, 20000, rng));
  CHECK_FALSE(detect_threshold(idle, thr, spec).detected);
}

TEST_CASE("svm detector rejects a model trained on another window length") {
  const WindowSpec spec;
  SvmDetector d;
  d.model.input_len = 50;
  CHECK_THROWS_AS((void)detect_svm(std::vector<double>(500, 0.0), d, spec), std::invalid_argument);
}

TEST_CASE("detection training windows") {
  const SynthConfig cfg;
  const WindowSpec spec;
  Rng rng(7);
  const auto traces = make_dataset(cfg, paper_blocks(), 4, rng);
  const auto data = detection_windows(traces, spec, rng);
  REQUIRE(data.windows.size() == 2 * traces.size());
  for (std::size_t i = 0; i < data.windows.size(); ++i) {
    CHECK(data.windows[i].size() == spec.detect_len());
    CHECK(data.labels[i] == (i % 2 == 0 ? 0.0 : 1.0));
  }
}

TEST_CASE("svm detector separates contact from bursts") {
  const SynthConfig cfg;
  const WindowSpec spec;
  Rng rng(8);
  auto train = make_dataset(cfg, paper_blocks(), 40, rng);
  inject_burst_corpus(train, cfg, rng);
  const auto thr = calibrated_threshold(cfg, 9);
  const auto svm = train_svm_detector(detection_windows(train, spec, rng), thr.baseline);
  CHECK(svm.model.preprocess.center == Preprocess::Center::fixed);
  CHECK(svm.model.preprocess.center_value == thr.baseline.mean_v);

  auto test = make_dataset(cfg, paper_blocks(), 20, rng);
  inject_burst_corpus(test, cfg, rng);
  std::vector<DetectionResult> results;
  for (const auto& t : test) results.push_back(detect(condition_vibration(t.vibration), Detector{svm}, spec));
  const auto score = score_detections(results, test);
  CHECK(score.accuracy >= 0.98);
  CHECK(score.mean_lag_ms <= 5.0);
}

TEST_CASE("detection scoring") {
  GraspTrace t;
  t.t_contact1 = 1000;
  t.t_contact2 = 1100;
  t.sample_rate_hz = 1000.0;  // one sample per ms
  const std::vector<GraspTrace> traces(5, t);
  std::vector<DetectionResult> r(5);
  r[0] = {true, 1003, DetectMethod::threshold, 1};  // TP, lag 3 ms
  r[1] = {true, 1005, DetectMethod::threshold, 1};  // TP at the tolerance edge
  r[2] = {true, 1006, DetectMethod::threshold, 1};  // late -> FP
  r[3] = {true, 990, DetectMethod::threshold, 1};   // early -> FP
  r[4] = {};                                        // missed -> FN
  const auto s = score_detections(r, traces);
  CHECK(s.true_positive == 2);
  CHECK(s.false_positive == 2);
  CHECK(s.false_negative == 1);
  CHECK(s.accuracy == doctest::Approx(0.4));
  CHECK(s.mean_lag_ms == doctest::Approx(4.0));
  CHECK_THROWS_AS((void)score_detections(std::span(r).first(2), traces), std::invalid_argument);
}

TEST_CASE("burst corpus leaves the contact region untouched") {
  SynthConfig cfg;
  Rng rng(10);
  auto traces = make_dataset(cfg, paper_blocks(), 5, rng);
  const auto before = traces;
  inject_burst_corpus(traces, cfg, rng);
  const std::size_t guard = ms_to_samples(10.0, cfg.sample_rate_hz);
  for (std::size_t i = 0; i < traces.size(); ++i)
    for (std::size_t k = traces[i].t_contact1 - guard; k < traces[i].size(); ++k)
      CHECK(traces[i].vibration[k] == before[i].vibration[k]);
}

TEST_CASE("aligned onset sits just after contact") {
  const SynthConfig cfg;
  const auto thr = calibrated_threshold(cfg, 11);
  Rng rng(12);
  for (const auto& t : make_dataset(cfg, paper_blocks(), 10, rng)) {
    const auto k = aligned_onset(condition_vibration(t.vibration), t, thr);
    CHECK(k >= t.t_contact1);
    CHECK(k <= t.t_contact1 + 3);
  }
}
