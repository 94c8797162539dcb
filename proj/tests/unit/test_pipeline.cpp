#include <doctest.h>

#include <stdexcept>
#include <vector>

#include "firstcontact/pipeline.hpp"
#include "firstcontact/workflow.hpp"
#include "gen.hpp"

using namespace firstcontact;

namespace {

SynthConfig quiet() {
  SynthConfig c;
  c.noise_std_v = 0.0;
  c.amp_jitter_sigma = 0.0;
  c.damping_jitter = 0.0;
  c.lead_jitter_ms = 0.0;
  return c;
}

// Regressor with no support vectors: predicts target.mean everywhere.
StiffnessModel constant_model(double shore) {
  KernelModel m;
  m.kind = KernelModel::Kind::regressor;
  m.input_len = WindowSpec{}.stiffness_len();
  m.target = {shore, 1.0};
  return m;
}

const StiffnessModel& trained_svr() {
  static const StiffnessModel model = [] {
    const SynthConfig cfg;
    Rng rng(41);
    const auto traces = make_dataset(cfg, paper_blocks(), 40, rng);
    TrainOptions opts;
    opts.seed = 42;
    return train_stiffness(ModelKind::svr, corpus_windows(traces, cfg, WindowSpec{}), opts).model;
  }();
  return model;
}

GraspTrace grasp(double shore, double gap_ms, std::uint64_t seed) {
  SynthConfig c = quiet();
  c.delta_mean_ms = gap_ms;
  c.delta_std_ms = 0.0;
  Rng rng(seed);
  return synthesize_grasp(c, StiffnessLabel(shore), rng);
}

}  // namespace

TEST_CASE("a wide gap leaves room for an accurate estimate") {
  const auto t = grasp(60, 30.0, 43);
  const Detector d = calibrated_threshold(quiet(), 44);
  const auto r = run_grasp(t, d, trained_svr());
  REQUIRE(r.detection.detected);
  REQUIRE(r.predicted_shore.has_value());
  CHECK(std::abs(*r.predicted_shore - 60.0) <= 5.0);
  CHECK(r.ledger.within_budget);
  CHECK(r.ledger.budget_ms == doctest::Approx(t.gap_ms()));
  CHECK(r.true_shore == 60.0);
}

TEST_CASE("a 2 ms gap cannot be met") {
  const auto t = grasp(43, 2.0, 45);
  const Detector d = calibrated_threshold(quiet(), 46);
  const auto r = run_grasp(t, d, constant_model(43));
  CHECK(r.predicted_shore.has_value());
  CHECK_FALSE(r.ledger.within_budget);
  CHECK(r.ledger.total_ms > r.ledger.budget_ms);
}

TEST_CASE("no contact means no prediction") {
  const SynthConfig c;
  Rng rng(47);
  GraspTrace t;
  t.vibration = synthesize_idle(c, 3000, rng);
  for (auto& f : t.force) f.assign(t.vibration.size(), 0.0);
  t.t_contact1 = 2900;
  t.t_contact2 = 2950;
  const Detector d = calibrated_threshold(c, 48);
  const auto r = run_grasp(t, d, constant_model(20));
  CHECK_FALSE(r.detection.detected);
  CHECK_FALSE(r.predicted_shore.has_value());
  CHECK_FALSE(r.ledger.within_budget);
}

TEST_CASE("ledger adds up and the collection time is the window length") {
  const SynthConfig cfg;
  const Detector d = calibrated_threshold(cfg, 49);
  const auto model = constant_model(29);
  gen::for_cases(50, 20, [&](gen::Source& g, int) {
    Rng rng(g.engine()());
    const auto t = synthesize_grasp(cfg, StiffnessLabel(g.uniform(5, 90)), rng);
    const auto r = run_grasp(t, d, model);
    const auto& l = r.ledger;
    CHECK(l.total_ms == doctest::Approx(l.detect_lag_ms + l.collect_ms + l.inference_ms));
    CHECK(l.collect_ms == doctest::Approx(74.0 * 1000.0 / 4936.0));
    CHECK(l.inference_ms >= 0.0);
    if (r.predicted_shore) CHECK(*r.predicted_shore == 29.0);
    CHECK(l.within_budget == (r.predicted_shore.has_value() && l.total_ms <= l.budget_ms));
  });
}

TEST_CASE("samples after the estimate do not matter") {
  const SynthConfig cfg;
  const Detector d = calibrated_threshold(cfg, 51);
  Rng rng(52);
  const auto t = synthesize_grasp(cfg, StiffnessLabel(35), rng);
  const auto full = run_grasp(t, d, trained_svr());
  REQUIRE(full.detection.detect_index.has_value());
  const std::size_t end = *full.detection.detect_index + WindowSpec{}.stiffness_len() + 1;
  GraspTrace cut = t;
  cut.vibration.resize(end);
  for (auto& f : cut.force) f.resize(end);
  const auto r = run_grasp(cut, d, trained_svr());
  CHECK(r.detection.detect_index == full.detection.detect_index);
  CHECK(r.predicted_shore == full.predicted_shore);
}

TEST_CASE("streaming pipeline phases") {
  const SynthConfig cfg = quiet();
  const Detector d = calibrated_threshold(cfg, 53);
  const auto model = constant_model(10);
  const auto t = grasp(20, 30.0, 54);
  StreamingPipeline p(d, model);
  std::array<double, kForceChannels> f{};
  std::size_t k = 0;
  while (k < t.size() && !p.push(t.vibration[k], f)) ++k;
  CHECK(p.done());
  REQUIRE(p.detection().detect_index.has_value());
  CHECK(p.consumed() == *p.detection().detect_index + WindowSpec{}.stiffness_len());
  CHECK(p.prediction() == 10.0);
}

TEST_CASE("corpus runs are deterministic apart from wall-clock inference time") {
  const SynthConfig cfg;
  Rng rng(55);
  const auto traces = make_dataset(cfg, paper_blocks(), 3, rng);
  const Detector d = calibrated_threshold(cfg, 56);
  const auto a = run_corpus(traces, d, trained_svr());
  const auto b = run_corpus(traces, d, trained_svr());
  REQUIRE(a.grasps.size() == traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    CHECK(a.grasps[i].detection.detect_index == b.grasps[i].detection.detect_index);
    CHECK(a.grasps[i].predicted_shore == b.grasps[i].predicted_shore);
  }
  CHECK(a.detected == traces.size());
  CHECK(a.inference.samples == a.predicted);
}

TEST_CASE("bench") {
  CHECK_THROWS_AS((void)bench_inference(constant_model(1), 0), std::invalid_argument);
  const auto s = bench_inference(trained_svr(), 200, 57);
  CHECK(s.samples == 180);
  CHECK(s.mean_ms > 0.0);
}

TEST_CASE("nearest-rank p99") {
  std::vector<double> v(100);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(100 - i);
  const auto s = summarize_latency(v);
  CHECK(s.p99_ms == 99.0);
  CHECK(s.mean_ms == doctest::Approx(50.5));
  CHECK(summarize_latency({}).samples == 0);
}
