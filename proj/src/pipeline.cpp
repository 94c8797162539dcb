#include "firstcontact/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace firstcontact {

StreamingPipeline::StreamingPipeline(const Detector& detector, const StiffnessModel& model, PipelineConfig cfg)
    : detector_(detector),
      model_(model),
      cfg_(cfg),
      detect_len_(cfg.spec.detect_len()),
      hop_(cfg.spec.new_len()),
      collect_len_(cfg.spec.stiffness_len()),
      smoother_(cfg.alpha),
      ring_(detect_len_, 0.0) {
  cfg_.spec.validate();
  if (input_len(model) != collect_len_)
    throw std::invalid_argument("StreamingPipeline: model expects " + std::to_string(input_len(model)) +
                                " samples, stiffness window has " + std::to_string(collect_len_));
  for (std::size_t ch = 0; ch < kForceChannels; ++ch) force_avg_.emplace_back(cfg.force_window);
  detection_.method = std::holds_alternative<SvmDetector>(detector) ? DetectMethod::svm : DetectMethod::threshold;
}

bool StreamingPipeline::push(double vibration_v, const std::array<double, kForceChannels>& force_v) {
  if (phase_ == Phase::done) return true;
  const double y = smoother_.push(vibration_v);
  force_now_ = 0.0;
  for (std::size_t ch = 0; ch < kForceChannels; ++ch) force_now_ = std::max(force_now_, force_avg_[ch].push(force_v[ch]));
  const std::size_t index = consumed_++;
  ring_[index % detect_len_] = y;

  if (phase_ == Phase::scanning) {
    if (index + 1 < detect_len_ || (index + 1 - detect_len_) % hop_ != 0) return false;
    std::vector<double> window(detect_len_);
    for (std::size_t k = 0; k < detect_len_; ++k) window[k] = ring_[(index + 1 + k) % detect_len_];
    ++detection_.windows_scanned;
    const auto off = std::visit([&](const auto& d) { return d.check(window, hop_); }, detector_);
    if (!off) return false;
    const std::size_t window_start = index + 1 - detect_len_;
    detection_.detected = true;
    detection_.detect_index = window_start + *off;
    collected_.assign(window.begin() + static_cast<std::ptrdiff_t>(*off), window.end());
    phase_ = Phase::collecting;
  } else {
    collected_.push_back(y);
  }

  if (collected_.size() < collect_len_) return false;
  collected_.resize(collect_len_);
  const Prediction p = predict(model_, collected_);
  prediction_ = p.value;
  inference_ms_ = p.elapsed_ms;
  force_at_estimate_ = force_now_;
  phase_ = Phase::done;
  return true;
}

GraspReport run_grasp(const GraspTrace& trace, const Detector& detector, const StiffnessModel& model,
                      const PipelineConfig& cfg) {
  StreamingPipeline pipe(detector, model, cfg);
  const auto start = std::chrono::steady_clock::now();
  std::array<double, kForceChannels> force{};
  for (std::size_t k = 0; k < trace.size(); ++k) {
    if (cfg.paced)
      std::this_thread::sleep_until(start + std::chrono::duration<double>(static_cast<double>(k) / trace.sample_rate_hz));
    for (std::size_t ch = 0; ch < kForceChannels; ++ch) force[ch] = trace.force[ch][k];
    if (pipe.push(trace.vibration[k], force)) break;
  }

  GraspReport r;
  r.trace_id = trace.trace_id;
  r.source = trace.source;
  r.detection = pipe.detection();
  r.true_shore = trace.label.shore_a();
  r.predicted_shore = pipe.prediction();
  r.force_at_estimate_v = pipe.force_at_estimate_v();

  const double to_ms = 1000.0 / trace.sample_rate_hz;
  LatencyLedger& l = r.ledger;
  l.budget_ms = static_cast<double>(trace.t_contact2 - trace.t_contact1) * to_ms;
  l.collect_ms = static_cast<double>(cfg.spec.stiffness_len()) * to_ms;
  if (r.detection.detect_index)
    l.detect_lag_ms = (static_cast<double>(*r.detection.detect_index) - static_cast<double>(trace.t_contact1)) * to_ms;
  l.inference_ms = pipe.inference_ms();
  l.total_ms = l.detect_lag_ms + l.collect_ms + l.inference_ms;
  l.within_budget = r.predicted_shore.has_value() && l.total_ms <= l.budget_ms;
  return r;
}

CorpusReport run_corpus(const std::vector<GraspTrace>& traces, const Detector& detector, const StiffnessModel& model,
                        const PipelineConfig& cfg) {
  CorpusReport c;
  std::vector<double> elapsed;
  std::size_t within = 0;
  for (const auto& t : traces) {
    GraspReport r = run_grasp(t, detector, model, cfg);
    c.detected += r.detection.detected;
    if (r.predicted_shore) {
      ++c.predicted;
      elapsed.push_back(r.ledger.inference_ms);
    }
    within += r.ledger.within_budget;
    c.grasps.push_back(std::move(r));
  }
  c.fraction_within_budget = traces.empty() ? 0.0 : static_cast<double>(within) / static_cast<double>(traces.size());
  c.inference = summarize_latency(std::move(elapsed));
  return c;
}

InferenceStats bench_inference(const StiffnessModel& model, std::size_t n_trials, std::uint64_t seed) {
  if (n_trials == 0) throw std::invalid_argument("bench_inference: n_trials must be positive");
  const std::size_t len = input_len(model);
  Rng rng(derive_seed(seed, 0x62656E6368));
  std::uniform_real_distribution<double> volts(1.15, 2.15);
  const std::size_t warmup = n_trials / 10;
  std::vector<double> elapsed;
  elapsed.reserve(n_trials - warmup);
  std::vector<double> window(len);
  volatile double sink = 0.0;
  for (std::size_t i = 0; i < n_trials; ++i) {
    for (double& v : window) v = volts(rng);
    const Prediction p = predict(model, window);
    sink = sink + p.value;
    if (i >= warmup) elapsed.push_back(p.elapsed_ms);
  }
  return summarize_latency(std::move(elapsed));
}

}  // namespace firstcontact
