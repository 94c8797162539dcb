#include "firstcontact/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace firstcontact {

BaselineStats calibrate_baseline(std::span<const double> steady_segment) {
  if (steady_segment.size() < kMinBaselineSamples)
    throw std::invalid_argument("calibrate_baseline: need at least " + std::to_string(kMinBaselineSamples) +
                                " samples, got " + std::to_string(steady_segment.size()));
  const double n = static_cast<double>(steady_segment.size());
  const double mean = std::accumulate(steady_segment.begin(), steady_segment.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : steady_segment) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0)), steady_segment.size()};
}

double ThresholdDetector::threshold_v() const { return std::max(multiplier * baseline.sigma_v, floor_v); }

std::optional<std::size_t> ThresholdDetector::check(std::span<const double> window, std::size_t new_len) const {
  const double thr = threshold_v();
  const std::size_t first = window.size() - std::min(new_len, window.size());
  for (std::size_t k = first; k < window.size(); ++k)
    if (std::abs(window[k] - baseline.mean_v) > thr) return k;
  return std::nullopt;
}

std::optional<std::size_t> SvmDetector::check(std::span<const double> window, std::size_t new_len) const {
  if (predict_value(model, window) < 0.5) return std::nullopt;
  const std::size_t end = window.size() - 1;
  if (!localize_onset) return end;
  const double thr = std::max(onset_multiplier * baseline.sigma_v, floor_v);
  const std::size_t first = window.size() - std::min(2 * new_len, window.size());
  for (std::size_t k = first; k < window.size(); ++k)
    if (std::abs(window[k] - baseline.mean_v) > thr) return k;
  return end;
}

std::vector<double> condition_vibration(std::span<const double> vibration, double alpha) {
  return exp_smooth(vibration, alpha);
}

namespace {

template <typename Check>
DetectionResult scan(std::span<const double> signal, const WindowSpec& spec, DetectMethod method, Check check) {
  spec.validate();
  DetectionResult r;
  r.method = method;
  const std::size_t len = spec.detect_len();
  const std::size_t hop = spec.new_len();
  for (std::size_t end = len - 1; end < signal.size(); end += hop) {
    ++r.windows_scanned;
    const auto window = signal.subspan(end + 1 - len, len);
    if (auto off = check(window, hop)) {
      r.detected = true;
      r.detect_index = end + 1 - len + *off;
      break;
    }
  }
  return r;
}

}  // namespace

DetectionResult detect_threshold(std::span<const double> signal, const ThresholdDetector& detector,
                                 const WindowSpec& spec) {
  return scan(signal, spec, DetectMethod::threshold,
              [&](std::span<const double> w, std::size_t hop) { return detector.check(w, hop); });
}

DetectionResult detect_svm(std::span<const double> signal, const SvmDetector& detector, const WindowSpec& spec) {
  if (detector.model.input_len != spec.detect_len())
    throw std::invalid_argument("detect_svm: model trained on " + std::to_string(detector.model.input_len) +
                                "-sample windows, spec gives " + std::to_string(spec.detect_len()));
  return scan(signal, spec, DetectMethod::svm,
              [&](std::span<const double> w, std::size_t hop) { return detector.check(w, hop); });
}

DetectionResult detect(std::span<const double> signal, const Detector& detector, const WindowSpec& spec) {
  return std::visit(
      [&](const auto& d) -> DetectionResult {
        if constexpr (std::is_same_v<std::decay_t<decltype(d)>, ThresholdDetector>)
          return detect_threshold(signal, d, spec);
        else
          return detect_svm(signal, d, spec);
      },
      detector);
}

DetectorTrainingSet detection_windows(const std::vector<GraspTrace>& traces, const WindowSpec& spec, Rng& rng,
                                      double alpha) {
  spec.validate();
  const std::size_t len = spec.detect_len();
  const std::size_t hop = spec.new_len();
  DetectorTrainingSet out;
  for (const auto& t : traces) {
    if (t.t_contact1 < len) continue;  // no room for a contact-free window
    const auto y = condition_vibration(t.vibration, alpha);
    // Negative: window ends strictly before contact.
    const std::size_t neg_end = std::uniform_int_distribution<std::size_t>(len - 1, t.t_contact1 - 1)(rng);
    // Positive: at least one post-contact sample, contact no more than two hops old.
    const std::size_t hi = std::min(t.t_contact1 + 2 * hop, y.size() - 1);
    const std::size_t pos_end = std::uniform_int_distribution<std::size_t>(t.t_contact1 + 1, hi)(rng);
    out.windows.push_back(extract_window(y, neg_end, spec, WindowKind::detect));
    out.labels.push_back(0.0);
    out.windows.push_back(extract_window(y, pos_end, spec, WindowKind::detect));
    out.labels.push_back(1.0);
  }
  return out;
}

SvmDetector train_svm_detector(const DetectorTrainingSet& data, const BaselineStats& baseline, SvmParams params) {
  SvmDetector d;
  d.baseline = baseline;
  const double scale = baseline.sigma_v > 0.0 ? baseline.sigma_v : d.floor_v;
  params.preprocess = Preprocess::fixed(baseline.mean_v, scale);
  d.model = train_svc(data.windows, data.labels, params);
  return d;
}

DetectionScore score_detections(std::span<const DetectionResult> results, const std::vector<GraspTrace>& traces,
                                double tolerance_ms) {
  if (results.size() != traces.size()) throw std::invalid_argument("score_detections: results/traces misaligned");
  DetectionScore s;
  s.tolerance_ms = tolerance_ms;
  double lag_sum = 0.0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const auto& t = traces[i];
    if (!r.detected || !r.detect_index) {
      ++s.false_negative;
      continue;
    }
    const double lag_ms =
        (static_cast<double>(*r.detect_index) - static_cast<double>(t.t_contact1)) * 1000.0 / t.sample_rate_hz;
    if (lag_ms >= 0.0 && lag_ms <= tolerance_ms) {
      ++s.true_positive;
      lag_sum += lag_ms;
    } else {
      ++s.false_positive;
    }
  }
  const std::size_t total = s.true_positive + s.false_positive + s.false_negative;
  s.accuracy = total > 0 ? static_cast<double>(s.true_positive) / static_cast<double>(total) : 0.0;
  s.mean_lag_ms = s.true_positive > 0 ? lag_sum / static_cast<double>(s.true_positive) : 0.0;
  return s;
}

void inject_burst_corpus(std::vector<GraspTrace>& traces, const SynthConfig& cfg, Rng& rng, double sigma_multiple,
                         std::size_t burst_len) {
  const WindowSpec spec{.sample_rate_hz = cfg.sample_rate_hz};
  const std::size_t earliest = spec.history_len();
  const std::size_t guard = ms_to_samples(10.0, cfg.sample_rate_hz) + burst_len;
  const double amplitude = sigma_multiple * cfg.noise_std_v;
  for (auto& t : traces) {
    if (t.t_contact1 < earliest + guard) continue;
    const std::size_t at = std::uniform_int_distribution<std::size_t>(earliest, t.t_contact1 - guard)(rng);
    const bool positive = std::bernoulli_distribution(0.5)(rng);
    inject_burst(t, at, burst_len, amplitude, positive, cfg.adc());
  }
}

}  // namespace firstcontact
