#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "firstcontact/dsp.hpp"
#include "firstcontact/kernel_svm.hpp"
#include "firstcontact/synth.hpp"

namespace firstcontact {

inline constexpr std::size_t kMinBaselineSamples = 100;

struct BaselineStats {
  double mean_v = 0.0;
  double sigma_v = 0.0;  // unbiased
  std::size_t n_samples = 0;
};

/// Mean and unbiased sigma of a contact-free segment. Throws std::invalid_argument
/// for segments shorter than kMinBaselineSamples.
[[nodiscard]] BaselineStats calibrate_baseline(std::span<const double> steady_segment);

enum class DetectMethod { threshold, svm };

struct DetectionResult {
  bool detected = false;
  std::optional<std::size_t> detect_index;
  DetectMethod method = DetectMethod::threshold;
  std::size_t windows_scanned = 0;
};

/// Fires when a new-region sample deviates from the baseline mean by more than
/// multiplier * sigma. The threshold never drops below `floor_v` (2 LSB by default).
struct ThresholdDetector {
  BaselineStats baseline;
  double multiplier = 3.0;
  double floor_v = 2.0 * AdcSpec{}.lsb_v();

  [[nodiscard]] double threshold_v() const;
  /// Offset inside `window` of the first offending sample in its last `new_len` samples.
  [[nodiscard]] std::optional<std::size_t> check(std::span<const double> window, std::size_t new_len) const;
};

/// RBF classifier over whole detection windows (1 = contact present).
struct SvmDetector {
  KernelModel model;
  BaselineStats baseline;
  double floor_v = 2.0 * AdcSpec{}.lsb_v();
  /// Report the onset inside the flagged window (first sample of the last two hops
  /// above onset_multiplier * sigma) instead of the window end.
  bool localize_onset = true;
  double onset_multiplier = 5.0;

  [[nodiscard]] std::optional<std::size_t> check(std::span<const double> window, std::size_t new_len) const;
};

using Detector = std::variant<ThresholdDetector, SvmDetector>;

/// The front end every detector and stiffness model sees: causal exponential
/// smoothing of the vibration channel.
[[nodiscard]] std::vector<double> condition_vibration(std::span<const double> vibration, double alpha = 0.5);

/// Scans 20 ms windows advancing by the 3 ms hop over an already conditioned signal.
[[nodiscard]] DetectionResult detect_threshold(std::span<const double> signal, const ThresholdDetector& detector,
                                               const WindowSpec& spec);
/// Throws std::invalid_argument if the model was trained on another window length.
[[nodiscard]] DetectionResult detect_svm(std::span<const double> signal, const SvmDetector& detector,
                                         const WindowSpec& spec);
[[nodiscard]] DetectionResult detect(std::span<const double> signal, const Detector& detector,
                                     const WindowSpec& spec);

struct DetectorTrainingSet {
  FeatureRows windows;
  std::vector<double> labels;  // 1 contact present, 0 absent
};

/// One positive and one negative detection window per trace. Negatives end
/// uniformly inside the pre-contact region; positives end within two hops after contact.
[[nodiscard]] DetectorTrainingSet detection_windows(const std::vector<GraspTrace>& traces, const WindowSpec& spec,
                                                    Rng& rng, double alpha = 0.5);

[[nodiscard]] SvmDetector train_svm_detector(const DetectorTrainingSet& data, const BaselineStats& baseline,
                                             SvmParams params = {});

struct DetectionScore {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
  double accuracy = 0.0;     // TP / (TP + FP + FN)
  double mean_lag_ms = 0.0;  // over true positives
  double tolerance_ms = 5.0;
};

[[nodiscard]] DetectionScore score_detections(std::span<const DetectionResult> results,
                                              const std::vector<GraspTrace>& traces, double tolerance_ms = 5.0);

/// Corpus with a 4-sigma burst inserted into the quiet lead of every trace.
void inject_burst_corpus(std::vector<GraspTrace>& traces, const SynthConfig& cfg, Rng& rng,
                         double sigma_multiple = 4.0, std::size_t burst_len = 6);

}  // namespace firstcontact
