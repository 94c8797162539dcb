#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "firstcontact/detect.hpp"
#include "firstcontact/dsp.hpp"
#include "firstcontact/evaluate.hpp"
#include "firstcontact/synth.hpp"

namespace firstcontact {

/// Per-grasp time accounting against that grasp's first-to-second contact gap.
struct LatencyLedger {
  double detect_lag_ms = 0.0;  // t_detect - t_contact1
  double collect_ms = 0.0;     // stiffness window fill
  double inference_ms = 0.0;   // wall clock around predict
  double total_ms = 0.0;
  double budget_ms = 0.0;
  bool within_budget = false;
};

struct GraspReport {
  std::uint64_t trace_id = 0;
  std::string source;
  DetectionResult detection;
  std::optional<double> predicted_shore;
  double true_shore = 0.0;
  /// Largest smoothed force reading at the moment the estimate became available.
  std::optional<double> force_at_estimate_v;
  LatencyLedger ledger;
};

struct PipelineConfig {
  WindowSpec spec;
  double alpha = 0.5;
  std::size_t force_window = 25;
  bool paced = false;  // sleep to real time between samples
};

/// Sample-by-sample engine: smoothing, hop-wise detection over the 20 ms window,
/// then 15 ms collection from the detection index and one model call.
class StreamingPipeline {
 public:
  StreamingPipeline(const Detector& detector, const StiffnessModel& model, PipelineConfig cfg = {});

  /// Consumes one sample. Returns true once the estimate is available.
  bool push(double vibration_v, const std::array<double, kForceChannels>& force_v);

  [[nodiscard]] std::size_t consumed() const { return consumed_; }
  [[nodiscard]] const DetectionResult& detection() const { return detection_; }
  [[nodiscard]] std::optional<double> prediction() const { return prediction_; }
  [[nodiscard]] double inference_ms() const { return inference_ms_; }
  [[nodiscard]] std::optional<double> force_at_estimate_v() const { return force_at_estimate_; }
  [[nodiscard]] bool done() const { return phase_ == Phase::done; }

 private:
  enum class Phase { scanning, collecting, done };

  const Detector& detector_;
  const StiffnessModel& model_;
  PipelineConfig cfg_;
  std::size_t detect_len_;
  std::size_t hop_;
  std::size_t collect_len_;
  ExpSmoother smoother_;
  std::vector<MovingAverage> force_avg_;
  std::vector<double> ring_;  // last detect_len_ conditioned samples
  std::size_t consumed_ = 0;
  Phase phase_ = Phase::scanning;
  DetectionResult detection_;
  std::vector<double> collected_;
  std::optional<double> prediction_;
  double inference_ms_ = 0.0;
  double force_now_ = 0.0;
  std::optional<double> force_at_estimate_;
};

/// Replays the trace in time order. A detection after t_contact2 still yields a
/// prediction but the ledger is out of budget.
[[nodiscard]] GraspReport run_grasp(const GraspTrace& trace, const Detector& detector, const StiffnessModel& model,
                                    const PipelineConfig& cfg = {});

struct CorpusReport {
  std::vector<GraspReport> grasps;
  std::size_t detected = 0;
  std::size_t predicted = 0;
  double fraction_within_budget = 0.0;
  InferenceStats inference;
};

[[nodiscard]] CorpusReport run_corpus(const std::vector<GraspTrace>& traces, const Detector& detector,
                                      const StiffnessModel& model, const PipelineConfig& cfg = {});

/// Single-threaded latency of one model call on synthetic windows. The first
/// 10% of trials are warm-up and excluded. Throws for n_trials == 0.
[[nodiscard]] InferenceStats bench_inference(const StiffnessModel& model, std::size_t n_trials,
                                             std::uint64_t seed = 0);

}  // namespace firstcontact
