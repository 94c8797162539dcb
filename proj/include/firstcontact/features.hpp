#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "firstcontact/detect.hpp"
#include "firstcontact/dsp.hpp"
#include "firstcontact/kernel_svm.hpp"
#include "firstcontact/synth.hpp"

namespace firstcontact {

/// Stiffness windows cut from conditioned vibration, with their labels.
struct StiffnessSet {
  FeatureRows windows;
  std::vector<double> shore;
  std::vector<std::string> source;
  std::vector<std::uint64_t> trace_id;

  [[nodiscard]] std::size_t size() const { return windows.size(); }
  [[nodiscard]] StiffnessSet subset(const std::vector<std::size_t>& idx) const;
};

/// First sample at or after t_contact1 whose conditioned deviation from the
/// baseline exceeds the threshold detector's level, i.e. where a causal
/// detector would place the onset. Falls back to t_contact1 + 1.
[[nodiscard]] std::size_t aligned_onset(std::span<const double> conditioned, const GraspTrace& trace,
                                        const ThresholdDetector& onset);

/// 15 ms windows starting at each trace's aligned onset.
[[nodiscard]] StiffnessSet stiffness_windows(const std::vector<GraspTrace>& traces, const WindowSpec& spec,
                                             const ThresholdDetector& onset, double alpha = 0.5);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Seeded shuffle, then the last round(n * validation_fraction) indices are held out.
[[nodiscard]] Split split_indices(std::size_t n, double validation_fraction, std::uint64_t seed);

/// Onset detector for labelled corpora: baseline from an idle recording of the same sensor.
[[nodiscard]] ThresholdDetector calibrated_threshold(const SynthConfig& cfg, std::uint64_t seed,
                                                     std::size_t idle_samples = 2000, double alpha = 0.5);

}  // namespace firstcontact
