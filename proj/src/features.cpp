#include "firstcontact/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace firstcontact {

StiffnessSet StiffnessSet::subset(const std::vector<std::size_t>& idx) const {
  StiffnessSet out;
  for (std::size_t i : idx) {
    out.windows.push_back(windows.at(i));
    out.shore.push_back(shore.at(i));
    out.source.push_back(source.at(i));
    out.trace_id.push_back(trace_id.at(i));
  }
  return out;
}

std::size_t aligned_onset(std::span<const double> conditioned, const GraspTrace& trace,
                          const ThresholdDetector& onset) {
  const double thr = onset.threshold_v();
  const std::size_t limit = std::min(conditioned.size(), trace.t_contact2);
  for (std::size_t k = trace.t_contact1; k < limit; ++k)
    if (std::abs(conditioned[k] - onset.baseline.mean_v) > thr) return k;
  return trace.t_contact1 + 1;
}

StiffnessSet stiffness_windows(const std::vector<GraspTrace>& traces, const WindowSpec& spec,
                               const ThresholdDetector& onset, double alpha) {
  StiffnessSet out;
  for (const auto& t : traces) {
    const auto y = condition_vibration(t.vibration, alpha);
    const std::size_t start = aligned_onset(y, t, onset);
    out.windows.push_back(extract_window(y, start, spec, WindowKind::stiffness));
    out.shore.push_back(t.label.shore_a());
    out.source.push_back(t.source);
    out.trace_id.push_back(t.trace_id);
  }
  return out;
}

Split split_indices(std::size_t n, double validation_fraction, std::uint64_t seed) {
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw std::invalid_argument("split_indices: validation_fraction must be in [0, 1)");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, 0x73706C6974));
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_valid = static_cast<std::size_t>(std::llround(static_cast<double>(n) * validation_fraction));
  Split s;
  s.train.assign(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(n_valid));
  s.validation.assign(idx.end() - static_cast<std::ptrdiff_t>(n_valid), idx.end());
  return s;
}

ThresholdDetector calibrated_threshold(const SynthConfig& cfg, std::uint64_t seed, std::size_t idle_samples,
                                       double alpha) {
  Rng rng(derive_seed(seed, 0x69646C65));
  const auto idle = condition_vibration(synthesize_idle(cfg, idle_samples, rng), alpha);
  ThresholdDetector d;
  d.baseline = calibrate_baseline(idle);
  d.floor_v = 2.0 * cfg.adc().lsb_v();
  return d;
}

}  // namespace firstcontact
