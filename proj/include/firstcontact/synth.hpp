#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "firstcontact/dsp.hpp"
#include "firstcontact/random.hpp"

namespace firstcontact {

inline constexpr std::size_t kForceChannels = 6;

/// Generator parameters. Fields past `seed` are stand-ins for quantities the
/// sensor literature does not report; all are exposed so experiments can vary them.
struct SynthConfig {
  double sample_rate_hz = 4936.0;
  double delta_mean_ms = 16.65;
  double delta_std_ms = 10.35;
  double delta_min_ms = 1.0;
  double amp_gain_per_shore = 0.015;  // V per Shore A
  double amp_offset_v = 0.1;
  double osc_freq_hz = 400.0;
  double damping_per_s = 200.0;
  double noise_std_v = 0.002;
  double force_rise_ms = 8.0;
  double force_plateau_v = 1.2;
  int adc_bits = 10;
  double adc_ref_v = 3.3;
  double adc_offset_v = 1.65;
  std::uint64_t seed = 0;

  double lead_ms = 40.0;         // quiet time before first contact
  double lead_jitter_ms = 20.0;  // uniform extra lead
  double tail_ms = 30.0;         // recorded time after second contact
  double second_contact_gain = 0.6;
  double amp_jitter_sigma = 0.04;  // lognormal sigma of placement jitter
  double damping_jitter = 0.10;    // +/- fraction, uniform
  double texture_gain = 0.03;      // depth of the texture modulation

  void validate() const;
  [[nodiscard]] AdcSpec adc() const { return {adc_bits, adc_ref_v, adc_offset_v}; }
  /// Envelope amplitude of the first-contact transient for a given stiffness.
  [[nodiscard]] double amplitude_for(double shore_a) const { return amp_offset_v + amp_gain_per_shore * shore_a; }
};

/// Shore A hardness, validated to [0, 100].
class StiffnessLabel {
 public:
  explicit StiffnessLabel(double shore_a);
  [[nodiscard]] double shore_a() const { return shore_a_; }
  friend bool operator==(const StiffnessLabel&, const StiffnessLabel&) = default;

 private:
  double shore_a_;
};

struct GraspTrace {
  std::vector<double> vibration;
  std::array<std::vector<double>, kForceChannels> force;
  std::size_t t_contact1 = 0;
  std::size_t t_contact2 = 0;
  StiffnessLabel label{0.0};
  double sample_rate_hz = 4936.0;
  std::uint64_t trace_id = 0;
  std::string source;  // scenario name, e.g. "block-29" or "apple-1"

  [[nodiscard]] std::size_t size() const { return vibration.size(); }
  [[nodiscard]] double gap_ms() const {
    return static_cast<double>(t_contact2 - t_contact1) * 1000.0 / sample_rate_hz;
  }
  /// Throws std::logic_error when the structural invariants do not hold.
  void check_invariants() const;
  friend bool operator==(const GraspTrace&, const GraspTrace&) = default;
};

/// Per-pinch variation from block placement.
struct Placement {
  double amp_scale = 1.0;
  double damping_scale = 1.0;
};

/// A repeatable surface signature for real-object scenarios: a unit-RMS
/// mixture of sinusoids that modulates the first-contact transient.
struct Texture {
  std::array<double, 4> freq_hz{};
  std::array<double, 4> phase{};
  std::array<double, 4> weight{};

  [[nodiscard]] static Texture for_material(const std::string& material);
  [[nodiscard]] double at(double t_s) const;
};

struct Scenario {
  std::string name;
  StiffnessLabel label;
  std::optional<std::string> material;
};

/// The five silicone training blocks: 10, 20, 29, 43, 60 Shore A.
[[nodiscard]] std::vector<Scenario> paper_blocks();
/// Held-out everyday objects: apples 28/26, oranges 35/37, tennis balls 45/46, avocados 59/67.
[[nodiscard]] std::vector<Scenario> real_objects();

/// Latent Normal behind the contact gap. Gaps are max(delta_min, N(mu, sigma))
/// with (mu, sigma) solved so the clamped gaps have mean delta_mean_ms and
/// standard deviation delta_std_ms.
struct GapLaw {
  double mu_ms = 0.0;
  double sigma_ms = 0.0;
  double min_ms = 0.0;

  /// P(gap > t_ms).
  [[nodiscard]] double survival(double t_ms) const;
};

[[nodiscard]] GapLaw gap_law(const SynthConfig& cfg);

/// Time from first to second finger contact, in ms.
[[nodiscard]] double draw_contact_gap(const SynthConfig& cfg, Rng& rng);

[[nodiscard]] Placement draw_placement(const SynthConfig& cfg, Rng& rng);

[[nodiscard]] GraspTrace synthesize_grasp(const SynthConfig& cfg, const StiffnessLabel& label, Rng& rng,
                                          const Placement& placement = {},
                                          const std::optional<Texture>& texture = std::nullopt);

/// Quantized vibration with no contact, for baseline calibration.
[[nodiscard]] std::vector<double> synthesize_idle(const SynthConfig& cfg, std::size_t n_samples, Rng& rng);

/// scenarios x pinches traces in scenario-major order. Each trace draws its own
/// child stream from `rng`, so the result depends only on the stream state.
[[nodiscard]] std::vector<GraspTrace> make_dataset(const SynthConfig& cfg, const std::vector<Scenario>& scenarios,
                                                   std::size_t pinches_per_label, Rng& rng);
[[nodiscard]] std::vector<GraspTrace> make_dataset(const SynthConfig& cfg, const std::vector<StiffnessLabel>& labels,
                                                   std::size_t pinches_per_label, Rng& rng);

/// Adds a burst of `len` samples at +/- `amplitude_v` (one sign per burst) to
/// the vibration channel starting at `at`, then re-quantizes those samples.
void inject_burst(GraspTrace& trace, std::size_t at, std::size_t len, double amplitude_v, bool positive,
                  const AdcSpec& adc);

}  // namespace firstcontact
