#include "firstcontact/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace firstcontact {

namespace {

// Relative share of the plateau seen by each taxel of the 3x2 array, row-major.
constexpr std::array<double, kForceChannels> kTaxelShare{1.0, 0.9, 0.8, 0.85, 0.75, 0.7};

double transient(double amplitude, double damping, double freq, double t_s) {
  if (t_s < 0.0) return 0.0;
  return amplitude * std::exp(-damping * t_s) * std::sin(2.0 * std::numbers::pi * freq * t_s);
}

}  // namespace

void SynthConfig::validate() const {
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("SynthConfig: sample_rate_hz must be > 0");
  if (!(delta_std_ms >= 0.0)) throw std::invalid_argument("SynthConfig: delta_std_ms must be >= 0");
  if (!(delta_min_ms > 0.0)) throw std::invalid_argument("SynthConfig: delta_min_ms must be > 0");
  if (adc_bits < 8 || adc_bits > 16) throw std::invalid_argument("SynthConfig: adc_bits must be in [8, 16]");
  if (!(adc_offset_v > 0.0 && adc_offset_v < adc_ref_v))
    throw std::invalid_argument("SynthConfig: adc_offset_v must lie in (0, adc_ref_v)");
  if (!(amp_gain_per_shore > 0.0)) throw std::invalid_argument("SynthConfig: amp_gain_per_shore must be > 0");
  if (amp_offset_v < 0.0 || noise_std_v < 0.0 || force_plateau_v < 0.0)
    throw std::invalid_argument("SynthConfig: amplitudes and noise must be non-negative");
  if (!(force_rise_ms > 0.0) || lead_ms < 0.0 || lead_jitter_ms < 0.0 || !(tail_ms > 0.0))
    throw std::invalid_argument("SynthConfig: durations out of range");
  if (amp_jitter_sigma < 0.0 || damping_jitter < 0.0 || damping_jitter >= 1.0)
    throw std::invalid_argument("SynthConfig: jitter parameters out of range");
}

StiffnessLabel::StiffnessLabel(double shore_a) : shore_a_(shore_a) {
  if (!(shore_a >= 0.0 && shore_a <= 100.0))
    throw std::invalid_argument("StiffnessLabel: Shore A must be in [0, 100], got " + std::to_string(shore_a));
}

void GraspTrace::check_invariants() const {
  if (!(t_contact1 < t_contact2 && t_contact2 < vibration.size()))
    throw std::logic_error("GraspTrace: need t_contact1 < t_contact2 < length");
  for (const auto& ch : force)
    if (ch.size() != vibration.size()) throw std::logic_error("GraspTrace: channel lengths differ");
}

Texture Texture::for_material(const std::string& material) {
  Rng rng(fnv1a(material));
  std::uniform_real_distribution<double> freq(200.0, 1200.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> weight(0.0, 1.0);
  Texture t;
  double power = 0.0;
  for (std::size_t i = 0; i < t.freq_hz.size(); ++i) {
    t.freq_hz[i] = freq(rng);
    t.phase[i] = phase(rng);
    t.weight[i] = weight(rng);
    power += 0.5 * t.weight[i] * t.weight[i];
  }
  const double norm = power > 0.0 ? 1.0 / std::sqrt(power) : 0.0;
  for (double& w : t.weight) w *= norm;
  return t;
}

double Texture::at(double t_s) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < freq_hz.size(); ++i)
    acc += weight[i] * std::sin(2.0 * std::numbers::pi * freq_hz[i] * t_s + phase[i]);
  return acc;
}

std::vector<Scenario> paper_blocks() {
  std::vector<Scenario> out;
  for (double s : {10.0, 20.0, 29.0, 43.0, 60.0})
    out.push_back({"block-" + std::to_string(static_cast<int>(s)), StiffnessLabel(s), std::nullopt});
  return out;
}

std::vector<Scenario> real_objects() {
  return {
      {"apple-1", StiffnessLabel(28), "apple"},         {"apple-2", StiffnessLabel(26), "apple"},
      {"orange-1", StiffnessLabel(35), "orange"},       {"orange-2", StiffnessLabel(37), "orange"},
      {"tennis-ball-1", StiffnessLabel(45), "tennis"},  {"tennis-ball-2", StiffnessLabel(46), "tennis"},
      {"avocado-1", StiffnessLabel(59), "avocado"},     {"avocado-2", StiffnessLabel(67), "avocado"},
  };
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// Mean and standard deviation of max(c, X), X ~ N(mu, sigma).
std::pair<double, double> clamped_moments(double mu, double sigma, double c) {
  const double a = (c - mu) / sigma;
  const double lo = normal_cdf(a);
  const double hi = 1.0 - lo;
  const double pdf = normal_pdf(a);
  const double m1 = c * lo + mu * hi + sigma * pdf;
  const double m2 = c * c * lo + (mu * mu + sigma * sigma) * hi + sigma * (mu + c) * pdf;
  return {m1, std::sqrt(std::max(0.0, m2 - m1 * m1))};
}

}  // namespace

double GapLaw::survival(double t_ms) const {
  if (t_ms < min_ms) return 1.0;
  if (sigma_ms == 0.0) return mu_ms > t_ms ? 1.0 : 0.0;
  return 1.0 - normal_cdf((t_ms - mu_ms) / sigma_ms);
}

GapLaw gap_law(const SynthConfig& cfg) {
  GapLaw law{cfg.delta_mean_ms, cfg.delta_std_ms, cfg.delta_min_ms};
  if (cfg.delta_std_ms == 0.0) return law;
  if (!(cfg.delta_mean_ms > cfg.delta_min_ms))
    throw std::invalid_argument("gap_law: delta_mean_ms must exceed delta_min_ms when delta_std_ms > 0");
  // Fixed-point iteration on the clamped moments; the clamp is a small
  // perturbation for realistic settings, so this contracts quickly.
  for (int it = 0; it < 10000; ++it) {
    const auto [m, s] = clamped_moments(law.mu_ms, law.sigma_ms, law.min_ms);
    const double dm = cfg.delta_mean_ms - m;
    const double ds = cfg.delta_std_ms / s;
    law.mu_ms += dm;
    law.sigma_ms *= ds;
    if (std::abs(dm) < 1e-12 * cfg.delta_mean_ms && std::abs(ds - 1.0) < 1e-12) return law;
  }
  throw std::invalid_argument("gap_law: no latent Normal matches the requested gap moments");
}

double draw_contact_gap(const SynthConfig& cfg, Rng& rng) {
  const GapLaw law = gap_law(cfg);
  double draw = law.mu_ms;
  if (law.sigma_ms > 0.0) draw = std::normal_distribution<double>(law.mu_ms, law.sigma_ms)(rng);
  return std::max(law.min_ms, draw);
}

Placement draw_placement(const SynthConfig& cfg, Rng& rng) {
  Placement p;
  if (cfg.amp_jitter_sigma > 0.0) p.amp_scale = std::exp(std::normal_distribution<double>(0.0, cfg.amp_jitter_sigma)(rng));
  if (cfg.damping_jitter > 0.0)
    p.damping_scale = 1.0 + std::uniform_real_distribution<double>(-cfg.damping_jitter, cfg.damping_jitter)(rng);
  return p;
}

GraspTrace synthesize_grasp(const SynthConfig& cfg, const StiffnessLabel& label, Rng& rng, const Placement& placement,
                            const std::optional<Texture>& texture) {
  cfg.validate();
  const double fs = cfg.sample_rate_hz;
  const AdcSpec adc = cfg.adc();

  const double gap_ms = draw_contact_gap(cfg, rng);
  const double lead_extra = cfg.lead_jitter_ms > 0.0
                                ? std::uniform_real_distribution<double>(0.0, cfg.lead_jitter_ms)(rng)
                                : 0.0;
  const std::size_t t1 = std::max<std::size_t>(1, ms_to_samples(cfg.lead_ms + lead_extra, fs));
  const std::size_t t2 = t1 + std::max<std::size_t>(1, ms_to_samples(gap_ms, fs));
  const std::size_t n = t2 + std::max<std::size_t>(1, ms_to_samples(cfg.tail_ms, fs));

  const double amp = cfg.amplitude_for(label.shore_a()) * placement.amp_scale;
  const double damping = cfg.damping_per_s * placement.damping_scale;

  GraspTrace trace;
  trace.t_contact1 = t1;
  trace.t_contact2 = t2;
  trace.label = label;
  trace.sample_rate_hz = fs;
  trace.vibration.resize(n);

  std::normal_distribution<double> noise(0.0, 1.0);
  const bool noisy = cfg.noise_std_v > 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double ta = (static_cast<double>(k) - static_cast<double>(t1)) / fs;
    const double tb = (static_cast<double>(k) - static_cast<double>(t2)) / fs;
    double v = cfg.adc_offset_v;
    const double first = transient(amp, damping, cfg.osc_freq_hz, ta);
    v += first;
    v += transient(amp * cfg.second_contact_gain, damping, cfg.osc_freq_hz, tb);
    // Surface texture modulates the ring-down, so it vanishes at the contact instant.
    if (texture) v += cfg.texture_gain * first * texture->at(ta);
    if (noisy) v += cfg.noise_std_v * noise(rng);
    trace.vibration[k] = dequantize(quantize(v, adc), adc);
  }

  // Force stays at its zero baseline until the second finger closes the grasp.
  const double rise_s = cfg.force_rise_ms / 1000.0;
  for (std::size_t ch = 0; ch < kForceChannels; ++ch) {
    auto& f = trace.force[ch];
    f.assign(n, dequantize(quantize(0.0, adc), adc));
    for (std::size_t k = t2; k < n; ++k) {
      const double t = static_cast<double>(k - t2) / fs;
      double v = cfg.force_plateau_v * kTaxelShare[ch] * std::min(1.0, t / rise_s);
      if (noisy) v += cfg.noise_std_v * noise(rng);
      f[k] = dequantize(quantize(v, adc), adc);
    }
  }
  return trace;
}

std::vector<double> synthesize_idle(const SynthConfig& cfg, std::size_t n_samples, Rng& rng) {
  cfg.validate();
  const AdcSpec adc = cfg.adc();
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> out(n_samples);
  for (double& v : out) {
    const double x = cfg.adc_offset_v + (cfg.noise_std_v > 0.0 ? cfg.noise_std_v * noise(rng) : 0.0);
    v = dequantize(quantize(x, adc), adc);
  }
  return out;
}

std::vector<GraspTrace> make_dataset(const SynthConfig& cfg, const std::vector<Scenario>& scenarios,
                                     std::size_t pinches_per_label, Rng& rng) {
  if (scenarios.empty()) throw std::invalid_argument("make_dataset: no labels given");
  if (pinches_per_label < 1) throw std::invalid_argument("make_dataset: pinches_per_label must be >= 1");
  cfg.validate();
  std::vector<GraspTrace> out;
  out.reserve(scenarios.size() * pinches_per_label);
  for (const auto& sc : scenarios) {
    const std::optional<Texture> texture =
        sc.material ? std::optional<Texture>(Texture::for_material(*sc.material)) : std::nullopt;
    for (std::size_t p = 0; p < pinches_per_label; ++p) {
      Rng child(rng());
      const Placement placement = draw_placement(cfg, child);
      GraspTrace t = synthesize_grasp(cfg, sc.label, child, placement, texture);
      t.trace_id = out.size();
      t.source = sc.name;
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<GraspTrace> make_dataset(const SynthConfig& cfg, const std::vector<StiffnessLabel>& labels,
                                     std::size_t pinches_per_label, Rng& rng) {
  std::vector<Scenario> scenarios;
  for (const auto& l : labels) {
    std::string name = "shore-" + std::to_string(l.shore_a());
    name.erase(name.find_last_not_of('0') + 1);
    if (name.back() == '.') name.pop_back();
    scenarios.push_back({std::move(name), l, std::nullopt});
  }
  return make_dataset(cfg, scenarios, pinches_per_label, rng);
}

void inject_burst(GraspTrace& trace, std::size_t at, std::size_t len, double amplitude_v, bool positive,
                  const AdcSpec& adc) {
  const double delta = positive ? amplitude_v : -amplitude_v;
  const std::size_t end = std::min(trace.vibration.size(), at + len);
  for (std::size_t k = at; k < end; ++k)
    trace.vibration[k] = dequantize(quantize(trace.vibration[k] + delta, adc), adc);
}

}  // namespace firstcontact
