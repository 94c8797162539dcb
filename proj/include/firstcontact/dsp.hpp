#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace firstcontact {

/// Successive-approximation ADC model. Codes saturate at the rails; rounding is
/// nearest with ties away from zero, so 1.65 V on a 10-bit/3.3 V converter is code 512.
struct AdcSpec {
  int bits = 10;
  double ref_v = 3.3;
  double offset_v = 1.65;

  void validate() const;
  [[nodiscard]] std::uint16_t max_code() const { return static_cast<std::uint16_t>((1u << bits) - 1u); }
  [[nodiscard]] double lsb_v() const { return ref_v / max_code(); }
};

[[nodiscard]] std::uint16_t quantize(double volts, const AdcSpec& spec);
[[nodiscard]] double dequantize(std::uint16_t code, const AdcSpec& spec);
/// Round-trips every sample through the converter.
[[nodiscard]] std::vector<double> adc_roundtrip(std::span<const double> volts, const AdcSpec& spec);

/// Window durations and their sample counts. Counts are round(ms * fs / 1000).
struct WindowSpec {
  double detect_history_ms = 17.0;
  double detect_new_ms = 3.0;
  double stiffness_ms = 15.0;
  double sample_rate_hz = 4936.0;

  void validate() const;
  [[nodiscard]] std::size_t history_len() const;
  [[nodiscard]] std::size_t new_len() const;
  [[nodiscard]] std::size_t detect_len() const { return history_len() + new_len(); }
  [[nodiscard]] std::size_t stiffness_len() const;
  [[nodiscard]] double samples_to_ms(double samples) const { return samples * 1000.0 / sample_rate_hz; }
};

[[nodiscard]] std::size_t ms_to_samples(double ms, double sample_rate_hz);

enum class SavGolEdge {
  polyfit,  // evaluate the fit of the first/last full window at the edge samples
  mirror,   // reflect the signal about the end samples, then filter
};

struct SavGolSpec {
  int window_len = 11;
  int poly_order = 3;
  SavGolEdge edge = SavGolEdge::polyfit;

  void validate() const;
};

/// y[0] = x[0]; y[n] = alpha*x[n] + (1-alpha)*y[n-1]. O(1) state.
class ExpSmoother {
 public:
  explicit ExpSmoother(double alpha = 0.5);
  double push(double x);
  void reset() { primed_ = false; }
  [[nodiscard]] double alpha() const { return alpha_; }

 private:
  double alpha_;
  double state_ = 0.0;
  bool primed_ = false;
};

/// Causal mean of the last `window_len` samples (fewer during warm-up).
class MovingAverage {
 public:
  explicit MovingAverage(std::size_t window_len);
  double push(double x);
  void reset();

 private:
  std::vector<double> ring_;
  std::size_t head_ = 0;
  std::size_t filled_ = 0;
  double sum_ = 0.0;
};

[[nodiscard]] std::vector<double> exp_smooth(std::span<const double> x, double alpha = 0.5);
[[nodiscard]] std::vector<double> moving_average(std::span<const double> x, std::size_t window_len);

/// Least-squares weights that evaluate the local fit at `position` (0-based
/// offset inside the window). position = window_len / 2 gives the centred filter.
[[nodiscard]] std::vector<double> savgol_coefficients(const SavGolSpec& spec, int position);
/// Offline Savitzky-Golay smoothing. Interior samples take the centred local
/// polynomial fit. Throws std::invalid_argument when x is shorter than the window.
[[nodiscard]] std::vector<double> savgol(std::span<const double> x, const SavGolSpec& spec = {});

enum class WindowKind { detect, stiffness };

/// detect: detect_len() samples ending at (and including) `index`.
/// stiffness: stiffness_len() samples starting at `index`.
/// Throws std::out_of_range when the window does not fit.
[[nodiscard]] std::vector<double> extract_window(std::span<const double> signal, std::size_t index,
                                                 const WindowSpec& spec, WindowKind kind);

}  // namespace firstcontact
