#include "firstcontact/dsp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace firstcontact {

void AdcSpec::validate() const {
  if (bits < 1 || bits > 16) throw std::invalid_argument("AdcSpec: bits must be in [1, 16]");
  if (!(ref_v > 0.0)) throw std::invalid_argument("AdcSpec: ref_v must be positive");
  if (!(offset_v > 0.0 && offset_v < ref_v))
    throw std::invalid_argument("AdcSpec: offset_v must lie strictly inside (0, ref_v)");
}

std::uint16_t quantize(double volts, const AdcSpec& spec) {
  const double full = spec.max_code();
  // std::round is half-away-from-zero.
  const double code = std::round(volts / spec.ref_v * full);
  if (!(code > 0.0)) return 0;  // also catches NaN
  if (code >= full) return spec.max_code();
  return static_cast<std::uint16_t>(code);
}

double dequantize(std::uint16_t code, const AdcSpec& spec) {
  return static_cast<double>(std::min(code, spec.max_code())) * spec.ref_v / spec.max_code();
}

std::vector<double> adc_roundtrip(std::span<const double> volts, const AdcSpec& spec) {
  std::vector<double> out(volts.size());
  std::transform(volts.begin(), volts.end(), out.begin(),
                 [&](double v) { return dequantize(quantize(v, spec), spec); });
  return out;
}

std::size_t ms_to_samples(double ms, double sample_rate_hz) {
  return static_cast<std::size_t>(std::llround(ms * sample_rate_hz / 1000.0));
}

void WindowSpec::validate() const {
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("WindowSpec: sample_rate_hz must be positive");
  if (!(detect_history_ms > 0.0 && detect_new_ms > 0.0 && stiffness_ms > 0.0))
    throw std::invalid_argument("WindowSpec: durations must be positive");
  if (history_len() < 1 || new_len() < 1 || stiffness_len() < 1)
    throw std::invalid_argument("WindowSpec: every window needs at least one sample");
}

std::size_t WindowSpec::history_len() const { return ms_to_samples(detect_history_ms, sample_rate_hz); }
std::size_t WindowSpec::new_len() const { return ms_to_samples(detect_new_ms, sample_rate_hz); }
std::size_t WindowSpec::stiffness_len() const { return ms_to_samples(stiffness_ms, sample_rate_hz); }

void SavGolSpec::validate() const {
  if (window_len < 1 || window_len % 2 == 0) throw std::invalid_argument("SavGolSpec: window_len must be odd");
  if (poly_order < 0 || poly_order >= window_len)
    throw std::invalid_argument("SavGolSpec: poly_order must be in [0, window_len)");
}

ExpSmoother::ExpSmoother(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("exp_smooth: alpha must be in (0, 1]");
}

double ExpSmoother::push(double x) {
  if (!primed_) {
    state_ = x;
    primed_ = true;
  } else {
    state_ = alpha_ * x + (1.0 - alpha_) * state_;
  }
  return state_;
}

MovingAverage::MovingAverage(std::size_t window_len) : ring_(window_len, 0.0) {
  if (window_len < 1) throw std::invalid_argument("moving_average: window_len must be >= 1");
}

double MovingAverage::push(double x) {
  if (filled_ == ring_.size()) {
    sum_ -= ring_[head_];
  } else {
    ++filled_;
  }
  ring_[head_] = x;
  sum_ += x;
  head_ = (head_ + 1) % ring_.size();
  // Recompute once per wrap so rounding drift in the running sum cannot accumulate.
  if (head_ == 0) {
    sum_ = 0.0;
    for (std::size_t i = 0; i < filled_; ++i) sum_ += ring_[i];
  }
  return sum_ / static_cast<double>(filled_);
}

void MovingAverage::reset() {
  std::fill(ring_.begin(), ring_.end(), 0.0);
  head_ = filled_ = 0;
  sum_ = 0.0;
}

std::vector<double> exp_smooth(std::span<const double> x, double alpha) {
  ExpSmoother s(alpha);
  std::vector<double> y;
  y.reserve(x.size());
  for (double v : x) y.push_back(s.push(v));
  return y;
}

std::vector<double> moving_average(std::span<const double> x, std::size_t window_len) {
  MovingAverage m(window_len);
  std::vector<double> y;
  y.reserve(x.size());
  for (double v : x) y.push_back(m.push(v));
  return y;
}

std::vector<double> savgol_coefficients(const SavGolSpec& spec, int position) {
  spec.validate();
  if (position < 0 || position >= spec.window_len)
    throw std::out_of_range("savgol_coefficients: position outside window");
  const int n = spec.window_len;
  const int half = n / 2;
  const double scale = half > 0 ? 1.0 / half : 1.0;
  const int terms = spec.poly_order + 1;

  // Vandermonde rows on abscissae scaled to [-1, 1] for conditioning.
  Eigen::MatrixXd a(n, terms);
  for (int j = 0; j < n; ++j) {
    const double u = (j - half) * scale;
    double p = 1.0;
    for (int k = 0; k < terms; ++k, p *= u) a(j, k) = p;
  }
  Eigen::VectorXd v(terms);
  const double t = (position - half) * scale;
  double p = 1.0;
  for (int k = 0; k < terms; ++k, p *= t) v(k) = p;

  // weights = A (A^T A)^-1 v = Q R^-T v
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(terms).triangularView<Eigen::Upper>();
  const Eigen::VectorXd z = r.transpose().triangularView<Eigen::Lower>().solve(v);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, terms);
  const Eigen::VectorXd w = q * z;
  return {w.data(), w.data() + n};
}

namespace {

double dot_at(std::span<const double> x, std::size_t start, const std::vector<double>& w) {
  double acc = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * x[start + j];
  return acc;
}

}  // namespace

std::vector<double> savgol(std::span<const double> x, const SavGolSpec& spec) {
  spec.validate();
  const auto n = static_cast<std::size_t>(spec.window_len);
  if (x.size() < n)
    throw std::invalid_argument("savgol: signal has " + std::to_string(x.size()) +
                                " samples, window needs " + std::to_string(n));
  const std::size_t half = n / 2;
  const auto centre = savgol_coefficients(spec, static_cast<int>(half));
  std::vector<double> y(x.size());

  if (spec.edge == SavGolEdge::mirror) {
    // x[-k] = x[k], x[N-1+k] = x[N-1-k]
    std::vector<double> padded;
    padded.reserve(x.size() + 2 * half);
    for (std::size_t k = half; k > 0; --k) padded.push_back(x[std::min(k, x.size() - 1)]);
    padded.insert(padded.end(), x.begin(), x.end());
    for (std::size_t k = 1; k <= half; ++k)
      padded.push_back(x[x.size() - 1 - std::min(k, x.size() - 1)]);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = dot_at(padded, i, centre);
    return y;
  }

  for (std::size_t i = half; i + half < x.size(); ++i) y[i] = dot_at(x, i - half, centre);
  const std::size_t last_start = x.size() - n;
  for (std::size_t i = 0; i < half; ++i) {
    y[i] = dot_at(x, 0, savgol_coefficients(spec, static_cast<int>(i)));
    y[x.size() - 1 - i] = dot_at(x, last_start, savgol_coefficients(spec, static_cast<int>(n - 1 - i)));
  }
  return y;
}

std::vector<double> extract_window(std::span<const double> signal, std::size_t index, const WindowSpec& spec,
                                   WindowKind kind) {
  spec.validate();
  if (kind == WindowKind::detect) {
    const std::size_t len = spec.detect_len();
    if (index >= signal.size() || index + 1 < len)
      throw std::out_of_range("extract_window: detection window ending at " + std::to_string(index) +
                              " does not fit in " + std::to_string(signal.size()) + " samples");
    const auto first = signal.begin() + static_cast<std::ptrdiff_t>(index + 1 - len);
    return {first, first + static_cast<std::ptrdiff_t>(len)};
  }
  const std::size_t len = spec.stiffness_len();
  if (index > signal.size() || signal.size() - index < len)
    throw std::out_of_range("extract_window: stiffness window starting at " + std::to_string(index) +
                            " does not fit in " + std::to_string(signal.size()) + " samples");
  const auto first = signal.begin() + static_cast<std::ptrdiff_t>(index);
  return {first, first + static_cast<std::ptrdiff_t>(len)};
}

}  // namespace firstcontact
