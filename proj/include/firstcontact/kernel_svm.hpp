#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace firstcontact {

using FeatureRows = std::vector<std::vector<double>>;

/// Affine input normalization stored with every model so inference is self-contained.
/// window_mean: x -> (x - mean(x)) / scale; fixed: x -> (x - center) / scale.
struct Preprocess {
  enum class Center { fixed, window_mean };
  Center center = Center::fixed;
  double center_value = 0.0;
  double scale = 1.0;

  [[nodiscard]] std::vector<double> apply(std::span<const double> x) const;
  /// window_mean centring with scale = RMS of the centred training samples.
  [[nodiscard]] static Preprocess fit_window_mean(const FeatureRows& windows);
  [[nodiscard]] static Preprocess fixed(double center, double scale);
};

/// Target standardization for regressors: t' = (t - mean) / scale.
struct TargetScale {
  double mean = 0.0;
  double scale = 1.0;

  [[nodiscard]] static TargetScale fit(std::span<const double> targets);
  [[nodiscard]] double forward(double t) const { return (t - mean) / scale; }
  [[nodiscard]] double inverse(double t) const { return t * scale + mean; }
};

[[nodiscard]] double rbf_kernel(std::span<const double> u, std::span<const double> v, double gamma);

/// 1 / (dim * pooled variance) of the rows, the usual "scale" default.
[[nodiscard]] double default_gamma(const FeatureRows& rows);

struct SmoOptions {
  double tol = 1e-3;                 // stop when the maximal KKT violation pair gap < tol
  std::size_t max_passes = 10000;    // iteration cap = max_passes * number of dual variables
  std::size_t cache_mb = 512;
};

/// Solution of min 1/2 a'Qa + p'a  s.t. y'a = 0, 0 <= a <= C.
struct DualSolution {
  std::vector<double> alpha;
  double rho = 0.0;             // decision = sum coef K - rho
  double dual_objective = 0.0;  // maximization form: -(1/2 a'Qa + p'a)
  double kkt_gap = 0.0;         // final max violating pair gap
  std::size_t iterations = 0;
  bool converged = false;
};

/// Binary C-SVC dual, labels +1 / -1. Rows are used as given (no preprocessing).
[[nodiscard]] DualSolution solve_svc_dual(const FeatureRows& x, std::span<const double> y_pm1, double c,
                                          double gamma, const SmoOptions& opts = {});
/// epsilon-SVR dual; alpha has 2n entries, alpha[i] for the upper tube and alpha[i+n] for the lower.
[[nodiscard]] DualSolution solve_svr_dual(const FeatureRows& x, std::span<const double> targets, double c,
                                          double gamma, double epsilon, const SmoOptions& opts = {});

struct PairModel {
  double positive_class = 0.0;  // decision > 0 votes for this one
  double negative_class = 0.0;
  std::vector<std::size_t> sv;  // indices into KernelModel::support_vectors
  std::vector<double> coef;     // alpha_i * y_i
  double bias = 0.0;            // decision = sum coef K + bias
  double dual_objective = 0.0;
  double kkt_gap = 0.0;
};

struct KernelModel {
  enum class Kind { classifier, regressor };
  Kind kind = Kind::classifier;
  std::size_t input_len = 0;
  FeatureRows support_vectors;  // stored preprocessed
  std::vector<double> dual_coefs;  // regressor: alpha_i - alpha_i*
  double bias = 0.0;
  double gamma = 1.0;
  double c_penalty = 10.0;
  std::optional<double> epsilon;  // SVR tube, in target units
  std::vector<double> classes;    // ascending
  std::vector<PairModel> pair_models;
  Preprocess preprocess;
  TargetScale target;
  std::uint64_t seed = 0;

  /// Throws std::logic_error on structural violations.
  void check_invariants() const;
};

struct SvmParams {
  double c_penalty = 10.0;
  std::optional<double> gamma;  // default_gamma of the preprocessed rows when empty
  double epsilon = 1.0;         // SVR only, target units
  Preprocess preprocess;
  SmoOptions smo;
  std::uint64_t seed = 0;
};

/// One-vs-one SVC. Throws std::invalid_argument for fewer than two classes.
[[nodiscard]] KernelModel train_svc(const FeatureRows& windows, std::span<const double> labels,
                                    const SvmParams& params);
/// epsilon-SVR on standardized targets.
[[nodiscard]] KernelModel train_svr(const FeatureRows& windows, std::span<const double> targets,
                                    const SvmParams& params);

/// Class label (ties go to the lowest class) or a regression value clamped to [0, 100].
[[nodiscard]] double predict_value(const KernelModel& model, std::span<const double> window);

struct GridPoint {
  double c_penalty;
  double gamma;
  double score;  // accuracy for SVC, RMSE for SVR
};

struct GridResult {
  SvmParams best;
  std::vector<GridPoint> table;
};

/// C in {1, 10, 100} x gamma in {0.1, 1, 10} x default, scored on a seeded 20% holdout of the inputs.
[[nodiscard]] GridResult grid_search_svc(const FeatureRows& windows, std::span<const double> labels,
                                         const SvmParams& base);
[[nodiscard]] GridResult grid_search_svr(const FeatureRows& windows, std::span<const double> targets,
                                         const SvmParams& base);

}  // namespace firstcontact
