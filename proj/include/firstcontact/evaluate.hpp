#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "firstcontact/conv_net.hpp"
#include "firstcontact/features.hpp"
#include "firstcontact/kernel_svm.hpp"

namespace firstcontact {

using StiffnessModel = std::variant<KernelModel, ConvModel>;

[[nodiscard]] bool is_classifier(const StiffnessModel& model);
[[nodiscard]] std::size_t input_len(const StiffnessModel& model);
[[nodiscard]] double predict_value(const StiffnessModel& model, std::span<const double> window);

struct Prediction {
  double value = 0.0;
  double elapsed_ms = 0.0;  // steady_clock around the model call only
};

[[nodiscard]] Prediction predict(const StiffnessModel& model, std::span<const double> window);

struct InferenceStats {
  double mean_ms = 0.0;
  double p99_ms = 0.0;
  std::size_t samples = 0;
};

/// Nearest-rank p99.
[[nodiscard]] InferenceStats summarize_latency(std::vector<double> elapsed_ms);

enum class Task { discrimination, regression };

struct ObjectPredictions {
  double true_shore = 0.0;
  std::vector<double> predictions;
};

struct EvalReport {
  Task task = Task::regression;
  std::size_t samples = 0;
  std::optional<double> accuracy;
  std::vector<double> classes;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::optional<double> mse_shore;
  std::optional<double> rmse_shore;
  std::map<std::string, ObjectPredictions> per_object;
  InferenceStats inference;
};

/// Discrimination needs a classifier and held-out labels drawn from its classes.
[[nodiscard]] EvalReport evaluate(const StiffnessModel& model, const StiffnessSet& heldout, Task task);

}  // namespace firstcontact
