#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "firstcontact/conv_net.hpp"
#include "firstcontact/evaluate.hpp"
#include "firstcontact/features.hpp"
#include "firstcontact/kernel_svm.hpp"
#include "firstcontact/synth.hpp"

namespace firstcontact {

enum class ModelKind { svc, svr, cnn_classifier, cnn_regressor };

[[nodiscard]] std::optional<ModelKind> parse_model_kind(std::string_view name);
[[nodiscard]] std::string_view model_kind_name(ModelKind kind);
[[nodiscard]] bool is_classifier(ModelKind kind);

/// Stiffness windows for a corpus, with onsets located by a threshold detector
/// calibrated on an idle recording of the same simulated sensor.
[[nodiscard]] StiffnessSet corpus_windows(const std::vector<GraspTrace>& traces, const SynthConfig& cfg,
                                          const WindowSpec& spec, double alpha = 0.5);

struct TrainOptions {
  SvmParams svm;
  bool grid = false;  // kernel models only
  TrainSchedule schedule;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct TrainOutcome {
  StiffnessModel model;
  Split split;
  std::optional<GridResult> grid;
  TrainLog conv_log;
};

/// Holds out a seeded validation split, then fits the requested model on the rest.
[[nodiscard]] TrainOutcome train_stiffness(ModelKind kind, const StiffnessSet& data, const TrainOptions& opts);

}  // namespace firstcontact
