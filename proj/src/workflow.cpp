#include "firstcontact/workflow.hpp"

#include <algorithm>
#include <stdexcept>

namespace firstcontact {

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  if (name == "svc") return ModelKind::svc;
  if (name == "svr") return ModelKind::svr;
  if (name == "cnn-classifier") return ModelKind::cnn_classifier;
  if (name == "cnn-regressor") return ModelKind::cnn_regressor;
  return std::nullopt;
}

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::svc: return "svc";
    case ModelKind::svr: return "svr";
    case ModelKind::cnn_classifier: return "cnn-classifier";
    case ModelKind::cnn_regressor: return "cnn-regressor";
  }
  return "?";
}

bool is_classifier(ModelKind kind) { return kind == ModelKind::svc || kind == ModelKind::cnn_classifier; }

StiffnessSet corpus_windows(const std::vector<GraspTrace>& traces, const SynthConfig& cfg, const WindowSpec& spec,
                            double alpha) {
  return stiffness_windows(traces, spec, calibrated_threshold(cfg, cfg.seed, 2000, alpha), alpha);
}

TrainOutcome train_stiffness(ModelKind kind, const StiffnessSet& data, const TrainOptions& opts) {
  if (data.size() == 0) throw std::invalid_argument("train_stiffness: empty training set");
  TrainOutcome out;
  out.split = split_indices(data.size(), opts.validation_fraction, opts.seed);
  const StiffnessSet train = data.subset(out.split.train);
  const StiffnessSet valid = data.subset(out.split.validation);

  switch (kind) {
    case ModelKind::svc:
    case ModelKind::svr: {
      SvmParams params = opts.svm;
      params.seed = opts.seed;
      params.preprocess = Preprocess::fit_window_mean(train.windows);
      if (opts.grid) {
        out.grid = kind == ModelKind::svc ? grid_search_svc(train.windows, train.shore, params)
                                          : grid_search_svr(train.windows, train.shore, params);
        params = out.grid->best;
      }
      out.model = kind == ModelKind::svc ? train_svc(train.windows, train.shore, params)
                                         : train_svr(train.windows, train.shore, params);
      break;
    }
    case ModelKind::cnn_classifier:
    case ModelKind::cnn_regressor: {
      const bool softmax = kind == ModelKind::cnn_classifier;
      std::size_t outputs = 1;
      if (softmax) {
        std::vector<double> classes = train.shore;
        std::sort(classes.begin(), classes.end());
        classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
        outputs = classes.size();
      }
      const std::size_t len = train.windows.front().size();
      ConvModel m = ConvModel::build(default_conv_spec(softmax ? ConvHead::softmax : ConvHead::scalar, outputs, len),
                                     derive_seed(opts.seed, 0x636E6E));
      TrainSchedule schedule = opts.schedule;
      schedule.seed = opts.seed;
      out.conv_log = valid.size() > 0 ? train_conv(m, train.windows, train.shore, schedule, &valid.windows, valid.shore)
                                      : train_conv(m, train.windows, train.shore, schedule);
      out.model = std::move(m);
      break;
    }
  }
  return out;
}

}  // namespace firstcontact
