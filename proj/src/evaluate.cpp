#include "firstcontact/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace firstcontact {

bool is_classifier(const StiffnessModel& model) {
  if (const auto* k = std::get_if<KernelModel>(&model)) return k->kind == KernelModel::Kind::classifier;
  return std::get<ConvModel>(model).spec().head == ConvHead::softmax;
}

std::size_t input_len(const StiffnessModel& model) {
  if (const auto* k = std::get_if<KernelModel>(&model)) return k->input_len;
  return std::get<ConvModel>(model).spec().input_len;
}

double predict_value(const StiffnessModel& model, std::span<const double> window) {
  return std::visit([&](const auto& m) { return predict_value(m, window); }, model);
}

Prediction predict(const StiffnessModel& model, std::span<const double> window) {
  const auto t0 = std::chrono::steady_clock::now();
  const double v = predict_value(model, window);
  const auto t1 = std::chrono::steady_clock::now();
  return {v, std::chrono::duration<double, std::milli>(t1 - t0).count()};
}

InferenceStats summarize_latency(std::vector<double> elapsed_ms) {
  InferenceStats s;
  s.samples = elapsed_ms.size();
  if (elapsed_ms.empty()) return s;
  s.mean_ms = std::accumulate(elapsed_ms.begin(), elapsed_ms.end(), 0.0) / static_cast<double>(elapsed_ms.size());
  std::sort(elapsed_ms.begin(), elapsed_ms.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(elapsed_ms.size())));
  s.p99_ms = elapsed_ms[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

EvalReport evaluate(const StiffnessModel& model, const StiffnessSet& heldout, Task task) {
  if (heldout.size() == 0) throw std::invalid_argument("evaluate: empty held-out set");
  EvalReport r;
  r.task = task;
  r.samples = heldout.size();

  std::vector<double> predictions(heldout.size());
  std::vector<double> elapsed(heldout.size());
  for (std::size_t i = 0; i < heldout.size(); ++i) {
    const Prediction p = predict(model, heldout.windows[i]);
    predictions[i] = p.value;
    elapsed[i] = p.elapsed_ms;
    auto& obj = r.per_object[heldout.source[i]];
    obj.true_shore = heldout.shore[i];
    obj.predictions.push_back(p.value);
  }
  r.inference = summarize_latency(elapsed);

  double ss = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) ss += (predictions[i] - heldout.shore[i]) * (predictions[i] - heldout.shore[i]);
  r.mse_shore = ss / static_cast<double>(predictions.size());
  r.rmse_shore = std::sqrt(*r.mse_shore);

  if (task == Task::discrimination) {
    if (!is_classifier(model)) throw std::invalid_argument("evaluate: discrimination needs a classifier");
    r.classes = std::visit(
        [](const auto& m) -> std::vector<double> { return m.classes; }, model);
    const auto index_of = [&](double v) -> std::size_t {
      const auto it = std::find(r.classes.begin(), r.classes.end(), v);
      if (it == r.classes.end()) throw std::invalid_argument("evaluate: label outside the model's classes");
      return static_cast<std::size_t>(it - r.classes.begin());
    };
    r.confusion.assign(r.classes.size(), std::vector<std::size_t>(r.classes.size(), 0));
    std::size_t hit = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      ++r.confusion[index_of(heldout.shore[i])][index_of(predictions[i])];
      hit += predictions[i] == heldout.shore[i];
    }
    r.accuracy = static_cast<double>(hit) / static_cast<double>(predictions.size());
  }
  return r;
}

}  // namespace firstcontact
