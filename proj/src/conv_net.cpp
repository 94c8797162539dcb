#include "firstcontact/conv_net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "firstcontact/random.hpp"

namespace firstcontact {

ConvSpec default_conv_spec(ConvHead head, std::size_t outputs, std::size_t input_len) {
  ConvSpec s;
  s.input_len = input_len;
  s.head = head;
  s.layers = {LayerSpec::conv1d(8, 7),  LayerSpec::relu(), LayerSpec::maxpool(2),
              LayerSpec::conv1d(16, 5), LayerSpec::relu(), LayerSpec::maxpool(2),
              LayerSpec::dense(32),     LayerSpec::relu(), LayerSpec::dense(outputs)};
  return s;
}

ConvModel ConvModel::build(const ConvSpec& spec, std::uint64_t seed) {
  if (spec.input_len == 0) throw std::invalid_argument("ConvModel: input_len must be positive");
  if (spec.layers.empty()) throw std::invalid_argument("ConvModel: no layers");
  ConvModel m;
  m.spec_ = spec;
  Shape shape{1, spec.input_len};
  std::size_t offset = 0;
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const LayerSpec& ls = spec.layers[li];
    Layer layer{ls, shape, shape, 0, 0, 0, 0};
    switch (ls.type) {
      case LayerSpec::Type::conv1d:
        if (ls.channels == 0 || ls.kernel_len == 0 || ls.stride == 0 || ls.kernel_len > shape.length)
          throw std::invalid_argument("ConvModel: conv1d layer " + std::to_string(li) + " does not fit its input");
        layer.out = {ls.channels, (shape.length - ls.kernel_len) / ls.stride + 1};
        layer.w_size = ls.channels * shape.channels * ls.kernel_len;
        layer.b_size = ls.channels;
        break;
      case LayerSpec::Type::relu:
        break;
      case LayerSpec::Type::maxpool:
        if (ls.stride == 0 || ls.stride > shape.length)
          throw std::invalid_argument("ConvModel: maxpool layer " + std::to_string(li) + " does not fit its input");
        layer.out = {shape.channels, shape.length / ls.stride};
        break;
      case LayerSpec::Type::dense:
        if (ls.channels == 0) throw std::invalid_argument("ConvModel: dense layer needs units");
        layer.out = {ls.channels, 1};
        layer.w_size = ls.channels * shape.size();
        layer.b_size = ls.channels;
        break;
    }
    layer.w_off = offset;
    layer.b_off = offset + layer.w_size;
    offset += layer.w_size + layer.b_size;
    shape = layer.out;
    m.layers_.push_back(layer);
  }
  if (spec.head == ConvHead::scalar && shape.size() != 1)
    throw std::invalid_argument("ConvModel: scalar head needs exactly one output");
  if (spec.head == ConvHead::softmax && shape.size() < 2)
    throw std::invalid_argument("ConvModel: softmax head needs at least two outputs");
  if (offset > kMaxConvParams)
    throw std::invalid_argument("ConvModel: " + std::to_string(offset) + " parameters exceeds the limit of " +
                                std::to_string(kMaxConvParams));

  m.params_.assign(offset, 0.0);
  Rng rng(derive_seed(seed, 0x636F6E76));
  for (const Layer& l : m.layers_) {
    if (l.w_size == 0) continue;
    const double fan_in = static_cast<double>(l.w_size / l.b_size);
    std::normal_distribution<double> init(0.0, std::sqrt(2.0 / fan_in));
    for (std::size_t i = 0; i < l.w_size; ++i) m.params_[l.w_off + i] = init(rng);
  }
  return m;
}

std::size_t ConvModel::output_size() const { return layers_.empty() ? 0 : layers_.back().out.size(); }

std::vector<double> ConvModel::forward(std::span<const double> input) const {
  Tape tape;
  return forward(input, tape);
}

std::vector<double> ConvModel::forward(std::span<const double> input, Tape& tape) const {
  if (input.size() != spec_.input_len)
    throw std::invalid_argument("ConvModel::forward: expected " + std::to_string(spec_.input_len) +
                                " samples, got " + std::to_string(input.size()));
  tape.acts.resize(layers_.size() + 1);
  tape.argmax.resize(layers_.size());
  tape.acts[0].assign(input.begin(), input.end());
  const double* p = params_.data();
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const Layer& l = layers_[li];
    const std::vector<double>& in = tape.acts[li];
    std::vector<double>& out = tape.acts[li + 1];
    out.assign(l.out.size(), 0.0);
    switch (l.spec.type) {
      case LayerSpec::Type::conv1d: {
        const std::size_t k_len = l.spec.kernel_len;
        for (std::size_t o = 0; o < l.out.channels; ++o) {
          double* dst = out.data() + o * l.out.length;
          std::fill(dst, dst + l.out.length, p[l.b_off + o]);
          for (std::size_t c = 0; c < l.in.channels; ++c) {
            const double* w = p + l.w_off + (o * l.in.channels + c) * k_len;
            const double* src = in.data() + c * l.in.length;
            for (std::size_t t = 0; t < l.out.length; ++t) {
              const double* x = src + t * l.spec.stride;
              double acc = 0.0;
              for (std::size_t k = 0; k < k_len; ++k) acc += w[k] * x[k];
              dst[t] += acc;
            }
          }
        }
        break;
      }
      case LayerSpec::Type::relu:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
        break;
      case LayerSpec::Type::maxpool: {
        auto& arg = tape.argmax[li];
        arg.assign(out.size(), 0);
        const std::size_t size = l.spec.stride;
        for (std::size_t c = 0; c < l.out.channels; ++c) {
          for (std::size_t t = 0; t < l.out.length; ++t) {
            std::size_t best = c * l.in.length + t * size;
            for (std::size_t k = 1; k < size; ++k) {
              const std::size_t idx = c * l.in.length + t * size + k;
              if (in[idx] > in[best]) best = idx;
            }
            out[c * l.out.length + t] = in[best];
            arg[c * l.out.length + t] = best;
          }
        }
        break;
      }
      case LayerSpec::Type::dense: {
        const std::size_t n_in = l.in.size();
        for (std::size_t u = 0; u < l.out.channels; ++u) {
          const double* w = p + l.w_off + u * n_in;
          double acc = p[l.b_off + u];
          for (std::size_t i = 0; i < n_in; ++i) acc += w[i] * in[i];
          out[u] = acc;
        }
        break;
      }
    }
  }
  return tape.acts.back();
}

void ConvModel::backward(const Tape& tape, std::span<const double> grad_output, std::span<double> grad_params) const {
  if (grad_params.size() != params_.size()) throw std::invalid_argument("ConvModel::backward: gradient size mismatch");
  if (grad_output.size() != output_size()) throw std::invalid_argument("ConvModel::backward: output size mismatch");
  if (tape.acts.size() != layers_.size() + 1) throw std::invalid_argument("ConvModel::backward: tape not recorded");
  std::vector<double> g(grad_output.begin(), grad_output.end());
  std::vector<double> g_in;
  const double* p = params_.data();
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Layer& l = layers_[li];
    const std::vector<double>& in = tape.acts[li];
    const bool need_input_grad = li > 0;
    g_in.assign(need_input_grad ? l.in.size() : 0, 0.0);
    switch (l.spec.type) {
      case LayerSpec::Type::conv1d: {
        const std::size_t k_len = l.spec.kernel_len;
        for (std::size_t o = 0; o < l.out.channels; ++o) {
          const double* go = g.data() + o * l.out.length;
          double gb = 0.0;
          for (std::size_t t = 0; t < l.out.length; ++t) gb += go[t];
          grad_params[l.b_off + o] += gb;
          for (std::size_t c = 0; c < l.in.channels; ++c) {
            const std::size_t w_base = l.w_off + (o * l.in.channels + c) * k_len;
            const double* src = in.data() + c * l.in.length;
            for (std::size_t k = 0; k < k_len; ++k) {
              double acc = 0.0;
              for (std::size_t t = 0; t < l.out.length; ++t) acc += go[t] * src[t * l.spec.stride + k];
              grad_params[w_base + k] += acc;
            }
            if (need_input_grad) {
              double* gi = g_in.data() + c * l.in.length;
              for (std::size_t t = 0; t < l.out.length; ++t)
                for (std::size_t k = 0; k < k_len; ++k) gi[t * l.spec.stride + k] += go[t] * p[w_base + k];
            }
          }
        }
        break;
      }
      case LayerSpec::Type::relu:
        if (need_input_grad)
          for (std::size_t i = 0; i < g_in.size(); ++i) g_in[i] = in[i] > 0.0 ? g[i] : 0.0;
        break;
      case LayerSpec::Type::maxpool:
        if (need_input_grad)
          for (std::size_t i = 0; i < g.size(); ++i) g_in[tape.argmax[li][i]] += g[i];
        break;
      case LayerSpec::Type::dense: {
        const std::size_t n_in = l.in.size();
        for (std::size_t u = 0; u < l.out.channels; ++u) {
          const double gu = g[u];
          grad_params[l.b_off + u] += gu;
          double* gw = grad_params.data() + l.w_off + u * n_in;
          for (std::size_t i = 0; i < n_in; ++i) gw[i] += gu * in[i];
          if (need_input_grad) {
            const double* w = p + l.w_off + u * n_in;
            for (std::size_t i = 0; i < n_in; ++i) g_in[i] += gu * w[i];
          }
        }
        break;
      }
    }
    g.swap(g_in);
  }
}

double predict_value(const ConvModel& model, std::span<const double> window) {
  const std::vector<double> out = model.forward(model.preprocess.apply(window));
  if (model.spec().head == ConvHead::scalar) return std::clamp(model.target.inverse(out[0]), 0.0, 100.0);
  if (model.classes.size() != out.size()) throw std::logic_error("ConvModel: class list does not match head");
  const auto best = std::max_element(out.begin(), out.end());
  return model.classes[static_cast<std::size_t>(best - out.begin())];
}

double TrainSchedule::lr_at(std::size_t epoch) const {
  const std::size_t decays = decay_every > 0 ? epoch / decay_every : 0;
  return lr0 * std::pow(decay_factor, static_cast<double>(decays));
}

Adam::Adam(std::size_t n_params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(n_params, 0.0), v_(n_params, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw std::invalid_argument("Adam::step: parameter count mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

namespace {

/// Loss for one sample and its gradient w.r.t. the head output.
double sample_loss(const ConvModel& model, const std::vector<double>& out, double target, std::vector<double>& grad) {
  grad.assign(out.size(), 0.0);
  if (model.spec().head == ConvHead::scalar) {
    const double e = out[0] - model.target.forward(target);
    grad[0] = 2.0 * e;
    return e * e;
  }
  const auto it = std::lower_bound(model.classes.begin(), model.classes.end(), target);
  if (it == model.classes.end() || *it != target) throw std::invalid_argument("train_conv: unknown class label");
  const auto cls = static_cast<std::size_t>(it - model.classes.begin());
  const double mx = *std::max_element(out.begin(), out.end());
  double z = 0.0;
  for (double o : out) z += std::exp(o - mx);
  for (std::size_t k = 0; k < out.size(); ++k) grad[k] = std::exp(out[k] - mx) / z;
  const double loss = -std::log(std::max(grad[cls], 1e-300));
  grad[cls] -= 1.0;
  return loss;
}

double mean_loss(const ConvModel& model, const FeatureRows& inputs, std::span<const double> targets) {
  std::vector<double> g;
  double total = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) total += sample_loss(model, model.forward(inputs[i]), targets[i], g);
  return inputs.empty() ? 0.0 : total / static_cast<double>(inputs.size());
}

}  // namespace

TrainLog train_conv(ConvModel& model, const FeatureRows& windows, std::span<const double> targets,
                    const TrainSchedule& schedule, const FeatureRows* valid_windows,
                    std::span<const double> valid_targets) {
  if (windows.empty() || windows.size() != targets.size())
    throw std::invalid_argument("train_conv: need matching, non-empty windows and targets");
  if (schedule.batch_size == 0) throw std::invalid_argument("train_conv: batch_size must be positive");

  model.preprocess = Preprocess::fit_window_mean(windows);
  if (model.spec().head == ConvHead::scalar) {
    model.target = TargetScale::fit(targets);
  } else {
    model.classes.assign(targets.begin(), targets.end());
    std::sort(model.classes.begin(), model.classes.end());
    model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
    if (model.classes.size() != model.output_size())
      throw std::invalid_argument("train_conv: " + std::to_string(model.classes.size()) + " classes but " +
                                  std::to_string(model.output_size()) + " logits");
  }

  FeatureRows x;
  x.reserve(windows.size());
  for (const auto& w : windows) x.push_back(model.preprocess.apply(w));
  FeatureRows xv;
  if (valid_windows)
    for (const auto& w : *valid_windows) xv.push_back(model.preprocess.apply(w));

  TrainLog log;
  Adam adam(model.param_count(), schedule.beta1, schedule.beta2, schedule.adam_eps);
  std::vector<double> grad(model.param_count());
  std::vector<double> g_out;
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  ConvModel::Tape tape;
  std::vector<double> best_params;
  double best_loss = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 0; epoch < schedule.epochs; ++epoch) {
    const double lr = schedule.lr_at(epoch);
    Rng rng(derive_seed(schedule.seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += schedule.batch_size) {
      const std::size_t end = std::min(order.size(), start + schedule.batch_size);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const auto out = model.forward(x[i], tape);
        epoch_total += sample_loss(model, out, targets[i], g_out);
        for (double& v : g_out) v *= inv_b;
        model.backward(tape, g_out, grad);
      }
      adam.step(model.params(), grad, lr);
    }
    log.epoch_loss.push_back(epoch_total / static_cast<double>(x.size()));
    log.lr.push_back(lr);
    if (xv.empty()) continue;
    log.validation_loss.push_back(mean_loss(model, xv, valid_targets));
    if (schedule.restore_best && log.validation_loss.back() < best_loss) {
      best_loss = log.validation_loss.back();
      best_params.assign(model.params().begin(), model.params().end());
      log.best_epoch = epoch;
    }
  }
  if (!best_params.empty()) std::copy(best_params.begin(), best_params.end(), model.params().begin());
  return log;
}

}  // namespace firstcontact
