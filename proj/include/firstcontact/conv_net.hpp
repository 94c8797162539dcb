#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "firstcontact/kernel_svm.hpp"

namespace firstcontact {

struct LayerSpec {
  enum class Type { conv1d, relu, maxpool, dense };
  Type type = Type::relu;
  std::size_t channels = 0;    // conv1d output channels, dense units
  std::size_t kernel_len = 0;  // conv1d only
  std::size_t stride = 1;      // conv1d stride, maxpool size

  static LayerSpec conv1d(std::size_t channels, std::size_t kernel_len, std::size_t stride = 1) {
    return {Type::conv1d, channels, kernel_len, stride};
  }
  static LayerSpec relu() { return {Type::relu, 0, 0, 1}; }
  static LayerSpec maxpool(std::size_t size) { return {Type::maxpool, 0, 0, size}; }
  static LayerSpec dense(std::size_t units) { return {Type::dense, units, 0, 1}; }
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

enum class ConvHead { scalar, softmax };

struct ConvSpec {
  std::size_t input_len = 74;
  std::vector<LayerSpec> layers;
  ConvHead head = ConvHead::scalar;
};

/// conv(8x7) relu pool2 conv(16x5) relu pool2 dense(32) relu dense(outputs).
[[nodiscard]] ConvSpec default_conv_spec(ConvHead head, std::size_t outputs, std::size_t input_len = 74);

inline constexpr std::size_t kMaxConvParams = 100000;

/// Compact 1-D convolutional network, valid padding, float64 throughout.
/// Parameters live in one flat vector; each layer owns a [weights | bias] slice.
class ConvModel {
 public:
  struct Tape {
    std::vector<std::vector<double>> acts;  // acts[0] is the input, acts[k+1] the output of layer k
    std::vector<std::vector<std::size_t>> argmax;
  };

  ConvModel() = default;
  /// He-normal weights, zero biases. Throws std::invalid_argument if shapes do
  /// not chain or the parameter count exceeds kMaxConvParams.
  [[nodiscard]] static ConvModel build(const ConvSpec& spec, std::uint64_t seed);

  [[nodiscard]] const ConvSpec& spec() const { return spec_; }
  [[nodiscard]] std::size_t param_count() const { return params_.size(); }
  [[nodiscard]] std::span<double> params() { return params_; }
  [[nodiscard]] std::span<const double> params() const { return params_; }
  [[nodiscard]] std::size_t output_size() const;

  /// Raw head output: logits for softmax, one value for scalar.
  [[nodiscard]] std::vector<double> forward(std::span<const double> input) const;
  std::vector<double> forward(std::span<const double> input, Tape& tape) const;
  /// Adds d(loss)/d(params) into grad_params given d(loss)/d(output).
  void backward(const Tape& tape, std::span<const double> grad_output, std::span<double> grad_params) const;

  Preprocess preprocess;
  TargetScale target;
  std::vector<double> classes;  // softmax head: class value per logit

 private:
  struct Shape {
    std::size_t channels = 1;
    std::size_t length = 0;
    [[nodiscard]] std::size_t size() const { return channels * length; }
  };
  struct Layer {
    LayerSpec spec;
    Shape in;
    Shape out;
    std::size_t w_off = 0;
    std::size_t w_size = 0;
    std::size_t b_off = 0;
    std::size_t b_size = 0;
  };

  ConvSpec spec_;
  std::vector<Layer> layers_;
  std::vector<double> params_;
};

/// Class value (softmax, ties to the lowest class) or Shore A clamped to [0, 100].
[[nodiscard]] double predict_value(const ConvModel& model, std::span<const double> window);

struct TrainSchedule {
  double lr0 = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t epochs = 40;
  std::size_t decay_every = 5;
  double decay_factor = 0.5;
  std::size_t batch_size = 32;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
  /// With a validation set, keep the weights of the epoch with the lowest validation loss.
  bool restore_best = true;

  /// lr0 * decay_factor ^ floor(epoch / decay_every)
  [[nodiscard]] double lr_at(std::size_t epoch) const;
};

class Adam {
 public:
  Adam(std::size_t n_params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(std::span<double> params, std::span<const double> grads, double lr);
  [[nodiscard]] std::size_t steps() const { return t_; }

 private:
  double beta1_;
  double beta2_;
  double eps_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

struct TrainLog {
  std::vector<double> epoch_loss;  // mean training loss per epoch (standardized units)
  std::vector<double> lr;
  std::vector<double> validation_loss;  // empty without a validation set
  std::optional<std::size_t> best_epoch;  // set when best weights were restored
};

/// Fits preprocessing (and target scale or class list) on `windows`, then runs
/// mini-batch Adam with the step schedule. Scalar heads minimise MSE on
/// standardized targets; softmax heads minimise cross-entropy.
TrainLog train_conv(ConvModel& model, const FeatureRows& windows, std::span<const double> targets,
                    const TrainSchedule& schedule, const FeatureRows* valid_windows = nullptr,
                    std::span<const double> valid_targets = {});

}  // namespace firstcontact
