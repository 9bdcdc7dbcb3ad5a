#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "nosignal/game.hpp"

namespace nosignal {

enum class Activation { kRelu, kSigmoid, kIdentity };

std::string activation_name(Activation a);
Activation parse_activation(const std::string& name);

/// y = act(W x + b); W is row-major with `out` rows of length `in`.
struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weights;
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;

  double w(int row, int col) const {
    return weights[static_cast<std::size_t>(row) * static_cast<std::size_t>(in) +
                   static_cast<std::size_t>(col)];
  }
};

struct ForwardResult {
  std::vector<double> logits;
  std::vector<double> h;  // output of layer `hidden_tap`
};

struct LogitTarget {
  int index = 0;
};
struct LogOddsTarget {
  int label = 0;
};
/// sum_k |h_k(input) - reference_k|
struct FeatureL1Target {
  std::vector<double> reference;
};
using GradientTarget = std::variant<LogitTarget, LogOddsTarget, FeatureL1Target>;

/// Feed-forward classifier. The final layer emits class logits; `hidden_tap`
/// names the layer whose output is the feature vector h (by default the
/// second-last layer). ReLU uses subgradient 0 at 0.
class MlpModel {
 public:
  MlpModel() = default;
  /// Throws DimensionError if layer sizes do not chain, ArgumentError if
  /// there are fewer than 2 layers or hidden_tap is not an inner layer.
  MlpModel(std::vector<DenseLayer> layers, int hidden_tap);

  int input_size() const { return layers_.front().in; }
  int classes() const { return layers_.back().out; }
  int hidden_tap() const { return hidden_tap_; }
  int feature_size() const { return layers_[static_cast<std::size_t>(hidden_tap_)].out; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  ForwardResult forward(std::span<const double> input) const;

  /// d target / d input by backpropagation.
  std::vector<double> input_gradient(std::span<const double> input,
                                     const GradientTarget& target) const;

  /// Vector-Jacobian product of h: returns J_h(input)^T cotangent.
  std::vector<double> feature_vjp(std::span<const double> input,
                                  std::span<const double> cotangent) const;

  /// p(label | input) under softmax, and optionally its input gradient.
  double class_probability(std::span<const double> input, int label,
                           std::span<double> grad = {}) const;

  nlohmann::json to_json() const;
  static MlpModel from_json(const nlohmann::json& j);
  static MlpModel load(const std::string& path);
  void save(const std::string& path) const;

 private:
  struct Trace {
    std::vector<std::vector<double>> pre;   // W a + b per layer
    std::vector<std::vector<double>> post;  // activations; post[l] feeds layer l+1
  };
  Trace run(std::span<const double> input) const;
  std::vector<double> backprop(const Trace& trace, int from_layer,
                               std::vector<double> cotangent) const;

  std::vector<DenseLayer> layers_;
  int hidden_tap_ = 0;
};

inline ForwardResult forward(const MlpModel& model, std::span<const double> input) {
  return model.forward(input);
}
inline std::vector<double> input_gradient(const MlpModel& model, std::span<const double> input,
                                          const GradientTarget& target) {
  return model.input_gradient(input, target);
}

/// Labelled rows; labels in [0, classes). feature_means is recomputed on
/// construction.
struct Dataset {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::vector<double> feature_means;
  int classes = 0;

  std::size_t size() const { return rows.size(); }
  int features() const { return rows.empty() ? 0 : static_cast<int>(rows.front().size()); }
};

Dataset make_dataset(std::vector<std::vector<double>> rows, std::vector<int> labels,
                     std::vector<std::string> columns = {});
/// CSV with a header row; the last column is the integer label.
Dataset load_dataset_csv(const std::string& path);
void save_dataset_csv(const Dataset& data, const std::string& path);

/// Two or more Gaussian blobs in [0,1]^dim, one per class; a toy tabular
/// stand-in for real data.
Dataset make_blobs(std::size_t per_class, int dim, int classes, double spread, std::uint64_t seed);

struct Architecture {
  std::vector<int> hidden;  // widths of hidden layers; at least one
  Activation hidden_activation = Activation::kRelu;
};
/// "16,8" or "16,8:sigmoid".
Architecture parse_architecture(const std::string& text);

struct TrainOptions {
  int epochs = 200;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
  std::size_t batch_size = 16;
};

struct TrainResult {
  MlpModel model;
  std::vector<double> loss_trace;  // mean cross-entropy per epoch
};

/// Mini-batch gradient descent on softmax cross-entropy. Deterministic under
/// the seed. Throws ArgumentError on an empty dataset, TrainingError if the
/// loss becomes non-finite.
TrainResult train(const Dataset& data, const Architecture& arch, const TrainOptions& options);

double training_accuracy(const MlpModel& model, const Dataset& data);

/// Game backend: f(input) = p(label | input).
class MlpFunction final : public ValueFunction {
 public:
  MlpFunction(MlpModel model, int label);

  int arity() const override { return model_.input_size(); }
  double value(std::span<const double> input) const override {
    return model_.class_probability(input, label_);
  }
  bool differentiable() const override { return true; }
  double value_and_gradient(std::span<const double> input, std::span<double> grad) const override {
    return model_.class_probability(input, label_, grad);
  }
  std::string describe() const override { return "mlp"; }

  const MlpModel& model() const { return model_; }
  int label() const { return label_; }

 private:
  MlpModel model_;
  int label_;
};

}  // namespace nosignal
