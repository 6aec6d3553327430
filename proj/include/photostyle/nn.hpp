#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "photostyle/image.hpp"

namespace photostyle::nn {

enum class LayerKind : std::uint8_t { Conv = 1, Relu = 2, MaxPool = 3, Flatten = 4, Dense = 5, Softmax = 6 };

std::string_view to_string(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  // conv
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;
  int stride = 1;
  int padding = 0;
  // maxpool (stride shared with conv)
  int window = 0;
  // dense
  int in_units = 0;
  int out_units = 0;

  static LayerSpec conv(int in_channels, int out_channels, int kernel, int stride = 1, int padding = 0);
  static LayerSpec relu();
  static LayerSpec maxpool(int window, int stride);
  static LayerSpec flatten();
  static LayerSpec dense(int in_units, int out_units);
  static LayerSpec softmax();

  // Number of trainable values (weights then biases).
  std::size_t param_count() const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

using Shape = std::vector<std::size_t>;

// Output shape of one layer; throws ShapeError naming the layer on mismatch.
Shape layer_output_shape(const LayerSpec& spec, const Shape& input, std::size_t layer_index);

// Per-layer parameter arrays. Conv: [out][in][k][k] kernel then [out] bias.
// Dense: [out][in] matrix then [out] bias. Weightless layers hold nothing.
using ParamSet = std::vector<std::vector<double>>;

class NetworkModel {
 public:
  NetworkModel() = default;
  NetworkModel(Shape input_shape, std::vector<LayerSpec> layers, ParamSet params,
               std::vector<std::string> class_labels);

  const Shape& input_shape() const { return input_shape_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  const ParamSet& params() const { return params_; }
  ParamSet& mutable_params() { return params_; }
  const std::vector<std::string>& class_labels() const { return class_labels_; }
  std::size_t num_classes() const { return class_labels_.size(); }
  std::size_t param_count() const;

  // Shape composition, single terminal softmax, parameter sizes, finiteness.
  void validate() const;

  friend bool operator==(const NetworkModel&, const NetworkModel&) = default;

 private:
  Shape input_shape_;
  std::vector<LayerSpec> layers_;
  ParamSet params_;
  std::vector<std::string> class_labels_;
};

// Kaiming-uniform kernels, zero biases, rounded to single precision.
NetworkModel make_network(Shape input_shape, std::vector<LayerSpec> layers,
                          std::vector<std::string> class_labels, std::uint64_t seed);

// conv3x3-relu-pool twice, dense, softmax over a 1-channel square input.
std::vector<LayerSpec> compact_architecture(int input_size, int num_classes);

// Re-draws the parameters of one layer with the seeded initializer.
void reinitialize_layer(NetworkModel& model, std::size_t layer, std::uint64_t seed);

using Gradients = ParamSet;

Gradients zero_gradients(const NetworkModel& model);

struct Example {
  Tensor input;
  std::size_t label = 0;
};

struct Dataset {
  std::vector<Example> examples;
  std::vector<std::string> class_labels;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
  // Labels in range, one shared input shape.
  void validate() const;
};

Tensor forward(const NetworkModel& model, const Tensor& input);

// Output of every layer for one input; entry 0 is the input itself.
std::vector<Tensor> forward_trace(const NetworkModel& model, const Tensor& input);

inline constexpr double kProbabilityFloor = 1e-12;

// Mean cross-entropy, -log max(p_true, 1e-12).
double loss(std::span<const Tensor> probabilities, std::span<const std::size_t> labels);

struct BackwardResult {
  double loss = 0.0;
  Gradients grads;
};

// Mean loss over the batch and its gradient with respect to every parameter.
BackwardResult backward(const NetworkModel& model, std::span<const Example> batch);

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 16;
  std::size_t iterations = 500;
  std::uint64_t seed = 1;
  double weight_decay = 0.0;

  void validate() const;
};

// Momentum state congruent with a model's parameters.
class SgdOptimizer {
 public:
  SgdOptimizer(const NetworkModel& model, TrainConfig config);

  // v <- momentum v - lr (g + decay w); w <- w + v. Layers before
  // frozen_layers are left untouched.
  void step(NetworkModel& model, const Gradients& grads, std::size_t frozen_layers = 0);

  const ParamSet& velocity() const { return velocity_; }

 private:
  TrainConfig config_;
  ParamSet velocity_;
};

// Single step from zero velocity.
NetworkModel sgd_step(NetworkModel model, const Gradients& grads, const TrainConfig& config);

struct TrainResult {
  NetworkModel model;
  std::vector<double> loss_history;
};

TrainResult train(NetworkModel model, const Dataset& data, const TrainConfig& config,
                  std::size_t frozen_layers = 0);

struct Prediction {
  std::size_t label = 0;
  double confidence = 0.0;
};

Prediction argmax(const Tensor& probabilities);
Prediction predict(const NetworkModel& model, const Tensor& input);

double accuracy(const NetworkModel& model, const Dataset& data);

// max |a - f| / max(|a|, |f|, 1e-8) between the supplied gradients and
// central differences; models with more than 10,000 parameters are checked
// on a seeded subsample.
double compare_gradients(const NetworkModel& model, const Example& example,
                         const Gradients& analytic, double epsilon, std::uint64_t seed = 0);
double gradient_check(const NetworkModel& model, const Example& example, double epsilon);

void save_model(const NetworkModel& model, const std::filesystem::path& path);
NetworkModel load_model(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_model(const NetworkModel& model);
NetworkModel deserialize_model(std::span<const std::uint8_t> bytes);

void write_loss_history(std::span<const double> history, const std::filesystem::path& path);

}  // namespace photostyle::nn
