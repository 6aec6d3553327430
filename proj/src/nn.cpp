#include "photostyle/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "photostyle/error.hpp"

namespace photostyle::nn {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv: return "conv";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    case LayerKind::Softmax: return "softmax";
  }
  return "unknown";
}

LayerSpec LayerSpec::conv(int in_channels, int out_channels, int kernel, int stride, int padding) {
  LayerSpec s;
  s.kind = LayerKind::Conv;
  s.in_channels = in_channels;
  s.out_channels = out_channels;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = padding;
  return s;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::maxpool(int window, int stride) {
  LayerSpec s;
  s.kind = LayerKind::MaxPool;
  s.window = window;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::Flatten;
  return s;
}

LayerSpec LayerSpec::dense(int in_units, int out_units) {
  LayerSpec s;
  s.kind = LayerKind::Dense;
  s.in_units = in_units;
  s.out_units = out_units;
  return s;
}

LayerSpec LayerSpec::softmax() {
  LayerSpec s;
  s.kind = LayerKind::Softmax;
  return s;
}

std::size_t LayerSpec::param_count() const {
  switch (kind) {
    case LayerKind::Conv:
      return static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel + out_channels;
    case LayerKind::Dense:
      return static_cast<std::size_t>(out_units) * in_units + out_units;
    default:
      return 0;
  }
}

namespace {

std::string layer_name(const LayerSpec& spec, std::size_t index) {
  return "layer " + std::to_string(index) + " (" + std::string(to_string(spec.kind)) + ")";
}

}  // namespace

Shape layer_output_shape(const LayerSpec& spec, const Shape& in, std::size_t index) {
  auto fail = [&](const std::string& why) -> Shape {
    throw ShapeError(layer_name(spec, index) + ": " + why + ", input shape " + shape_string(in));
  };
  switch (spec.kind) {
    case LayerKind::Conv: {
      if (spec.in_channels <= 0 || spec.out_channels <= 0 || spec.kernel <= 0 || spec.stride <= 0 ||
          spec.padding < 0) {
        return fail("invalid conv hyperparameters");
      }
      if (in.size() != 3 || in[0] != static_cast<std::size_t>(spec.in_channels)) {
        return fail("expects [" + std::to_string(spec.in_channels) + ",H,W]");
      }
      const long h = static_cast<long>(in[1]) + 2 * spec.padding - spec.kernel;
      const long w = static_cast<long>(in[2]) + 2 * spec.padding - spec.kernel;
      if (h < 0 || w < 0) return fail("kernel larger than padded input");
      return {static_cast<std::size_t>(spec.out_channels),
              static_cast<std::size_t>(h / spec.stride + 1),
              static_cast<std::size_t>(w / spec.stride + 1)};
    }
    case LayerKind::MaxPool: {
      if (spec.window <= 0 || spec.stride <= 0) return fail("invalid pooling hyperparameters");
      if (in.size() != 3) return fail("expects [C,H,W]");
      if (in[1] < static_cast<std::size_t>(spec.window) || in[2] < static_cast<std::size_t>(spec.window)) {
        return fail("window larger than input");
      }
      return {in[0], (in[1] - spec.window) / spec.stride + 1, (in[2] - spec.window) / spec.stride + 1};
    }
    case LayerKind::Flatten:
      return {shape_volume(in)};
    case LayerKind::Dense:
      if (spec.in_units <= 0 || spec.out_units <= 0) return fail("invalid dense sizes");
      if (in.size() != 1 || in[0] != static_cast<std::size_t>(spec.in_units)) {
        return fail("expects [" + std::to_string(spec.in_units) + "]");
      }
      return {static_cast<std::size_t>(spec.out_units)};
    case LayerKind::Relu:
      return in;
    case LayerKind::Softmax:
      if (in.size() != 1) return fail("expects a vector");
      return in;
  }
  return fail("unknown layer kind");
}

NetworkModel::NetworkModel(Shape input_shape, std::vector<LayerSpec> layers, ParamSet params,
                           std::vector<std::string> class_labels)
    : input_shape_(std::move(input_shape)),
      layers_(std::move(layers)),
      params_(std::move(params)),
      class_labels_(std::move(class_labels)) {
  validate();
}

std::size_t NetworkModel::param_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

void NetworkModel::validate() const {
  if (layers_.empty()) throw ValidationError("network has no layers");
  if (input_shape_.empty() || shape_volume(input_shape_) == 0) {
    throw ValidationError("network input shape " + shape_string(input_shape_) + " is empty");
  }
  if (params_.size() != layers_.size()) {
    throw ValidationError("network has " + std::to_string(layers_.size()) + " layers but " +
                          std::to_string(params_.size()) + " parameter arrays");
  }
  Shape shape = input_shape_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& spec = layers_[i];
    shape = layer_output_shape(spec, shape, i);
    if (spec.kind == LayerKind::Softmax && i + 1 != layers_.size()) {
      throw ValidationError(layer_name(spec, i) + ": softmax must be the final layer");
    }
    if (params_[i].size() != spec.param_count()) {
      throw ValidationError(layer_name(spec, i) + ": expected " + std::to_string(spec.param_count()) +
                            " parameters, found " + std::to_string(params_[i].size()));
    }
    for (double v : params_[i]) {
      if (!std::isfinite(v)) throw ValidationError(layer_name(spec, i) + ": non-finite weight");
    }
  }
  if (layers_.back().kind != LayerKind::Softmax) {
    throw ValidationError("network must end with a softmax layer");
  }
  if (shape[0] != class_labels_.size()) {
    throw ValidationError("network emits " + std::to_string(shape[0]) + " classes but has " +
                          std::to_string(class_labels_.size()) + " labels");
  }
}

namespace {

std::size_t fan_in(const LayerSpec& s) {
  return s.kind == LayerKind::Conv ? static_cast<std::size_t>(s.in_channels) * s.kernel * s.kernel
                                   : static_cast<std::size_t>(s.in_units);
}

std::size_t weight_count(const LayerSpec& s) {
  return s.kind == LayerKind::Conv ? static_cast<std::size_t>(s.out_channels) * fan_in(s)
                                   : static_cast<std::size_t>(s.out_units) * s.in_units;
}

// Rounds to single precision; out-of-range values become infinities instead
// of undefined float conversions.
double to_single(double v) {
  if (std::abs(v) > std::numeric_limits<float>::max()) return v * std::numeric_limits<double>::infinity();
  return static_cast<float>(v);
}

std::vector<double> init_layer(const LayerSpec& spec, std::mt19937_64& rng) {
  std::vector<double> p(spec.param_count(), 0.0);
  if (p.empty()) return p;
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in(spec)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  const std::size_t nw = weight_count(spec);
  for (std::size_t i = 0; i < nw; ++i) p[i] = to_single(dist(rng));
  return p;
}

}  // namespace

NetworkModel make_network(Shape input_shape, std::vector<LayerSpec> layers,
                          std::vector<std::string> class_labels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParamSet params;
  params.reserve(layers.size());
  for (const auto& spec : layers) params.push_back(init_layer(spec, rng));
  return NetworkModel(std::move(input_shape), std::move(layers), std::move(params),
                      std::move(class_labels));
}

std::vector<LayerSpec> compact_architecture(int input_size, int num_classes) {
  if (input_size < 4 || input_size % 4 != 0) {
    throw ValidationError("compact architecture needs an input size divisible by 4, got " +
                          std::to_string(input_size));
  }
  const int pooled = input_size / 4;
  return {LayerSpec::conv(1, 8, 3, 1, 1), LayerSpec::relu(),    LayerSpec::maxpool(2, 2),
          LayerSpec::conv(8, 16, 3, 1, 1), LayerSpec::relu(),   LayerSpec::maxpool(2, 2),
          LayerSpec::flatten(),           LayerSpec::dense(16 * pooled * pooled, num_classes),
          LayerSpec::softmax()};
}

void reinitialize_layer(NetworkModel& model, std::size_t layer, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  model.mutable_params().at(layer) = init_layer(model.layers().at(layer), rng);
}

Gradients zero_gradients(const NetworkModel& model) {
  Gradients g;
  g.reserve(model.params().size());
  for (const auto& p : model.params()) g.emplace_back(p.size(), 0.0);
  return g;
}

void Dataset::validate() const {
  if (examples.empty()) return;
  const auto& shape = examples.front().input.shape();
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].label >= class_labels.size()) {
      throw LabelError("example " + std::to_string(i) + " has label " +
                       std::to_string(examples[i].label) + " but only " +
                       std::to_string(class_labels.size()) + " classes exist");
    }
    if (examples[i].input.shape() != shape) {
      throw ShapeError("example " + std::to_string(i) + " has shape " +
                       shape_string(examples[i].input.shape()) + ", expected " + shape_string(shape));
    }
  }
}

// ---- layer kernels ----

namespace {

struct Dims {
  std::size_t c, h, w;
};

Dims dims3(const Shape& s) { return {s[0], s[1], s[2]}; }

void conv_forward(const LayerSpec& s, const std::vector<double>& p, const Tensor& in, Tensor& out) {
  const auto [ic, ih, iw] = dims3(in.shape());
  const auto [oc, oh, ow] = dims3(out.shape());
  const std::size_t k = s.kernel;
  const double* bias = p.data() + oc * ic * k * k;
  const auto src = in.data();
  auto dst = out.data();
  for (std::size_t o = 0; o < oc; ++o) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = bias[o];
        for (std::size_t c = 0; c < ic; ++c) {
          const double* wk = p.data() + ((o * ic + c) * k) * k;
          for (std::size_t ky = 0; ky < k; ++ky) {
            const long sy = static_cast<long>(y * s.stride + ky) - s.padding;
            if (sy < 0 || sy >= static_cast<long>(ih)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long sx = static_cast<long>(x * s.stride + kx) - s.padding;
              if (sx < 0 || sx >= static_cast<long>(iw)) continue;
              acc += wk[ky * k + kx] * src[(c * ih + sy) * iw + sx];
            }
          }
        }
        dst[(o * oh + y) * ow + x] = acc;
      }
    }
  }
}

void conv_backward(const LayerSpec& s, const std::vector<double>& p, const Tensor& in,
                   std::span<const double> delta, const Shape& out_shape, std::vector<double>& grad,
                   std::vector<double>* din) {
  const auto [ic, ih, iw] = dims3(in.shape());
  const auto [oc, oh, ow] = dims3(out_shape);
  const std::size_t k = s.kernel;
  const auto src = in.data();
  double* gbias = grad.data() + oc * ic * k * k;
  for (std::size_t o = 0; o < oc; ++o) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const double d = delta[(o * oh + y) * ow + x];
        if (d == 0.0) continue;
        gbias[o] += d;
        for (std::size_t c = 0; c < ic; ++c) {
          const std::size_t wbase = ((o * ic + c) * k) * k;
          for (std::size_t ky = 0; ky < k; ++ky) {
            const long sy = static_cast<long>(y * s.stride + ky) - s.padding;
            if (sy < 0 || sy >= static_cast<long>(ih)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long sx = static_cast<long>(x * s.stride + kx) - s.padding;
              if (sx < 0 || sx >= static_cast<long>(iw)) continue;
              const std::size_t si = (c * ih + sy) * iw + sx;
              grad[wbase + ky * k + kx] += d * src[si];
              if (din) (*din)[si] += d * p[wbase + ky * k + kx];
            }
          }
        }
      }
    }
  }
}

// Index of the winning input for each pooled output; ties go to the first.
void maxpool_forward(const LayerSpec& s, const Tensor& in, Tensor& out,
                     std::vector<std::size_t>& argmax) {
  const auto [c, ih, iw] = dims3(in.shape());
  const auto [oc, oh, ow] = dims3(out.shape());
  (void)oc;
  const auto src = in.data();
  auto dst = out.data();
  argmax.assign(dst.size(), 0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        std::size_t best = (ch * ih + y * s.stride) * iw + x * s.stride;
        for (int wy = 0; wy < s.window; ++wy) {
          for (int wx = 0; wx < s.window; ++wx) {
            const std::size_t i = (ch * ih + y * s.stride + wy) * iw + x * s.stride + wx;
            if (src[i] > src[best]) best = i;
          }
        }
        const std::size_t o = (ch * oh + y) * ow + x;
        dst[o] = src[best];
        argmax[o] = best;
      }
    }
  }
}

void dense_forward(const LayerSpec& s, const std::vector<double>& p, const Tensor& in, Tensor& out) {
  const std::size_t ni = s.in_units, no = s.out_units;
  const double* bias = p.data() + no * ni;
  const auto src = in.data();
  auto dst = out.data();
  for (std::size_t j = 0; j < no; ++j) {
    const double* row = p.data() + j * ni;
    double acc = bias[j];
    for (std::size_t i = 0; i < ni; ++i) acc += row[i] * src[i];
    dst[j] = acc;
  }
}

void softmax_inplace(std::span<double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (auto& x : v) {
    x = std::exp(x - m);
    sum += x;
  }
  for (auto& x : v) x /= sum;
}

struct Trace {
  std::vector<Tensor> acts;                        // acts[i] is the input to layer i
  std::vector<std::vector<std::size_t>> pool_idx;  // per layer, maxpool only
};

Trace run_forward(const NetworkModel& model, const Tensor& input) {
  if (input.shape() != model.input_shape()) {
    throw ShapeError("layer 0 (" + std::string(to_string(model.layers()[0].kind)) +
                     "): input shape " + shape_string(input.shape()) + " does not match network input " +
                     shape_string(model.input_shape()));
  }
  const auto& layers = model.layers();
  Trace t;
  t.acts.reserve(layers.size() + 1);
  t.pool_idx.resize(layers.size());
  t.acts.push_back(input);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& spec = layers[i];
    const Tensor& in = t.acts.back();
    Tensor out(layer_output_shape(spec, in.shape(), i));
    switch (spec.kind) {
      case LayerKind::Conv:
        conv_forward(spec, model.params()[i], in, out);
        break;
      case LayerKind::Relu: {
        auto src = in.data();
        auto dst = out.data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = src[k] > 0.0 ? src[k] : 0.0;
        break;
      }
      case LayerKind::MaxPool:
        maxpool_forward(spec, in, out, t.pool_idx[i]);
        break;
      case LayerKind::Flatten:
        std::copy(in.data().begin(), in.data().end(), out.data().begin());
        break;
      case LayerKind::Dense:
        dense_forward(spec, model.params()[i], in, out);
        break;
      case LayerKind::Softmax:
        std::copy(in.data().begin(), in.data().end(), out.data().begin());
        softmax_inplace(out.data());
        break;
    }
    t.acts.push_back(std::move(out));
  }
  return t;
}

// Accumulates parameter gradients of one example into grads, given the
// gradient of the loss with respect to the pre-softmax logits.
void run_backward(const NetworkModel& model, const Trace& t, std::vector<double> delta, Gradients& grads) {
  const auto& layers = model.layers();
  const std::size_t last = layers.size() - 1;  // softmax, already folded into delta
  for (std::size_t li = last; li-- > 0;) {
    const auto& spec = layers[li];
    const Tensor& in = t.acts[li];
    const bool need_input_grad = li > 0;
    std::vector<double> din;
    switch (spec.kind) {
      case LayerKind::Conv: {
        if (need_input_grad) din.assign(in.size(), 0.0);
        conv_backward(spec, model.params()[li], in, delta, t.acts[li + 1].shape(), grads[li],
                      need_input_grad ? &din : nullptr);
        break;
      }
      case LayerKind::Relu: {
        din = std::move(delta);
        const auto src = in.data();
        for (std::size_t k = 0; k < din.size(); ++k) {
          if (!(src[k] > 0.0)) din[k] = 0.0;
        }
        break;
      }
      case LayerKind::MaxPool: {
        din.assign(in.size(), 0.0);
        const auto& idx = t.pool_idx[li];
        for (std::size_t k = 0; k < delta.size(); ++k) din[idx[k]] += delta[k];
        break;
      }
      case LayerKind::Flatten:
        din = std::move(delta);
        break;
      case LayerKind::Dense: {
        const std::size_t ni = spec.in_units, no = spec.out_units;
        const auto src = in.data();
        const auto& p = model.params()[li];
        auto& g = grads[li];
        if (need_input_grad) din.assign(ni, 0.0);
        for (std::size_t j = 0; j < no; ++j) {
          const double d = delta[j];
          g[no * ni + j] += d;
          if (d == 0.0) continue;
          double* grow = g.data() + j * ni;
          const double* wrow = p.data() + j * ni;
          for (std::size_t i = 0; i < ni; ++i) {
            grow[i] += d * src[i];
            if (need_input_grad) din[i] += d * wrow[i];
          }
        }
        break;
      }
      case LayerKind::Softmax:
        throw ValidationError("softmax must be the final layer");
    }
    delta = std::move(din);
  }
}

}  // namespace

Tensor forward(const NetworkModel& model, const Tensor& input) {
  auto t = run_forward(model, input);
  return std::move(t.acts.back());
}

std::vector<Tensor> forward_trace(const NetworkModel& model, const Tensor& input) {
  return run_forward(model, input).acts;
}

double loss(std::span<const Tensor> probabilities, std::span<const std::size_t> labels) {
  if (probabilities.empty()) throw PreconditionError("loss of an empty batch");
  if (probabilities.size() != labels.size()) {
    throw ShapeError("loss given " + std::to_string(probabilities.size()) + " predictions and " +
                     std::to_string(labels.size()) + " labels");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (labels[i] >= probabilities[i].size()) {
      throw LabelError("label " + std::to_string(labels[i]) + " out of range for " +
                       std::to_string(probabilities[i].size()) + " classes");
    }
    total += -std::log(std::max(probabilities[i][labels[i]], kProbabilityFloor));
  }
  return total / static_cast<double>(probabilities.size());
}

BackwardResult backward(const NetworkModel& model, std::span<const Example> batch) {
  if (batch.empty()) throw PreconditionError("backward on an empty batch");
  BackwardResult r;
  r.grads = zero_gradients(model);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    const Trace t = run_forward(model, ex.input);
    const Tensor& probs = t.acts.back();
    if (ex.label >= probs.size()) {
      throw LabelError("label " + std::to_string(ex.label) + " out of range for " +
                       std::to_string(probs.size()) + " classes");
    }
    r.loss += -std::log(std::max(probs[ex.label], kProbabilityFloor));
    // d(-log p_y)/d logits = p - onehot(y); scaled for the batch mean.
    std::vector<double> delta(probs.data().begin(), probs.data().end());
    delta[ex.label] -= 1.0;
    for (auto& d : delta) d *= inv_n;
    run_backward(model, t, std::move(delta), r.grads);
  }
  r.loss *= inv_n;
  return r;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must lie in [0, 1)");
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be non-negative");
}

SgdOptimizer::SgdOptimizer(const NetworkModel& model, TrainConfig config)
    : config_(config), velocity_(zero_gradients(model)) {
  config_.validate();
}

void SgdOptimizer::step(NetworkModel& model, const Gradients& grads, std::size_t frozen_layers) {
  auto& params = model.mutable_params();
  if (grads.size() != params.size()) throw ShapeError("gradient layer count mismatch");
  for (std::size_t l = frozen_layers; l < params.size(); ++l) {
    auto& w = params[l];
    auto& v = velocity_[l];
    const auto& g = grads[l];
    if (g.size() != w.size()) {
      throw ShapeError("gradient for layer " + std::to_string(l) + " has " + std::to_string(g.size()) +
                       " entries, expected " + std::to_string(w.size()));
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = config_.momentum * v[i] - config_.learning_rate * (g[i] + config_.weight_decay * w[i]);
      // Weights live at single precision so saved models reload bit-exactly.
      w[i] = to_single(w[i] + v[i]);
    }
  }
}

NetworkModel sgd_step(NetworkModel model, const Gradients& grads, const TrainConfig& config) {
  SgdOptimizer opt(model, config);
  opt.step(model, grads);
  return model;
}

TrainResult train(NetworkModel model, const Dataset& data, const TrainConfig& config,
                  std::size_t frozen_layers) {
  config.validate();
  if (data.empty()) throw PreconditionError("training on an empty dataset");
  data.validate();
  TrainResult result;
  result.loss_history.reserve(config.iterations);
  if (config.iterations == 0) {
    result.model = std::move(model);
    return result;
  }
  SgdOptimizer opt(model, config);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;
  std::vector<Example> batch;
  batch.reserve(config.batch_size);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    batch.clear();
    while (batch.size() < std::min(config.batch_size, data.size())) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(data.examples[order[cursor++]]);
    }
    auto br = backward(model, batch);
    if (!std::isfinite(br.loss)) {
      throw TrainingDivergedError("training diverged at iteration " + std::to_string(it) +
                                  ": loss is not finite");
    }
    result.loss_history.push_back(br.loss);
    opt.step(model, br.grads, frozen_layers);
    for (const auto& layer : model.params()) {
      for (double w : layer) {
        if (!std::isfinite(w)) {
          throw TrainingDivergedError("training diverged at iteration " + std::to_string(it) +
                                      ": non-finite weight");
        }
      }
    }
  }
  result.model = std::move(model);
  return result;
}

Prediction argmax(const Tensor& probabilities) {
  Prediction p;
  p.confidence = probabilities[0];
  for (std::size_t i = 1; i < probabilities.size(); ++i) {
    if (probabilities[i] > p.confidence) {
      p.label = i;
      p.confidence = probabilities[i];
    }
  }
  return p;
}

Prediction predict(const NetworkModel& model, const Tensor& input) {
  return argmax(forward(model, input));
}

double accuracy(const NetworkModel& model, const Dataset& data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : data.examples) correct += predict(model, ex.input).label == ex.label;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

double example_loss(const NetworkModel& model, const Example& ex) {
  const Tensor probs = forward(model, ex.input);
  return -std::log(std::max(probs[ex.label], kProbabilityFloor));
}

}  // namespace

double compare_gradients(const NetworkModel& model, const Example& example,
                         const Gradients& analytic, double epsilon, std::uint64_t seed) {
  if (!(epsilon > 0.0)) throw ValidationError("gradient check epsilon must be positive");
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t l = 0; l < model.params().size(); ++l) {
    for (std::size_t i = 0; i < model.params()[l].size(); ++i) coords.emplace_back(l, i);
  }
  constexpr std::size_t kMaxChecked = 10000;
  if (coords.size() > kMaxChecked) {
    std::mt19937_64 rng(seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(kMaxChecked);
    std::sort(coords.begin(), coords.end());
  }
  NetworkModel probe = model;
  double worst = 0.0;
  for (auto [l, i] : coords) {
    double& w = probe.mutable_params()[l][i];
    const double saved = w;
    w = saved + epsilon;
    const double up = example_loss(probe, example);
    w = saved - epsilon;
    const double down = example_loss(probe, example);
    w = saved;
    const double fd = (up - down) / (2.0 * epsilon);
    const double a = analytic[l][i];
    const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8});
    worst = std::max(worst, rel);
  }
  return worst;
}

double gradient_check(const NetworkModel& model, const Example& example, double epsilon) {
  const auto br = backward(model, std::span<const Example>(&example, 1));
  return compare_gradients(model, example, br.grads, epsilon);
}

}  // namespace photostyle::nn
