#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "photostyle/error.hpp"
#include "photostyle/nn.hpp"

using namespace photostyle;
using namespace photostyle::nn;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(shape_volume(shape));
  for (auto& x : v) x = d(rng);
  return Tensor(std::move(shape), std::move(v));
}

std::vector<std::string> labels(std::size_t n) {
  std::vector<std::string> l;
  for (std::size_t i = 0; i < n; ++i) l.push_back("c" + std::to_string(i));
  return l;
}

NetworkModel dense_softmax(std::size_t in, std::size_t classes, double fill) {
  ParamSet p{std::vector<double>(in * classes + classes, fill), {}};
  return NetworkModel({in}, {LayerSpec::dense(in, classes), LayerSpec::softmax()}, p, labels(classes));
}

// conv(3x3, 4) + relu + maxpool + dense(4) + softmax over a 1x8x8 input.
NetworkModel small_convnet(std::uint64_t seed) {
  return make_network({1, 8, 8},
                      {LayerSpec::conv(1, 4, 3), LayerSpec::relu(), LayerSpec::maxpool(2, 2),
                       LayerSpec::flatten(), LayerSpec::dense(36, 4), LayerSpec::softmax()},
                      labels(4), seed);
}

// Class 0: bright top half; class 1: bright bottom half; noise on top.
Dataset separable_halves(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(0.0, 0.3);
  Dataset d;
  d.class_labels = {"top", "bottom"};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % 2;
    std::vector<double> v(16 * 16);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        const bool bright = (y < 8) == (label == 0);
        v[y * 16 + x] = (bright ? 0.7 : 0.0) + noise(rng);
      }
    d.examples.push_back({Tensor({1, 16, 16}, std::move(v)), label});
  }
  return d;
}

}  // namespace

TEST(Forward, ZeroWeightsGiveUniform) {
  std::mt19937_64 rng(1);
  const auto model = dense_softmax(5, 4, 0.0);
  const auto p = forward(model, random_tensor({5}, rng));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(p[i], 0.25);
}

TEST(Forward, SoftmaxSumsToOneAndIsShiftInvariant) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto logits = random_tensor({6}, rng, -50, 50);
    NetworkModel m({6}, {LayerSpec::softmax()}, ParamSet{{}}, labels(6));
    const auto p = forward(m, logits);
    EXPECT_NEAR(std::accumulate(p.data().begin(), p.data().end(), 0.0), 1.0, 1e-9);
    std::vector<double> shifted(logits.data().begin(), logits.data().end());
    for (auto& v : shifted) v += 123.25;
    const auto q = forward(m, Tensor({6}, shifted));
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(p[i], q[i], 1e-9);
  }
}

TEST(Forward, IdentityOneByOneConv) {
  std::mt19937_64 rng(3);
  // 1x1 conv: kernel 1, bias 0 -> feature map equals input.
  ParamSet p{{1.0, 0.0}, {}, {}, std::vector<double>(25 * 2 + 2, 0.0), {}};
  NetworkModel m({1, 5, 5},
                 {LayerSpec::conv(1, 1, 1), LayerSpec::relu(), LayerSpec::flatten(), LayerSpec::dense(25, 2),
                  LayerSpec::softmax()},
                 p, labels(2));
  const auto input = random_tensor({1, 5, 5}, rng);
  const auto trace = forward_trace(m, input);
  EXPECT_EQ(trace[1], input);
}

TEST(Forward, ConvCommutesWithTranslation) {
  std::mt19937_64 rng(4);
  const auto model = make_network({1, 10, 10},
                                  {LayerSpec::conv(1, 3, 3), LayerSpec::flatten(),
                                   LayerSpec::dense(3 * 8 * 8, 2), LayerSpec::softmax()},
                                  labels(2), 9);
  const auto a = random_tensor({1, 10, 10}, rng);
  std::vector<double> shifted(100, 0.0);
  for (int y = 0; y < 10; ++y)
    for (int x = 1; x < 10; ++x) shifted[y * 10 + x] = a[y * 10 + x - 1];
  const Tensor b({1, 10, 10}, shifted);
  const auto fa = forward_trace(model, a)[1];
  const auto fb = forward_trace(model, b)[1];
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 8; ++y)
      for (int x = 1; x < 8; ++x)
        EXPECT_NEAR(fb[(c * 8 + y) * 8 + x], fa[(c * 8 + y) * 8 + x - 1], 1e-12);
}

TEST(Forward, ShapeMismatchNamesLayer) {
  const auto model = small_convnet(1);
  try {
    forward(model, Tensor({1, 9, 9}));
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos);
  }
  EXPECT_THROW(NetworkModel({1, 8, 8}, {LayerSpec::conv(2, 4, 3), LayerSpec::softmax()}, ParamSet{{}, {}},
                            labels(4)),
               ShapeError);
}

TEST(Loss, KnownValues) {
  const Tensor perfect({4}, std::vector<double>{0, 1, 0, 0});
  const Tensor uniform({4}, std::vector<double>{0.25, 0.25, 0.25, 0.25});
  std::vector<Tensor> one{perfect};
  std::vector<std::size_t> l1{1};
  EXPECT_NEAR(loss(one, l1), 0.0, 1e-12);
  std::vector<Tensor> u{uniform};
  std::vector<std::size_t> l0{2};
  EXPECT_NEAR(loss(u, l0), std::log(4.0), 1e-12);
  std::vector<Tensor> both{perfect, uniform};
  std::vector<std::size_t> lb{1, 3};
  EXPECT_NEAR(loss(both, lb), std::log(4.0) / 2.0, 1e-12);
}

TEST(Loss, ClampAndErrors) {
  const Tensor zero({2}, std::vector<double>{1.0, 0.0});
  std::vector<Tensor> b{zero};
  std::vector<std::size_t> l{1};
  EXPECT_NEAR(loss(b, l), -std::log(1e-12), 1e-9);
  std::vector<std::size_t> bad{2};
  EXPECT_THROW(loss(b, bad), LabelError);
  EXPECT_THROW(loss({}, {}), PreconditionError);
}

TEST(Backward, ZeroAtPerfectPrediction) {
  // Huge weight on input 0 -> class 0 saturates to probability exactly 1.
  ParamSet p{{1000.0, 0.0, -1000.0, 0.0, 0.0, 0.0}, {}};
  NetworkModel m({2}, {LayerSpec::dense(2, 2), LayerSpec::softmax()}, p, labels(2));
  std::vector<Example> batch{{Tensor({2}, std::vector<double>{1.0, 0.5}), 0}};
  const auto r = backward(m, batch);
  EXPECT_EQ(r.loss, 0.0);
  for (const auto& layer : r.grads)
    for (double g : layer) EXPECT_EQ(g, 0.0);
}

TEST(Backward, DenseGradientIsOuterProduct) {
  // Two inputs, two classes, zero weights: p = (0.5, 0.5), label 0,
  // delta = p - onehot = (-0.5, 0.5); dW = delta x input, db = delta.
  const auto m = dense_softmax(2, 2, 0.0);
  std::vector<Example> batch{{Tensor({2}, std::vector<double>{3.0, -2.0}), 0}};
  const auto r = backward(m, batch);
  const std::vector<double> expect{-1.5, 1.0, 1.5, -1.0, -0.5, 0.5};
  ASSERT_EQ(r.grads[0].size(), expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_DOUBLE_EQ(r.grads[0][i], expect[i]);
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-12);
}

TEST(Backward, LossEqualsForwardLoss) {
  std::mt19937_64 rng(5);
  const auto m = small_convnet(3);
  std::vector<Example> batch;
  std::vector<Tensor> probs;
  std::vector<std::size_t> ls;
  for (int i = 0; i < 5; ++i) {
    batch.push_back({random_tensor({1, 8, 8}, rng), static_cast<std::size_t>(i % 4)});
    probs.push_back(forward(m, batch.back().input));
    ls.push_back(batch.back().label);
  }
  EXPECT_NEAR(backward(m, batch).loss, loss(probs, ls), 1e-12);
}

TEST(GradientCheck, ConvNetMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const auto m = small_convnet(seed);
    const Example ex{random_tensor({1, 8, 8}, rng), seed % 4};
    EXPECT_LT(gradient_check(m, ex, 1e-4), 1e-4) << "seed " << seed;
  }
}

TEST(GradientCheck, DetectsCorruptedDenseGradient) {
  std::mt19937_64 rng(7);
  const auto m = small_convnet(21);
  const Example ex{random_tensor({1, 8, 8}, rng), 2};
  auto r = backward(m, std::span<const Example>(&ex, 1));
  for (auto& g : r.grads[4]) g *= 2.0;
  EXPECT_NEAR(compare_gradients(m, ex, r.grads, 1e-4), 0.5, 1e-3);
}

TEST(GradientCheck, ZeroModelZeroInput) {
  NetworkModel m({1, 6, 6},
                 {LayerSpec::conv(1, 2, 3), LayerSpec::relu(), LayerSpec::flatten(), LayerSpec::dense(32, 3),
                  LayerSpec::softmax()},
                 ParamSet{std::vector<double>(20, 0.0), {}, {}, std::vector<double>(99, 0.0), {}}, labels(3));
  const double err = gradient_check(m, {Tensor({1, 6, 6}), 1}, 1e-4);
  EXPECT_TRUE(std::isfinite(err));
  EXPECT_LT(err, 1e-4);
}

TEST(Sgd, ZeroGradientIsFixedPoint) {
  const auto m = small_convnet(1);
  EXPECT_EQ(sgd_step(m, zero_gradients(m), {}), m);
}

TEST(Sgd, OneStepWithoutMomentum) {
  auto m = dense_softmax(2, 2, 0.5);
  Gradients g{{1.0, -2.0, 0.25, 4.0, 2.5, 0.0}, {}};
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.momentum = 0.0;
  const auto next = sgd_step(m, g, cfg);
  for (std::size_t i = 0; i < g[0].size(); ++i) {
    EXPECT_EQ(next.params()[0][i], static_cast<float>(0.5 - 0.1 * g[0][i]));
    EXPECT_NEAR(next.params()[0][i], 0.5 - 0.1 * g[0][i], 1e-7);
  }
}

TEST(Sgd, TwoMomentumStepsMatchUnrolledRecurrence) {
  auto m = dense_softmax(1, 2, 0.0);
  m.mutable_params()[0] = {0.5, -0.25, 0.0, 0.0};
  Gradients g1{{0.2, -0.4, 1.0, 0.0}, {}};
  Gradients g2{{-0.1, 0.3, 0.5, 2.0}, {}};
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.momentum = 0.9;
  SgdOptimizer opt(m, cfg);
  opt.step(m, g1);
  opt.step(m, g2);
  const std::vector<double> w0{0.5, -0.25, 0.0, 0.0};
  for (std::size_t i = 0; i < 4; ++i) {
    const double v1 = -0.05 * g1[0][i];
    const double w1 = static_cast<float>(w0[i] + v1);
    const double v2 = 0.9 * v1 - 0.05 * g2[0][i];
    const double w2 = static_cast<float>(w1 + v2);
    EXPECT_EQ(m.params()[0][i], w2);
  }
}

TEST(Sgd, WeightDecayPullsTowardZero) {
  auto m = dense_softmax(1, 2, 1.0);
  TrainConfig cfg;
  cfg.momentum = 0.0;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.5;
  const auto next = sgd_step(m, zero_gradients(m), cfg);
  EXPECT_FLOAT_EQ(next.params()[0][0], 0.95f);
}

TEST(Train, ZeroIterationsIsIdentity) {
  const auto m = make_network({1, 16, 16}, compact_architecture(16, 2), {"a", "b"}, 3);
  TrainConfig cfg;
  cfg.iterations = 0;
  const auto r = train(m, separable_halves(10, 1), cfg);
  EXPECT_EQ(r.model, m);
  EXPECT_TRUE(r.loss_history.empty());
}

TEST(Train, LearnsSeparableHalvesDeterministically) {
  const auto data = separable_halves(200, 7);
  const auto init = make_network({1, 16, 16}, compact_architecture(16, 2), data.class_labels, 5);
  TrainConfig cfg;
  cfg.iterations = 500;
  cfg.seed = 99;
  cfg.learning_rate = 0.01;
  const auto a = train(init, data, cfg);
  EXPECT_GE(accuracy(a.model, data), 0.95);
  const auto b = train(init, data, cfg);
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_EQ(a.model, b.model);

  const auto first = std::accumulate(a.loss_history.begin(), a.loss_history.begin() + 25, 0.0);
  const auto second = std::accumulate(a.loss_history.begin() + 25, a.loss_history.begin() + 50, 0.0);
  EXPECT_LT(second, first);
}

TEST(Train, FrozenLayersStayBitwiseEqual) {
  const auto data = separable_halves(40, 3);
  const auto init = make_network({1, 16, 16}, compact_architecture(16, 2), data.class_labels, 6);
  TrainConfig cfg;
  cfg.iterations = 20;
  const auto r = train(init, data, cfg, 7);
  for (std::size_t l = 0; l < 7; ++l) EXPECT_EQ(r.model.params()[l], init.params()[l]);
  EXPECT_NE(r.model.params()[7], init.params()[7]);
}

TEST(Train, DivergenceIsReported) {
  // Cross-entropy is clamped, so divergence shows up as weights overflowing.
  Dataset data;
  data.class_labels = {"a", "b"};
  data.examples.push_back({Tensor({2}, std::vector<double>{1e3, -1e3}), 0});
  data.examples.push_back({Tensor({2}, std::vector<double>{-1e3, 1e3}), 1});
  TrainConfig cfg;
  cfg.iterations = 50;
  cfg.learning_rate = 1e37;
  cfg.momentum = 0.0;
  try {
    train(dense_softmax(2, 2, 0.0), data, cfg);
    FAIL() << "expected divergence";
  } catch (const TrainingDivergedError& e) {
    EXPECT_NE(std::string(e.what()).find("iteration"), std::string::npos);
  }
}

TEST(Predict, ArgmaxAndTies) {
  const auto p = argmax(Tensor({4}, std::vector<double>{0.7, 0.1, 0.1, 0.1}));
  EXPECT_EQ(p.label, 0u);
  EXPECT_DOUBLE_EQ(p.confidence, 0.7);
  EXPECT_EQ(argmax(Tensor({4}, std::vector<double>{0.25, 0.25, 0.25, 0.25})).label, 0u);
  EXPECT_EQ(argmax(Tensor({3}, std::vector<double>{0.2, 0.4, 0.4})).label, 1u);
}

TEST(Predict, ConfidenceBounds) {
  std::mt19937_64 rng(8);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto m = small_convnet(seed);
    const auto pr = predict(m, random_tensor({1, 8, 8}, rng, -3, 3));
    EXPECT_GE(pr.confidence, 0.25 - 1e-9);
    EXPECT_LE(pr.confidence, 1.0);
  }
}

TEST(ModelFile, RoundTripIsBitwise) {
  std::mt19937_64 rng(9);
  const auto data = separable_halves(20, 3);
  TrainConfig cfg;
  cfg.iterations = 10;
  const auto m = train(make_network({1, 16, 16}, compact_architecture(16, 2), {"Top ✓", "bottom"}, 4), data, cfg)
                     .model;
  const auto path = std::filesystem::temp_directory_path() / "photostyle_model_rt.phsn";
  save_model(m, path);
  const auto loaded = load_model(path);
  EXPECT_EQ(loaded, m);
  const auto x = random_tensor({1, 16, 16}, rng);
  EXPECT_EQ(forward(loaded, x), forward(m, x));
  std::filesystem::remove(path);
}

TEST(ModelFile, CorruptionIsRejected) {
  const auto m = small_convnet(2);
  auto bytes = serialize_model(m);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize_model(bad_magic), LoadError);
  auto short_weights = bytes;
  short_weights.resize(bytes.size() - 4);
  EXPECT_THROW(deserialize_model(short_weights), ValidationError);
  auto extra = bytes;
  extra.insert(extra.end(), {0, 0, 0, 0});
  EXPECT_THROW(deserialize_model(extra), ValidationError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(deserialize_model(bad_version), LoadError);
}

TEST(ModelFile, LossHistoryCsv) {
  const auto path = std::filesystem::temp_directory_path() / "photostyle_loss.csv";
  const std::vector<double> h{1.5, 0.25};
  write_loss_history(h, path);
  std::ifstream in(path);
  std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(all, "iteration,loss\n0,1.5\n1,0.25\n");
  std::filesystem::remove(path);
}
