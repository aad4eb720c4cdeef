// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "shapefat/autodiff/checkpoint.hpp"
#include "shapefat/autodiff/ops.hpp"
#include "shapefat/autodiff/optim.hpp"
#include "shapefat/error.hpp"
#include "test_util.hpp"

using namespace shapefat;
using namespace shapefat::ad;

namespace {

Tensor values(Shape s, std::vector<double> v) { return Tensor(std::move(s), std::move(v)); }

/// Direct nested-loop convolution.
Tensor naive_conv(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride,
                  std::size_t pad) {
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t K = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const std::size_t Ho = (H + 2 * pad - kh) / stride + 1, Wo = (W + 2 * pad - kw) / stride + 1;
  Tensor out({N, K, Ho, Wo});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t oh = 0; oh < Ho; ++oh)
        for (std::size_t ow = 0; ow < Wo; ++ow) {
          double acc = b[k];
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < kh; ++i)
              for (std::size_t j = 0; j < kw; ++j) {
                const long ih = static_cast<long>(oh * stride + i) - static_cast<long>(pad);
                const long iw = static_cast<long>(ow * stride + j) - static_cast<long>(pad);
                if (ih < 0 || iw < 0 || ih >= static_cast<long>(H) || iw >= static_cast<long>(W)) continue;
                acc += x.at(n, c, static_cast<std::size_t>(ih), static_cast<std::size_t>(iw)) *
                       w.at(k, c, i, j);
              }
          out.at(n, k, oh, ow) = acc;
        }
  return out;
}

}  // namespace

TEST(Tensor, RejectsZeroDimsAndSizeMismatch) {
  EXPECT_THROW(Tensor({2, 0}), ShapeError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_FALSE(t.has_grad());
  EXPECT_EQ(t.grad().size(), 6u);
  EXPECT_TRUE(t.has_grad());
}

TEST(Conv2d, SumOfOnes) {
  Tape tape;
  auto y = conv2d(tape, constant(Tensor({1, 1, 3, 3}, 1.0)), constant(Tensor({1, 1, 3, 3}, 1.0)),
                  constant(Tensor({1}, 0.0)), 1, 0);
  ASSERT_EQ(y->value.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(y->value[0], 9.0);
}

TEST(Conv2d, IdentityKernel) {
  Tape tape;
  auto y = conv2d(tape, constant(values({1, 1, 2, 2}, {1, 2, 3, 4})),
                  constant(Tensor({1, 1, 1, 1}, 1.0)), constant(Tensor({1}, 0.0)), 1, 0);
  EXPECT_EQ(std::vector<double>(y->value.values().begin(), y->value.values().end()),
            (std::vector<double>{1, 2, 3, 4}));
}

TEST(Conv2d, MatchesLoopOracleStrideTwoPadOne) {
  Rng rng(11);
  const Tensor x = testutil::random_tensor({2, 3, 8, 8}, rng);
  const Tensor w = testutil::random_tensor({4, 3, 3, 3}, rng);
  const Tensor b = testutil::random_tensor({4}, rng);
  Tape tape;
  auto y = conv2d(tape, constant(x), constant(w), constant(b), 2, 1);
  ASSERT_EQ(y->value.shape(), (Shape{2, 4, 4, 4}));
  const Tensor ref = naive_conv(x, w, b, 2, 1);
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y->value[i], ref[i], 1e-10);
}

TEST(Conv2d, OddGeometriesMatchOracle) {
  Rng rng(12);
  for (auto [H, W, k, stride, pad] : std::vector<std::array<std::size_t, 5>>{
           {5, 7, 3, 1, 1}, {6, 5, 1, 2, 0}, {7, 7, 3, 3, 2}, {4, 9, 2, 2, 1}}) {
    const Tensor x = testutil::random_tensor({1, 2, H, W}, rng);
    const Tensor w = testutil::random_tensor({3, 2, k, k}, rng);
    const Tensor b = testutil::random_tensor({3}, rng);
    Tape tape;
    auto y = conv2d(tape, constant(x), constant(w), constant(b), stride, pad);
    const Tensor ref = naive_conv(x, w, b, stride, pad);
    ASSERT_EQ(y->value.shape(), ref.shape());
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y->value[i], ref[i], 1e-10);
  }
}

TEST(Conv2d, ChannelMismatchNamesBothShapes) {
  Tape tape;
  try {
    conv2d(tape, constant(Tensor({1, 2, 4, 4})), constant(Tensor({1, 3, 3, 3})), nullptr, 1, 0);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[1x2x4x4]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[1x3x3x3]"), std::string::npos) << msg;
  }
}

TEST(BatchNorm, ConstantChannelGivesZeros) {
  Tape tape;
  BatchNormState st(1);
  auto y = batchnorm2d(tape, constant(Tensor({3, 1, 2, 2}, 4.0)), constant(Tensor({1}, 1.0)),
                       constant(Tensor({1}, 0.0)), st, Mode::kTrain);
  for (double v : y->value.values()) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(BatchNorm, NormalizesAndApplies) {
  const Tensor x = values({4, 1, 1, 1}, {1, 2, 3, 4});
  const double mean = 2.5, var = 1.25;  // population variance of {1,2,3,4}
  for (auto [g, b] : {std::pair{1.0, 0.0}, std::pair{2.0, 3.0}}) {
    Tape tape;
    BatchNormState st(1);
    auto y = batchnorm2d(tape, constant(x), constant(Tensor({1}, g)), constant(Tensor({1}, b)), st,
                         Mode::kTrain);
    double m = 0, v = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_NEAR(y->value[i], g * (x[i] - mean) / std::sqrt(var + 1e-5) + b, 1e-12);
      m += y->value[i] / 4;
    }
    for (std::size_t i = 0; i < 4; ++i) v += (y->value[i] - m) * (y->value[i] - m) / 4;
    EXPECT_NEAR(m, b, 1e-6);
    EXPECT_NEAR(v, g * g, 1e-3 * g * g);
  }
}

TEST(BatchNorm, RunningStatisticsAndEvalMode) {
  Tape tape;
  BatchNormState st(1);
  const auto gamma = constant(Tensor({1}, 1.0)), beta = constant(Tensor({1}, 0.0));
  EXPECT_THROW(batchnorm2d(tape, constant(Tensor({1, 1, 1, 1})), gamma, beta, st, Mode::kEval),
               Error);
  batchnorm2d(tape, constant(values({4, 1, 1, 1}, {1, 2, 3, 4})), gamma, beta, st, Mode::kTrain);
  EXPECT_NEAR(st.running_mean[0], 0.1 * 2.5, 1e-15);
  EXPECT_NEAR(st.running_var[0], 0.9 + 0.1 * (5.0 / 3.0), 1e-15);
  auto y = batchnorm2d(tape, constant(values({1, 1, 1, 1}, {2.0})), gamma, beta, st, Mode::kEval);
  EXPECT_NEAR(y->value[0], (2.0 - st.running_mean[0]) / std::sqrt(st.running_var[0] + 1e-5), 1e-12);

  BatchNormState fresh(1);
  fresh.initialize_identity();
  auto z = batchnorm2d(tape, constant(values({1, 1, 1, 1}, {0.5})), gamma, beta, fresh, Mode::kEval);
  EXPECT_NEAR(z->value[0], 0.5 / std::sqrt(1.0 + 1e-5), 1e-12);
}

TEST(BatchNorm, TrainStatisticsProperty) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor x = testutil::random_tensor({3, 2, 3, 3}, rng, -4, 4);
    const Tensor g = testutil::random_tensor({2}, rng, 0.5, 2.0);
    const Tensor b = testutil::random_tensor({2}, rng);
    Tape tape;
    BatchNormState st(2);
    auto y = batchnorm2d(tape, constant(x), constant(g), constant(b), st, Mode::kTrain);
    for (std::size_t c = 0; c < 2; ++c) {
      double m = 0, v = 0;
      for (std::size_t n = 0; n < 3; ++n)
        for (std::size_t p = 0; p < 9; ++p) m += y->value[(n * 2 + c) * 9 + p] / 27;
      for (std::size_t n = 0; n < 3; ++n)
        for (std::size_t p = 0; p < 9; ++p) {
          const double d = y->value[(n * 2 + c) * 9 + p] - m;
          v += d * d / 27;
        }
      EXPECT_LT(std::abs(m - b[c]), 1e-6);
      EXPECT_LT(std::abs(v - g[c] * g[c]), 1e-3);
    }
  }
}

TEST(Relu, ForwardAndSubgradient) {
  Tape tape;
  auto y = relu(tape, constant(values({3}, {-1, 0, 2})));
  EXPECT_EQ(y->value[0], 0.0);
  EXPECT_EQ(y->value[1], 0.0);
  EXPECT_EQ(y->value[2], 2.0);

  auto x = parameter(values({3}, {-1, 0, 2}));
  Tape t2;
  t2.backward(sum(t2, relu(t2, x)));
  EXPECT_EQ(x->value.grad()[0], 0.0);
  EXPECT_EQ(x->value.grad()[1], 0.0);
  EXPECT_EQ(x->value.grad()[2], 1.0);

  Tape t3;
  auto pos = relu(t3, constant(values({2}, {0.5, 3})));
  EXPECT_EQ(pos->value[0], 0.5);
  EXPECT_EQ(pos->value[1], 3.0);
}

TEST(Sigmoid, ValuesAndDerivative) {
  auto x = parameter(values({3}, {0.0, -800.0, 800.0}));
  Tape tape;
  auto y = sigmoid(tape, x);
  EXPECT_DOUBLE_EQ(y->value[0], 0.5);
  EXPECT_GE(y->value[1], 0.0);
  EXPECT_LT(y->value[1], 1e-300);
  EXPECT_DOUBLE_EQ(y->value[2], 1.0);
  tape.backward(sum(tape, y));
  EXPECT_DOUBLE_EQ(x->value.grad()[0], 0.25);
}

TEST(GlobalAvgPool, MeanAndUniformGradient) {
  Tape tape;
  auto c = global_avg_pool(tape, constant(Tensor({1, 2, 3, 3}, 7.0)));
  EXPECT_EQ(c->value.shape(), (Shape{1, 2}));
  EXPECT_DOUBLE_EQ(c->value[0], 7.0);
  auto x = parameter(values({1, 1, 2, 2}, {1, 2, 3, 4}));
  Tape t2;
  auto y = global_avg_pool(t2, x);
  EXPECT_DOUBLE_EQ(y->value[0], 2.5);
  t2.backward(sum(t2, y));
  for (double g : x->value.grad()) EXPECT_DOUBLE_EQ(g, 0.25);
}

TEST(FullyConnected, DotProductIdentityAndOracle) {
  Tape tape;
  auto y = fully_connected(tape, constant(values({1, 2}, {1, 2})), constant(values({2, 1}, {1, 1})),
                           constant(values({1}, {0.5})));
  EXPECT_DOUBLE_EQ(y->value[0], 3.5);

  auto id = fully_connected(tape, constant(values({1, 2}, {4, 5})),
                            constant(values({2, 2}, {1, 0, 0, 1})), constant(Tensor({2}, 0.0)));
  EXPECT_DOUBLE_EQ(id->value[0], 4.0);
  EXPECT_DOUBLE_EQ(id->value[1], 5.0);

  Rng rng(3);
  const Tensor x = testutil::random_tensor({4, 8}, rng), w = testutil::random_tensor({8, 3}, rng),
               b = testutil::random_tensor({3}, rng);
  auto z = fully_connected(tape, constant(x), constant(w), constant(b));
  for (std::size_t n = 0; n < 4; ++n)
    for (std::size_t m = 0; m < 3; ++m) {
      double acc = b[m];
      for (std::size_t d = 0; d < 8; ++d) acc += x[n * 8 + d] * w[d * 3 + m];
      EXPECT_NEAR(z->value[n * 3 + m], acc, 1e-12);
    }
  EXPECT_THROW(fully_connected(tape, constant(x), constant(Tensor({7, 3})), constant(b)), ShapeError);
}

TEST(Concat, StackSliceAndRouting) {
  auto a = parameter(values({1, 1, 2, 2}, {1, 2, 3, 4}));
  auto b = parameter(values({1, 1, 2, 2}, {5, 6, 7, 8}));
  Tape tape;
  auto c = concat_channels(tape, a, b);
  ASSERT_EQ(c->value.shape(), (Shape{1, 2, 2, 2}));
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(c->value[i], static_cast<double>(i + 1));
  Tensor w({1, 2, 2, 2});
  for (std::size_t i = 0; i < 8; ++i) w[i] = static_cast<double>(10 + i);
  tape.backward(inner(tape, c, w));
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(a->value.grad()[i], w[i]);
    EXPECT_EQ(b->value.grad()[i], w[4 + i]);
  }

  Tape t2;
  auto z = concat_channels(t2, constant(a->value), constant(Tensor({1, 1, 2, 2}, 0.0)));
  auto back = slice_channels(t2, z, 0, 1);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(back->value[i], a->value[i]);
  EXPECT_THROW(concat_channels(t2, constant(Tensor({1, 1, 2, 2})), constant(Tensor({1, 1, 3, 2}))),
               ShapeError);
}

TEST(MulBroadcast, IdentityZeroAndOracle) {
  Rng rng(4);
  const Tensor f = testutil::random_tensor({2, 3, 4, 5}, rng);
  Tape tape;
  auto ones = mul_broadcast(tape, constant(f), constant(Tensor({2, 1, 4, 5}, 1.0)));
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(ones->value[i], f[i]);
  auto zeros = mul_broadcast(tape, constant(f), constant(Tensor({2, 1, 4, 5}, 0.0)));
  for (double v : zeros->value.values()) EXPECT_EQ(v, 0.0);
  const Tensor m = testutil::random_tensor({2, 1, 4, 5}, rng);
  auto y = mul_broadcast(tape, constant(f), constant(m));
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t h = 0; h < 4; ++h)
        for (std::size_t w = 0; w < 5; ++w)
          EXPECT_NEAR(y->value.at(n, c, h, w), f.at(n, c, h, w) * m.at(n, 0, h, w), 1e-12);
  EXPECT_THROW(mul_broadcast(tape, constant(f), constant(Tensor({2, 1, 4, 4}))), ShapeError);
}

TEST(SoftmaxCrossEntropy, UniformDominantAndOracle) {
  Tape tape;
  const int t0[] = {2};
  auto u = softmax_cross_entropy(tape, constant(Tensor({1, 4}, 0.3)), t0);
  EXPECT_NEAR(u->value[0], std::log(4.0), 1e-12);
  auto d = softmax_cross_entropy(tape, constant(values({1, 4}, {0, 0, 100, 0})), t0);
  EXPECT_LT(d->value[0], 1e-40);

  Rng rng(9);
  const Tensor z = testutil::random_tensor({3, 4}, rng, -3, 3);
  const int t[] = {0, 3, 1};
  auto l = softmax_cross_entropy(tape, constant(z), t);
  double ref = 0;
  for (std::size_t n = 0; n < 3; ++n) {
    double s = 0;
    for (std::size_t k = 0; k < 4; ++k) s += std::exp(z[n * 4 + k]);
    ref += -std::log(std::exp(z[n * 4 + static_cast<std::size_t>(t[n])]) / s) / 3;
  }
  EXPECT_NEAR(l->value[0], ref, 1e-10);
  const int bad[] = {4};
  EXPECT_THROW(softmax_cross_entropy(tape, constant(Tensor({1, 4})), bad), ConfigError);
}

TEST(MseLoss, ValuesAndGradient) {
  Tape tape;
  auto zero = mse_loss(tape, constant(values({2}, {1, 3})), values({2}, {1, 3}));
  EXPECT_EQ(zero->value[0], 0.0);
  auto p = parameter(values({2}, {0, 0}));
  Tape t2;
  auto l = mse_loss(t2, p, values({2}, {1, 3}));
  EXPECT_DOUBLE_EQ(l->value[0], 5.0);
  t2.backward(l);
  EXPECT_DOUBLE_EQ(p->value.grad()[0], 2.0 * (0 - 1) / 2);
  EXPECT_DOUBLE_EQ(p->value.grad()[1], 2.0 * (0 - 3) / 2);
  EXPECT_THROW(mse_loss(t2, constant(Tensor({3})), Tensor({2})), ShapeError);
}

TEST(Tape, SumGivesOnes) {
  auto x = parameter(Tensor({2, 3}, 0.7));
  Tape tape;
  tape.backward(sum(tape, x));
  for (double g : x->value.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Tape, RejectsNonScalarAndDoubleBackward) {
  auto x = parameter(Tensor({2}, 1.0));
  Tape tape;
  auto y = scale(tape, x, 2.0);
  EXPECT_THROW(tape.backward(y), ShapeError);
  auto s = sum(tape, y);
  tape.backward(s);
  EXPECT_THROW(tape.backward(s), Error);
  Tape other;
  auto s2 = sum(other, x);
  Tape third;
  EXPECT_THROW(third.backward(s2), Error);
}

TEST(Tape, SharedParameterAccumulatesBothPaths) {
  Rng rng(21);
  const Tensor p0 = testutil::random_tensor({3}, rng);
  const Tensor wf = testutil::random_tensor({3}, rng), wg = testutil::random_tensor({3}, rng);
  auto f = [&](Tape& t, const Var& p) { return inner(t, sigmoid(t, p), wf); };
  auto g = [&](Tape& t, const Var& p) { return inner(t, scale(t, p, 3.0), wg); };

  auto p = parameter(p0);
  Tape both;
  both.backward(add(both, f(both, p), g(both, p)));
  auto pf = parameter(p0);
  Tape tf;
  tf.backward(f(tf, pf));
  auto pg = parameter(p0);
  Tape tg;
  tg.backward(g(tg, pg));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(p->value.grad()[i], pf->value.grad()[i] + pg->value.grad()[i], 1e-10);
  }
}

TEST(Tape, NonRecordingTapeKeepsNoNodes) {
  auto x = parameter(Tensor({2}, 1.0));
  Tape tape(false);
  auto y = sum(tape, relu(tape, x));
  EXPECT_EQ(tape.size(), 0u);
  EXPECT_FALSE(y->requires_grad);
}

TEST(Sgd, VanillaAndMomentumHandIteration) {
  ParamSet ps;
  ps.add("p", Tensor({1}, 1.0));
  ps.get("p")->value.grad()[0] = 1.0;
  sgd_momentum_step(ps, 0.1, 0.0);
  EXPECT_DOUBLE_EQ(ps.get("p")->value[0], 0.9);
  EXPECT_FALSE(ps.get("p")->value.has_grad());

  ParamSet m;
  m.add("p", Tensor({1}, 0.0));
  for (int i = 0; i < 2; ++i) {
    m.get("p")->value.grad()[0] = 1.0;
    sgd_momentum_step(m, 0.1, 0.9);
  }
  EXPECT_NEAR(m.get("p")->value[0], -0.29, 1e-15);

  // Zero gradient: only the momentum buffer moves the parameter.
  const double before = m.get("p")->value[0];
  const double v = m.entries().at("p").velocity[0];
  m.get("p")->value.grad()[0] = 0.0;
  sgd_momentum_step(m, 0.1, 0.9);
  EXPECT_NEAR(m.get("p")->value[0], before - 0.1 * 0.9 * v, 1e-15);
}

TEST(Sgd, MissingGradientNamesParameter) {
  ParamSet ps;
  ps.add("layer.weight", Tensor({2}, 1.0));
  try {
    sgd_momentum_step(ps, 0.1, 0.9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("layer.weight"), std::string::npos);
  }
  EXPECT_THROW(ps.add("layer.weight", Tensor({1})), ConfigError);
}

TEST(ClipGradNorm, RescalesJointNormOnlyAboveCap) {
  ParamSet ps;
  ps.add("a", Tensor({2}, 0.0));
  ps.add("b", Tensor({1}, 0.0));
  ps.add("frozen", Tensor({1}, 0.0));
  auto ga = ps.get("a")->value.grad(), gb = ps.get("b")->value.grad();
  ga[0] = 3.0;
  ga[1] = 0.0;
  gb[0] = 4.0;
  EXPECT_DOUBLE_EQ(clip_grad_norm(ps, 10.0), 5.0);
  EXPECT_EQ(ga[0], 3.0);
  EXPECT_EQ(gb[0], 4.0);

  EXPECT_DOUBLE_EQ(clip_grad_norm(ps, 1.0), 5.0);
  EXPECT_NEAR(ga[0], 0.6, 1e-15);
  EXPECT_NEAR(gb[0], 0.8, 1e-15);
  EXPECT_NEAR(std::hypot(ga[0], gb[0]), 1.0, 1e-15);
  EXPECT_FALSE(ps.get("frozen")->value.has_grad());
  EXPECT_THROW(clip_grad_norm(ps, 0.0), ConfigError);
  ga[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(clip_grad_norm(ps, 1.0), NumericError);
}

TEST(Schedule, StepDecay) {
  const Schedule s;
  EXPECT_EQ(lr_at_epoch(s, 0), 0.01);
  EXPECT_EQ(lr_at_epoch(s, 19), 0.01);
  EXPECT_EQ(lr_at_epoch(s, 20), 0.001);
  EXPECT_EQ(lr_at_epoch(s, 40), 0.0001);
  EXPECT_EQ(lr_at_epoch(s, 45), 0.0001);
  Schedule bad;
  bad.decay_factor = 1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = Schedule{};
  bad.decay_every = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Checkpoint, RoundTripAndErrors) {
  Rng rng(8);
  std::vector<NamedTensor> in{{"a.weight", testutil::random_tensor({2, 3, 1, 1}, rng)},
                              {"b", Tensor({4}, 0.25)}};
  std::stringstream ss;
  write_checkpoint(ss, in);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 4), "SFP1");
  std::stringstream rs(bytes);
  const auto out = read_checkpoint(rs);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].name, "a.weight");
  EXPECT_EQ(out[0].tensor.shape(), (Shape{2, 3, 1, 1}));
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(out[0].tensor[i], static_cast<double>(static_cast<float>(in[0].tensor[i])));
  }

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_checkpoint(truncated), FormatError);
  std::string other = bytes;
  other[3] = '2';
  std::stringstream version(other);
  try {
    read_checkpoint(version);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
  other[0] = 'X';
  std::stringstream magic(other);
  EXPECT_THROW(read_checkpoint(magic), FormatError);
}
