// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <bit>
#include <cmath>

#include "shapefat/error.hpp"
#include "shapefat/model/loss.hpp"
#include "shapefat/model/network.hpp"
#include "shapefat/model/serialize.hpp"
#include "shapefat/train/trainer.hpp"
#include "test_util.hpp"

using namespace shapefat;
using namespace shapefat::ad;
using namespace shapefat::model;
using testutil::small_config;

namespace {

/// Layer-by-layer parameter count from the configuration alone.
std::size_t count_params(const ModelConfig& c) {
  if (c.variant == Variant::kMlp) {
    const std::size_t d = 2 * c.input_size * c.input_size;
    return d * c.mlp_hidden + c.mlp_hidden + c.mlp_hidden + 1;
  }
  std::size_t total = 0;
  const auto conv = [](std::size_t in, std::size_t out, std::size_t k) { return k * k * in * out; };
  const auto bn = [](std::size_t ch) { return 2 * ch; };
  for (int view = 0; view < 2; ++view) {
    std::size_t in = 1;
    for (std::size_t ch : c.input_phase_channels) {
      total += conv(in, ch, 3) + bn(ch);
      in = ch;
    }
  }
  std::size_t in = 2 * c.input_phase_channels.back();
  for (std::size_t s = 0; s < c.stages.size(); ++s) {
    const std::size_t out = c.stages[s].channels;
    for (std::size_t b = 0; b < c.stages[s].blocks; ++b) {
      const bool down = s > 0 && b == 0;
      total += conv(in, out, 3) + bn(out) + conv(out, out, 3) + bn(out);
      if (down || in != out) total += conv(in, out, 1) + bn(out);
      in = out;
    }
  }
  std::size_t w = in;
  for (std::size_t h : c.head_widths) {
    total += w * h + h;
    w = h;
  }
  if (has_attention(c.variant)) total += in * c.attention_channels + c.attention_channels;
  if (has_classification(c.variant)) total += c.attention_channels * (in + 1);
  return total;
}

Tensor random_maps(std::size_t n, std::size_t side, Rng& rng) {
  return testutil::random_tensor({n, 1, side, side}, rng, 0.0, 1.0);
}

/// A briefly trained small model with populated batch-norm statistics.
ModelParams trained_small(Variant v) {
  const auto data = testutil::random_dataset(12, 32, 5);
  std::vector<std::size_t> idx(12);
  for (std::size_t i = 0; i < 12; ++i) idx[i] = i;
  train::TrainConfig tc;
  tc.epochs = 2;
  tc.batch = 4;
  return train::train_model(tc, small_config(v), data, idx, 1, 2).model;
}

void set_attention_bias(ModelParams& m, double weight, double bias) {
  for (double& x : m.params.get("attention.proj.weight")->value.values()) x = weight;
  for (double& x : m.params.get("attention.proj.bias")->value.values()) x = bias;
}

}  // namespace

TEST(BuildModel, ParameterCountMatchesLayerCount) {
  for (Variant v : {Variant::kPlainBackbone, Variant::kBaseline, Variant::kProposed, Variant::kMlp}) {
    ModelConfig c;
    c.variant = v;
    EXPECT_EQ(build_model(c, 1).params.scalar_count(), count_params(c)) << to_string(v);
    EXPECT_EQ(build_model(small_config(v), 1).params.scalar_count(), count_params(small_config(v)));
  }
  ModelConfig c;
  c.variant = Variant::kPlainBackbone;
  EXPECT_EQ(build_model(c, 1).params.scalar_count(), 177617u);
  c.variant = Variant::kProposed;
  EXPECT_EQ(build_model(c, 1).params.scalar_count(), 178137u);
}

TEST(BuildModel, AttentionParametersPerVariant) {
  EXPECT_TRUE(attention_parameter_names(build_model(small_config(Variant::kPlainBackbone), 1)).empty());
  EXPECT_EQ(attention_parameter_names(build_model(small_config(Variant::kBaseline), 1)).size(), 2u);
  EXPECT_EQ(attention_parameter_names(build_model(small_config(Variant::kProposed), 1)).size(), 10u);
}

TEST(BuildModel, SeedsChangeValuesNotShapes) {
  const auto a = build_model(small_config(Variant::kProposed), 1);
  const auto b = build_model(small_config(Variant::kProposed), 2);
  bool any_diff = false;
  for (const auto& [name, e] : a.params.entries()) {
    const auto& other = b.params.get(name)->value;
    ASSERT_EQ(e.param->value.shape(), other.shape()) << name;
    for (std::size_t i = 0; i < other.size(); ++i) any_diff |= e.param->value[i] != other[i];
  }
  EXPECT_TRUE(any_diff);
  // Shared layers start identical across variants.
  const auto plain = build_model(small_config(Variant::kPlainBackbone), 1);
  for (const auto& [name, e] : plain.params.entries()) {
    const auto& p = a.params.get(name)->value;
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], e.param->value[i]) << name;
  }
}

TEST(BuildModel, InvalidConfigsRejected) {
  ModelConfig c;
  c.attention_channels = 3;
  EXPECT_THROW(build_model(c, 1), ConfigError);
  c = ModelConfig{};
  c.input_size = 60;
  EXPECT_THROW(build_model(c, 1), ConfigError);
  c = ModelConfig{};
  c.head_widths = {32, 2};
  EXPECT_THROW(build_model(c, 1), ConfigError);
  EXPECT_THROW(parse_variant("resnet"), ConfigError);
}

TEST(ForwardBackbone, ZeroInputIsFiniteAndWrongSizeThrows) {
  auto m = build_model(ModelConfig{}, 3);
  Tape tape;
  const auto out = forward_backbone(tape, m, constant(Tensor({2, 1, 64, 64})),
                                    constant(Tensor({2, 1, 64, 64})), Mode::kTrain);
  for (double v : out.fat_pred->value.values()) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(out.fat_pred->value.shape(), (Shape{2}));
  Tape t2;
  EXPECT_THROW(forward_backbone(t2, m, constant(Tensor({1, 1, 32, 32})),
                                constant(Tensor({1, 1, 32, 32})), Mode::kTrain),
               ShapeError);
}

TEST(ForwardBackbone, EvalModeIsBatchIndependent) {
  const auto m = trained_small(Variant::kProposed);
  Rng rng(8);
  const Tensor f = random_maps(1, 32, rng), l = random_maps(1, 32, rng);
  Tensor f2({3, 1, 32, 32}), l2({3, 1, 32, 32});
  const Tensor other = random_maps(1, 32, rng);
  for (std::size_t i = 0; i < 1024; ++i) {
    f2[i] = f[i];
    f2[1024 + i] = other[i];
    f2[2048 + i] = f[i];
    l2[i] = l[i];
    l2[1024 + i] = l[i];
    l2[2048 + i] = l[i];
  }
  Tape t1, t2;
  const auto one = forward_backbone(t1, m, constant(f), constant(l));
  const auto three = forward_backbone(t2, m, constant(f2), constant(l2));
  EXPECT_EQ(three.fat_pred->value[0], three.fat_pred->value[2]);
  EXPECT_EQ(three.fat_pred->value[0], one.fat_pred->value[0]);
}

TEST(ForwardBackbone, PooledFeaturesMatchSpatialMean) {
  auto m = build_model(small_config(Variant::kPlainBackbone), 4);
  Rng rng(9);
  Tape tape;
  const auto out = forward_backbone(tape, m, constant(random_maps(2, 32, rng)),
                                    constant(random_maps(2, 32, rng)), Mode::kTrain);
  const Tensor& F = out.features->value;
  const std::size_t hw = F.dim(2) * F.dim(3);
  for (std::size_t n = 0; n < F.dim(0); ++n)
    for (std::size_t c = 0; c < F.dim(1); ++c) {
      double s = 0;
      for (std::size_t p = 0; p < hw; ++p) s += F[(n * F.dim(1) + c) * hw + p];
      EXPECT_NEAR(out.pooled->value[n * F.dim(1) + c], s / static_cast<double>(hw), 1e-12);
    }
}

TEST(Attention, PlainVariantRefuses) {
  auto m = build_model(small_config(Variant::kPlainBackbone), 1);
  Rng rng(1);
  Tape tape;
  auto out = forward_backbone(tape, m, constant(random_maps(1, 32, rng)),
                              constant(random_maps(1, 32, rng)), Mode::kTrain);
  try {
    forward_attention(tape, m, out);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("attention disabled"), std::string::npos);
  }
}

TEST(Attention, UnitMapsAreIdentityAndZeroMapsVanish) {
  auto m = build_model(small_config(Variant::kProposed), 2);
  Rng rng(2);
  const auto f = constant(random_maps(2, 32, rng)), l = constant(random_maps(2, 32, rng));
  set_attention_bias(m, 0.0, 1000.0);
  Tape tape;
  auto out = forward_backbone(tape, m, f, l, Mode::kTrain);
  forward_attention(tape, m, out);
  ASSERT_EQ(out.refined.size(), 4u);
  for (const auto& r : out.refined) {
    for (std::size_t i = 0; i < r->value.size(); ++i) {
      EXPECT_EQ(std::bit_cast<std::uint64_t>(r->value[i]),
                std::bit_cast<std::uint64_t>(out.features->value[i]));
    }
  }
  set_attention_bias(m, 0.0, -1000.0);
  Tape t2;
  auto zero = forward_backbone(t2, m, f, l, Mode::kTrain);
  forward_attention(t2, m, zero);
  for (const auto& r : zero.refined)
    for (double v : r->value.values()) EXPECT_EQ(v, 0.0);
}

TEST(Attention, RefinedMatchesLoopOracle) {
  auto m = build_model(small_config(Variant::kBaseline), 3);
  Rng rng(3);
  Tape tape;
  auto out = forward_backbone(tape, m, constant(random_maps(2, 32, rng)),
                              constant(random_maps(2, 32, rng)), Mode::kTrain);
  forward_attention(tape, m, out);
  const Tensor& F = out.features->value;
  const Tensor& M = out.attention_maps->value;
  const Tensor& W = m.params.get("attention.proj.weight")->value;
  const Tensor& B = m.params.get("attention.proj.bias")->value;
  const std::size_t N = F.dim(0), C = F.dim(1), H = F.dim(2), Wd = F.dim(3);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < Wd; ++j) {
          double z = B[k];
          for (std::size_t c = 0; c < C; ++c) z += W[k * C + c] * F.at(n, c, i, j);
          const double map = 1.0 / (1.0 + std::exp(-z));
          EXPECT_NEAR(M.at(n, k, i, j), map, 1e-12);
          EXPECT_GT(M.at(n, k, i, j), 0.0);
          EXPECT_LT(M.at(n, k, i, j), 1.0);
          for (std::size_t c = 0; c < C; ++c) {
            EXPECT_NEAR(out.refined[k]->value.at(n, c, i, j), M.at(n, k, i, j) * F.at(n, c, i, j),
                        1e-12);
          }
        }
}

TEST(AttentionHeads, CompositionalOracle) {
  auto m = build_model(small_config(Variant::kProposed), 4);
  Rng rng(4);
  Tape tape;
  auto out = forward_backbone(tape, m, constant(random_maps(3, 32, rng)),
                              constant(random_maps(3, 32, rng)), Mode::kTrain);
  forward_attention(tape, m, out);
  attention_heads(tape, m, out);
  const std::size_t N = 3, C = out.features->value.dim(1);
  const std::size_t hw = out.features->value.dim(2) * out.features->value.dim(3);
  const auto pooled = [&](std::size_t k, std::size_t n, std::size_t c) {
    double s = 0;
    for (std::size_t p = 0; p < hw; ++p) s += out.refined[k]->value[(n * C + c) * hw + p];
    return s / static_cast<double>(hw);
  };
  const Tensor& w0 = m.params.get("head.fc0.weight")->value;
  const Tensor& b0 = m.params.get("head.fc0.bias")->value;
  const Tensor& w1 = m.params.get("head.fc1.weight")->value;
  const Tensor& b1 = m.params.get("head.fc1.bias")->value;
  const std::size_t hidden = b0.size();
  for (std::size_t n = 0; n < N; ++n) {
    std::vector<double> v(C, 0.0);
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t c = 0; c < C; ++c) v[c] += pooled(k, n, c) / 4.0;
    double y = b1[0];
    for (std::size_t h = 0; h < hidden; ++h) {
      double a = b0[h];
      for (std::size_t c = 0; c < C; ++c) a += v[c] * w0[c * hidden + h];
      y += std::max(a, 0.0) * w1[h];
    }
    EXPECT_NEAR(out.att_fat_pred->value[n], y, 1e-10);
    for (std::size_t k = 0; k < 4; ++k) {
      const Tensor& wk = m.params.get("attention.cls" + std::to_string(k) + ".weight")->value;
      double logit = m.params.get("attention.cls" + std::to_string(k) + ".bias")->value[0];
      for (std::size_t c = 0; c < C; ++c) logit += wk[c] * pooled(k, n, c);
      EXPECT_NEAR(out.grade_logits->value[n * 4 + k], logit, 1e-10);
    }
  }
}

TEST(AttentionHeads, EqualMapsAndZeroedClassHead) {
  auto m = build_model(small_config(Variant::kProposed), 5);
  set_attention_bias(m, 0.0, 0.3);  // identical maps for every channel
  for (double& x : m.params.get("attention.cls2.weight")->value.values()) x = 0.0;
  const double b2 = m.params.get("attention.cls2.bias")->value[0];
  Rng rng(5);
  Tape tape;
  auto out = forward_backbone(tape, m, constant(random_maps(3, 32, rng)),
                              constant(random_maps(3, 32, rng)), Mode::kTrain);
  forward_attention(tape, m, out);
  attention_heads(tape, m, out);
  // Every refined map equals sigmoid(0.3) * F_res, so the fused input is its GAP.
  const double s = 1.0 / (1.0 + std::exp(-0.3));
  auto pooled_copy = scale(tape, out.pooled, s);
  const auto& w0 = m.params.get("head.fc0.weight");
  const auto& b0 = m.params.get("head.fc0.bias");
  const auto& w1 = m.params.get("head.fc1.weight");
  const auto& b1 = m.params.get("head.fc1.bias");
  auto direct = fully_connected(tape, relu(tape, fully_connected(tape, pooled_copy, w0, b0)), w1, b1);
  for (std::size_t n = 0; n < 3; ++n) {
    EXPECT_NEAR(out.att_fat_pred->value[n], direct->value[n], 1e-12);
    EXPECT_EQ(out.grade_logits->value[n * 4 + 2], b2);
  }
}

TEST(Loss, WeightedSumAndZeroedWeights) {
  auto m = build_model(small_config(Variant::kProposed), 6);
  Rng rng(6);
  const Tensor target = testutil::random_tensor({4}, rng, 0, 40);
  const std::vector<int> grades{0, 1, 2, 3};
  const auto f = constant(random_maps(4, 32, rng)), l = constant(random_maps(4, 32, rng));
  Tape tape;
  const auto out = forward(tape, m, f, l, Mode::kTrain);
  const LossBreakdown a = total_loss(tape, out, target, grades, {1.0, 0.5, 0.5});
  EXPECT_NEAR(a.total_value(),
              a.reg_value() + 0.5 * a.att_reg_value() + 0.5 * a.att_cls_value(), 1e-10);
  EXPECT_NEAR(a.attention_value({1.0, 0.5, 0.5}), 0.5 * a.att_reg_value() + 0.5 * a.att_cls_value(),
              1e-12);
  const LossBreakdown only_reg = total_loss(tape, out, target, grades, {1.0, 0.0, 0.0});
  EXPECT_EQ(only_reg.total_value(), only_reg.reg_value());
  // Linearity in the weights for fixed outputs.
  const LossBreakdown b = total_loss(tape, out, target, grades, {2.0, 3.0, 0.25});
  EXPECT_NEAR(b.total_value(), 2 * a.reg_value() + 3 * a.att_reg_value() + 0.25 * a.att_cls_value(),
              1e-10);
  const std::vector<int> bad{0, 1, 4, 3};
  EXPECT_THROW(total_loss(tape, out, target, bad, {}), ConfigError);
}

TEST(Loss, ComponentValuesCombine) {
  // Hand-set outputs whose component losses are exactly 1, 2 and 3.
  Tape tape;
  ModelOutputs out;
  out.fat_pred = constant(Tensor({1}, 1.0));
  out.att_fat_pred = constant(Tensor({1}, std::sqrt(2.0)));
  Tensor logits({1, 4}, 0.0);
  // With logits (0, x, x, x): CE at target 0 is log(1 + 3 e^x) = 3.
  const double x = std::log((std::exp(3.0) - 1.0) / 3.0);
  logits[1] = logits[2] = logits[3] = x;
  out.grade_logits = constant(logits);
  const int g[] = {0};
  const auto loss = total_loss(tape, out, Tensor({1}, 0.0), g, {1.0, 0.5, 0.5});
  EXPECT_NEAR(loss.reg_value(), 1.0, 1e-12);
  EXPECT_NEAR(loss.att_reg_value(), 2.0, 1e-12);
  EXPECT_NEAR(loss.att_cls_value(), 3.0, 1e-12);
  EXPECT_NEAR(loss.total_value(), 3.5, 1e-12);
}

TEST(Loss, GradientDecomposesIntoWeightedComponents) {
  const LossWeights w{1.0, 0.5, 0.5};
  const auto base = build_model(small_config(Variant::kProposed), 7);
  Rng rng(7);
  const Tensor fm = random_maps(4, 32, rng), lm = random_maps(4, 32, rng);
  const Tensor target = testutil::random_tensor({4}, rng, 0, 40);
  const std::vector<int> grades{3, 1, 0, 2};

  const auto grads = [&](int which) {
    auto m = base.clone();
    Tape tape;
    const auto out = forward(tape, m, constant(fm), constant(lm), Mode::kTrain);
    const auto loss = total_loss(tape, out, target, grades, w);
    const Var pick[] = {loss.total, loss.reg, loss.att_reg, loss.att_cls};
    tape.backward(pick[which]);
    std::map<std::string, std::vector<double>> g;
    for (const auto& [name, e] : m.params.entries()) {
      const auto span = e.param->value.has_grad() ? e.param->value.grad() : std::span<double>{};
      g[name] = span.empty() ? std::vector<double>(e.param->value.size(), 0.0)
                             : std::vector<double>(span.begin(), span.end());
    }
    return g;
  };
  const auto total = grads(0), reg = grads(1), att_reg = grads(2), att_cls = grads(3);
  bool head_from_reg = false, head_from_att = false;
  for (const auto& [name, g] : total) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double combo = w.reg * reg.at(name)[i] + w.att_reg * att_reg.at(name)[i] +
                           w.att_cls * att_cls.at(name)[i];
      EXPECT_NEAR(g[i], combo, 1e-8 * std::max(1.0, std::abs(combo))) << name << "[" << i << "]";
    }
    if (name == "head.fc1.weight") {
      for (std::size_t i = 0; i < g.size(); ++i) {
        head_from_reg |= reg.at(name)[i] != 0.0;
        head_from_att |= att_reg.at(name)[i] != 0.0;
      }
    }
  }
  EXPECT_TRUE(head_from_reg);
  EXPECT_TRUE(head_from_att);
}

TEST(Predict, AttentionParametersNeverRead) {
  auto m = trained_small(Variant::kProposed);
  Rng rng(10);
  const Tensor f = random_maps(3, 32, rng), l = random_maps(3, 32, rng);
  const shape::FatCalib calib;
  const auto before = predict(m, f, l, calib);
  for (const auto& name : attention_parameter_names(m)) {
    for (double& x : m.params.get(name)->value.values()) x = std::uniform_real_distribution<>(-9, 9)(rng);
  }
  const auto after = predict(m, f, l, calib);
  Tape tape;
  const auto direct = forward_backbone(tape, m, constant(f), constant(l));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(before[i].fat_pct),
              std::bit_cast<std::uint64_t>(after[i].fat_pct));
    EXPECT_EQ(std::bit_cast<std::uint64_t>(before[i].fat_pct),
              std::bit_cast<std::uint64_t>(direct.fat_pred->value[i]));
    EXPECT_EQ(before[i].grade, shape::fat_to_grade(before[i].fat_pct, calib));
  }
}

TEST(Predict, UntrainedModelRefused) {
  const auto m = build_model(small_config(Variant::kProposed), 1);
  EXPECT_THROW(predict(m, Tensor({1, 1, 32, 32}), Tensor({1, 1, 32, 32}), {}), Error);
}

TEST(Serialize, RoundTripKeepsPredictions) {
  const auto m = trained_small(Variant::kBaseline);
  const auto dir = testutil::scratch_dir("model_io");
  save_model(m, dir / "m.sfp", {{"note", "x"}});
  const auto back = load_model(dir / "m.sfp");
  EXPECT_EQ(back.config.variant, Variant::kBaseline);
  EXPECT_EQ(load_model_metadata(dir / "m.sfp").at("note"), "x");
  Rng rng(11);
  const Tensor f = random_maps(2, 32, rng), l = random_maps(2, 32, rng);
  const auto a = predict(m, f, l, {}), b = predict(back, f, l, {});
  // Values are stored as 32-bit floats.
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(a[i].fat_pct, b[i].fat_pct, 1e-3);
  save_model(back, dir / "again.sfp");
  EXPECT_EQ(testutil::read_file(dir / "m.sfp"), testutil::read_file(dir / "again.sfp"));
  EXPECT_THROW(load_model(dir / "missing.sfp"), Error);

  auto wrong = build_model(small_config(Variant::kProposed), 1);
  EXPECT_THROW(assign_named_tensors(wrong, to_named_tensors(m)), FormatError);
  const auto cfg = config_from_json(config_to_json(small_config(Variant::kMlp)));
  EXPECT_EQ(cfg.variant, Variant::kMlp);
  EXPECT_EQ(cfg.input_size, 32u);
}
