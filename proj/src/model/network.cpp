// SPDX-License-Identifier: Apache-2.0
#include "shapefat/model/network.hpp"

#include <cmath>
#include <random>
#include <string_view>

#include "shapefat/error.hpp"
#include "shapefat/random.hpp"

namespace shapefat::model {
namespace {

using ad::Mode;
using ad::Tape;
using ad::Tensor;
using ad::Var;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string idx(std::string_view stem, std::size_t i) { return std::string(stem) + std::to_string(i); }

class Builder {
 public:
  Builder(ModelParams& model, std::uint64_t seed) : model_(model), seed_(seed) {}

  void conv(const std::string& name, std::size_t out_c, std::size_t in_c, std::size_t k,
            bool bias = false) {
    model_.params.add(name + ".weight", he_uniform(name + ".weight", {out_c, in_c, k, k}, in_c * k * k));
    if (bias) model_.params.add(name + ".bias", Tensor({out_c}, 0.0));
  }

  void batchnorm(const std::string& name, std::size_t c) {
    model_.params.add(name + ".gamma", Tensor({c}, 1.0));
    model_.params.add(name + ".beta", Tensor({c}, 0.0));
    model_.batchnorm.emplace(name, ad::BatchNormState(c));
  }

  void fc(const std::string& name, std::size_t in, std::size_t out) {
    model_.params.add(name + ".weight", he_uniform(name + ".weight", {in, out}, in));
    model_.params.add(name + ".bias", Tensor({out}, 0.0));
  }

 private:
  Tensor he_uniform(const std::string& name, ad::Shape shape, std::size_t fan_in) {
    Rng rng(derive_seed(seed_, {fnv1a(name)}));
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(std::move(shape));
    for (double& v : t.values()) v = dist(rng);
    return t;
  }

  ModelParams& model_;
  std::uint64_t seed_;
};

bool needs_projection(std::size_t in_c, std::size_t out_c, std::size_t stride) {
  return in_c != out_c || stride != 1;
}

/// Shared forward machinery. Train mode writes batch-norm statistics through
/// `stats`; eval mode reads them from the const model.
class Runner {
 public:
  Runner(Tape& tape, const ModelParams& model, std::map<std::string, ad::BatchNormState>* stats,
         Mode mode)
      : tape_(tape), model_(model), stats_(stats), mode_(mode) {}

  const Var& p(const std::string& name) const { return model_.params.get(name); }

  Var conv(const std::string& name, const Var& x, std::size_t stride, std::size_t pad) {
    const std::string bias = name + ".bias";
    return ad::conv2d(tape_, x, p(name + ".weight"),
                      model_.params.contains(bias) ? p(bias) : Var{}, stride, pad);
  }

  Var bn(const std::string& name, const Var& x) {
    const Var& gamma = p(name + ".gamma");
    const Var& beta = p(name + ".beta");
    if (mode_ == Mode::kTrain) {
      return ad::batchnorm2d(tape_, x, gamma, beta, stats_->at(name), Mode::kTrain);
    }
    return ad::batchnorm2d(tape_, x, gamma, beta, model_.batchnorm.at(name));
  }

  Var fc(const std::string& name, const Var& x) {
    return ad::fully_connected(tape_, x, p(name + ".weight"), p(name + ".bias"));
  }

  /// Shared regression head; N x C -> N.
  Var head(const Var& pooled) {
    Var x = pooled;
    const auto& widths = model_.config.head_widths;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      x = fc(idx("head.fc", i), x);
      if (i + 1 < widths.size()) x = ad::relu(tape_, x);
    }
    return ad::reshape(tape_, x, {x->value.dim(0)});
  }

  Var input_phase(const std::string& view, const Var& x0) {
    Var x = x0;
    for (std::size_t i = 0; i < model_.config.input_phase_channels.size(); ++i) {
      const std::string stem = "input." + view;
      x = ad::relu(tape_, bn(idx(stem + ".bn", i), conv(idx(stem + ".conv", i), x, 2, 1)));
    }
    return x;
  }

  Var residual_block(const std::string& prefix, const Var& x, std::size_t out_c,
                     std::size_t stride) {
    const std::size_t in_c = x->value.dim(1);
    Var y = ad::relu(tape_, bn(prefix + ".bn1", conv(prefix + ".conv1", x, stride, 1)));
    y = bn(prefix + ".bn2", conv(prefix + ".conv2", y, 1, 1));
    Var shortcut = x;
    if (needs_projection(in_c, out_c, stride)) {
      shortcut = bn(prefix + ".proj_bn", conv(prefix + ".proj", x, stride, 0));
    }
    return ad::relu(tape_, ad::add(tape_, y, shortcut));
  }

  ModelOutputs backbone(const Var& frontal, const Var& lateral) {
    const auto& cfg = model_.config;
    ModelOutputs out;
    if (cfg.variant == Variant::kMlp) {
      Var x = ad::concat_channels(tape_, ad::flatten(tape_, frontal), ad::flatten(tape_, lateral));
      x = ad::relu(tape_, fc("mlp.fc0", x));
      x = fc("mlp.fc1", x);
      out.fat_pred = ad::reshape(tape_, x, {x->value.dim(0)});
      return out;
    }
    Var x = ad::concat_channels(tape_, input_phase("frontal", frontal),
                                input_phase("lateral", lateral));
    for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
      for (std::size_t b = 0; b < cfg.stages[s].blocks; ++b) {
        const std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
        x = residual_block(idx("stage", s) + idx(".block", b), x, cfg.stages[s].channels, stride);
      }
    }
    out.features = x;
    out.pooled = ad::global_avg_pool(tape_, x);
    out.fat_pred = head(out.pooled);
    return out;
  }

 private:
  Tape& tape_;
  const ModelParams& model_;
  std::map<std::string, ad::BatchNormState>* stats_;
  Mode mode_;
};

void check_inputs(const ModelConfig& cfg, const Var& frontal, const Var& lateral) {
  for (const Var* v : {&frontal, &lateral}) {
    if (!*v) throw ShapeError("model input is null");
    const auto& s = (*v)->value.shape();
    if (s.size() != 4 || s[1] != 1 || s[2] != cfg.input_size || s[3] != cfg.input_size) {
      throw ShapeError("model expects inputs of shape [N, 1, " + std::to_string(cfg.input_size) +
                       ", " + std::to_string(cfg.input_size) + "], got " + ad::to_string(s));
    }
  }
  if (frontal->value.dim(0) != lateral->value.dim(0)) {
    throw ShapeError("frontal and lateral batches differ: " + ad::to_string(frontal->value.shape()) +
                     " vs " + ad::to_string(lateral->value.shape()));
  }
}

}  // namespace

bool ModelParams::has_running_stats() const {
  for (const auto& [name, state] : batchnorm) {
    if (!state.initialized) return false;
  }
  return true;
}

ModelParams ModelParams::clone() const {
  ModelParams copy;
  copy.config = config;
  copy.params = params.clone();
  copy.batchnorm = batchnorm;
  copy.trained = trained;
  return copy;
}

ModelParams build_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams model;
  model.config = config;
  Builder b(model, seed);

  if (config.variant == Variant::kMlp) {
    b.fc("mlp.fc0", 2 * config.input_size * config.input_size, config.mlp_hidden);
    b.fc("mlp.fc1", config.mlp_hidden, 1);
    return model;
  }

  for (const std::string view : {"frontal", "lateral"}) {
    std::size_t in_c = 1;
    for (std::size_t i = 0; i < config.input_phase_channels.size(); ++i) {
      const std::size_t c = config.input_phase_channels[i];
      b.conv(idx("input." + view + ".conv", i), c, in_c, 3);
      b.batchnorm(idx("input." + view + ".bn", i), c);
      in_c = c;
    }
  }
  std::size_t in_c = 2 * config.input_phase_channels.back();
  for (std::size_t s = 0; s < config.stages.size(); ++s) {
    const std::size_t out_c = config.stages[s].channels;
    for (std::size_t blk = 0; blk < config.stages[s].blocks; ++blk) {
      const std::string prefix = idx("stage", s) + idx(".block", blk);
      const std::size_t stride = (s > 0 && blk == 0) ? 2 : 1;
      b.conv(prefix + ".conv1", out_c, in_c, 3);
      b.batchnorm(prefix + ".bn1", out_c);
      b.conv(prefix + ".conv2", out_c, out_c, 3);
      b.batchnorm(prefix + ".bn2", out_c);
      if (needs_projection(in_c, out_c, stride)) {
        b.conv(prefix + ".proj", out_c, in_c, 1);
        b.batchnorm(prefix + ".proj_bn", out_c);
      }
      in_c = out_c;
    }
  }
  std::size_t width = in_c;
  for (std::size_t i = 0; i < config.head_widths.size(); ++i) {
    b.fc(idx("head.fc", i), width, config.head_widths[i]);
    width = config.head_widths[i];
  }
  if (has_attention(config.variant)) {
    b.conv("attention.proj", config.attention_channels, in_c, 1, true);
    if (has_classification(config.variant)) {
      for (std::size_t k = 0; k < config.attention_channels; ++k) {
        b.fc(idx("attention.cls", k), in_c, 1);
      }
    }
  }
  return model;
}

std::string output_bias_name(const ModelConfig& config) {
  if (config.variant == Variant::kMlp) return "mlp.fc1.bias";
  return idx("head.fc", config.head_widths.size() - 1) + ".bias";
}

std::vector<std::string> attention_parameter_names(const ModelParams& model) {
  std::vector<std::string> names;
  for (const auto& [name, entry] : model.params.entries()) {
    if (name.rfind("attention.", 0) == 0) names.push_back(name);
  }
  return names;
}

ModelOutputs forward_backbone(Tape& tape, ModelParams& model, const Var& frontal,
                              const Var& lateral, Mode mode) {
  check_inputs(model.config, frontal, lateral);
  Runner r(tape, model, &model.batchnorm, mode);
  return r.backbone(frontal, lateral);
}

ModelOutputs forward_backbone(Tape& tape, const ModelParams& model, const Var& frontal,
                              const Var& lateral) {
  check_inputs(model.config, frontal, lateral);
  Runner r(tape, model, nullptr, Mode::kEval);
  return r.backbone(frontal, lateral);
}

void forward_attention(Tape& tape, const ModelParams& model, ModelOutputs& out) {
  if (!has_attention(model.config.variant)) {
    throw ConfigError("attention disabled for variant " +
                      std::string(to_string(model.config.variant)));
  }
  if (!out.features) throw Error("forward_attention: backbone features are missing");
  Runner r(tape, model, nullptr, Mode::kEval);
  out.attention_maps = ad::sigmoid(tape, r.conv("attention.proj", out.features, 1, 0));
  out.refined.clear();
  for (std::size_t k = 0; k < model.config.attention_channels; ++k) {
    out.refined.push_back(
        ad::mul_broadcast(tape, out.features, ad::slice_channels(tape, out.attention_maps, k, 1)));
  }
}

void attention_heads(Tape& tape, const ModelParams& model, ModelOutputs& out) {
  if (out.refined.empty()) throw Error("attention_heads: no refined features");
  Runner r(tape, model, nullptr, Mode::kEval);
  std::vector<Var> pooled;
  pooled.reserve(out.refined.size());
  for (const Var& f : out.refined) pooled.push_back(ad::global_avg_pool(tape, f));
  out.att_fat_pred = r.head(ad::mean_of(tape, pooled));
  if (has_classification(model.config.variant)) {
    std::vector<Var> logits;
    for (std::size_t k = 0; k < pooled.size(); ++k) logits.push_back(r.fc(idx("attention.cls", k), pooled[k]));
    out.grade_logits = ad::concat_channels(tape, logits);
  }
}

ModelOutputs forward(Tape& tape, ModelParams& model, const Var& frontal, const Var& lateral,
                     Mode mode) {
  ModelOutputs out = forward_backbone(tape, model, frontal, lateral, mode);
  if (has_attention(model.config.variant)) {
    forward_attention(tape, model, out);
    attention_heads(tape, model, out);
  }
  return out;
}

std::vector<Prediction> predict(const ModelParams& model, const Tensor& frontal,
                                const Tensor& lateral, const shape::FatCalib& calib) {
  if (!model.trained || !model.has_running_stats()) {
    throw Error("predict: model is untrained; train it or load a checkpoint first");
  }
  Tape tape(false);
  const ModelOutputs out =
      forward_backbone(tape, model, ad::constant(frontal), ad::constant(lateral));
  std::vector<Prediction> preds;
  preds.reserve(out.fat_pred->value.size());
  for (double v : out.fat_pred->value.values()) {
    preds.push_back({v, shape::fat_to_grade(v, calib)});
  }
  return preds;
}

}  // namespace shapefat::model
