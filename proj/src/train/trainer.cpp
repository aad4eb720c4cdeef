// SPDX-License-Identifier: Apache-2.0
#include "shapefat/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "shapefat/error.hpp"
#include "shapefat/model/loss.hpp"
#include "shapefat/random.hpp"

namespace shapefat::train {

namespace {

// Training allocates and frees the same large activation buffers every step;
// keeping them on the heap instead of mmap avoids a page-fault storm.
void keep_large_blocks_on_heap() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
  });
#endif
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch < 1) throw ConfigError("train: batch size must be >= 1");
  if (folds < 1) throw ConfigError("train: fold count must be >= 1");
  if (!(clip_norm >= 0.0)) throw ConfigError("train: clip_norm must be >= 0");
  schedule.validate();
}

std::vector<EpochRecord> train_epochs(const TrainConfig& config, model::ModelParams& model,
                                      const Dataset& data, std::span<const std::size_t> train_idx,
                                      std::uint64_t shuffle_seed, const EpochCallback& on_epoch) {
  config.validate();
  keep_large_blocks_on_heap();
  if (train_idx.empty()) throw ConfigError("train: empty training set");
  if (data.side != model.config.input_size) {
    throw ConfigError("train: dataset maps are " + std::to_string(data.side) +
                      " px but the model expects " + std::to_string(model.config.input_size));
  }
  std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
  std::vector<EpochRecord> history;
  history.reserve(static_cast<std::size_t>(config.epochs));
  const auto& weights = model.config.loss_weights;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = ad::lr_at_epoch(config.schedule, epoch);
    std::copy(train_idx.begin(), train_idx.end(), order.begin());
    Rng rng(derive_seed(shuffle_seed, {static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), rng);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    std::size_t seen = 0, step = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch, ++step) {
      const std::size_t n = std::min(config.batch, order.size() - start);
      const Batch batch = make_batch(data, std::span(order).subspan(start, n));
      ad::Tape tape;
      const auto out = model::forward(tape, model, ad::constant(batch.frontal),
                                      ad::constant(batch.lateral), ad::Mode::kTrain);
      const auto loss = model::total_loss(tape, out, batch.fat, batch.grades, weights);
      const double total = loss.total_value();
      if (!std::isfinite(total)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) +
                           ", step " + std::to_string(step) + ", lr " + std::to_string(lr));
      }
      tape.backward(loss.total);
      if (config.clip_norm > 0.0) ad::clip_grad_norm(model.params, config.clip_norm);
      ad::sgd_momentum_step(model.params, lr, config.schedule.momentum);

      const double w = static_cast<double>(n);
      rec.total += w * total;
      rec.reg += w * loss.reg_value();
      rec.att_reg += w * loss.att_reg_value();
      rec.att_cls += w * loss.att_cls_value();
      seen += n;
    }
    const double inv = 1.0 / static_cast<double>(seen);
    rec.total *= inv;
    rec.reg *= inv;
    rec.att_reg *= inv;
    rec.att_cls *= inv;
    rec.att = weights.att_reg * rec.att_reg + weights.att_cls * rec.att_cls;
    history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  model.trained = true;
  return history;
}

TrainResult train_model(const TrainConfig& config, const model::ModelConfig& model_config,
                        const Dataset& data, std::span<const std::size_t> train_idx,
                        std::uint64_t init_seed, std::uint64_t shuffle_seed,
                        const EpochCallback& on_epoch) {
  TrainResult result{model::build_model(model_config, init_seed), {}};
  // Start the regression output at the mean training target.
  double mean = 0.0;
  for (std::size_t i : train_idx) mean += data.samples.at(i).fat_pct;
  if (!train_idx.empty()) mean /= static_cast<double>(train_idx.size());
  result.model.params.get(model::output_bias_name(model_config))->value[0] = mean;
  result.history = train_epochs(config, result.model, data, train_idx, shuffle_seed, on_epoch);
  return result;
}

std::vector<double> predict_indices(const model::ModelParams& model, const Dataset& data,
                                    std::span<const std::size_t> indices, std::size_t batch) {
  if (batch == 0) throw ConfigError("predict: batch size must be positive");
  std::vector<double> out;
  out.reserve(indices.size());
  const shape::FatCalib calib;
  for (std::size_t start = 0; start < indices.size(); start += batch) {
    const std::size_t n = std::min(batch, indices.size() - start);
    const Batch b = make_batch(data, indices.subspan(start, n));
    for (const auto& p : model::predict(model, b.frontal, b.lateral, calib)) out.push_back(p.fat_pct);
  }
  return out;
}

void write_history_csv(const std::filesystem::path& path, std::span<const EpochRecord> history) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch,lr,total,reg,att_reg,att_cls,att\n";
  char buf[256];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.lr,
                  r.total, r.reg, r.att_reg, r.att_cls, r.att);
    out << buf;
  }
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace shapefat::train
