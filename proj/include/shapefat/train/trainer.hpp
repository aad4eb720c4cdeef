// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "shapefat/autodiff/optim.hpp"
#include "shapefat/model/network.hpp"
#include "shapefat/train/dataset.hpp"

namespace shapefat::train {

struct TrainConfig {
  int epochs = 200;
  std::size_t batch = 32;
  ad::Schedule schedule;
  std::uint64_t seed = 7;
  std::size_t folds = 5;
  bool stratified = true;
  /// Joint gradient L2 norm cap per step; 0 disables clipping.
  double clip_norm = 20.0;

  void validate() const;
};

/// Per-epoch means of the loss components, weighted by batch size.
struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double total = 0.0;
  double reg = 0.0;
  double att_reg = 0.0;
  double att_cls = 0.0;
  /// alpha_1 * att_reg + alpha_2 * att_cls.
  double att = 0.0;
};

struct TrainResult {
  model::ModelParams model;
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains a freshly built model on `train_idx`. Weights are initialized from
/// `init_seed`; mini-batch order is a seeded permutation per epoch. Throws
/// NumericError on a non-finite loss.
TrainResult train_model(const TrainConfig& config, const model::ModelConfig& model_config,
                        const Dataset& data, std::span<const std::size_t> train_idx,
                        std::uint64_t init_seed, std::uint64_t shuffle_seed,
                        const EpochCallback& on_epoch = {});

/// Continues training an existing model in place.
std::vector<EpochRecord> train_epochs(const TrainConfig& config, model::ModelParams& model,
                                      const Dataset& data, std::span<const std::size_t> train_idx,
                                      std::uint64_t shuffle_seed, const EpochCallback& on_epoch = {});

/// Raw backbone predictions for `indices`, evaluated in chunks of `batch`.
std::vector<double> predict_indices(const model::ModelParams& model, const Dataset& data,
                                    std::span<const std::size_t> indices, std::size_t batch = 64);

void write_history_csv(const std::filesystem::path& path, std::span<const EpochRecord> history);

}  // namespace shapefat::train
