// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "shapefat/model/config.hpp"
#include "shapefat/shape/label.hpp"
#include "shapefat/train/dataset.hpp"
#include "shapefat/train/metrics.hpp"
#include "shapefat/train/trainer.hpp"

namespace shapefat::train {

inline constexpr const char* kPcaMethod = "pca_linreg";

/// Canonical method name: a model variant name or "pca_linreg".
std::string canonical_method(const std::string& name);

struct CvConfig {
  TrainConfig train;
  /// Template for the network methods; the variant is set per method.
  model::ModelConfig model;
  std::vector<std::string> methods{"plain_backbone", "baseline", "proposed", kPcaMethod, "mlp"};
  /// Thresholds used to grade predictions.
  shape::FatCalib calib;
  double pca_threshold = 0.95;
  /// Each map is resampled to this side before PCA.
  std::size_t pca_side = 64;
  std::size_t jobs = 1;

  void validate() const;
};

struct MethodResult {
  std::string method;
  MetricsReport pooled;
  std::vector<MetricsReport> folds;
  /// Per-fold training history (empty for pca_linreg).
  std::vector<std::vector<EpochRecord>> histories;
  /// Retained principal components per fold (pca_linreg only).
  std::vector<std::size_t> pca_components;
};

struct CvResult {
  std::vector<std::vector<std::size_t>> folds;
  std::vector<std::uint64_t> fold_hashes;
  std::vector<MethodResult> methods;

  const MethodResult& method(const std::string& name) const;
};

/// Seeds shared by every network method on fold f, so variants start from the
/// same backbone weights and see the same mini-batch order.
std::uint64_t init_seed(std::uint64_t seed, std::size_t fold);
std::uint64_t shuffle_seed(std::uint64_t seed, std::size_t fold);

using FoldCallback = std::function<void(const std::string& method, std::size_t fold,
                                        const MetricsReport& report)>;

/// Trains and evaluates every method on identical folds. When `out_dir` is
/// non-empty each trained model is saved as <method>_f<fold>.sfp (+ .json)
/// with `checkpoint_meta` merged into its metadata.
CvResult run_cv(const CvConfig& config, const Dataset& data,
                const std::filesystem::path& out_dir = {}, const FoldCallback& on_fold = {},
                const nlohmann::json& checkpoint_meta = nlohmann::json::object());

/// PCA + least squares on one split; returns raw test predictions and the
/// number of retained components.
std::pair<std::vector<double>, std::size_t> pca_linreg_predict(
    const Dataset& data, std::span<const std::size_t> train_idx,
    std::span<const std::size_t> test_idx, double var_threshold, std::size_t side);

/// comparison.csv, scatter_<method>.csv, confusion_<method>.csv,
/// history_<method>_<fold>.csv and run.json (config, seeds, fold hashes,
/// pooled metrics, version, plus `extra`).
void write_cv_reports(const CvResult& result, const CvConfig& config,
                      const std::filesystem::path& out_dir,
                      const nlohmann::json& extra = nlohmann::json::object());

}  // namespace shapefat::train
