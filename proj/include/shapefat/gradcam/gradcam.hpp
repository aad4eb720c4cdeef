// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "shapefat/autodiff/tensor.hpp"
#include "shapefat/model/network.hpp"

namespace shapefat::gradcam {

struct Heatmap {
  std::size_t side = 0;
  std::vector<double> values;  // side x side, row-major, in [0, 1]
  /// True when every channel weight or the weighted sum vanished.
  bool degenerate = false;
};

/// Heatmaps for every sample of a batch from features F (N x C x h x w) and
/// the gradient of the target with respect to F (same shape):
/// w_c = spatial mean of the gradient, map = ReLU(sum_c w_c F_c), bilinearly
/// upsampled to out_side and divided by its maximum.
std::vector<Heatmap> heatmaps_from_features(const ad::Tensor& features,
                                            std::span<const double> gradient, std::size_t out_side);

/// Targets the backbone fat prediction in eval mode; F is the final residual
/// stage output. Inputs are N x 1 x S x S; one heatmap per sample.
std::vector<Heatmap> grad_cam_map(const model::ModelParams& model, const ad::Tensor& frontal,
                                  const ad::Tensor& lateral);

/// Attention maps M^k (N x K x h x w) for inspection; requires an attention variant.
ad::Tensor attention_maps(const model::ModelParams& model, const ad::Tensor& frontal,
                          const ad::Tensor& lateral);

/// Writes heatmap_<id>.pgm, heatmap_<id>.csv and overlay_<id>.pgm into `dir`
/// and returns their paths. `frontal` holds side x side values in [0, 1].
std::vector<std::filesystem::path> export_heatmap(const Heatmap& heatmap,
                                                  std::span<const double> frontal,
                                                  const std::filesystem::path& dir,
                                                  const std::string& id);

/// Writes attention_<id>.csv with columns channel,row,col,value for sample `n`.
std::filesystem::path export_attention(const ad::Tensor& maps, std::size_t n,
                                       const std::filesystem::path& dir, const std::string& id);

/// 8-bit binary PGM of values in [0, 1].
void write_pgm(const std::filesystem::path& path, std::span<const double> values, std::size_t rows,
               std::size_t cols);
std::vector<double> read_heatmap_csv(const std::filesystem::path& path);

}  // namespace shapefat::gradcam
