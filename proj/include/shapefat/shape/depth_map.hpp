// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "shapefat/shape/mask.hpp"
#include "shapefat/shape/volume.hpp"

namespace shapefat::shape {

enum class View { kFrontal, kLateral };

/// Through-thickness of the mask in millimetres. Frontal: one value per
/// column, measured along rows. Lateral: one value per row, measured along
/// columns. Extent is (last - first + 1) * spacing; 0 where unoccupied.
std::vector<double> depth_profile(const Mask2D& mask, View view, double spacing_mm);

/// Frontal and lateral body-shape maps of one subject, S x S, in [0, 1].
struct DepthMapPair {
  std::string id;
  std::size_t side = 0;
  std::vector<double> frontal;
  std::vector<double> lateral;
};

struct ProjectionOptions {
  double threshold_hu = -300.0;
  std::size_t out_size = 512;
  /// Depth mapped to 1.0; larger depths saturate.
  double depth_scale_mm = 500.0;
};

/// Per-slice depth profiles stacked before resampling, in millimetres.
/// Row r holds slice nz - 1 - r so the top of the image is the last slice.
struct RawDepthMaps {
  std::size_t rows = 0;
  std::size_t frontal_cols = 0;
  std::size_t lateral_cols = 0;
  std::vector<double> frontal;
  std::vector<double> lateral;
  std::size_t body_voxels = 0;
};

RawDepthMaps raw_depth_maps(const Volume& volume, double threshold_hu);

/// Projects a volume to normalized S x S frontal and lateral maps.
/// Throws ConfigError("no body found") if no slice contains body voxels.
DepthMapPair project_depth_maps(const Volume& volume, const ProjectionOptions& options = {});

}  // namespace shapefat::shape
