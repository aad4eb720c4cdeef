// SPDX-License-Identifier: Apache-2.0
#include "shapefat/shape/depth_map.hpp"

#include <algorithm>

#include "shapefat/error.hpp"
#include "shapefat/shape/resample.hpp"

namespace shapefat::shape {

std::vector<double> depth_profile(const Mask2D& mask, View view, double spacing_mm) {
  const bool frontal = view == View::kFrontal;
  const std::size_t lines = frontal ? mask.cols : mask.rows;
  const std::size_t length = frontal ? mask.rows : mask.cols;
  std::vector<double> profile(lines, 0.0);
  for (std::size_t l = 0; l < lines; ++l) {
    std::size_t first = length, last = 0;
    for (std::size_t k = 0; k < length; ++k) {
      const bool on = frontal ? mask(k, l) : mask(l, k);
      if (!on) continue;
      first = std::min(first, k);
      last = k;
    }
    if (first < length) profile[l] = static_cast<double>(last - first + 1) * spacing_mm;
  }
  return profile;
}

RawDepthMaps raw_depth_maps(const Volume& volume, double threshold_hu) {
  RawDepthMaps raw;
  raw.rows = volume.nz();
  raw.frontal_cols = volume.nx();
  raw.lateral_cols = volume.ny();
  raw.frontal.assign(raw.rows * raw.frontal_cols, 0.0);
  raw.lateral.assign(raw.rows * raw.lateral_cols, 0.0);
  for (std::size_t z = 0; z < volume.nz(); ++z) {
    const Mask2D mask = body_mask(volume.slice(z), volume.ny(), volume.nx(), threshold_hu);
    raw.body_voxels += mask.area();
    const std::size_t row = volume.nz() - 1 - z;
    const auto f = depth_profile(mask, View::kFrontal, volume.spacing().y);
    const auto l = depth_profile(mask, View::kLateral, volume.spacing().x);
    std::copy(f.begin(), f.end(), raw.frontal.begin() + static_cast<std::ptrdiff_t>(row * raw.frontal_cols));
    std::copy(l.begin(), l.end(), raw.lateral.begin() + static_cast<std::ptrdiff_t>(row * raw.lateral_cols));
  }
  return raw;
}

DepthMapPair project_depth_maps(const Volume& volume, const ProjectionOptions& options) {
  if (options.out_size == 0) throw ConfigError("project_depth_maps: out_size must be positive");
  if (!(options.depth_scale_mm > 0.0)) {
    throw ConfigError("project_depth_maps: depth scale must be positive");
  }
  const RawDepthMaps raw = raw_depth_maps(volume, options.threshold_hu);
  if (raw.body_voxels == 0) throw ConfigError("no body found");

  const std::size_t s = options.out_size;
  DepthMapPair pair;
  pair.side = s;
  pair.frontal = resample_bilinear(raw.frontal, raw.rows, raw.frontal_cols, s, s);
  pair.lateral = resample_bilinear(raw.lateral, raw.rows, raw.lateral_cols, s, s);
  for (auto* map : {&pair.frontal, &pair.lateral}) {
    for (double& v : *map) v = std::clamp(v / options.depth_scale_mm, 0.0, 1.0);
  }
  return pair;
}

}  // namespace shapefat::shape
