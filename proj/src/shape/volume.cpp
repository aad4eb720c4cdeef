// SPDX-License-Identifier: Apache-2.0
#include "shapefat/shape/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shapefat/error.hpp"

namespace shapefat::shape {

Volume::Volume(std::size_t nx, std::size_t ny, std::size_t nz, Spacing spacing, std::int16_t fill)
    : nx_(nx), ny_(ny), nz_(nz), spacing_(spacing), voxels_(nx * ny * nz, fill) {
  validate();
}

Volume::Volume(std::size_t nx, std::size_t ny, std::size_t nz, Spacing spacing,
               std::vector<std::int16_t> voxels)
    : nx_(nx), ny_(ny), nz_(nz), spacing_(spacing), voxels_(std::move(voxels)) {
  validate();
}

std::span<const std::int16_t> Volume::slice(std::size_t z) const {
  if (z >= nz_) throw ConfigError("slice index " + std::to_string(z) + " outside volume");
  return std::span<const std::int16_t>(voxels_).subspan(z * nx_ * ny_, nx_ * ny_);
}

void Volume::validate() const {
  if (nx_ == 0 || ny_ == 0 || nz_ == 0) throw ConfigError("volume dimensions must be positive");
  if (voxels_.size() != nx_ * ny_ * nz_) {
    throw ConfigError("volume voxel count " + std::to_string(voxels_.size()) +
                      " does not match dims " + std::to_string(nx_) + "x" + std::to_string(ny_) +
                      "x" + std::to_string(nz_));
  }
  for (double s : {spacing_.x, spacing_.y, spacing_.z}) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("volume spacing must be positive");
  }
  const auto [lo, hi] = std::minmax_element(voxels_.begin(), voxels_.end());
  if (*lo < kMinHu || *hi > kMaxHu) {
    throw ConfigError("volume attenuation outside [" + std::to_string(kMinHu) + ", " +
                      std::to_string(kMaxHu) + "]");
  }
}

}  // namespace shapefat::shape
