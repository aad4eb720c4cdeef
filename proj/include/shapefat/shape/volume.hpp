// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace shapefat::shape {

inline constexpr std::int16_t kMinHu = -1024;
inline constexpr std::int16_t kMaxHu = 3071;
inline constexpr std::int16_t kAirHu = -1000;

/// Voxel size in millimetres along each axis.
struct Spacing {
  double x = 1.0;
  double y = 1.0;
  double z = 1.0;
};

/// Attenuation volume in Hounsfield units, stored z-major:
/// index = (z * ny + y) * nx + x. Each axial slice is an ny x nx image whose
/// rows run anterior-posterior (y) and columns left-right (x).
class Volume {
 public:
  Volume() = default;
  Volume(std::size_t nx, std::size_t ny, std::size_t nz, Spacing spacing,
         std::int16_t fill = kAirHu);
  Volume(std::size_t nx, std::size_t ny, std::size_t nz, Spacing spacing,
         std::vector<std::int16_t> voxels);

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::size_t nz() const noexcept { return nz_; }
  const Spacing& spacing() const noexcept { return spacing_; }

  std::int16_t& at(std::size_t x, std::size_t y, std::size_t z) {
    return voxels_[(z * ny_ + y) * nx_ + x];
  }
  std::int16_t at(std::size_t x, std::size_t y, std::size_t z) const {
    return voxels_[(z * ny_ + y) * nx_ + x];
  }

  std::span<const std::int16_t> slice(std::size_t z) const;
  std::span<std::int16_t> voxels() noexcept { return voxels_; }
  std::span<const std::int16_t> voxels() const noexcept { return voxels_; }

  /// Throws ConfigError if dims, spacing or any voxel value is out of range.
  void validate() const;

 private:
  std::size_t nx_ = 0, ny_ = 0, nz_ = 0;
  Spacing spacing_;
  std::vector<std::int16_t> voxels_;
};

}  // namespace shapefat::shape
