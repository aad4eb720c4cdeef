// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace shapefat::shape {

/// Binary image, row-major.
struct Mask2D {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> bits;

  Mask2D() = default;
  Mask2D(std::size_t r, std::size_t c) : rows(r), cols(c), bits(r * c, 0) {}

  bool operator()(std::size_t r, std::size_t c) const { return bits[r * cols + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v = true) { bits[r * cols + c] = v ? 1 : 0; }
  std::size_t area() const;
  bool empty() const { return area() == 0; }
};

/// Body outline of one axial slice: the largest 4-connected component of
/// pixels with attenuation >= threshold, with enclosed holes filled.
/// Air-only slices yield an empty mask.
Mask2D body_mask(std::span<const std::int16_t> slice, std::size_t rows, std::size_t cols,
                 double threshold_hu);

}  // namespace shapefat::shape
