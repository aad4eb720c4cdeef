// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace shapefat::shape {

/// Bilinear resampling of a row-major image with pixel-centre alignment:
/// output pixel i samples source coordinate (i + 0.5) * in / out - 0.5,
/// clamped to the valid range.
std::vector<double> resample_bilinear(std::span<const double> src, std::size_t rows,
                                      std::size_t cols, std::size_t out_rows,
                                      std::size_t out_cols);

}  // namespace shapefat::shape
