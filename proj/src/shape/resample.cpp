// SPDX-License-Identifier: Apache-2.0
#include "shapefat/shape/resample.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shapefat/error.hpp"

namespace shapefat::shape {

namespace {

struct Tap {
  std::size_t lo, hi;
  double frac;
};

std::vector<Tap> taps(std::size_t in, std::size_t out) {
  std::vector<Tap> result(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t i = 0; i < out; ++i) {
    double pos = (static_cast<double>(i) + 0.5) * ratio - 0.5;
    pos = std::clamp(pos, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, in - 1);
    result[i] = {lo, hi, pos - static_cast<double>(lo)};
  }
  return result;
}

}  // namespace

std::vector<double> resample_bilinear(std::span<const double> src, std::size_t rows,
                                      std::size_t cols, std::size_t out_rows,
                                      std::size_t out_cols) {
  if (rows == 0 || cols == 0 || out_rows == 0 || out_cols == 0 || src.size() != rows * cols) {
    throw ShapeError("resample_bilinear: invalid image " + std::to_string(rows) + "x" +
                     std::to_string(cols) + " with " + std::to_string(src.size()) +
                     " pixels to " + std::to_string(out_rows) + "x" + std::to_string(out_cols));
  }
  const auto ry = taps(rows, out_rows);
  const auto rx = taps(cols, out_cols);
  std::vector<double> out(out_rows * out_cols);
  for (std::size_t i = 0; i < out_rows; ++i) {
    const Tap& ty = ry[i];
    for (std::size_t j = 0; j < out_cols; ++j) {
      const Tap& tx = rx[j];
      const double top = src[ty.lo * cols + tx.lo] * (1.0 - tx.frac) + src[ty.lo * cols + tx.hi] * tx.frac;
      const double bot = src[ty.hi * cols + tx.lo] * (1.0 - tx.frac) + src[ty.hi * cols + tx.hi] * tx.frac;
      out[i * out_cols + j] = top * (1.0 - ty.frac) + bot * ty.frac;
    }
  }
  return out;
}

}  // namespace shapefat::shape
