// SPDX-License-Identifier: Apache-2.0
#include "shapefat/shape/mask.hpp"

#include <algorithm>
#include <string>

#include "shapefat/error.hpp"

namespace shapefat::shape {

namespace {

/// Labels the 4-connected component containing `seed` among pixels where
/// `member` is true; returns its pixel indices.
template <typename Pred>
std::vector<std::size_t> flood(std::size_t seed, std::size_t rows, std::size_t cols, Pred member,
                               std::vector<std::uint8_t>& visited) {
  std::vector<std::size_t> component;
  std::vector<std::size_t> stack{seed};
  visited[seed] = 1;
  while (!stack.empty()) {
    const std::size_t idx = stack.back();
    stack.pop_back();
    component.push_back(idx);
    const std::size_t r = idx / cols, c = idx % cols;
    const auto push = [&](std::size_t n) {
      if (!visited[n] && member(n)) {
        visited[n] = 1;
        stack.push_back(n);
      }
    };
    if (r > 0) push(idx - cols);
    if (r + 1 < rows) push(idx + cols);
    if (c > 0) push(idx - 1);
    if (c + 1 < cols) push(idx + 1);
  }
  return component;
}

}  // namespace

std::size_t Mask2D::area() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

Mask2D body_mask(std::span<const std::int16_t> slice, std::size_t rows, std::size_t cols,
                 double threshold_hu) {
  if (slice.size() != rows * cols) {
    throw ShapeError("body_mask: slice has " + std::to_string(slice.size()) + " pixels, expected " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
  const std::size_t n = rows * cols;
  const auto tissue = [&](std::size_t i) { return static_cast<double>(slice[i]) >= threshold_hu; };

  std::vector<std::uint8_t> visited(n, 0);
  std::vector<std::size_t> largest;
  for (std::size_t i = 0; i < n; ++i) {
    if (visited[i] || !tissue(i)) continue;
    auto comp = flood(i, rows, cols, tissue, visited);
    if (comp.size() > largest.size()) largest = std::move(comp);
  }

  Mask2D mask(rows, cols);
  for (std::size_t i : largest) mask.bits[i] = 1;
  if (largest.empty()) return mask;

  // Background reachable from the image border stays background; everything
  // else enclosed by the body is a hole.
  std::fill(visited.begin(), visited.end(), 0);
  const auto outside = [&](std::size_t i) { return mask.bits[i] == 0; };
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = i / cols, c = i % cols;
    const bool border = r == 0 || c == 0 || r + 1 == rows || c + 1 == cols;
    if (border && !visited[i] && outside(i)) flood(i, rows, cols, outside, visited);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!visited[i]) mask.bits[i] = 1;
  }
  return mask;
}

}  // namespace shapefat::shape
