// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace shapefat::train {

/// k disjoint, sorted test index sets covering 0..n-1. With `stratified`,
/// each grade is shuffled and dealt round-robin, continuing the deal where
/// the previous grade stopped, so per-grade counts differ by at most one
/// across folds. Grades with fewer than k samples only trigger a warning.
std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const int> grades, std::size_t k,
                                                       std::uint64_t seed, bool stratified = true);

/// Complement of folds[f].
std::vector<std::size_t> train_indices(const std::vector<std::vector<std::size_t>>& folds,
                                       std::size_t f);

/// Order-sensitive 64-bit hash of an index set.
std::uint64_t fold_hash(std::span<const std::size_t> indices);

}  // namespace shapefat::train
