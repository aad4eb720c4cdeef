// SPDX-License-Identifier: Apache-2.0
#include "shapefat/train/folds.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include <spdlog/spdlog.h>

#include "shapefat/error.hpp"
#include "shapefat/random.hpp"

namespace shapefat::train {

std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const int> grades, std::size_t k,
                                                       std::uint64_t seed, bool stratified) {
  if (k == 0) throw ConfigError("k-fold: k must be at least 1");
  if (grades.size() < k) {
    throw ConfigError("k-fold: " + std::to_string(grades.size()) + " samples cannot fill " +
                      std::to_string(k) + " folds");
  }
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < grades.size(); ++i) groups[stratified ? grades[i] : 0].push_back(i);

  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t next = 0;
  for (auto& [grade, members] : groups) {
    if (stratified && members.size() < k) {
      spdlog::warn("grade {} has {} samples for {} folds; stratification is best effort", grade,
                   members.size(), k);
    }
    Rng rng(derive_seed(seed, {0x464f4c44ull, static_cast<std::uint64_t>(grade)}));
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t idx : members) {
      folds[next].push_back(idx);
      next = (next + 1) % k;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<std::size_t> train_indices(const std::vector<std::vector<std::size_t>>& folds,
                                       std::size_t f) {
  if (f >= folds.size()) throw ConfigError("fold index out of range");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    if (i != f) out.insert(out.end(), folds[i].begin(), folds[i].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t fold_hash(std::span<const std::size_t> indices) {
  std::uint64_t h = splitmix64(indices.size());
  for (std::size_t i : indices) h = splitmix64(h ^ static_cast<std::uint64_t>(i));
  return h;
}

}  // namespace shapefat::train
