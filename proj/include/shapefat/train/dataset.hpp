// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "shapefat/autodiff/tensor.hpp"
#include "shapefat/phantom/phantom.hpp"

namespace shapefat::train {

struct Sample {
  std::string id;
  std::vector<double> frontal;  // side x side, row-major
  std::vector<double> lateral;
  double fat_pct = 0.0;
  int grade = 0;
};

struct Dataset {
  std::size_t side = 0;
  std::vector<Sample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  std::vector<int> grades() const;
  std::vector<double> fat() const;
  /// Index of the sample with this id; throws if absent.
  std::size_t index_of(const std::string& id) const;
};

/// Loads every manifest row, resampling maps to `side` when their stored
/// size differs.
Dataset load_dataset(const std::filesystem::path& manifest, std::size_t side);

/// Wraps in-memory phantom subjects (maps resampled to `side` when needed).
Dataset dataset_from_subjects(const std::vector<phantom::GeneratedSubject>& subjects,
                              std::size_t side);

struct Batch {
  ad::Tensor frontal;  // N x 1 x S x S
  ad::Tensor lateral;
  ad::Tensor fat;      // N
  std::vector<int> grades;
};

Batch make_batch(const Dataset& data, std::span<const std::size_t> indices);

}  // namespace shapefat::train
