// SPDX-License-Identifier: Apache-2.0
#include "shapefat/train/dataset.hpp"

#include <algorithm>

#include "shapefat/error.hpp"
#include "shapefat/shape/io.hpp"
#include "shapefat/shape/resample.hpp"

namespace shapefat::train {
namespace {

std::vector<double> fit_side(std::vector<double> map, std::size_t from, std::size_t to) {
  if (from == to) return map;
  return shape::resample_bilinear(map, from, from, to, to);
}

}  // namespace

std::vector<int> Dataset::grades() const {
  std::vector<int> g;
  g.reserve(samples.size());
  for (const auto& s : samples) g.push_back(s.grade);
  return g;
}

std::vector<double> Dataset::fat() const {
  std::vector<double> f;
  f.reserve(samples.size());
  for (const auto& s : samples) f.push_back(s.fat_pct);
  return f;
}

std::size_t Dataset::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].id == id) return i;
  }
  throw Error("subject '" + id + "' is not in the dataset");
}

Dataset load_dataset(const std::filesystem::path& manifest, std::size_t side) {
  if (side == 0) throw ConfigError("dataset: input size must be positive");
  const auto rows = shape::read_manifest(manifest);
  const auto base = manifest.parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  Dataset data;
  data.side = side;
  data.samples.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.grade < 0 || row.grade > 3) {
      throw FormatError("manifest row '" + row.id + "' has grade " + std::to_string(row.grade));
    }
    Sample s;
    s.id = row.id;
    s.fat_pct = row.fat_pct;
    s.grade = row.grade;
    const auto fpair = shape::load_depth_maps(resolve(row.frontal_path));
    s.frontal = fit_side(fpair.frontal, fpair.side, side);
    if (row.lateral_path == row.frontal_path) {
      s.lateral = fit_side(fpair.lateral, fpair.side, side);
    } else {
      const auto lpair = shape::load_depth_maps(resolve(row.lateral_path));
      s.lateral = fit_side(lpair.lateral, lpair.side, side);
    }
    data.samples.push_back(std::move(s));
  }
  return data;
}

Dataset dataset_from_subjects(const std::vector<phantom::GeneratedSubject>& subjects,
                              std::size_t side) {
  Dataset data;
  data.side = side;
  data.samples.reserve(subjects.size());
  for (const auto& subj : subjects) {
    Sample s;
    s.id = subj.maps.id;
    s.frontal = fit_side(subj.maps.frontal, subj.maps.side, side);
    s.lateral = fit_side(subj.maps.lateral, subj.maps.side, side);
    s.fat_pct = subj.label.fat_pct;
    s.grade = subj.label.grade;
    data.samples.push_back(std::move(s));
  }
  return data;
}

Batch make_batch(const Dataset& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw Error("make_batch: empty index list");
  const std::size_t n = indices.size(), S = data.side, px = S * S;
  Batch b{ad::Tensor({n, 1, S, S}), ad::Tensor({n, 1, S, S}), ad::Tensor({n}), {}};
  b.grades.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Sample& s = data.samples.at(indices[i]);
    std::copy(s.frontal.begin(), s.frontal.end(), b.frontal.data() + i * px);
    std::copy(s.lateral.begin(), s.lateral.end(), b.lateral.data() + i * px);
    b.fat[i] = s.fat_pct;
    b.grades.push_back(s.grade);
  }
  return b;
}

}  // namespace shapefat::train
