// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic torso phantoms whose waist grows with an adiposity factor v and
// whose liver attenuation encodes the liver-fat label. The generative fat is
// fat = clamp(40 v + eps, 0, 45), eps ~ N(0, sigma^2); the liver is filled
// with 65 - fat HU so the label can be recovered through the regular
// ROI -> mean HU -> fat pipeline with the calibration from
// `phantom_calibration()`.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "shapefat/shape/depth_map.hpp"
#include "shapefat/shape/io.hpp"
#include "shapefat/shape/label.hpp"
#include "shapefat/shape/volume.hpp"

namespace shapefat::phantom {

struct PhantomParams {
  std::size_t nx = 128;
  std::size_t ny = 128;
  std::size_t nz = 128;
  shape::Spacing spacing{4.0, 4.0, 4.0};

  /// Adiposity in [0, 1]; waist half-axes scale by (1 + 0.6 v).
  double adiposity = 0.0;
  /// Standard deviation of the label noise, percentage points.
  double sigma = 1.5;
  std::uint64_t seed = 0;

  /// Nuisance shape variation independent of fat: hip/chest scale, torso
  /// length and vertical placement.
  double frame = 1.0;
  double torso_length_mm = 420.0;
  double z_offset_mm = 40.0;

  double exponent = 2.5;
  std::size_t roi_count = 10;
  double roi_radius_vox = 2.0;

  void validate() const;
};

/// Half-axes (lateral a, antero-posterior b) in mm of the torso cross-section
/// at slice z; {0, 0} outside the torso.
std::pair<double, double> torso_half_axes(const PhantomParams& params, std::size_t z);

/// Inclusive slice range [first, last] where the waist scaling is fully applied.
std::pair<std::size_t, std::size_t> waist_slices(const PhantomParams& params);

/// Noise draw eps used by `generate_phantom` for a given seed.
double label_noise(std::uint64_t seed, double sigma);

/// clamp(40 v + eps, 0, 45).
double generative_fat(double adiposity, double noise);

/// Identity-recovering calibration: fat = 65 - HU, default grade thresholds.
shape::FatCalib phantom_calibration();

struct PhantomSubject {
  shape::Volume volume;
  shape::LiverLabel label;
  double generative_fat = 0.0;
};

PhantomSubject generate_phantom(const PhantomParams& params,
                                const shape::FatCalib& calib = phantom_calibration());

struct DatasetOptions {
  std::size_t n = 315;
  std::uint64_t seed = 7;
  /// Target grade proportions; must sum to 1.
  std::array<double, 4> grade_mix{122.0 / 315, 107.0 / 315, 42.0 / 315, 44.0 / 315};
  double sigma = 1.5;
  shape::FatCalib calib = phantom_calibration();
  shape::ProjectionOptions projection{-300.0, 64, 500.0};
  bool save_volumes = false;
  std::size_t jobs = 1;
};

/// Per-grade subject counts by largest-remainder apportionment of n * mix.
std::array<std::size_t, 4> grade_counts(std::size_t n, const std::array<double, 4>& mix);

struct GeneratedSubject {
  PhantomParams params;
  shape::LiverLabel label;
  double generative_fat = 0.0;
  shape::DepthMapPair maps;
};

/// Samples parameters for subject `index` whose generative fat falls in
/// `grade`. Deterministic in (options.seed, index, attempt).
PhantomParams sample_subject_params(const DatasetOptions& options, std::size_t index, int grade,
                                    std::size_t attempt = 0);

/// Generates the cohort in memory, ids "0".."n-1".
std::vector<GeneratedSubject> generate_subjects(const DatasetOptions& options);

/// Generates the cohort and writes maps/<id>.bsm (plus volumes/<id>.sfv when
/// requested) and manifest.csv under `out_dir`. Returns the manifest rows.
std::vector<shape::ManifestRow> generate_dataset(const DatasetOptions& options,
                                                 const std::filesystem::path& out_dir);

}  // namespace shapefat::phantom
