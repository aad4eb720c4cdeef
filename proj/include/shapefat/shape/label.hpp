// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "shapefat/shape/volume.hpp"

namespace shapefat::shape {

inline constexpr std::size_t kNumGrades = 4;
inline constexpr std::size_t kMinRois = 8;

/// Circular region of interest inside one axial slice, in voxel units.
struct Roi {
  std::size_t slice = 0;
  double cx = 0.0;
  double cy = 0.0;
  double radius = 1.0;
};

/// Linear attenuation-to-fat calibration and steatosis grade thresholds.
/// fat% = clamp(c0 + c1 * HU, 0, 100); grade k starts at thresholds[k-1].
struct FatCalib {
  double c0 = 38.2;
  double c1 = -0.58;
  std::array<double, 3> thresholds{5.0, 15.0, 25.0};

  void validate() const;
};

struct LiverLabel {
  double fat_pct = 0.0;
  int grade = 0;
  double mean_hu = 0.0;
  std::vector<Roi> rois;
};

/// Mean attenuation over the union of ROI voxels (a voxel covered by two
/// ROIs counts once). Every ROI must lie fully inside the volume; fewer than
/// kMinRois ROIs is rejected unless `require_min_rois` is false.
double mean_liver_hu(const Volume& volume, std::span<const Roi> rois, bool require_min_rois = true);

double hu_to_fat_pct(double mean_hu, const FatCalib& calib);

/// 0 below t1, 1 below t2, 2 below t3, else 3. A value equal to a threshold
/// belongs to the higher grade.
int fat_to_grade(double fat_pct, const FatCalib& calib);

/// mean_liver_hu -> hu_to_fat_pct -> fat_to_grade.
LiverLabel compute_label(const Volume& volume, std::vector<Roi> rois, const FatCalib& calib,
                         bool require_min_rois = true);

}  // namespace shapefat::shape
