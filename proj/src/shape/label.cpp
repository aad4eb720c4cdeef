// SPDX-License-Identifier: Apache-2.0
#include "shapefat/shape/label.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shapefat/error.hpp"

namespace shapefat::shape {

void FatCalib::validate() const {
  if (!std::isfinite(c0) || !std::isfinite(c1)) throw ConfigError("calibration must be finite");
  const auto& t = thresholds;
  if (!(t[0] > 0.0 && t[0] < t[1] && t[1] < t[2] && t[2] < 100.0)) {
    throw ConfigError("grade thresholds must satisfy 0 < t1 < t2 < t3 < 100");
  }
}

double mean_liver_hu(const Volume& volume, std::span<const Roi> rois, bool require_min_rois) {
  if (rois.empty()) throw ConfigError("mean_liver_hu: no regions of interest");
  if (require_min_rois && rois.size() < kMinRois) {
    throw ConfigError("mean_liver_hu: " + std::to_string(rois.size()) + " ROIs given, at least " +
                      std::to_string(kMinRois) + " required");
  }
  std::vector<std::size_t> voxels;
  for (std::size_t k = 0; k < rois.size(); ++k) {
    const Roi& roi = rois[k];
    const bool inside = roi.slice < volume.nz() && roi.radius >= 0.0 && roi.cx - roi.radius >= 0.0 &&
                        roi.cy - roi.radius >= 0.0 &&
                        roi.cx + roi.radius <= static_cast<double>(volume.nx() - 1) &&
                        roi.cy + roi.radius <= static_cast<double>(volume.ny() - 1);
    if (!inside) {
      throw ConfigError("mean_liver_hu: ROI " + std::to_string(k) + " (slice " +
                        std::to_string(roi.slice) + ", centre " + std::to_string(roi.cx) + "," +
                        std::to_string(roi.cy) + ", radius " + std::to_string(roi.radius) +
                        ") lies outside the volume");
    }
    const auto y0 = static_cast<std::size_t>(std::ceil(roi.cy - roi.radius));
    const auto y1 = static_cast<std::size_t>(std::floor(roi.cy + roi.radius));
    const auto x0 = static_cast<std::size_t>(std::ceil(roi.cx - roi.radius));
    const auto x1 = static_cast<std::size_t>(std::floor(roi.cx + roi.radius));
    for (std::size_t y = y0; y <= y1; ++y) {
      for (std::size_t x = x0; x <= x1; ++x) {
        const double dx = static_cast<double>(x) - roi.cx, dy = static_cast<double>(y) - roi.cy;
        if (dx * dx + dy * dy <= roi.radius * roi.radius) {
          voxels.push_back((roi.slice * volume.ny() + y) * volume.nx() + x);
        }
      }
    }
  }
  std::sort(voxels.begin(), voxels.end());
  voxels.erase(std::unique(voxels.begin(), voxels.end()), voxels.end());
  if (voxels.empty()) throw ConfigError("mean_liver_hu: ROIs cover no voxels");
  double total = 0.0;
  const auto data = volume.voxels();
  for (std::size_t idx : voxels) total += data[idx];
  return total / static_cast<double>(voxels.size());
}

double hu_to_fat_pct(double mean_hu, const FatCalib& calib) {
  return std::clamp(calib.c0 + calib.c1 * mean_hu, 0.0, 100.0);
}

int fat_to_grade(double fat_pct, const FatCalib& calib) {
  int grade = 0;
  for (double t : calib.thresholds) {
    if (fat_pct >= t) ++grade;
  }
  return grade;
}

LiverLabel compute_label(const Volume& volume, std::vector<Roi> rois, const FatCalib& calib,
                         bool require_min_rois) {
  LiverLabel label;
  label.mean_hu = mean_liver_hu(volume, rois, require_min_rois);
  label.fat_pct = hu_to_fat_pct(label.mean_hu, calib);
  label.grade = fat_to_grade(label.fat_pct, calib);
  label.rois = std::move(rois);
  return label;
}

}  // namespace shapefat::shape
