// SPDX-License-Identifier: Apache-2.0
#pragma once

// File formats (little-endian):
//
//   Volume     "SFV1", u32 nx, ny, nz, f32 spacing x, y, z, int16 voxels z-major
//   Depth map  "BSM1", u32 S, f32 frontal S*S row-major, f32 lateral S*S
//   Manifest   CSV with header id,frontal_path,lateral_path,fat_pct,grade,mean_hu;
//              relative paths resolve against the manifest's directory.
//   ROIs       CSV with header slice,cx,cy,radius (voxel units).

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "shapefat/shape/depth_map.hpp"
#include "shapefat/shape/label.hpp"
#include "shapefat/shape/volume.hpp"

namespace shapefat::shape {

void write_volume(std::ostream& out, const Volume& volume);
Volume read_volume(std::istream& in);
void save_volume(const std::filesystem::path& path, const Volume& volume);
Volume load_volume(const std::filesystem::path& path);

/// The id is not stored in the file; `read_depth_maps` leaves it empty.
void write_depth_maps(std::ostream& out, const DepthMapPair& pair);
DepthMapPair read_depth_maps(std::istream& in);
/// Writes `<dir>/<id>.bsm` and returns its path.
std::filesystem::path save_depth_maps(const DepthMapPair& pair, const std::filesystem::path& dir);
DepthMapPair load_depth_maps(const std::filesystem::path& path);

struct ManifestRow {
  std::string id;
  std::string frontal_path;
  std::string lateral_path;
  double fat_pct = 0.0;
  int grade = 0;
  double mean_hu = 0.0;
};

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

inline constexpr const char* kRoiHeader = "slice,cx,cy,radius";

void write_rois(const std::filesystem::path& path, const std::vector<Roi>& rois);
std::vector<Roi> read_rois(const std::filesystem::path& path);

}  // namespace shapefat::shape
