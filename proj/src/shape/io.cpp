// SPDX-License-Identifier: Apache-2.0
#include "shapefat/shape/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "shapefat/binary_io.hpp"
#include "shapefat/error.hpp"

namespace shapefat::shape {

namespace {

constexpr std::string_view kVolumeMagic = "SFV1";
constexpr std::string_view kMapMagic = "BSM1";
constexpr std::string_view kManifestHeader = "id,frontal_path,lateral_path,fat_pct,grade,mean_hu";

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

template <typename T>
T parse_number(const std::string& text, const std::string& what, std::size_t line_no) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw FormatError("line " + std::to_string(line_no) + ": invalid " + what + " '" +
                      text + "'");
  }
  return value;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_volume(std::ostream& out, const Volume& volume) {
  io::write_magic(out, kVolumeMagic);
  for (std::size_t d : {volume.nx(), volume.ny(), volume.nz()}) {
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  }
  const Spacing& s = volume.spacing();
  for (double v : {s.x, s.y, s.z}) io::write_f32(out, static_cast<float>(v));
  for (std::int16_t v : volume.voxels()) io::write_i16(out, v);
  if (!out) throw FormatError("volume: write failed");
}

Volume read_volume(std::istream& in) {
  io::expect_magic(in, kVolumeMagic);
  const auto nx = io::read_le<std::uint32_t>(in, "volume nx");
  const auto ny = io::read_le<std::uint32_t>(in, "volume ny");
  const auto nz = io::read_le<std::uint32_t>(in, "volume nz");
  if (nx == 0 || ny == 0 || nz == 0) throw FormatError("volume: zero dimension in header");
  Spacing s;
  s.x = io::read_f32(in, "volume spacing");
  s.y = io::read_f32(in, "volume spacing");
  s.z = io::read_f32(in, "volume spacing");
  std::vector<std::int16_t> voxels(static_cast<std::size_t>(nx) * ny * nz);
  for (auto& v : voxels) v = io::read_i16(in, "volume voxels");
  try {
    return Volume(nx, ny, nz, s, std::move(voxels));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("volume: ") + e.what());
  }
}

void save_volume(const std::filesystem::path& path, const Volume& volume) {
  auto out = open_out(path);
  write_volume(out, volume);
}

Volume load_volume(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_volume(in);
}

void write_depth_maps(std::ostream& out, const DepthMapPair& pair) {
  const std::size_t n = pair.side * pair.side;
  if (pair.side == 0 || pair.frontal.size() != n || pair.lateral.size() != n) {
    throw FormatError("depth maps: inconsistent side length");
  }
  io::write_magic(out, kMapMagic);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(pair.side));
  for (double v : pair.frontal) io::write_f32(out, static_cast<float>(v));
  for (double v : pair.lateral) io::write_f32(out, static_cast<float>(v));
  if (!out) throw FormatError("depth maps: write failed");
}

DepthMapPair read_depth_maps(std::istream& in) {
  io::expect_magic(in, kMapMagic);
  DepthMapPair pair;
  pair.side = io::read_le<std::uint32_t>(in, "map side");
  if (pair.side == 0) throw FormatError("depth maps: zero side length");
  const std::size_t n = pair.side * pair.side;
  pair.frontal.resize(n);
  pair.lateral.resize(n);
  for (double& v : pair.frontal) v = io::read_f32(in, "frontal map");
  for (double& v : pair.lateral) v = io::read_f32(in, "lateral map");
  return pair;
}

std::filesystem::path save_depth_maps(const DepthMapPair& pair, const std::filesystem::path& dir) {
  if (pair.id.empty()) throw ConfigError("save_depth_maps: subject id is empty");
  std::filesystem::create_directories(dir);
  const auto path = dir / (pair.id + ".bsm");
  auto out = open_out(path);
  write_depth_maps(out, pair);
  return path;
}

DepthMapPair load_depth_maps(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_depth_maps(in);
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows) {
  auto out = open_out(path);
  out << kManifestHeader << '\n';
  for (const auto& r : rows) {
    out << r.id << ',' << r.frontal_path << ',' << r.lateral_path << ',' << format_double(r.fat_pct)
        << ',' << r.grade << ',' << format_double(r.mean_hu) << '\n';
  }
  if (!out) throw Error("failed writing manifest '" + path.string() + "'");
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("manifest '" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kManifestHeader) {
    throw FormatError("manifest header mismatch: expected '" + std::string(kManifestHeader) + "'");
  }
  std::vector<ManifestRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 6) {
      throw FormatError("manifest line " + std::to_string(line_no) + ": expected 6 fields, got " +
                        std::to_string(f.size()));
    }
    ManifestRow row;
    row.id = f[0];
    row.frontal_path = f[1];
    row.lateral_path = f[2];
    row.fat_pct = parse_number<double>(f[3], "fat_pct", line_no);
    row.grade = parse_number<int>(f[4], "grade", line_no);
    row.mean_hu = parse_number<double>(f[5], "mean_hu", line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_rois(const std::filesystem::path& path, const std::vector<Roi>& rois) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write ROI file '" + path.string() + "'");
  out << kRoiHeader << '\n';
  for (const auto& r : rois) {
    out << r.slice << ',' << format_double(r.cx) << ',' << format_double(r.cy) << ','
        << format_double(r.radius) << '\n';
  }
  if (!out) throw Error("failed writing ROI file '" + path.string() + "'");
}

std::vector<Roi> read_rois(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ROI file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("ROI file '" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRoiHeader) {
    throw FormatError("ROI header mismatch: expected '" + std::string(kRoiHeader) + "'");
  }
  std::vector<Roi> rois;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) {
      throw FormatError("ROI line " + std::to_string(line_no) + ": expected 4 fields, got " +
                        std::to_string(f.size()));
    }
    rois.push_back({parse_number<std::size_t>(f[0], "slice", line_no),
                    parse_number<double>(f[1], "cx", line_no),
                    parse_number<double>(f[2], "cy", line_no),
                    parse_number<double>(f[3], "radius", line_no)});
  }
  return rois;
}

}  // namespace shapefat::shape
