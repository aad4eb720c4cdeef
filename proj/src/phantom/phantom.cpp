// SPDX-License-Identifier: Apache-2.0
#include "shapefat/phantom/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "shapefat/error.hpp"
#include "shapefat/parallel.hpp"
#include "shapefat/random.hpp"

namespace shapefat::phantom {

namespace {

constexpr double kTissueHu = 40.0;
constexpr double kLiverBaseHu = 65.0;
constexpr double kFatPerV = 40.0;
constexpr double kFatCeiling = 45.0;
constexpr double kWaistGain = 0.6;

// Torso landmarks as fractions of torso length, measured from the bottom.
constexpr double kHipEnd = 0.3;
constexpr double kWaistStart = 0.4;
constexpr double kWaistEnd = 0.5;
constexpr double kChestStart = 0.6;

// Liver ellipsoid relative to the torso axis, in mm (and torso fraction for z).
constexpr double kLiverT = 0.58;
constexpr double kLiverRzFrac = 0.1;
constexpr double kLiverX = -45.0;
constexpr double kLiverY = -5.0;
constexpr double kLiverRx = 35.0;
constexpr double kLiverRy = 30.0;

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

double lerp(double a, double b, double s) { return a + (b - a) * s; }

double torso_fraction(const PhantomParams& p, std::size_t z) {
  const double z_mm = (static_cast<double>(z) + 0.5) * p.spacing.z;
  return (z_mm - p.z_offset_mm) / p.torso_length_mm;
}

double waist_weight(double t) {
  if (t < kHipEnd || t > kChestStart) return 0.0;
  if (t < kWaistStart) return smoothstep((t - kHipEnd) / (kWaistStart - kHipEnd));
  if (t <= kWaistEnd) return 1.0;
  return 1.0 - smoothstep((t - kWaistEnd) / (kChestStart - kWaistEnd));
}

double voxel_centre_mm(std::size_t i, std::size_t n, double spacing) {
  return (static_cast<double>(i) + 0.5 - static_cast<double>(n) / 2.0) * spacing;
}

double mm_to_voxel(double mm, std::size_t n, double spacing) {
  return mm / spacing + static_cast<double>(n) / 2.0 - 0.5;
}

}  // namespace

void PhantomParams::validate() const {
  if (nx == 0 || ny == 0 || nz == 0) throw ConfigError("phantom: dimensions must be positive");
  if (!(adiposity >= 0.0 && adiposity <= 1.0)) throw ConfigError("phantom: adiposity must lie in [0, 1]");
  if (!(sigma >= 0.0)) throw ConfigError("phantom: sigma must be >= 0");
  if (!(frame > 0.0) || !(torso_length_mm > 0.0) || !(exponent > 0.0)) {
    throw ConfigError("phantom: frame, torso length and exponent must be positive");
  }
  if (z_offset_mm < 0.0 ||
      z_offset_mm + torso_length_mm > static_cast<double>(nz) * spacing.z) {
    throw ConfigError("phantom: torso does not fit inside the volume");
  }
  if (roi_count == 0) throw ConfigError("phantom: need at least one ROI");
}

std::pair<double, double> torso_half_axes(const PhantomParams& p, std::size_t z) {
  const double t = torso_fraction(p, z);
  if (t < 0.0 || t > 1.0) return {0.0, 0.0};
  const double hip_a = 150.0 * p.frame, hip_b = 105.0 * p.frame;
  const double waist_a = 125.0, waist_b = 90.0;
  const double chest_a = 145.0 * p.frame, chest_b = 100.0 * p.frame;
  double a = 0.0, b = 0.0;
  if (t < kHipEnd) {
    a = hip_a;
    b = hip_b;
  } else if (t < kWaistStart) {
    const double s = smoothstep((t - kHipEnd) / (kWaistStart - kHipEnd));
    a = lerp(hip_a, waist_a, s);
    b = lerp(hip_b, waist_b, s);
  } else if (t <= kWaistEnd) {
    a = waist_a;
    b = waist_b;
  } else if (t < kChestStart) {
    const double s = smoothstep((t - kWaistEnd) / (kChestStart - kWaistEnd));
    a = lerp(waist_a, chest_a, s);
    b = lerp(waist_b, chest_b, s);
  } else {
    a = chest_a;
    b = chest_b;
  }
  const double scale = 1.0 + kWaistGain * p.adiposity * waist_weight(t);
  return {a * scale, b * scale};
}

std::pair<std::size_t, std::size_t> waist_slices(const PhantomParams& p) {
  const double lo = (p.z_offset_mm + kWaistStart * p.torso_length_mm) / p.spacing.z - 0.5;
  const double hi = (p.z_offset_mm + kWaistEnd * p.torso_length_mm) / p.spacing.z - 0.5;
  return {static_cast<std::size_t>(std::ceil(lo)), static_cast<std::size_t>(std::floor(hi))};
}

double label_noise(std::uint64_t seed, double sigma) {
  if (sigma <= 0.0) return 0.0;
  Rng rng(derive_seed(seed, {0x4E015Eull}));
  std::normal_distribution<double> normal(0.0, sigma);
  return normal(rng);
}

double generative_fat(double adiposity, double noise) {
  return std::clamp(kFatPerV * adiposity + noise, 0.0, kFatCeiling);
}

shape::FatCalib phantom_calibration() {
  shape::FatCalib calib;
  calib.c0 = kLiverBaseHu;
  calib.c1 = -1.0;
  return calib;
}

PhantomSubject generate_phantom(const PhantomParams& p, const shape::FatCalib& calib) {
  p.validate();
  PhantomSubject subject;
  subject.generative_fat = generative_fat(p.adiposity, label_noise(p.seed, p.sigma));
  subject.volume = shape::Volume(p.nx, p.ny, p.nz, p.spacing, shape::kAirHu);
  shape::Volume& vol = subject.volume;

  std::vector<double> xs(p.nx), ys(p.ny);
  for (std::size_t x = 0; x < p.nx; ++x) xs[x] = voxel_centre_mm(x, p.nx, p.spacing.x);
  for (std::size_t y = 0; y < p.ny; ++y) ys[y] = voxel_centre_mm(y, p.ny, p.spacing.y);

  for (std::size_t z = 0; z < p.nz; ++z) {
    const auto [a, b] = torso_half_axes(p, z);
    if (a <= 0.0) continue;
    for (std::size_t y = 0; y < p.ny; ++y) {
      const double ty = std::pow(std::abs(ys[y]) / b, p.exponent);
      if (ty > 1.0) continue;
      for (std::size_t x = 0; x < p.nx; ++x) {
        if (ty + std::pow(std::abs(xs[x]) / a, p.exponent) <= 1.0) {
          vol.at(x, y, z) = static_cast<std::int16_t>(kTissueHu);
        }
      }
    }
  }

  // Liver filled with dithered integer HU whose expectation is 65 - fat.
  const double liver_hu = kLiverBaseHu - subject.generative_fat;
  const double zc = p.z_offset_mm + kLiverT * p.torso_length_mm;
  const double rz = kLiverRzFrac * p.torso_length_mm;
  Rng dither(derive_seed(p.seed, {0xD17E5ull}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t z = 0; z < p.nz; ++z) {
    const double dz = ((static_cast<double>(z) + 0.5) * p.spacing.z - zc) / rz;
    if (std::abs(dz) > 1.0) continue;
    for (std::size_t y = 0; y < p.ny; ++y) {
      const double dy = (ys[y] - kLiverY) / kLiverRy;
      for (std::size_t x = 0; x < p.nx; ++x) {
        const double dx = (xs[x] - kLiverX) / kLiverRx;
        if (dx * dx + dy * dy + dz * dz <= 1.0) {
          vol.at(x, y, z) = static_cast<std::int16_t>(std::floor(liver_hu + unit(dither)));
        }
      }
    }
  }

  // ROIs spread over the central half of the liver's height.
  std::vector<shape::Roi> rois;
  for (std::size_t k = 0; k < p.roi_count; ++k) {
    const double frac = p.roi_count > 1 ? static_cast<double>(k) / static_cast<double>(p.roi_count - 1) : 0.5;
    const double z_mm = zc + rz * (frac - 0.5);
    shape::Roi roi;
    roi.slice = static_cast<std::size_t>(std::lround(z_mm / p.spacing.z - 0.5));
    roi.cx = mm_to_voxel(kLiverX, p.nx, p.spacing.x) + (k % 2 == 0 ? -1.5 : 1.5);
    roi.cy = mm_to_voxel(kLiverY, p.ny, p.spacing.y) + static_cast<double>(k % 3) - 1.0;
    roi.radius = p.roi_radius_vox;
    rois.push_back(roi);
  }
  subject.label = shape::compute_label(vol, std::move(rois), calib, false);
  return subject;
}

std::array<std::size_t, 4> grade_counts(std::size_t n, const std::array<double, 4>& mix) {
  double total = 0.0;
  for (double m : mix) {
    if (!(m >= 0.0)) throw ConfigError("grade mix proportions must be non-negative");
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-6) throw ConfigError("grade mix proportions must sum to 1");
  std::array<std::size_t, 4> counts{};
  std::array<double, 4> remainder{};
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < 4; ++g) {
    const double exact = static_cast<double>(n) * mix[g] / total;
    // Guard against 121.99999 style rounding of exact products.
    counts[g] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[g] = exact - static_cast<double>(counts[g]);
    assigned += counts[g];
  }
  std::array<std::size_t, 4> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 4]];
  return counts;
}

PhantomParams sample_subject_params(const DatasetOptions& options, std::size_t index, int grade,
                                    std::size_t attempt) {
  const auto& t = options.calib.thresholds;
  const double lo = grade == 0 ? 0.0 : t[static_cast<std::size_t>(grade - 1)];
  const double hi = grade == 3 ? kFatCeiling : t[static_cast<std::size_t>(grade)];
  for (std::size_t draw = 0; draw < 1000; ++draw) {
    const std::uint64_t sub = derive_seed(options.seed, {index, attempt, draw});
    Rng rng(derive_seed(sub, {0x5A3Bull}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double noise = label_noise(sub, options.sigma);
    const double target = lo + (hi - lo) * unit(rng);
    const double v = std::clamp((target - noise) / kFatPerV, 0.0, 1.0);
    if (shape::fat_to_grade(generative_fat(v, noise), options.calib) != grade) continue;
    PhantomParams p;
    p.adiposity = v;
    p.sigma = options.sigma;
    p.seed = sub;
    p.frame = 0.9 + 0.2 * unit(rng);
    p.torso_length_mm = 380.0 + 60.0 * unit(rng);
    const double room = static_cast<double>(p.nz) * p.spacing.z - p.torso_length_mm - 32.0;
    p.z_offset_mm = 16.0 + room * unit(rng);
    return p;
  }
  throw ConfigError("could not sample a phantom for grade " + std::to_string(grade) +
                    " with the configured thresholds");
}

std::vector<GeneratedSubject> generate_subjects(const DatasetOptions& options) {
  options.calib.validate();
  if (options.n == 0) throw ConfigError("dataset size must be positive");
  const auto counts = grade_counts(options.n, options.grade_mix);
  std::vector<int> grades;
  for (int g = 0; g < 4; ++g) grades.insert(grades.end(), counts[static_cast<std::size_t>(g)], g);
  Rng order_rng(derive_seed(options.seed, {0x0DE7ull}));
  std::shuffle(grades.begin(), grades.end(), order_rng);

  std::vector<GeneratedSubject> subjects(options.n);
  parallel_for(options.n, options.jobs, [&](std::size_t i) {
    for (std::size_t attempt = 0; attempt < 100; ++attempt) {
      PhantomParams params = sample_subject_params(options, i, grades[i], attempt);
      PhantomSubject s = generate_phantom(params, options.calib);
      // Dithering can push a subject sitting exactly on a threshold into the
      // neighbouring grade; redraw until the recovered grade matches.
      if (s.label.grade != grades[i]) continue;
      GeneratedSubject& out = subjects[i];
      out.maps = shape::project_depth_maps(s.volume, options.projection);
      out.maps.id = std::to_string(i);
      out.params = params;
      out.label = std::move(s.label);
      out.generative_fat = s.generative_fat;
      return;
    }
    throw ConfigError("subject " + std::to_string(i) + ": recovered grade never matched target");
  });
  return subjects;
}

std::vector<shape::ManifestRow> generate_dataset(const DatasetOptions& options,
                                                 const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "maps", ec);
  if (ec) throw Error("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  auto subjects = generate_subjects(options);
  std::vector<shape::ManifestRow> rows;
  rows.reserve(subjects.size());
  for (const auto& s : subjects) {
    shape::save_depth_maps(s.maps, out_dir / "maps");
    const std::string rel = "maps/" + s.maps.id + ".bsm";
    rows.push_back({s.maps.id, rel, rel, s.label.fat_pct, s.label.grade, s.label.mean_hu});
  }
  if (options.save_volumes) {
    std::filesystem::create_directories(out_dir / "volumes");
    parallel_for(subjects.size(), options.jobs, [&](std::size_t i) {
      const PhantomSubject s = generate_phantom(subjects[i].params, options.calib);
      shape::save_volume(out_dir / "volumes" / (subjects[i].maps.id + ".sfv"), s.volume);
      shape::write_rois(out_dir / "volumes" / (subjects[i].maps.id + "_rois.csv"), s.label.rois);
    });
  }
  shape::write_manifest(out_dir / "manifest.csv", rows);
  return rows;
}

}  // namespace shapefat::phantom
