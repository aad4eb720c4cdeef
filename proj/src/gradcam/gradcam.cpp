// SPDX-License-Identifier: Apache-2.0
#include "shapefat/gradcam/gradcam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "shapefat/autodiff/ops.hpp"
#include "shapefat/error.hpp"
#include "shapefat/shape/resample.hpp"

namespace shapefat::gradcam {

std::vector<Heatmap> heatmaps_from_features(const ad::Tensor& features,
                                            std::span<const double> gradient,
                                            std::size_t out_side) {
  if (features.rank() != 4) {
    throw ShapeError("grad-cam: features must be N x C x h x w, got " + ad::to_string(features.shape()));
  }
  if (gradient.size() != features.size()) throw ShapeError("grad-cam: gradient size mismatch");
  if (out_side == 0) throw ConfigError("grad-cam: output side must be positive");
  const std::size_t N = features.dim(0), C = features.dim(1), h = features.dim(2),
                    w = features.dim(3), P = h * w;
  std::vector<Heatmap> out;
  out.reserve(N);
  for (std::size_t n = 0; n < N; ++n) {
    std::vector<double> cam(P, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t base = (n * C + c) * P;
      double wc = 0.0;
      for (std::size_t p = 0; p < P; ++p) wc += gradient[base + p];
      wc /= static_cast<double>(P);
      for (std::size_t p = 0; p < P; ++p) cam[p] += wc * features[base + p];
    }
    for (double& v : cam) v = std::max(v, 0.0);

    Heatmap hm;
    hm.side = out_side;
    hm.values = shape::resample_bilinear(cam, h, w, out_side, out_side);
    const double peak = *std::max_element(hm.values.begin(), hm.values.end());
    if (peak > 0.0) {
      for (double& v : hm.values) v /= peak;
    } else {
      std::fill(hm.values.begin(), hm.values.end(), 0.0);
      hm.degenerate = true;
      spdlog::warn("grad-cam: sample {} has no positive evidence; heatmap is all zero", n);
    }
    out.push_back(std::move(hm));
  }
  return out;
}

std::vector<Heatmap> grad_cam_map(const model::ModelParams& model, const ad::Tensor& frontal,
                                  const ad::Tensor& lateral) {
  if (model.config.variant == model::Variant::kMlp) {
    throw ConfigError("grad-cam needs a convolutional variant");
  }
  if (!model.trained || !model.has_running_stats()) {
    throw Error("grad-cam: model is untrained; load a trained checkpoint");
  }
  // Private parameter copy so gradient buffers never touch the caller's model.
  const model::ModelParams local = model.clone();
  ad::Tape tape;
  const auto out =
      model::forward_backbone(tape, local, ad::constant(frontal), ad::constant(lateral));
  // Eval-mode samples are independent, so the gradient of the batch sum
  // w.r.t. F_n equals that of sample n's own prediction.
  tape.backward(ad::sum(tape, out.fat_pred));
  const ad::Tensor& F = out.features->value;
  std::vector<double> grad(F.size(), 0.0);
  if (F.has_grad()) std::copy(F.grad().begin(), F.grad().end(), grad.begin());
  return heatmaps_from_features(F, grad, model.config.input_size);
}

ad::Tensor attention_maps(const model::ModelParams& model, const ad::Tensor& frontal,
                          const ad::Tensor& lateral) {
  ad::Tape tape(false);
  auto out = model::forward_backbone(tape, model, ad::constant(frontal), ad::constant(lateral));
  model::forward_attention(tape, model, out);
  return out.attention_maps->value;
}

void write_pgm(const std::filesystem::path& path, std::span<const double> values, std::size_t rows,
               std::size_t cols) {
  if (values.size() != rows * cols) throw ShapeError("write_pgm: size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "P5\n" << cols << ' ' << rows << "\n255\n";
  std::vector<unsigned char> bytes(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(values[i], 0.0, 1.0) * 255.0));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<std::filesystem::path> export_heatmap(const Heatmap& heatmap,
                                                  std::span<const double> frontal,
                                                  const std::filesystem::path& dir,
                                                  const std::string& id) {
  const std::size_t S = heatmap.side;
  if (heatmap.values.size() != S * S || frontal.size() != S * S) {
    throw ShapeError("export_heatmap: heatmap is " + std::to_string(heatmap.values.size()) +
                     " values, frontal map " + std::to_string(frontal.size()) + ", expected " +
                     std::to_string(S * S));
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());

  const auto pgm = dir / ("heatmap_" + id + ".pgm");
  const auto csv = dir / ("heatmap_" + id + ".csv");
  const auto overlay = dir / ("overlay_" + id + ".pgm");
  write_pgm(pgm, heatmap.values, S, S);

  std::ofstream out(csv);
  if (!out) throw Error("cannot write " + csv.string());
  char buf[32];
  for (std::size_t r = 0; r < S; ++r) {
    for (std::size_t c = 0; c < S; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", heatmap.values[r * S + c]);
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing " + csv.string());

  std::vector<double> blend(S * S);
  for (std::size_t i = 0; i < blend.size(); ++i) blend[i] = 0.5 * frontal[i] + 0.5 * heatmap.values[i];
  const double peak = *std::max_element(blend.begin(), blend.end());
  if (peak > 0.0) {
    for (double& v : blend) v /= peak;
  }
  write_pgm(overlay, blend, S, S);
  return {pgm, csv, overlay};
}

std::filesystem::path export_attention(const ad::Tensor& maps, std::size_t n,
                                       const std::filesystem::path& dir, const std::string& id) {
  if (maps.rank() != 4 || n >= maps.dim(0)) throw ShapeError("export_attention: bad sample index");
  std::filesystem::create_directories(dir);
  const auto path = dir / ("attention_" + id + ".csv");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "channel,row,col,value\n";
  char buf[96];
  for (std::size_t k = 0; k < maps.dim(1); ++k) {
    for (std::size_t r = 0; r < maps.dim(2); ++r) {
      for (std::size_t c = 0; c < maps.dim(3); ++c) {
        std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.17g\n", k, r, c, maps.at(n, k, r, c));
        out << buf;
      }
    }
  }
  if (!out) throw Error("failed writing " + path.string());
  return path;
}

std::vector<double> read_heatmap_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<double> values;
  std::string line, cell;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError("bad heatmap value '" + cell + "' in " + path.string());
      }
    }
  }
  return values;
}

}  // namespace shapefat::gradcam
