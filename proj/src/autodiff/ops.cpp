// SPDX-License-Identifier: Apache-2.0
#include "shapefat/autodiff/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "shapefat/error.hpp"

namespace shapefat::ad {

namespace {

using MatR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using ConstMapR = Eigen::Map<const MatR>;

/// Gradient buffer of `v` if it participates in differentiation, else empty.
std::span<double> grad_of(const Var& v) {
  if (!v || !v->requires_grad) return {};
  return v->value.grad();
}

void require_rank(const char* op, const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                     ", got " + to_string(t.shape()));
  }
}

std::string pair_str(const Tensor& a, const Tensor& b) {
  return to_string(a.shape()) + " vs " + to_string(b.shape());
}

/// Elements after axis 1 (1 for rank-2 tensors).
std::size_t trailing(const Tensor& t) {
  std::size_t inner = 1;
  for (std::size_t i = 2; i < t.rank(); ++i) inner *= t.dim(i);
  return inner;
}

/// Output columns [begin, end) whose input column ow * stride + j - pad lies
/// inside [0, W); first_in is the input column of `begin`.
struct OutputSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t first_in = 0;
};

OutputSpan valid_outputs(std::size_t j, std::size_t stride, std::size_t pad, std::size_t W,
                         std::size_t Wo) {
  OutputSpan s;
  s.begin = j >= pad ? 0 : (pad - j + stride - 1) / stride;
  if (j >= W + pad) {
    s.end = s.begin;
    return s;
  }
  s.end = std::min(Wo, (W + pad - j - 1) / stride + 1);  // ow * stride < W + pad - j
  if (s.end <= s.begin) {
    s.end = s.begin;
    return s;
  }
  s.first_in = s.begin * stride + j - pad;
  return s;
}

}  // namespace

void BatchNormState::initialize_identity() {
  std::fill(running_mean.begin(), running_mean.end(), 0.0);
  std::fill(running_var.begin(), running_var.end(), 1.0);
  initialized = true;
}

Var conv2d(Tape& tape, const Var& input, const Var& weight, const Var& bias, std::size_t stride,
           std::size_t pad) {
  const Tensor& x = input->value;
  const Tensor& w = weight->value;
  require_rank("conv2d", x, 4, "input");
  require_rank("conv2d", w, 4, "weight");
  if (x.dim(1) != w.dim(1)) {
    throw ShapeError("conv2d: input channels do not match weight channels: input " +
                     to_string(x.shape()) + ", weight " + to_string(w.shape()));
  }
  const std::size_t K = w.dim(0);
  if (bias && (bias->value.rank() != 1 || bias->value.dim(0) != K)) {
    throw ShapeError("conv2d: bias " + to_string(bias->value.shape()) + " does not match weight " +
                     to_string(w.shape()));
  }
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t kh = w.dim(2), kw = w.dim(3);
  if (kh > H + 2 * pad || kw > W + 2 * pad) {
    throw ShapeError("conv2d: kernel " + to_string(w.shape()) + " larger than padded input " +
                     to_string(x.shape()));
  }
  const std::size_t Ho = (H + 2 * pad - kh) / stride + 1;
  const std::size_t Wo = (W + 2 * pad - kw) / stride + 1;
  const std::size_t P = Ho * Wo;
  const std::size_t rows = C * kh * kw;
  const std::size_t cols = N * P;

  // Every im2col entry is written, padding included, so the buffer starts uninitialized.
  std::shared_ptr<double[]> col(new double[rows * cols]);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < kh; ++i) {
      for (std::size_t j = 0; j < kw; ++j) {
        const OutputSpan span = valid_outputs(j, stride, pad, W, Wo);
        double* dst = col.get() + ((c * kh + i) * kw + j) * cols;
        for (std::size_t n = 0; n < N; ++n) {
          const double* src = x.data() + (n * C + c) * H * W;
          for (std::size_t oh = 0; oh < Ho; ++oh) {
            double* row = dst + n * P + oh * Wo;
            const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * stride + i) -
                                      static_cast<std::ptrdiff_t>(pad);
            if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) {
              std::fill_n(row, Wo, 0.0);
              continue;
            }
            const double* line = src + static_cast<std::size_t>(ih) * W + span.first_in;
            std::fill(row, row + span.begin, 0.0);
            for (std::size_t ow = span.begin; ow < span.end; ++ow) {
              row[ow] = line[(ow - span.begin) * stride];
            }
            std::fill(row + span.end, row + Wo, 0.0);
          }
        }
      }
    }
  }

  const auto k_ = static_cast<Eigen::Index>(K), p_ = static_cast<Eigen::Index>(P);
  const ConstMapR wm(w.data(), k_, static_cast<Eigen::Index>(rows));
  const ConstMapR colm(col.get(), static_cast<Eigen::Index>(rows),
                       static_cast<Eigen::Index>(cols));

  // One product per sample keeps each sample's arithmetic independent of the batch.
  Tensor out({N, K, Ho, Wo});
  for (std::size_t n = 0; n < N; ++n) {
    MapR(out.data() + n * K * P, k_, p_).noalias() =
        wm * colm.middleCols(static_cast<Eigen::Index>(n * P), p_);
    if (!bias) continue;
    for (std::size_t k = 0; k < K; ++k) {
      const double b = bias->value[k];
      double* dst = out.data() + (n * K + k) * P;
      for (std::size_t p = 0; p < P; ++p) dst[p] += b;
    }
  }

  return tape.record(std::move(out), {input, weight, bias}, [=](Node& self) {
    const auto g = self.value.grad();
    MatR gm(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(cols));
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t k = 0; k < K; ++k) {
        std::copy_n(g.data() + (n * K + k) * P, P, gm.data() + k * cols + n * P);
      }
    }
    if (auto gb = grad_of(bias); !gb.empty()) {
      for (std::size_t k = 0; k < K; ++k) gb[k] += gm.row(static_cast<Eigen::Index>(k)).sum();
    }
    const ConstMapR colm_b(col.get(), static_cast<Eigen::Index>(rows),
                           static_cast<Eigen::Index>(cols));
    if (auto gw = grad_of(weight); !gw.empty()) {
      MapR gwm(gw.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(rows));
      gwm.noalias() += gm * colm_b.transpose();
    }
    if (auto gx = grad_of(input); !gx.empty()) {
      const ConstMapR wm_b(weight->value.data(), static_cast<Eigen::Index>(K),
                           static_cast<Eigen::Index>(rows));
      MatR dcol(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(P));
      for (std::size_t n = 0; n < N; ++n) {
        dcol.noalias() = wm_b.transpose() *
                         ConstMapR(g.data() + n * K * P, static_cast<Eigen::Index>(K),
                                   static_cast<Eigen::Index>(P));
        double* dst_n = gx.data() + n * C * H * W;
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t i = 0; i < kh; ++i) {
            for (std::size_t j = 0; j < kw; ++j) {
              const OutputSpan span = valid_outputs(j, stride, pad, W, Wo);
              const double* src = dcol.data() + ((c * kh + i) * kw + j) * P;
              double* dst = dst_n + c * H * W;
              for (std::size_t oh = 0; oh < Ho; ++oh) {
                const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * stride + i) -
                                          static_cast<std::ptrdiff_t>(pad);
                if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) continue;
                const double* row = src + oh * Wo;
                double* line = dst + static_cast<std::size_t>(ih) * W + span.first_in;
                for (std::size_t ow = span.begin; ow < span.end; ++ow) {
                  line[(ow - span.begin) * stride] += row[ow];
                }
              }
            }
          }
        }
      }
    }
  });
}

Var batchnorm2d(Tape& tape, const Var& input, const Var& gamma, const Var& beta,
                BatchNormState& state, Mode mode) {
  const Tensor& x = input->value;
  require_rank("batchnorm2d", x, 4, "input");
  const std::size_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  if (gamma->value.size() != C || beta->value.size() != C || state.running_mean.size() != C ||
      state.running_var.size() != C) {
    throw ShapeError("batchnorm2d: input " + to_string(x.shape()) + " vs gamma " +
                     to_string(gamma->value.shape()) + ", beta " + to_string(beta->value.shape()) +
                     ", running stats of " + std::to_string(state.running_mean.size()) +
                     " channels");
  }
  if (mode == Mode::kEval && !state.initialized) {
    throw Error("batchnorm2d: eval mode requires running statistics from a train-mode pass or "
                "explicit initialization");
  }
  const double M = static_cast<double>(N * HW);
  auto xhat = std::make_shared<std::vector<double>>(x.size());
  auto inv_std = std::make_shared<std::vector<double>>(C);
  Tensor out(x.shape());

  for (std::size_t c = 0; c < C; ++c) {
    double mean = 0.0, var = 0.0;
    if (mode == Mode::kTrain) {
      for (std::size_t n = 0; n < N; ++n) {
        const double* src = x.data() + (n * C + c) * HW;
        for (std::size_t p = 0; p < HW; ++p) mean += src[p];
      }
      mean /= M;
      for (std::size_t n = 0; n < N; ++n) {
        const double* src = x.data() + (n * C + c) * HW;
        for (std::size_t p = 0; p < HW; ++p) var += (src[p] - mean) * (src[p] - mean);
      }
      var /= M;
      const double unbiased = M > 1.0 ? var * M / (M - 1.0) : var;
      state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * mean;
      state.running_var[c] =
          (1.0 - state.momentum) * state.running_var[c] + state.momentum * unbiased;
    } else {
      mean = state.running_mean[c];
      var = state.running_var[c];
    }
    const double is = 1.0 / std::sqrt(var + state.eps);
    (*inv_std)[c] = is;
    const double g = gamma->value[c], b = beta->value[c];
    for (std::size_t n = 0; n < N; ++n) {
      const std::size_t base = (n * C + c) * HW;
      for (std::size_t p = 0; p < HW; ++p) {
        const double h = (x[base + p] - mean) * is;
        (*xhat)[base + p] = h;
        out[base + p] = g * h + b;
      }
    }
  }
  if (mode == Mode::kTrain) state.initialized = true;

  return tape.record(std::move(out), {input, gamma, beta}, [=](Node& self) {
    const auto gy = self.value.grad();
    auto gg = grad_of(gamma);
    auto gbeta = grad_of(beta);
    auto gx = grad_of(input);
    for (std::size_t c = 0; c < C; ++c) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const std::size_t base = (n * C + c) * HW;
        for (std::size_t p = 0; p < HW; ++p) {
          sum_dy += gy[base + p];
          sum_dy_xhat += gy[base + p] * (*xhat)[base + p];
        }
      }
      if (!gg.empty()) gg[c] += sum_dy_xhat;
      if (!gbeta.empty()) gbeta[c] += sum_dy;
      if (gx.empty()) continue;
      const double scale_c = gamma->value[c] * (*inv_std)[c];
      for (std::size_t n = 0; n < N; ++n) {
        const std::size_t base = (n * C + c) * HW;
        for (std::size_t p = 0; p < HW; ++p) {
          if (mode == Mode::kTrain) {
            gx[base + p] +=
                scale_c * (gy[base + p] - sum_dy / M - (*xhat)[base + p] * sum_dy_xhat / M);
          } else {
            gx[base + p] += scale_c * gy[base + p];
          }
        }
      }
    }
  });
}

Var batchnorm2d(Tape& tape, const Var& input, const Var& gamma, const Var& beta,
                const BatchNormState& state) {
  BatchNormState copy = state;
  return batchnorm2d(tape, input, gamma, beta, copy, Mode::kEval);
}

Var relu(Tape& tape, const Var& input) {
  Tensor out(input->value.shape());
  const auto x = input->value.values();
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return tape.record(std::move(out), {input}, [input](Node& self) {
    const auto g = self.value.grad();
    const auto xv = input->value.values();
    auto gx = grad_of(input);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > 0.0) gx[i] += g[i];
    }
  });
}

Var sigmoid(Tape& tape, const Var& input) {
  Tensor out(input->value.shape());
  const auto x = input->value.values();
  for (std::size_t i = 0; i < x.size(); ++i) {
    // Branch on sign so exp never overflows.
    if (x[i] >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-x[i]));
    } else {
      const double e = std::exp(x[i]);
      out[i] = e / (1.0 + e);
    }
  }
  return tape.record(std::move(out), {input}, [input](Node& self) {
    const auto g = self.value.grad();
    const auto y = self.value.values();
    auto gx = grad_of(input);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var global_avg_pool(Tape& tape, const Var& input) {
  const Tensor& x = input->value;
  require_rank("global_avg_pool", x, 4, "input");
  const std::size_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  Tensor out({N, C});
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    double s = 0.0;
    const double* src = x.data() + nc * HW;
    for (std::size_t p = 0; p < HW; ++p) s += src[p];
    out[nc] = s / static_cast<double>(HW);
  }
  return tape.record(std::move(out), {input}, [input, HW](Node& self) {
    const auto g = self.value.grad();
    auto gx = grad_of(input);
    const double inv = 1.0 / static_cast<double>(HW);
    for (std::size_t nc = 0; nc < g.size(); ++nc) {
      double* dst = gx.data() + nc * HW;
      for (std::size_t p = 0; p < HW; ++p) dst[p] += g[nc] * inv;
    }
  });
}

Var fully_connected(Tape& tape, const Var& input, const Var& weight, const Var& bias) {
  const Tensor& x = input->value;
  const Tensor& w = weight->value;
  require_rank("fully_connected", x, 2, "input");
  require_rank("fully_connected", w, 2, "weight");
  if (x.dim(1) != w.dim(0)) {
    throw ShapeError("fully_connected: input " + to_string(x.shape()) +
                     " does not match weight " + to_string(w.shape()));
  }
  const std::size_t N = x.dim(0), D = x.dim(1), M = w.dim(1);
  if (bias && bias->value.size() != M) {
    throw ShapeError("fully_connected: bias " + to_string(bias->value.shape()) +
                     " does not match weight " + to_string(w.shape()));
  }
  const auto n = static_cast<Eigen::Index>(N), d = static_cast<Eigen::Index>(D),
             m = static_cast<Eigen::Index>(M);
  Tensor out({N, M});
  MapR outm(out.data(), n, m);
  const ConstMapR xm(x.data(), n, d), wm(w.data(), d, m);
  for (Eigen::Index r = 0; r < n; ++r) outm.row(r).noalias() = xm.row(r) * wm;
  if (bias) {
    for (std::size_t r = 0; r < N; ++r) {
      for (std::size_t c = 0; c < M; ++c) out[r * M + c] += bias->value[c];
    }
  }
  return tape.record(std::move(out), {input, weight, bias}, [=](Node& self) {
    const ConstMapR gm(self.value.grad().data(), n, m);
    if (auto gx = grad_of(input); !gx.empty()) {
      MapR gxm(gx.data(), n, d);
      const ConstMapR wt(weight->value.data(), d, m);
      for (Eigen::Index r = 0; r < n; ++r) gxm.row(r).noalias() += gm.row(r) * wt.transpose();
    }
    if (auto gw = grad_of(weight); !gw.empty()) {
      MapR(gw.data(), d, m).noalias() += ConstMapR(input->value.data(), n, d).transpose() * gm;
    }
    if (auto gb = grad_of(bias); !gb.empty()) {
      for (Eigen::Index c = 0; c < m; ++c) gb[static_cast<std::size_t>(c)] += gm.col(c).sum();
    }
  });
}

Var concat_channels(Tape& tape, const Var& a, const Var& b) {
  const Var parts[] = {a, b};
  return concat_channels(tape, parts);
}

Var concat_channels(Tape& tape, std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no operands");
  const Tensor& first = parts.front()->value;
  if (first.rank() != 2 && first.rank() != 4) {
    throw ShapeError("concat_channels: operands must have rank 2 or 4, got " +
                     to_string(first.shape()));
  }
  std::size_t total_c = 0;
  for (const Var& p : parts) {
    const Tensor& t = p->value;
    bool ok = t.rank() == first.rank() && t.dim(0) == first.dim(0);
    for (std::size_t i = 2; ok && i < t.rank(); ++i) ok = t.dim(i) == first.dim(i);
    if (!ok) throw ShapeError("concat_channels: incompatible shapes " + pair_str(first, t));
    total_c += t.dim(1);
  }
  const std::size_t N = first.dim(0), inner = trailing(first);
  Shape shape = first.shape();
  shape[1] = total_c;
  Tensor out(shape);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    offsets.push_back(offset);
    const std::size_t ci = p->value.dim(1);
    for (std::size_t n = 0; n < N; ++n) {
      std::copy_n(p->value.data() + n * ci * inner, ci * inner,
                  out.data() + (n * total_c + offset) * inner);
    }
    offset += ci;
  }
  std::vector<Var> owned(parts.begin(), parts.end());
  return tape.record(std::move(out), parts, [owned, offsets, N, inner, total_c](Node& self) {
    const auto g = self.value.grad();
    for (std::size_t k = 0; k < owned.size(); ++k) {
      auto gp = grad_of(owned[k]);
      if (gp.empty()) continue;
      const std::size_t ci = owned[k]->value.dim(1);
      for (std::size_t n = 0; n < N; ++n) {
        const double* src = g.data() + (n * total_c + offsets[k]) * inner;
        double* dst = gp.data() + n * ci * inner;
        for (std::size_t i = 0; i < ci * inner; ++i) dst[i] += src[i];
      }
    }
  });
}

Var slice_channels(Tape& tape, const Var& input, std::size_t begin, std::size_t count) {
  const Tensor& x = input->value;
  if (x.rank() != 2 && x.rank() != 4) {
    throw ShapeError("slice_channels: input must have rank 2 or 4, got " + to_string(x.shape()));
  }
  const std::size_t C = x.dim(1);
  if (count == 0 || begin + count > C) {
    throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside " + to_string(x.shape()));
  }
  const std::size_t N = x.dim(0), inner = trailing(x);
  Shape shape = x.shape();
  shape[1] = count;
  Tensor out(shape);
  for (std::size_t n = 0; n < N; ++n) {
    std::copy_n(x.data() + (n * C + begin) * inner, count * inner,
                out.data() + n * count * inner);
  }
  return tape.record(std::move(out), {input}, [=](Node& self) {
    const auto g = self.value.grad();
    auto gx = grad_of(input);
    for (std::size_t n = 0; n < N; ++n) {
      const double* src = g.data() + n * count * inner;
      double* dst = gx.data() + (n * C + begin) * inner;
      for (std::size_t i = 0; i < count * inner; ++i) dst[i] += src[i];
    }
  });
}

Var mul_broadcast(Tape& tape, const Var& features, const Var& map) {
  const Tensor& f = features->value;
  const Tensor& m = map->value;
  require_rank("mul_broadcast", f, 4, "features");
  require_rank("mul_broadcast", m, 4, "map");
  if (m.dim(0) != f.dim(0) || m.dim(1) != 1 || m.dim(2) != f.dim(2) || m.dim(3) != f.dim(3)) {
    throw ShapeError("mul_broadcast: map must be N x 1 x H x W matching features, got " +
                     pair_str(f, m));
  }
  const std::size_t N = f.dim(0), C = f.dim(1), HW = f.dim(2) * f.dim(3);
  Tensor out(f.shape());
  for (std::size_t n = 0; n < N; ++n) {
    const double* mp = m.data() + n * HW;
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t base = (n * C + c) * HW;
      for (std::size_t p = 0; p < HW; ++p) out[base + p] = mp[p] * f[base + p];
    }
  }
  return tape.record(std::move(out), {features, map}, [=](Node& self) {
    const auto g = self.value.grad();
    auto gf = grad_of(features);
    auto gm = grad_of(map);
    for (std::size_t n = 0; n < N; ++n) {
      const double* mp = map->value.data() + n * HW;
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t base = (n * C + c) * HW;
        for (std::size_t p = 0; p < HW; ++p) {
          if (!gf.empty()) gf[base + p] += g[base + p] * mp[p];
          if (!gm.empty()) gm[n * HW + p] += g[base + p] * features->value[base + p];
        }
      }
    }
  });
}

Var add(Tape& tape, const Var& a, const Var& b) {
  if (a->value.shape() != b->value.shape()) {
    throw ShapeError("add: shape mismatch " + pair_str(a->value, b->value));
  }
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] + b->value[i];
  return tape.record(std::move(out), {a, b}, [a, b](Node& self) {
    const auto g = self.value.grad();
    for (const Var* v : {&a, &b}) {
      auto gv = grad_of(*v);
      for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += g[i];
    }
  });
}

Var scale(Tape& tape, const Var& input, double factor) {
  Tensor out(input->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * input->value[i];
  return tape.record(std::move(out), {input}, [input, factor](Node& self) {
    const auto g = self.value.grad();
    auto gx = grad_of(input);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += factor * g[i];
  });
}

Var mean_of(Tape& tape, std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("mean_of: no operands");
  const Shape& shape = parts.front()->value.shape();
  for (const Var& p : parts) {
    if (p->value.shape() != shape) {
      throw ShapeError("mean_of: shape mismatch " + pair_str(parts.front()->value, p->value));
    }
  }
  const double inv = 1.0 / static_cast<double>(parts.size());
  Tensor out(shape);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = 0.0;
    for (const Var& p : parts) s += p->value[i];
    out[i] = s * inv;
  }
  std::vector<Var> owned(parts.begin(), parts.end());
  return tape.record(std::move(out), parts, [owned, inv](Node& self) {
    const auto g = self.value.grad();
    for (const Var& p : owned) {
      auto gp = grad_of(p);
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[i] * inv;
    }
  });
}

Var sum(Tape& tape, const Var& input) {
  double s = 0.0;
  for (double v : input->value.values()) s += v;
  return tape.record(Tensor({1}, {s}), {input}, [input](Node& self) {
    const double g = self.value.grad()[0];
    auto gx = grad_of(input);
    for (double& v : gx) v += g;
  });
}

Var inner(Tape& tape, const Var& input, const Tensor& weights) {
  if (weights.size() != input->value.size()) {
    throw ShapeError("inner: weight count does not match input " +
                     pair_str(input->value, weights));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * input->value[i];
  return tape.record(Tensor({1}, {s}), {input}, [input, weights](Node& self) {
    const double g = self.value.grad()[0];
    auto gx = grad_of(input);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g * weights[i];
  });
}

Var reshape(Tape& tape, const Var& input, Shape shape) {
  Tensor out = Tensor(input->value.shape(), std::vector<double>(input->value.values().begin(),
                                                                input->value.values().end()));
  out.reshape(std::move(shape));
  return tape.record(std::move(out), {input}, [input](Node& self) {
    const auto g = self.value.grad();
    auto gx = grad_of(input);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
  });
}

Var flatten(Tape& tape, const Var& input) {
  const std::size_t N = input->value.dim(0);
  return reshape(tape, input, {N, input->value.size() / N});
}

Var softmax_cross_entropy(Tape& tape, const Var& logits, std::span<const int> targets) {
  const Tensor& z = logits->value;
  require_rank("softmax_cross_entropy", z, 2, "logits");
  const std::size_t N = z.dim(0), K = z.dim(1);
  if (K < 2) throw ShapeError("softmax_cross_entropy: need at least 2 classes");
  if (targets.size() != N) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                     " targets for logits " + to_string(z.shape()));
  }
  auto probs = std::make_shared<std::vector<double>>(N * K);
  double loss = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const int t = targets[n];
    if (t < 0 || static_cast<std::size_t>(t) >= K) {
      throw ConfigError("softmax_cross_entropy: target " + std::to_string(t) + " outside [0, " +
                        std::to_string(K) + ")");
    }
    const double* row = z.data() + n * K;
    const double mx = *std::max_element(row, row + K);
    double denom = 0.0;
    for (std::size_t k = 0; k < K; ++k) denom += std::exp(row[k] - mx);
    const double log_denom = std::log(denom);
    for (std::size_t k = 0; k < K; ++k) (*probs)[n * K + k] = std::exp(row[k] - mx - log_denom);
    loss -= row[t] - mx - log_denom;
  }
  loss /= static_cast<double>(N);
  std::vector<int> owned(targets.begin(), targets.end());
  return tape.record(Tensor({1}, {loss}), {logits}, [logits, probs, owned, N, K](Node& self) {
    const double g = self.value.grad()[0] / static_cast<double>(N);
    auto gz = grad_of(logits);
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t k = 0; k < K; ++k) {
        const double onehot = static_cast<std::size_t>(owned[n]) == k ? 1.0 : 0.0;
        gz[n * K + k] += g * ((*probs)[n * K + k] - onehot);
      }
    }
  });
}

Var mse_loss(Tape& tape, const Var& pred, const Tensor& target) {
  const Tensor& p = pred->value;
  if (p.size() != target.size()) {
    throw ShapeError("mse_loss: prediction " + to_string(p.shape()) + " and target " +
                     to_string(target.shape()) + " differ in length");
  }
  const std::size_t N = p.size();
  double loss = 0.0;
  for (std::size_t i = 0; i < N; ++i) loss += (p[i] - target[i]) * (p[i] - target[i]);
  loss /= static_cast<double>(N);
  return tape.record(Tensor({1}, {loss}), {pred}, [pred, target, N](Node& self) {
    const double g = self.value.grad()[0];
    auto gp = grad_of(pred);
    for (std::size_t i = 0; i < N; ++i) {
      gp[i] += g * 2.0 * (pred->value[i] - target[i]) / static_cast<double>(N);
    }
  });
}

}  // namespace shapefat::ad
