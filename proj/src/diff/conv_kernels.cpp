#include "conv_kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <vector>

namespace zdc::diff::detail {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

// Upper bound on the im2col scratch per chunk, in floats (32 MB).
constexpr std::int64_t kColBudget = std::int64_t{8} << 20;

// Samples per GEMM: batching several samples side by side keeps the GEMM
// wide when the spatial output is small.
std::int64_t chunk_size(const ConvDims& d) {
  const std::int64_t per_sample = d.in_ch * d.kernel_h * d.kernel_w * d.out_h * d.out_w;
  return std::clamp<std::int64_t>(kColBudget / std::max<std::int64_t>(per_sample, 1), 1, d.batch);
}

// Writes the patch matrix of one sample into `col`, whose rows are `ld` floats apart.
void im2col(const ConvDims& d, const float* x, float* col, std::int64_t ld) {
  for (std::int64_t c = 0; c < d.in_ch; ++c) {
    const float* plane = x + c * d.in_h * d.in_w;
    for (std::int64_t ki = 0; ki < d.kernel_h; ++ki) {
      for (std::int64_t kj = 0; kj < d.kernel_w; ++kj) {
        float* row = col + ((c * d.kernel_h + ki) * d.kernel_w + kj) * ld;
        for (std::int64_t oy = 0; oy < d.out_h; ++oy) {
          const std::int64_t iy = oy * d.stride - d.pad_top + ki;
          float* dst = row + oy * d.out_w;
          if (iy < 0 || iy >= d.in_h) {
            std::fill(dst, dst + d.out_w, 0.0f);
            continue;
          }
          const float* src = plane + iy * d.in_w;
          for (std::int64_t ox = 0; ox < d.out_w; ++ox) {
            const std::int64_t ix = ox * d.stride - d.pad_left + kj;
            dst[ox] = (ix >= 0 && ix < d.in_w) ? src[ix] : 0.0f;
          }
        }
      }
    }
  }
}

void col2im_add(const ConvDims& d, const float* col, std::int64_t ld, float* dx) {
  for (std::int64_t c = 0; c < d.in_ch; ++c) {
    float* plane = dx + c * d.in_h * d.in_w;
    for (std::int64_t ki = 0; ki < d.kernel_h; ++ki) {
      for (std::int64_t kj = 0; kj < d.kernel_w; ++kj) {
        const float* row = col + ((c * d.kernel_h + ki) * d.kernel_w + kj) * ld;
        for (std::int64_t oy = 0; oy < d.out_h; ++oy) {
          const std::int64_t iy = oy * d.stride - d.pad_top + ki;
          if (iy < 0 || iy >= d.in_h) continue;
          const float* src = row + oy * d.out_w;
          float* dst = plane + iy * d.in_w;
          for (std::int64_t ox = 0; ox < d.out_w; ++ox) {
            const std::int64_t ix = ox * d.stride - d.pad_left + kj;
            if (ix >= 0 && ix < d.in_w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

// Stride-1 convolution as a sum of per-tap GEMMs over a zero-padded copy of
// the input. Each sample occupies an hp x wp block; outputs are computed at
// every block position (the extra columns and rows are discarded), so tap
// (ki, kj) is a contiguous slice of the padded buffer shifted by ki*wp + kj.
struct Shifted {
  std::int64_t hp = 0, wp = 0, block = 0, tail = 0, chunk = 0;

  explicit Shifted(const ConvDims& d)
      : hp(d.out_h + d.kernel_h - 1),
        wp(d.out_w + d.kernel_w - 1),
        block(hp * wp),
        tail((d.kernel_h - 1) * wp + d.kernel_w - 1) {
    const std::int64_t per_sample = std::max(d.in_ch, d.out_ch) * block;
    chunk = std::clamp<std::int64_t>(kColBudget / std::max<std::int64_t>(per_sample, 1), 1, d.batch);
  }
  std::int64_t stride(std::int64_t n) const { return n * block + tail; }
};

using StridedMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;
using MutableStridedMap = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;

// Kernel taps as contiguous [F x C] matrices, tap-major.
std::vector<float> split_taps(const ConvDims& d, const float* kernel) {
  const std::int64_t taps = d.kernel_h * d.kernel_w;
  std::vector<float> w(static_cast<std::size_t>(taps * d.out_ch * d.in_ch));
  for (std::int64_t f = 0; f < d.out_ch; ++f)
    for (std::int64_t c = 0; c < d.in_ch; ++c)
      for (std::int64_t t = 0; t < taps; ++t)
        w[static_cast<std::size_t>((t * d.out_ch + f) * d.in_ch + c)] = kernel[(f * d.in_ch + c) * taps + t];
  return w;
}

void pad_input(const ConvDims& d, const Shifted& g, const float* x, std::int64_t n, float* xp) {
  const std::int64_t ld = g.stride(n);
  std::fill(xp, xp + d.in_ch * ld, 0.0f);
  const std::int64_t in_size = d.in_ch * d.in_h * d.in_w;
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t c = 0; c < d.in_ch; ++c) {
      const float* src = x + b * in_size + c * d.in_h * d.in_w;
      float* dst = xp + c * ld + b * g.block;
      for (std::int64_t py = 0; py < g.hp; ++py) {
        const std::int64_t iy = py - d.pad_top;
        if (iy < 0 || iy >= d.in_h) continue;
        for (std::int64_t px = 0; px < g.wp; ++px) {
          const std::int64_t ix = px - d.pad_left;
          if (ix >= 0 && ix < d.in_w) dst[py * g.wp + px] = src[iy * d.in_w + ix];
        }
      }
    }
}

void shifted_forward(const ConvDims& d, const float* x, const float* kernel, const float* bias, float* out) {
  const Shifted g(d);
  const auto w = split_taps(d, kernel);
  const std::int64_t in_size = d.in_ch * d.in_h * d.in_w;
  const std::int64_t spatial = d.out_h * d.out_w;
  std::vector<float> xp(static_cast<std::size_t>(d.in_ch * g.stride(g.chunk)));
  std::vector<float> y(static_cast<std::size_t>(d.out_ch * g.chunk * g.block));
  for (std::int64_t b0 = 0; b0 < d.batch; b0 += g.chunk) {
    const std::int64_t n = std::min(g.chunk, d.batch - b0);
    const std::int64_t cols = n * g.block, ld = g.stride(n);
    pad_input(d, g, x + b0 * in_size, n, xp.data());
    MatrixMap ym(y.data(), d.out_ch, cols);
    for (std::int64_t ki = 0; ki < d.kernel_h; ++ki)
      for (std::int64_t kj = 0; kj < d.kernel_w; ++kj) {
        const std::int64_t t = ki * d.kernel_w + kj;
        const ConstMatrixMap wt(w.data() + t * d.out_ch * d.in_ch, d.out_ch, d.in_ch);
        const StridedMap xs(xp.data() + ki * g.wp + kj, d.in_ch, cols, Eigen::OuterStride<>(ld));
        if (t == 0) {
          ym.noalias() = wt * xs;
        } else {
          ym.noalias() += wt * xs;
        }
      }
    for (std::int64_t b = 0; b < n; ++b)
      for (std::int64_t f = 0; f < d.out_ch; ++f) {
        const float* src = y.data() + f * cols + b * g.block;
        float* dst = out + ((b0 + b) * d.out_ch + f) * spatial;
        const float shift = bias != nullptr ? bias[f] : 0.0f;
        for (std::int64_t oy = 0; oy < d.out_h; ++oy)
          for (std::int64_t ox = 0; ox < d.out_w; ++ox) dst[oy * d.out_w + ox] = src[oy * g.wp + ox] + shift;
      }
  }
}

void shifted_backward(const ConvDims& d, const float* x, const float* kernel, const float* dout, float* dx,
                      float* dkernel) {
  const Shifted g(d);
  const auto w = split_taps(d, kernel);
  const std::int64_t taps = d.kernel_h * d.kernel_w;
  const std::int64_t in_size = d.in_ch * d.in_h * d.in_w;
  const std::int64_t spatial = d.out_h * d.out_w;
  std::vector<float> xp(static_cast<std::size_t>(d.in_ch * g.stride(g.chunk)));
  std::vector<float> gy(static_cast<std::size_t>(d.out_ch * g.chunk * g.block));
  std::vector<float> gw;
  if (dkernel != nullptr) gw.assign(static_cast<std::size_t>(taps * d.out_ch * d.in_ch), 0.0f);
  for (std::int64_t b0 = 0; b0 < d.batch; b0 += g.chunk) {
    const std::int64_t n = std::min(g.chunk, d.batch - b0);
    const std::int64_t cols = n * g.block, ld = g.stride(n);
    std::fill(gy.begin(), gy.begin() + d.out_ch * cols, 0.0f);
    for (std::int64_t b = 0; b < n; ++b)
      for (std::int64_t f = 0; f < d.out_ch; ++f) {
        const float* src = dout + ((b0 + b) * d.out_ch + f) * spatial;
        float* dst = gy.data() + f * cols + b * g.block;
        for (std::int64_t oy = 0; oy < d.out_h; ++oy)
          std::copy_n(src + oy * d.out_w, d.out_w, dst + oy * g.wp);
      }
    const ConstMatrixMap gym(gy.data(), d.out_ch, cols);
    if (dkernel != nullptr) {
      pad_input(d, g, x + b0 * in_size, n, xp.data());
      for (std::int64_t t = 0; t < taps; ++t) {
        const std::int64_t off = (t / d.kernel_w) * g.wp + t % d.kernel_w;
        const StridedMap xs(xp.data() + off, d.in_ch, cols, Eigen::OuterStride<>(ld));
        MatrixMap gwt(gw.data() + t * d.out_ch * d.in_ch, d.out_ch, d.in_ch);
        gwt.noalias() += gym * xs.transpose();
      }
    }
    if (dx != nullptr) {
      std::fill(xp.begin(), xp.begin() + d.in_ch * ld, 0.0f);
      for (std::int64_t t = 0; t < taps; ++t) {
        const std::int64_t off = (t / d.kernel_w) * g.wp + t % d.kernel_w;
        const ConstMatrixMap wt(w.data() + t * d.out_ch * d.in_ch, d.out_ch, d.in_ch);
        MutableStridedMap gxs(xp.data() + off, d.in_ch, cols, Eigen::OuterStride<>(ld));
        gxs.noalias() += wt.transpose() * gym;
      }
      for (std::int64_t b = 0; b < n; ++b)
        for (std::int64_t c = 0; c < d.in_ch; ++c) {
          const float* src = xp.data() + c * ld + b * g.block;
          float* dst = dx + (b0 + b) * in_size + c * d.in_h * d.in_w;
          for (std::int64_t iy = 0; iy < d.in_h; ++iy) {
            const std::int64_t py = iy + d.pad_top;
            if (py < 0 || py >= g.hp) continue;
            for (std::int64_t ix = 0; ix < d.in_w; ++ix) {
              const std::int64_t px = ix + d.pad_left;
              if (px >= 0 && px < g.wp) dst[iy * d.in_w + ix] += src[py * g.wp + px];
            }
          }
        }
    }
  }
  if (dkernel != nullptr) {
    for (std::int64_t f = 0; f < d.out_ch; ++f)
      for (std::int64_t c = 0; c < d.in_ch; ++c)
        for (std::int64_t t = 0; t < taps; ++t)
          dkernel[(f * d.in_ch + c) * taps + t] += gw[static_cast<std::size_t>((t * d.out_ch + f) * d.in_ch + c)];
  }
}

}  // namespace

void conv_forward(const ConvDims& d, const float* x, const float* kernel, const float* bias, float* out) {
  if (d.stride == 1) return shifted_forward(d, x, kernel, bias, out);
  const std::int64_t patch = d.in_ch * d.kernel_h * d.kernel_w;
  const std::int64_t spatial = d.out_h * d.out_w;
  const std::int64_t in_size = d.in_ch * d.in_h * d.in_w;
  const std::int64_t chunk = chunk_size(d);
  std::vector<float> col(static_cast<std::size_t>(patch * spatial * chunk));
  std::vector<float> prod(static_cast<std::size_t>(d.out_ch * spatial * chunk));
  const ConstMatrixMap weights(kernel, d.out_ch, patch);
  for (std::int64_t b0 = 0; b0 < d.batch; b0 += chunk) {
    const std::int64_t n = std::min(chunk, d.batch - b0);
    const std::int64_t ld = n * spatial;
    for (std::int64_t b = 0; b < n; ++b) im2col(d, x + (b0 + b) * in_size, col.data() + b * spatial, ld);
    MatrixMap y(prod.data(), d.out_ch, ld);
    y.noalias() = weights * ConstMatrixMap(col.data(), patch, ld);
    for (std::int64_t b = 0; b < n; ++b) {
      for (std::int64_t f = 0; f < d.out_ch; ++f) {
        const float* src = prod.data() + f * ld + b * spatial;
        float* dst = out + ((b0 + b) * d.out_ch + f) * spatial;
        const float shift = bias != nullptr ? bias[f] : 0.0f;
        for (std::int64_t s = 0; s < spatial; ++s) dst[s] = src[s] + shift;
      }
    }
  }
}

void conv_backward(const ConvDims& d, const float* x, const float* kernel, const float* dout, float* dx,
                   float* dkernel, double* dbias) {
  const std::int64_t patch = d.in_ch * d.kernel_h * d.kernel_w;
  const std::int64_t spatial = d.out_h * d.out_w;
  const std::int64_t in_size = d.in_ch * d.in_h * d.in_w;
  if (dbias != nullptr) {
    for (std::int64_t b = 0; b < d.batch; ++b) {
      for (std::int64_t f = 0; f < d.out_ch; ++f) {
        double acc = 0.0;
        const float* g = dout + (b * d.out_ch + f) * spatial;
        for (std::int64_t s = 0; s < spatial; ++s) acc += g[s];
        dbias[f] += acc;
      }
    }
  }
  if (dkernel == nullptr && dx == nullptr) return;
  if (d.stride == 1) return shifted_backward(d, x, kernel, dout, dx, dkernel);

  const std::int64_t chunk = chunk_size(d);
  std::vector<float> col(static_cast<std::size_t>(patch * spatial * chunk));
  std::vector<float> gy(static_cast<std::size_t>(d.out_ch * spatial * chunk));
  const ConstMatrixMap weights(kernel, d.out_ch, patch);
  for (std::int64_t b0 = 0; b0 < d.batch; b0 += chunk) {
    const std::int64_t n = std::min(chunk, d.batch - b0);
    const std::int64_t ld = n * spatial;
    for (std::int64_t b = 0; b < n; ++b) {
      for (std::int64_t f = 0; f < d.out_ch; ++f) {
        std::copy_n(dout + ((b0 + b) * d.out_ch + f) * spatial, spatial, gy.data() + f * ld + b * spatial);
      }
    }
    const ConstMatrixMap g(gy.data(), d.out_ch, ld);
    if (dkernel != nullptr) {
      for (std::int64_t b = 0; b < n; ++b) im2col(d, x + (b0 + b) * in_size, col.data() + b * spatial, ld);
      MatrixMap gk(dkernel, d.out_ch, patch);
      gk.noalias() += g * ConstMatrixMap(col.data(), patch, ld).transpose();
    }
    if (dx != nullptr) {
      MatrixMap gcol(col.data(), patch, ld);
      gcol.noalias() = weights.transpose() * g;
      for (std::int64_t b = 0; b < n; ++b) col2im_add(d, col.data() + b * spatial, ld, dx + (b0 + b) * in_size);
    }
  }
}

}  // namespace zdc::diff::detail
