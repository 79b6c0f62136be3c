#include "zdc/diff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "conv_kernels.hpp"
#include "zdc/errors.hpp"

namespace zdc::diff {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

void require_rank(const Var& v, std::size_t rank, const char* what) {
  if (v.value().rank() != rank) {
    throw ContractError(std::string(what) + " expects rank " + std::to_string(rank) + ", got " +
                        to_string(v.shape()));
  }
}

void require_same_shape(const Var& a, const Var& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ContractError(std::string(what) + " shape mismatch: " + to_string(a.shape()) + " vs " +
                        to_string(b.shape()));
  }
}

// 64-bit reductions with four independent accumulators so the adds pipeline.
double sum_double(const float* p, std::int64_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (int k = 0; k < 4; ++k) acc[k] += p[i + k];
  for (; i < n; ++i) acc[0] += p[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double dot_double(const float* p, const float* q, std::int64_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (int k = 0; k < 4; ++k) acc[k] += static_cast<double>(p[i + k]) * q[i + k];
  for (; i < n; ++i) acc[0] += static_cast<double>(p[i]) * q[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double centered_sq_double(const float* p, std::int64_t n, double mean) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (int k = 0; k < 4; ++k) {
      const double d = p[i + k] - mean;
      acc[k] += d * d;
    }
  for (; i < n; ++i) acc[0] += (p[i] - mean) * (p[i] - mean);
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Elementwise op helper: y = f(x), dx = dy * df(x, y).
template <typename Fwd, typename Deriv>
Var elementwise(const Var& x, Fwd fwd, Deriv deriv) {
  if (!x.value().all_finite()) throw NumericError("activation input is not finite");
  Tensor out(x.shape());
  const auto in = x.value().values();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return make_result(std::move(out), {x}, [x, deriv](Node& self) mutable {
    if (!x.requires_grad()) return;
    auto& gx = x.grad_buffer();
    const auto& xv = x.value();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * deriv(xv[i], self.value[i]);
  });
}

void add_into(Tensor& dst, const Tensor& src, float factor = 1.0f) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += factor * src[i];
}

}  // namespace

ConvGeometry conv_geometry(std::int64_t in_h, std::int64_t in_w, std::int64_t kernel_h, std::int64_t kernel_w,
                           std::int64_t stride, Padding padding) {
  if (stride < 1) throw ContractError("conv stride must be >= 1");
  if (kernel_h < 1 || kernel_w < 1) throw ContractError("conv kernel must be at least 1x1");
  ConvGeometry g;
  if (padding == Padding::valid) {
    if (kernel_h > in_h || kernel_w > in_w) throw ContractError("valid conv kernel larger than input");
    g.out_h = (in_h - kernel_h) / stride + 1;
    g.out_w = (in_w - kernel_w) / stride + 1;
  } else {
    g.out_h = (in_h + stride - 1) / stride;
    g.out_w = (in_w + stride - 1) / stride;
    const std::int64_t pad_h = std::max<std::int64_t>((g.out_h - 1) * stride + kernel_h - in_h, 0);
    const std::int64_t pad_w = std::max<std::int64_t>((g.out_w - 1) * stride + kernel_w - in_w, 0);
    g.pad_top = pad_h / 2;
    g.pad_left = pad_w / 2;
  }
  if (g.out_h < 1 || g.out_w < 1) throw ContractError("conv produces an empty output");
  return g;
}

Var dense(const Var& x, const Var& weight, const Var& bias) {
  require_rank(x, 2, "dense input");
  require_rank(weight, 2, "dense weight");
  require_rank(bias, 1, "dense bias");
  const auto batch = x.shape()[0], in = x.shape()[1], out = weight.shape()[1];
  if (weight.shape()[0] != in || bias.shape()[0] != out) {
    throw ContractError("dense shape mismatch: x " + to_string(x.shape()) + ", W " + to_string(weight.shape()) +
                        ", b " + to_string(bias.shape()));
  }
  Tensor y({batch, out});
  MatrixMap ym(y.data(), batch, out);
  ym.noalias() = ConstMatrixMap(x.value().data(), batch, in) * ConstMatrixMap(weight.value().data(), in, out);
  for (std::int64_t r = 0; r < batch; ++r) {
    for (std::int64_t c = 0; c < out; ++c) ym(r, c) += bias.value()[static_cast<std::size_t>(c)];
  }
  return make_result(std::move(y), {x, weight, bias}, [x, weight, bias, batch, in, out](Node& self) mutable {
    const ConstMatrixMap gy(self.grad.data(), batch, out);
    if (x.requires_grad()) {
      MatrixMap gx(x.grad_buffer().data(), batch, in);
      gx.noalias() += gy * ConstMatrixMap(weight.value().data(), in, out).transpose();
    }
    if (weight.requires_grad()) {
      MatrixMap gw(weight.grad_buffer().data(), in, out);
      gw.noalias() += ConstMatrixMap(x.value().data(), batch, in).transpose() * gy;
    }
    if (bias.requires_grad()) {
      auto& gb = bias.grad_buffer();
      for (std::int64_t c = 0; c < out; ++c) {
        double acc = 0.0;
        for (std::int64_t r = 0; r < batch; ++r) acc += gy(r, c);
        gb[static_cast<std::size_t>(c)] += static_cast<float>(acc);
      }
    }
  });
}

Var conv2d(const Var& x, const Var& kernel, const Var& bias, std::int64_t stride, Padding padding) {
  require_rank(x, 4, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  require_rank(bias, 1, "conv2d bias");
  const auto& xs = x.shape();
  const auto& ks = kernel.shape();
  if (ks[1] != xs[1] || bias.shape()[0] != ks[0]) {
    throw ContractError("conv2d shape mismatch: x " + to_string(xs) + ", K " + to_string(ks));
  }
  const ConvGeometry g = conv_geometry(xs[2], xs[3], ks[2], ks[3], stride, padding);
  detail::ConvDims d{xs[0], xs[1], xs[2], xs[3], ks[0], ks[2], ks[3], stride, g.pad_top, g.pad_left, g.out_h, g.out_w};

  Tensor y({d.batch, d.out_ch, d.out_h, d.out_w});
  detail::conv_forward(d, x.value().data(), kernel.value().data(), bias.value().data(), y.data());
  return make_result(std::move(y), {x, kernel, bias}, [x, kernel, bias, d](Node& self) mutable {
    std::vector<double> gb;
    if (bias.requires_grad()) gb.assign(static_cast<std::size_t>(d.out_ch), 0.0);
    detail::conv_backward(d, x.value().data(), kernel.value().data(), self.grad.data(),
                          x.requires_grad() ? x.grad_buffer().data() : nullptr,
                          kernel.requires_grad() ? kernel.grad_buffer().data() : nullptr,
                          gb.empty() ? nullptr : gb.data());
    if (!gb.empty()) {
      auto& g = bias.grad_buffer();
      for (std::size_t f = 0; f < gb.size(); ++f) g[f] += static_cast<float>(gb[f]);
    }
  });
}

Var upsample_nearest2x(const Var& x) {
  require_rank(x, 4, "upsample input");
  const auto& s = x.shape();
  const auto planes = s[0] * s[1], h = s[2], w = s[3];
  Tensor y({s[0], s[1], 2 * h, 2 * w});
  const float* src = x.value().data();
  float* dst = y.data();
  for (std::int64_t p = 0; p < planes; ++p) {
    for (std::int64_t r = 0; r < 2 * h; ++r) {
      for (std::int64_t c = 0; c < 2 * w; ++c) {
        dst[(p * 2 * h + r) * 2 * w + c] = src[(p * h + r / 2) * w + c / 2];
      }
    }
  }
  return make_result(std::move(y), {x}, [x, planes, h, w](Node& self) mutable {
    if (!x.requires_grad()) return;
    float* gx = x.grad_buffer().data();
    const float* gy = self.grad.data();
    for (std::int64_t p = 0; p < planes; ++p) {
      for (std::int64_t r = 0; r < 2 * h; ++r) {
        for (std::int64_t c = 0; c < 2 * w; ++c) gx[(p * h + r / 2) * w + c / 2] += gy[(p * 2 * h + r) * 2 * w + c];
      }
    }
  });
}

namespace {

// One parity class (row parity pr, column parity pc) of an upsample+conv.
// Output pixel (2a+pr, 2b+pc) reads source rows a + row_offset[t] for kernel
// tap t; taps landing on the same source row are summed into one effective tap.
struct ParityPlan {
  std::int64_t pr = 0, pc = 0;
  std::vector<std::int64_t> row_tap;  // kernel row t -> effective row
  std::vector<std::int64_t> col_tap;
  detail::ConvDims dims;
};

std::vector<std::int64_t> tap_map(std::int64_t parity, std::int64_t pad, std::int64_t k, std::int64_t& origin) {
  std::vector<std::int64_t> offset(static_cast<std::size_t>(k));
  for (std::int64_t t = 0; t < k; ++t) offset[static_cast<std::size_t>(t)] = floor_div(parity - pad + t, 2);
  origin = offset.front();
  for (auto& o : offset) o -= origin;
  return offset;
}

std::vector<ParityPlan> plan_upsample_conv(const Shape& xs, const Shape& ks, Padding padding) {
  const ConvGeometry g = conv_geometry(2 * xs[2], 2 * xs[3], ks[2], ks[3], 1, padding);
  std::vector<ParityPlan> plans;
  for (std::int64_t pr = 0; pr < 2; ++pr) {
    for (std::int64_t pc = 0; pc < 2; ++pc) {
      const std::int64_t rows = (g.out_h - pr + 1) / 2;
      const std::int64_t cols = (g.out_w - pc + 1) / 2;
      if (rows <= 0 || cols <= 0) continue;
      ParityPlan p;
      p.pr = pr;
      p.pc = pc;
      std::int64_t row_origin = 0, col_origin = 0;
      p.row_tap = tap_map(pr, g.pad_top, ks[2], row_origin);
      p.col_tap = tap_map(pc, g.pad_left, ks[3], col_origin);
      p.dims = {xs[0], xs[1], xs[2], xs[3], ks[0], p.row_tap.back() + 1, p.col_tap.back() + 1, 1,
                -row_origin, -col_origin, rows, cols};
      plans.push_back(std::move(p));
    }
  }
  return plans;
}

Tensor effective_kernel(const Tensor& kernel, const ParityPlan& p) {
  const auto& ks = kernel.shape();
  const std::int64_t kh = p.dims.kernel_h, kw = p.dims.kernel_w;
  Tensor eff({ks[0], ks[1], kh, kw});
  for (std::int64_t fc = 0; fc < ks[0] * ks[1]; ++fc) {
    for (std::int64_t t = 0; t < ks[2]; ++t) {
      for (std::int64_t s = 0; s < ks[3]; ++s) {
        eff[static_cast<std::size_t>((fc * kh + p.row_tap[t]) * kw + p.col_tap[s])] +=
            kernel[static_cast<std::size_t>((fc * ks[2] + t) * ks[3] + s)];
      }
    }
  }
  return eff;
}

}  // namespace

Var upsample_conv2d(const Var& x, const Var& kernel, const Var& bias, Padding padding) {
  require_rank(x, 4, "upsample_conv2d input");
  require_rank(kernel, 4, "upsample_conv2d kernel");
  const auto& xs = x.shape();
  const auto& ks = kernel.shape();
  if (ks[1] != xs[1] || bias.shape().size() != 1 || bias.shape()[0] != ks[0]) {
    throw ContractError("upsample_conv2d shape mismatch: x " + to_string(xs) + ", K " + to_string(ks));
  }
  const ConvGeometry g = conv_geometry(2 * xs[2], 2 * xs[3], ks[2], ks[3], 1, padding);
  auto plans = plan_upsample_conv(xs, ks, padding);

  const std::int64_t batch = xs[0], filters = ks[0];
  Tensor y({batch, filters, g.out_h, g.out_w});
  std::vector<float> part;
  for (const auto& p : plans) {
    const Tensor eff = effective_kernel(kernel.value(), p);
    const auto& d = p.dims;
    part.assign(static_cast<std::size_t>(batch * filters * d.out_h * d.out_w), 0.0f);
    detail::conv_forward(d, x.value().data(), eff.data(), bias.value().data(), part.data());
    for (std::int64_t bf = 0; bf < batch * filters; ++bf) {
      for (std::int64_t a = 0; a < d.out_h; ++a) {
        for (std::int64_t c = 0; c < d.out_w; ++c) {
          y[static_cast<std::size_t>((bf * g.out_h + 2 * a + p.pr) * g.out_w + 2 * c + p.pc)] =
              part[static_cast<std::size_t>((bf * d.out_h + a) * d.out_w + c)];
        }
      }
    }
  }

  return make_result(std::move(y), {x, kernel, bias},
                     [x, kernel, bias, plans = std::move(plans), g, batch, filters](Node& self) mutable {
    std::vector<double> gb;
    if (bias.requires_grad()) gb.assign(static_cast<std::size_t>(filters), 0.0);
    std::vector<float> gpart;
    for (const auto& p : plans) {
      const auto& d = p.dims;
      gpart.resize(static_cast<std::size_t>(batch * filters * d.out_h * d.out_w));
      for (std::int64_t bf = 0; bf < batch * filters; ++bf) {
        for (std::int64_t a = 0; a < d.out_h; ++a) {
          for (std::int64_t c = 0; c < d.out_w; ++c) {
            gpart[static_cast<std::size_t>((bf * d.out_h + a) * d.out_w + c)] =
                self.grad[static_cast<std::size_t>((bf * g.out_h + 2 * a + p.pr) * g.out_w + 2 * c + p.pc)];
          }
        }
      }
      const Tensor eff = effective_kernel(kernel.value(), p);
      Tensor geff;
      if (kernel.requires_grad()) geff = Tensor(eff.shape(), 0.0f);
      detail::conv_backward(d, x.value().data(), eff.data(), gpart.data(),
                            x.requires_grad() ? x.grad_buffer().data() : nullptr,
                            kernel.requires_grad() ? geff.data() : nullptr, gb.empty() ? nullptr : gb.data());
      if (kernel.requires_grad()) {
        auto& gk = kernel.grad_buffer();
        const auto& ks = kernel.shape();
        for (std::int64_t fc = 0; fc < ks[0] * ks[1]; ++fc) {
          for (std::int64_t t = 0; t < ks[2]; ++t) {
            for (std::int64_t s = 0; s < ks[3]; ++s) {
              gk[static_cast<std::size_t>((fc * ks[2] + t) * ks[3] + s)] +=
                  geff[static_cast<std::size_t>((fc * d.kernel_h + p.row_tap[t]) * d.kernel_w + p.col_tap[s])];
            }
          }
        }
      }
    }
    if (!gb.empty()) {
      auto& gbias = bias.grad_buffer();
      for (std::size_t f = 0; f < gb.size(); ++f) gbias[f] += static_cast<float>(gb[f]);
    }
  });
}

Var relu(const Var& x) {
  return elementwise(
      x, [](float v) { return v >= 0.0f ? v : 0.0f; }, [](float v, float) { return v >= 0.0f ? 1.0f : 0.0f; });
}

Var leaky_relu(const Var& x, float slope) {
  return elementwise(
      x, [slope](float v) { return v >= 0.0f ? v : slope * v; },
      [slope](float v, float) { return v >= 0.0f ? 1.0f : slope; });
}

Var sigmoid(const Var& x) {
  return elementwise(
      x,
      [](float v) {
        if (v >= 0.0f) return 1.0f / (1.0f + std::exp(-v));
        const float e = std::exp(v);
        return e / (1.0f + e);
      },
      [](float, float y) { return y * (1.0f - y); });
}

Var batchnorm(const Var& x, const Var& gamma, const Var& beta, Tensor& running_mean, Tensor& running_var,
              Mode mode, BatchNormOptions options) {
  if (x.value().rank() < 2) throw ContractError("batchnorm expects rank >= 2");
  const auto& s = x.shape();
  const std::int64_t batch = s[0], channels = s[1];
  const std::int64_t spatial = static_cast<std::int64_t>(x.value().size()) / (batch * channels);
  if (gamma.shape() != Shape{channels} || beta.shape() != Shape{channels} ||
      running_mean.shape() != Shape{channels} || running_var.shape() != Shape{channels}) {
    throw ContractError("batchnorm parameter shapes must be [" + std::to_string(channels) + "]");
  }
  const std::int64_t count = batch * spatial;
  if (mode == Mode::train && count < 2) throw ContractError("train-mode batchnorm needs >= 2 values per channel");

  std::vector<float> mean(static_cast<std::size_t>(channels)), inv_std(static_cast<std::size_t>(channels));
  const float* xv = x.value().data();
  for (std::int64_t c = 0; c < channels; ++c) {
    if (mode == Mode::train) {
      double sum = 0.0, sq = 0.0;
      for (std::int64_t b = 0; b < batch; ++b) sum += sum_double(xv + (b * channels + c) * spatial, spatial);
      const double m = sum / static_cast<double>(count);
      for (std::int64_t b = 0; b < batch; ++b) sq += centered_sq_double(xv + (b * channels + c) * spatial, spatial, m);
      const double var = sq / static_cast<double>(count);
      mean[c] = static_cast<float>(m);
      inv_std[c] = static_cast<float>(1.0 / std::sqrt(var + options.eps));
      const double unbiased = sq / static_cast<double>(count - 1);
      running_mean[c] = static_cast<float>(options.momentum * running_mean[c] + (1.0 - options.momentum) * m);
      running_var[c] = static_cast<float>(options.momentum * running_var[c] + (1.0 - options.momentum) * unbiased);
    } else {
      mean[c] = running_mean[c];
      inv_std[c] = static_cast<float>(1.0 / std::sqrt(static_cast<double>(running_var[c]) + options.eps));
    }
  }

  Tensor xhat(s);
  Tensor y(s);
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t c = 0; c < channels; ++c) {
      const std::size_t off = static_cast<std::size_t>((b * channels + c) * spatial);
      const float g = gamma.value()[c], bt = beta.value()[c];
      for (std::int64_t i = 0; i < spatial; ++i) {
        const float h = (xv[off + i] - mean[c]) * inv_std[c];
        xhat[off + i] = h;
        y[off + i] = g * h + bt;
      }
    }
  }

  return make_result(std::move(y), {x, gamma, beta},
                     [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), mode, batch, channels,
                      spatial, count](Node& self) mutable {
    const float* gy = self.grad.data();
    const double n = static_cast<double>(count);
    for (std::int64_t c = 0; c < channels; ++c) {
      double sum_gy = 0.0, sum_gy_xhat = 0.0;
      for (std::int64_t b = 0; b < batch; ++b) {
        const std::size_t off = static_cast<std::size_t>((b * channels + c) * spatial);
        sum_gy += sum_double(gy + off, spatial);
        sum_gy_xhat += dot_double(gy + off, xhat.data() + off, spatial);
      }
      if (gamma.requires_grad()) gamma.grad_buffer()[c] += static_cast<float>(sum_gy_xhat);
      if (beta.requires_grad()) beta.grad_buffer()[c] += static_cast<float>(sum_gy);
      if (!x.requires_grad()) continue;
      // train: dx = g*inv_std * (dy - mean(dy) - xhat * mean(dy*xhat))
      const double scale = static_cast<double>(gamma.value()[c]) * inv_std[c];
      const float a = static_cast<float>(scale);
      const float bx = mode == Mode::train ? static_cast<float>(-scale * sum_gy_xhat / n) : 0.0f;
      const float c0 = mode == Mode::train ? static_cast<float>(-scale * sum_gy / n) : 0.0f;
      float* gx = x.grad_buffer().data();
      for (std::int64_t b = 0; b < batch; ++b) {
        const std::size_t off = static_cast<std::size_t>((b * channels + c) * spatial);
        const float* g = gy + off;
        const float* h = xhat.data() + off;
        float* dst = gx + off;
        for (std::int64_t i = 0; i < spatial; ++i) dst[i] += a * g[i] + bx * h[i] + c0;
      }
    }
  });
}

Var dropout(const Var& x, float p, Mode mode, Rng& rng) {
  if (!(p >= 0.0f && p < 1.0f)) throw ContractError("dropout probability must lie in [0, 1)");
  if (mode == Mode::infer || p == 0.0f) return x;
  const float keep_scale = 1.0f / (1.0f - p);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  Tensor mask(x.shape());
  Tensor y(x.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = unit(rng) >= p ? keep_scale : 0.0f;
    y[i] = x.value()[i] * mask[i];
  }
  return make_result(std::move(y), {x}, [x, mask = std::move(mask)](Node& self) mutable {
    if (!x.requires_grad()) return;
    auto& gx = x.grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * mask[i];
  });
}

Var concat(const Var& a, const Var& b) {
  require_rank(a, 2, "concat lhs");
  require_rank(b, 2, "concat rhs");
  const auto batch = a.shape()[0], n = a.shape()[1], m = b.shape()[1];
  if (b.shape()[0] != batch) throw ContractError("concat batch mismatch: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  Tensor y({batch, n + m});
  for (std::int64_t r = 0; r < batch; ++r) {
    std::copy_n(a.value().data() + r * n, n, y.data() + r * (n + m));
    std::copy_n(b.value().data() + r * m, m, y.data() + r * (n + m) + n);
  }
  return make_result(std::move(y), {a, b}, [a, b, batch, n, m](Node& self) mutable {
    for (std::int64_t r = 0; r < batch; ++r) {
      const float* g = self.grad.data() + r * (n + m);
      if (a.requires_grad()) {
        float* ga = a.grad_buffer().data() + r * n;
        for (std::int64_t i = 0; i < n; ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        float* gb = b.grad_buffer().data() + r * m;
        for (std::int64_t i = 0; i < m; ++i) gb[i] += g[n + i];
      }
    }
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor y = x.value().reshaped(std::move(shape));
  return make_result(std::move(y), {x}, [x](Node& self) mutable {
    if (x.requires_grad()) add_into(x.grad_buffer(), self.grad);
  });
}

Var flatten(const Var& x) {
  if (x.value().rank() < 2) throw ContractError("flatten expects rank >= 2");
  const auto batch = x.shape()[0];
  return reshape(x, {batch, static_cast<std::int64_t>(x.value().size()) / batch});
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] + b.value()[i];
  return make_result(std::move(y), {a, b}, [a, b](Node& self) mutable {
    if (a.requires_grad()) add_into(a.grad_buffer(), self.grad);
    if (b.requires_grad()) add_into(b.grad_buffer(), self.grad);
  });
}

Var scale(const Var& x, float factor) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = factor * x.value()[i];
  return make_result(std::move(y), {x}, [x, factor](Node& self) mutable {
    if (x.requires_grad()) add_into(x.grad_buffer(), self.grad, factor);
  });
}

Var weighted_sum(const Var& x, const Tensor& weights) {
  if (weights.shape() != x.shape()) throw ContractError("weighted_sum weight shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += static_cast<double>(x.value()[i]) * weights[i];
  return make_result(Tensor({1}, {static_cast<float>(acc)}), {x}, [x, weights](Node& self) mutable {
    if (x.requires_grad()) add_into(x.grad_buffer(), weights, self.grad[0]);
  });
}

Var reparameterize(const Var& mu, const Var& logvar, const Tensor& eps) {
  require_same_shape(mu, logvar, "reparameterize");
  if (eps.shape() != mu.shape()) throw ContractError("reparameterize noise shape mismatch");
  Tensor z(mu.shape());
  Tensor spread(mu.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    spread[i] = std::exp(0.5f * logvar.value()[i]);
    z[i] = mu.value()[i] + spread[i] * eps[i];
  }
  return make_result(std::move(z), {mu, logvar}, [mu, logvar, eps, spread = std::move(spread)](Node& self) mutable {
    if (mu.requires_grad()) add_into(mu.grad_buffer(), self.grad);
    if (logvar.requires_grad()) {
      auto& g = logvar.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * 0.5f * spread[i] * eps[i];
    }
  });
}

Var bce(const Var& prob, const Tensor& target) {
  if (target.shape() != prob.shape()) throw ContractError("bce target shape mismatch");
  if (!prob.value().all_finite() || !target.all_finite()) throw NumericError("bce input is not finite");
  const std::size_t n = target.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(static_cast<double>(prob.value()[i]), double{kBceClamp}, 1.0 - kBceClamp);
    const double t = target[i];
    acc -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  // The gradient is evaluated at the clamped probability and passed through,
  // so saturated outputs still receive a signal.
  return make_result(Tensor({1}, {static_cast<float>(acc / n)}), {prob}, [prob, target, n](Node& self) mutable {
    if (!prob.requires_grad()) return;
    auto& g = prob.grad_buffer();
    for (std::size_t i = 0; i < n; ++i) {
      const double p = std::clamp(static_cast<double>(prob.value()[i]), double{kBceClamp}, 1.0 - kBceClamp);
      const double t = target[i];
      g[i] += static_cast<float>(self.grad[0] * (-t / p + (1.0 - t) / (1.0 - p)) / static_cast<double>(n));
    }
  });
}

Var mse(const Var& a, const Var& b) {
  require_same_shape(a, b, "mse");
  if (!a.value().all_finite() || !b.value().all_finite()) throw NumericError("mse input is not finite");
  const std::size_t n = a.value().size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(a.value()[i]) - b.value()[i];
    acc += d * d;
  }
  return make_result(Tensor({1}, {static_cast<float>(acc / n)}), {a, b}, [a, b, n](Node& self) mutable {
    const double k = 2.0 * self.grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = static_cast<double>(a.value()[i]) - b.value()[i];
      if (a.requires_grad()) a.grad_buffer()[i] += static_cast<float>(k * d);
      if (b.requires_grad()) b.grad_buffer()[i] -= static_cast<float>(k * d);
    }
  });
}

Var kl_diag_gauss(const Var& mu, const Var& logvar) {
  require_rank(mu, 2, "kl mu");
  require_same_shape(mu, logvar, "kl_diag_gauss");
  const auto batch = mu.shape()[0];
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.value().size(); ++i) {
    const double m = mu.value()[i], lv = logvar.value()[i];
    acc += std::exp(lv) + m * m - 1.0 - lv;
  }
  const double value = 0.5 * acc / static_cast<double>(batch);
  return make_result(Tensor({1}, {static_cast<float>(value)}), {mu, logvar}, [mu, logvar, batch](Node& self) mutable {
    const double k = self.grad[0] / static_cast<double>(batch);
    for (std::size_t i = 0; i < mu.value().size(); ++i) {
      if (mu.requires_grad()) mu.grad_buffer()[i] += static_cast<float>(k * mu.value()[i]);
      if (logvar.requires_grad()) {
        logvar.grad_buffer()[i] += static_cast<float>(k * 0.5 * (std::exp(static_cast<double>(logvar.value()[i])) - 1.0));
      }
    }
  });
}

}  // namespace zdc::diff
