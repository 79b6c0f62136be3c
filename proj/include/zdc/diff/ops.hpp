#pragma once

#include <cstdint>

#include "zdc/diff/autograd.hpp"
#include "zdc/diff/tensor.hpp"
#include "zdc/random.hpp"

namespace zdc::diff {

enum class Mode { train, infer };
enum class Padding { same, valid };

/// Output size and leading padding of a 2D convolution. "same" gives
/// ceil(H/stride) with symmetric zero padding, the odd pixel going to the
/// bottom/right; "valid" gives floor((H-k)/stride)+1.
struct ConvGeometry {
  std::int64_t out_h = 0;
  std::int64_t out_w = 0;
  std::int64_t pad_top = 0;
  std::int64_t pad_left = 0;
};

ConvGeometry conv_geometry(std::int64_t in_h, std::int64_t in_w, std::int64_t kernel_h, std::int64_t kernel_w,
                           std::int64_t stride, Padding padding);

/// y[B,O] = x[B,I] W[I,O] + b[O]
Var dense(const Var& x, const Var& weight, const Var& bias);

/// x[B,C,H,W] * K[F,C,kh,kw] + b[F]
Var conv2d(const Var& x, const Var& kernel, const Var& bias, std::int64_t stride, Padding padding);

/// Each pixel becomes a 2x2 block.
Var upsample_nearest2x(const Var& x);

/// conv2d(upsample_nearest2x(x), K, b, 1, padding) without materializing the
/// upsampled image: each output parity class is a smaller convolution of x
/// with a tap-summed kernel.
Var upsample_conv2d(const Var& x, const Var& kernel, const Var& bias, Padding padding);

/// ReLU-family derivatives at exactly 0 are taken as 1.
Var relu(const Var& x);
Var leaky_relu(const Var& x, float slope = 0.2f);
Var sigmoid(const Var& x);

struct BatchNormOptions {
  float momentum = 0.9f;
  float eps = 1e-5f;
};

/// Per-channel (axis 1) normalization. Train mode uses batch statistics and
/// updates the running estimates in place; infer mode uses the running ones.
Var batchnorm(const Var& x, const Var& gamma, const Var& beta, Tensor& running_mean, Tensor& running_var,
              Mode mode, BatchNormOptions options = {});

/// Inverted dropout: survivors are scaled by 1/(1-p). Identity in infer mode.
Var dropout(const Var& x, float p, Mode mode, Rng& rng);

/// [B,N] ++ [B,M] -> [B,N+M]
Var concat(const Var& a, const Var& b);
Var reshape(const Var& x, Shape shape);
/// [B, ...] -> [B, prod(...)]
Var flatten(const Var& x);

Var add(const Var& a, const Var& b);
Var scale(const Var& x, float factor);
/// sum(x * weights) as a scalar.
Var weighted_sum(const Var& x, const Tensor& weights);

/// z = mu + exp(logvar / 2) * eps
Var reparameterize(const Var& mu, const Var& logvar, const Tensor& eps);

inline constexpr float kBceClamp = 1e-7f;

/// -mean(t ln p + (1-t) ln(1-p)) with p clamped to [1e-7, 1-1e-7].
Var bce(const Var& prob, const Tensor& target);
Var mse(const Var& a, const Var& b);
/// 0.5 * mean over batch of sum_d (exp(logvar) + mu^2 - 1 - logvar)
Var kl_diag_gauss(const Var& mu, const Var& logvar);

}  // namespace zdc::diff
