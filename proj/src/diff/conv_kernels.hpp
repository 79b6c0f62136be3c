#pragma once

#include <cstdint>

namespace zdc::diff::detail {

/// Geometry of one im2col convolution. Input rows outside [0, in_h) and
/// columns outside [0, in_w) read as zero, so any leading padding and output
/// size can be expressed.
struct ConvDims {
  std::int64_t batch = 0;
  std::int64_t in_ch = 0;
  std::int64_t in_h = 0;
  std::int64_t in_w = 0;
  std::int64_t out_ch = 0;
  std::int64_t kernel_h = 0;
  std::int64_t kernel_w = 0;
  std::int64_t stride = 1;
  std::int64_t pad_top = 0;
  std::int64_t pad_left = 0;
  std::int64_t out_h = 0;
  std::int64_t out_w = 0;
};

/// out[B,F,OH,OW] = conv(x) + bias; bias may be null.
void conv_forward(const ConvDims& d, const float* x, const float* kernel, const float* bias, float* out);

/// Accumulates (+=) into whichever of dx, dkernel, dbias is non-null.
void conv_backward(const ConvDims& d, const float* x, const float* kernel, const float* dout, float* dx,
                   float* dkernel, double* dbias);

}  // namespace zdc::diff::detail
