#pragma once

#include "freqseg/tensor/conv_geometry.hpp"

// Raw convolution kernels. All buffers are row-major [B, C, X, Y, Z];
// weights are [out_ch, in_ch, kx, ky, kz] for both directions. Backward
// kernels accumulate into non-null outputs.
namespace freqseg::kernels {

void conv3d_forward(const ConvGeometry& g, const double* in, const double* w,
                    const double* bias, double* out);

void conv3d_backward(const ConvGeometry& g, const double* in, const double* w,
                     const double* grad_out, double* grad_in, double* grad_w,
                     double* grad_bias);

void conv3d_transpose_forward(const ConvGeometry& g, const double* in, const double* w,
                              const double* bias, double* out);

void conv3d_transpose_backward(const ConvGeometry& g, const double* in, const double* w,
                               const double* grad_out, double* grad_in, double* grad_w,
                               double* grad_bias);

}  // namespace freqseg::kernels
