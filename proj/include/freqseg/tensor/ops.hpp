#pragma once

#include <string>

#include "freqseg/random.hpp"
#include "freqseg/tensor/conv_geometry.hpp"
#include "freqseg/tensor/tensor.hpp"

namespace freqseg {

/// Weights [out_ch, in_ch, kx, ky, kz] and bias [out_ch] of a 3D
/// convolution. The same layout is used for transposed convolutions.
struct ConvParams {
    Tensor weight;
    Tensor bias;
    Triple stride{1, 1, 1};
    Triple padding{0, 0, 0};

    std::size_t out_channels() const { return weight.shape().at(0); }
    std::size_t in_channels() const { return weight.shape().at(1); }
    Triple kernel() const;

    /// Uniform He initialisation, U(-b, b) with b = sqrt(6 / fan_in); zero
    /// bias. For transposed convolutions fan_in counts the taps that reach
    /// one output voxel.
    static ConvParams kaiming(const std::string& name, std::size_t out_ch, std::size_t in_ch,
                              Triple kernel, Rng& rng, Triple stride = {1, 1, 1},
                              Triple padding = {0, 0, 0}, bool transposed = false);

    /// Kernel odd on every axis, stride 1, padding (k - 1) / 2.
    static ConvParams same(const std::string& name, std::size_t out_ch, std::size_t in_ch,
                           std::size_t k, Rng& rng);
};

/// Input [B, C, X, Y, Z] -> [B, C', X', Y', Z'] with
/// X' = (X + 2p - k) / s + 1 per axis.
Tensor conv3d(const Tensor& input, const ConvParams& params);

/// Transposed convolution, output extent (X - 1) * s - 2p + k.
/// Only strides 1 and 2 are supported.
Tensor conv3d_transpose(const Tensor& input, const ConvParams& params);

/// Non-overlapping max pooling; ties go to the lowest linear index.
Tensor maxpool3d(const Tensor& input, Triple window);

Tensor leaky_relu(const Tensor& input, double slope);
Tensor sigmoid(const Tensor& input);
/// Softmax across axis 1 of [B, C, ...].
Tensor softmax_channels(const Tensor& input);

/// Stacks along axis 1; batch and spatial extents must agree.
Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor slice_channels(const Tensor& input, std::size_t begin, std::size_t count);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor sum(const Tensor& input);

}  // namespace freqseg
