#pragma once

#include <array>
#include <cstddef>

namespace freqseg {

using Triple = std::array<std::size_t, 3>;

/// Resolved extents of a 3D (transposed) convolution over [B, C, X, Y, Z].
struct ConvGeometry {
    std::size_t batch = 1;
    std::size_t in_ch = 1;
    std::size_t out_ch = 1;
    Triple in_ext{};
    Triple kernel{};
    Triple stride{1, 1, 1};
    Triple padding{0, 0, 0};
    Triple out_ext{};

    std::size_t in_voxels() const { return in_ext[0] * in_ext[1] * in_ext[2]; }
    std::size_t out_voxels() const { return out_ext[0] * out_ext[1] * out_ext[2]; }
    std::size_t kernel_volume() const { return kernel[0] * kernel[1] * kernel[2]; }
};

}  // namespace freqseg
